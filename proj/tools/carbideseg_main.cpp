// carbideseg: single command-line entry point for the segmentation toolkit.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
// Every subcommand writes its outputs atomically (temp file + rename) and
// prints a machine-readable JSON summary as the final stdout line.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "carbideseg/calibration.hpp"
#include "carbideseg/classical.hpp"
#include "carbideseg/config.hpp"
#include "carbideseg/evaluation.hpp"
#include "carbideseg/image.hpp"
#include "carbideseg/rng.hpp"
#include "carbideseg/synthdata.hpp"
#include "carbideseg/tensorio.hpp"
#include "carbideseg/tiling.hpp"
#include "carbideseg/training.hpp"
#include "carbideseg/unet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace carbideseg;

namespace {

// Thrown for failures of the numerical machinery (exit code 3), as opposed
// to unreadable or inconsistent inputs (exit code 2).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit_summary(const json& j) { std::cout << j.dump() << std::endl; }

void atomic_write_text(const std::string& path, const std::string& text) {
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + tmp.string());
        os << text;
    }
    fs::rename(tmp, target);
}

// OpenCV picks the codec from the extension, so the temp name keeps it.
void atomic_save_image(const Image2D& img, const std::string& path) {
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::string tmp = path + ".tmp" + target.extension().string();
    save_image_png(img, tmp);
    fs::rename(tmp, target);
}

void atomic_save_mask(const BinaryMask& mask, const std::string& path) {
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::string tmp = path + ".tmp" + target.extension().string();
    save_mask_png(mask, tmp);
    fs::rename(tmp, target);
}

ChannelPair load_pair(const std::string& se_path, const std::string& inlens_path) {
    ChannelPair pair;
    pair.se = load_image(se_path);
    pair.inlens = load_image(inlens_path);
    pair.check_aligned();
    return pair;
}

RunConfig load_run_config(const std::string& path) {
    if (path.empty()) {
        ConfigFile cf = ConfigFile::parse_string("");
        return RunConfig::from_config(cf);
    }
    return RunConfig::from_file(path);
}

std::vector<double> read_value_csv(const std::string& path, const std::string& column) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::vector<double> values;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        // take the last comma-separated field; a header row is skipped
        std::string field = line.substr(line.find_last_of(',') + 1);
        if (first) {
            first = false;
            try {
                values.push_back(std::stod(field));
            } catch (const std::exception&) {
                continue;  // header
            }
            continue;
        }
        values.push_back(std::stod(field));
    }
    if (values.empty())
        throw std::runtime_error("no " + column + " values in " + path);
    return values;
}

// Flattens every tensor of a container file into one vector.
std::vector<float> read_flat_floats(const std::string& path) {
    TensorFileContent c = read_tensor_file(path);
    std::vector<float> out;
    for (const auto& t : c.tensors) out.insert(out.end(), t.data.begin(), t.data.end());
    if (out.empty()) throw std::runtime_error("no tensor data in " + path);
    return out;
}

std::vector<std::uint8_t> read_flat_targets(const std::string& path) {
    std::vector<float> raw = read_flat_floats(path);
    std::vector<std::uint8_t> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != 0.0f && raw[i] != 1.0f)
            throw std::runtime_error("targets in " + path + " must be binary");
        out[i] = raw[i] != 0.0f ? 1 : 0;
    }
    return out;
}

ChannelPair tile_as_pair(const Tile& t) {
    ChannelPair pair;
    pair.se = Image2D(t.size, t.size);
    pair.inlens = Image2D(t.size, t.size);
    pair.se.data = t.se;
    pair.inlens.data = t.inlens;
    return pair;
}

BinaryMask tile_mask(const Tile& t) {
    BinaryMask m(t.size, t.size);
    m.data = t.target;
    return m;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::string config, out;
    int n = 12;
    std::int64_t seed = -1;
    int width = 0, height = 0;
};

int run_generate(const GenerateArgs& a) {
    RunConfig rc = load_run_config(a.config);
    SceneConfig sc = rc.scene;
    if (a.seed >= 0) sc.seed = static_cast<std::uint64_t>(a.seed);
    if (a.width > 0) sc.width = a.width;
    if (a.height > 0) sc.height = a.height;
    DatasetStats stats = generate_dataset(sc, a.n, a.out);
    emit_summary({{"scenes", stats.scenes},
                  {"mean_foreground_fraction", stats.mean_foreground_fraction},
                  {"out", a.out}});
    return 0;
}

// -------------------------------------------------------------------- tile

struct TileArgs {
    std::string se, inlens, mask, out;
    int tile_size = 128;
    int source_id = 0;
    int crop_top = 0, crop_bottom = 0;
};

int run_tile(const TileArgs& a) {
    ChannelPair pair = load_pair(a.se, a.inlens);
    BinaryMask mask = load_mask(a.mask);
    if (a.crop_top > 0 || a.crop_bottom > 0) {
        pair.se = crop_rows(pair.se, a.crop_top, a.crop_bottom);
        pair.inlens = crop_rows(pair.inlens, a.crop_top, a.crop_bottom);
        Image2D m(mask.width, mask.height);
        for (std::size_t i = 0; i < mask.data.size(); ++i) m.data[i] = mask.data[i];
        Image2D mc = crop_rows(m, a.crop_top, a.crop_bottom);
        mask = BinaryMask(mc.width, mc.height);
        for (std::size_t i = 0; i < mc.data.size(); ++i) mask.data[i] = mc.data[i] != 0.0f;
    }
    TileSet ts = tile(pair, mask, a.tile_size, a.source_id);
    save_tileset(ts, a.out);
    emit_summary({{"tiles", ts.size()}, {"tile_size", a.tile_size}, {"out", a.out}});
    return 0;
}

// ------------------------------------------------------------------- split

struct SplitArgs {
    std::string data, out, fractions = "0.8,0.1,0.1";
    std::uint64_t seed = 0;
    bool per_image = false;
};

int run_split(const SplitArgs& a) {
    TileSet ts = load_tileset(a.data);
    SplitFractions f;
    if (std::sscanf(a.fractions.c_str(), "%lf,%lf,%lf", &f.train, &f.val, &f.test) != 3)
        throw CLI::ValidationError("--fractions expects train,val,test");
    SplitResult sr = split(ts, f, a.seed, a.per_image);
    save_split(sr, a.out);
    emit_summary({{"train", sr.train.size()},
                  {"val", sr.val.size()},
                  {"test", sr.test.size()},
                  {"out", a.out}});
    return 0;
}

// ---------------------------------------------------------------- baseline

struct BaselineArgs {
    std::string se, inlens, out, config;
    double sigma = -1.0, ratio = -1.0;
    int tophat_radius = -1, min_size = -1;
};

int run_baseline(const BaselineArgs& a) {
    RunConfig rc = load_run_config(a.config);
    BaselineConfig cfg = rc.baseline;
    if (a.sigma >= 0.0) cfg.denoise_sigma = a.sigma;
    if (a.ratio >= 0.0) cfg.merge_ratio = a.ratio;
    if (a.tophat_radius >= 0) cfg.tophat_radius = a.tophat_radius;
    if (a.min_size >= 0) cfg.min_component_size = a.min_size;
    cfg.validate();
    ChannelPair pair = load_pair(a.se, a.inlens);
    BinaryMask mask = baseline_segment(pair, cfg);
    atomic_save_mask(mask, a.out);
    emit_summary({{"foreground_px", mask.foreground_count()},
                  {"width", mask.width},
                  {"height", mask.height},
                  {"out", a.out}});
    return 0;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
    std::string config, data, out, report, objective;
};

int run_train(const TrainArgs& a) {
    RunConfig rc = load_run_config(a.config);
    if (!a.objective.empty()) rc.training.objective = a.objective;
    if (!fs::exists(fs::path(a.data) / "manifest.json"))
        throw std::runtime_error("no tile manifest in data dir " + a.data);
    TileSet train_tiles = load_tileset(a.data, "train");
    TileSet val_tiles = load_tileset(a.data, "val");
    TrainResult res = train(train_tiles, val_tiles, rc.training);
    if (res.report.stop_reason == "non_finite_loss")
        throw NumericalError("training diverged to a non-finite loss");
    net::save_checkpoint(res.model, a.out);
    if (!a.report.empty()) write_report_csv(res.report, a.report);
    emit_summary({{"best_epoch", res.report.best_epoch},
                  {"best_val_loss", res.report.best_val_loss},
                  {"best_val_dice", res.report.best_val_dice},
                  {"epochs", res.report.epochs.size()},
                  {"stop_reason", res.report.stop_reason},
                  {"out", a.out}});
    return 0;
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
    std::string ckpt, se, inlens, out, mask_out, logits_out;
    double temperature = 1.0, threshold = 0.5;
    int tile_size = 128;
};

int run_predict(const PredictArgs& a) {
    net::UNet<float> model = net::load_checkpoint(a.ckpt);
    ChannelPair pair = load_pair(a.se, a.inlens);
    Prediction pred = predict_image(model, pair, a.tile_size, a.temperature, a.threshold);
    atomic_save_image(pred.prob_map, a.out);
    if (!a.mask_out.empty()) atomic_save_mask(pred.mask, a.mask_out);
    if (!a.logits_out.empty()) {
        Image2D z = predict_logits(model, pair, a.tile_size);
        TensorFileContent c;
        NamedTensor t;
        t.name = "logits";
        t.shape = {1, 1, z.height, z.width};
        t.data = z.data;
        c.tensors = {t};
        c.meta_json = "{}";
        write_tensor_file(a.logits_out, c);
    }
    double mean_p = 0.0;
    for (float v : pred.prob_map.data) mean_p += v;
    mean_p /= static_cast<double>(pred.prob_map.size());
    emit_summary({{"foreground_px", pred.mask.foreground_count()},
                  {"mean_prob", mean_p},
                  {"out", a.out}});
    return 0;
}

// --------------------------------------------------------------- calibrate

struct CalibrateArgs {
    std::string logits, targets, out;
    int bins = 10;
};

int run_calibrate(const CalibrateArgs& a) {
    std::vector<float> logits = read_flat_floats(a.logits);
    std::vector<std::uint8_t> targets = read_flat_targets(a.targets);
    CalibrationModel m = fit_temperature(logits, targets);
    double ece_before = reliability(apply_temperature(logits, 1.0), targets, a.bins).ece;
    double ece_after =
        reliability(apply_temperature(logits, m.temperature), targets, a.bins).ece;
    json out = {{"temperature", m.temperature}, {"iterations", m.iterations},
                {"nll_before", m.nll_before},  {"nll_after", m.nll_after},
                {"ece_before", ece_before},    {"ece_after", ece_after},
                {"converged", m.converged}};
    atomic_write_text(a.out, out.dump(2) + "\n");
    emit_summary(out);
    if (!m.converged) throw NumericalError("temperature fit did not converge");
    return 0;
}

// ------------------------------------------------------------- reliability

struct ReliabilityArgs {
    std::string probs, targets, out;
    int bins = 10;
};

int run_reliability(const ReliabilityArgs& a) {
    std::vector<float> probs = read_flat_floats(a.probs);
    std::vector<std::uint8_t> targets = read_flat_targets(a.targets);
    ReliabilityDiagram d = reliability(probs, targets, a.bins);
    std::ostringstream os;
    os << "bin_lo,bin_hi,mean_pred,observed,count\n";
    for (int b = 0; b < d.bins; ++b)
        os << format_double(d.bin_lo[b]) << ',' << format_double(d.bin_hi[b]) << ','
           << format_double(d.mean_pred[b]) << ',' << format_double(d.observed[b]) << ','
           << d.count[b] << '\n';
    atomic_write_text(a.out, os.str());
    emit_summary({{"ece", d.ece}, {"bins", d.bins}, {"out", a.out}});
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string pred, target, out;
};

int run_evaluate(const EvaluateArgs& a) {
    std::map<std::string, fs::path> preds;
    for (const auto& e : fs::directory_iterator(a.pred))
        if (e.path().extension() == ".png") preds[e.path().filename().string()] = e.path();
    if (preds.empty()) throw std::runtime_error("no .png masks in " + a.pred);
    std::ostringstream os;
    os << "file,dice\n";
    std::vector<double> dices;
    for (const auto& [name, ppath] : preds) {
        fs::path tpath = fs::path(a.target) / name;
        if (!fs::exists(tpath))
            throw std::runtime_error("no matching target mask for " + name);
        BinaryMask p = load_mask(ppath.string());
        BinaryMask t = load_mask(tpath.string());
        double d = dice_coefficient(confusion(p, t));
        dices.push_back(d);
        os << name << ',' << format_double(d) << '\n';
    }
    atomic_write_text(a.out, os.str());
    DiceSummary s = summarize(dices);
    emit_summary({{"n", dices.size()}, {"median", s.median}, {"q1", s.q1},
                  {"q3", s.q3}, {"out", a.out}});
    return 0;
}

// ----------------------------------------------------------------- compare

struct CompareArgs {
    std::string a_csv, b_csv, out;
    double alpha = 0.001;
};

int run_compare(const CompareArgs& a) {
    std::vector<double> da = read_value_csv(a.a_csv, "dice");
    std::vector<double> db = read_value_csv(a.b_csv, "dice");
    ComparisonReport rep = compare_methods(da, db, a.alpha);
    json out = {{"median_a", rep.summary_a.median},
                {"q1_a", rep.summary_a.q1},
                {"q3_a", rep.summary_a.q3},
                {"median_b", rep.summary_b.median},
                {"q1_b", rep.summary_b.q1},
                {"q3_b", rep.summary_b.q3},
                {"degenerate", rep.degenerate},
                {"note", rep.note}};
    if (!rep.degenerate) {
        out["wilcoxon"] = {{"n_effective", rep.wilcoxon.n_effective},
                           {"w_plus", rep.wilcoxon.w_plus},
                           {"w_minus", rep.wilcoxon.w_minus},
                           {"p_value", rep.wilcoxon.p_value},
                           {"method", rep.wilcoxon.method},
                           {"alpha", rep.wilcoxon.alpha},
                           {"reject", rep.wilcoxon.reject}};
    }
    atomic_write_text(a.out, out.dump(2) + "\n");
    emit_summary(out);
    return 0;
}

// ---------------------------------------------------------------- quantify

struct QuantifyArgs {
    std::string mask, out;
    double pixel_size_nm = 6.98;
    double bin_width = 50.0, large_threshold = 500.0;
};

int run_quantify(const QuantifyArgs& a) {
    BinaryMask mask = load_mask(a.mask);
    Morphometrics m = morphometrics(mask, a.pixel_size_nm, a.bin_width, a.large_threshold);
    std::ostringstream os;
    os << "component,area_px,area_nm2,ecd_nm\n";
    for (std::size_t i = 0; i < m.components.size(); ++i)
        os << i + 1 << ',' << m.components[i].area_px << ','
           << format_double(m.components[i].area_nm2) << ','
           << format_double(m.components[i].ecd_nm) << '\n';
    atomic_write_text(a.out, os.str());
    emit_summary({{"count", m.component_count},
                  {"number_density_per_nm2", m.number_density_per_nm2},
                  {"large_count", m.large_count},
                  {"out", a.out}});
    return 0;
}

// --------------------------------------------------------------------- hpo

struct HpoArgs {
    std::string config, data, out;
    int budget = -1;
};

int run_hpo(const HpoArgs& a) {
    RunConfig rc = load_run_config(a.config);
    SearchSpace space = rc.search;
    if (a.budget > 0) space.budget = a.budget;
    space.validate();
    TileSet train_tiles = load_tileset(a.data, "train");
    TileSet val_tiles = load_tileset(a.data, "val");
    std::vector<Trial> trials = hyperparameter_search(space, train_tiles, val_tiles,
                                                     rc.training);
    write_trials_csv(trials, a.out);
    double best = 0.0;
    for (const auto& t : trials)
        if (t.feasible) best = std::max(best, t.best_val_dice);
    emit_summary({{"trials", trials.size()}, {"best_val_dice", best}, {"out", a.out}});
    return 0;
}

// ------------------------------------------------------------------- repro
//
// Small end-to-end pipeline on synthetic scenes: generate, tile, split,
// train, predict, compare against the classical baseline, calibrate.
// Every stage is seeded, so two runs with the same seed emit identical
// summaries.

struct ReproArgs {
    std::string out;
    std::uint64_t seed = 7;
};

int run_repro(const ReproArgs& a) {
    fs::create_directories(a.out);
    const int n_scenes = 6;
    const int tile_size = 64;

    SceneConfig sc;
    sc.width = 256;
    sc.height = 256;
    Rng seeder(a.seed);
    TileSet all;
    all.tile_size = tile_size;
    std::vector<Scene> scenes;
    for (int i = 0; i < n_scenes; ++i) {
        sc.seed = seeder.next_u64();
        scenes.push_back(generate_scene(sc));
        TileSet ts = tile(scenes.back().channels, scenes.back().mask, tile_size, i);
        for (auto& t : ts.tiles) all.tiles.push_back(std::move(t));
    }

    SplitResult sr = split(all, SplitFractions{}, a.seed);

    TrainConfig tc;
    tc.unet.encoder_blocks = 1;
    tc.unet.base_features = 8;
    tc.lr0 = 1e-3;
    tc.batch_size = 8;
    tc.max_epochs = 10;
    tc.seed = a.seed;
    tc.augment_enabled = false;
    TrainResult res = train(sr.train, sr.val, tc);
    if (res.report.stop_reason == "non_finite_loss")
        throw NumericalError("training diverged to a non-finite loss");
    net::save_checkpoint(res.model, (fs::path(a.out) / "ckpt.bin").string());

    // paired per-tile Dice on the held-out tiles
    std::vector<double> unet_dices, baseline_dices;
    for (const auto& t : sr.test.tiles) {
        ChannelPair pair = tile_as_pair(t);
        BinaryMask target = tile_mask(t);
        Prediction pred = predict_image(res.model, pair, tile_size);
        unet_dices.push_back(dice_coefficient(confusion(pred.mask, target)));
        BinaryMask base = baseline_segment(pair);
        baseline_dices.push_back(dice_coefficient(confusion(base, target)));
    }
    ComparisonReport cmp = compare_methods(unet_dices, baseline_dices);

    // temperature scaling on the validation logits
    std::vector<float> logits;
    std::vector<std::uint8_t> targets;
    for (const auto& t : sr.val.tiles) {
        ChannelPair pair = tile_as_pair(t);
        Image2D z = predict_logits(res.model, pair, tile_size);
        logits.insert(logits.end(), z.data.begin(), z.data.end());
        targets.insert(targets.end(), t.target.begin(), t.target.end());
    }
    CalibrationModel cm = fit_temperature(logits, targets);
    double ece_before = reliability(apply_temperature(logits, 1.0), targets).ece;
    double ece_after =
        reliability(apply_temperature(logits, cm.temperature), targets).ece;

    json summary = {{"unet_dice_median", cmp.summary_a.median},
                    {"baseline_dice_median", cmp.summary_b.median},
                    {"wilcoxon_p", cmp.degenerate ? 1.0 : cmp.wilcoxon.p_value},
                    {"temperature", cm.temperature},
                    {"ece_before", ece_before},
                    {"ece_after", ece_after}};
    atomic_write_text((fs::path(a.out) / "summary.json").string(),
                      summary.dump(2) + "\n");
    emit_summary(summary);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Electron-micrograph carbide segmentation toolkit"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "Worker thread bound (modules run sequentially)");

    GenerateArgs gen;
    auto* c_gen = app.add_subcommand("generate", "Generate a synthetic two-channel dataset");
    c_gen->add_option("--config", gen.config, "Run config file");
    c_gen->add_option("--n", gen.n, "Number of scenes");
    c_gen->add_option("--seed", gen.seed, "Scene seed override");
    c_gen->add_option("--width", gen.width, "Scene width override");
    c_gen->add_option("--height", gen.height, "Scene height override");
    c_gen->add_option("--out", gen.out, "Output directory")->required();

    TileArgs til;
    auto* c_til = app.add_subcommand("tile", "Tile an annotated image pair");
    c_til->add_option("--se", til.se)->required();
    c_til->add_option("--inlens", til.inlens)->required();
    c_til->add_option("--mask", til.mask)->required();
    c_til->add_option("--tile-size", til.tile_size);
    c_til->add_option("--source-id", til.source_id);
    c_til->add_option("--crop-top", til.crop_top);
    c_til->add_option("--crop-bottom", til.crop_bottom);
    c_til->add_option("--out", til.out)->required();

    SplitArgs spl;
    auto* c_spl = app.add_subcommand("split", "Split a tileset into train/val/test");
    c_spl->add_option("--data", spl.data)->required();
    c_spl->add_option("--fractions", spl.fractions, "train,val,test");
    c_spl->add_option("--seed", spl.seed);
    c_spl->add_flag("--per-image", spl.per_image, "Keep each source image in one partition");
    c_spl->add_option("--out", spl.out)->required();

    BaselineArgs bas;
    auto* c_bas = app.add_subcommand("baseline", "Classical morphological segmentation");
    c_bas->add_option("--se", bas.se)->required();
    c_bas->add_option("--inlens", bas.inlens)->required();
    c_bas->add_option("--config", bas.config);
    c_bas->add_option("--sigma", bas.sigma);
    c_bas->add_option("--tophat-radius", bas.tophat_radius);
    c_bas->add_option("--min-size", bas.min_size);
    c_bas->add_option("--ratio", bas.ratio);
    c_bas->add_option("--out", bas.out)->required();

    TrainArgs trn;
    auto* c_trn = app.add_subcommand("train", "Train the segmentation network");
    c_trn->add_option("--config", trn.config);
    c_trn->add_option("--data", trn.data, "Directory written by `split`")->required();
    c_trn->add_option("--objective", trn.objective)
        ->check(CLI::IsMember({"val_loss", "val_dice"}));
    c_trn->add_option("--out", trn.out, "Checkpoint path")->required();
    c_trn->add_option("--report", trn.report, "Per-epoch CSV report");

    PredictArgs prd;
    auto* c_prd = app.add_subcommand("predict", "Run inference on an image pair");
    c_prd->add_option("--ckpt", prd.ckpt)->required();
    c_prd->add_option("--se", prd.se)->required();
    c_prd->add_option("--inlens", prd.inlens)->required();
    c_prd->add_option("--temperature", prd.temperature);
    c_prd->add_option("--threshold", prd.threshold);
    c_prd->add_option("--tile-size", prd.tile_size);
    c_prd->add_option("--out", prd.out, "Probability map PNG")->required();
    c_prd->add_option("--mask-out", prd.mask_out, "Thresholded mask PNG");
    c_prd->add_option("--logits-out", prd.logits_out, "Raw logits container");

    CalibrateArgs cal;
    auto* c_cal = app.add_subcommand("calibrate", "Fit a scaling temperature");
    c_cal->add_option("--logits", cal.logits)->required();
    c_cal->add_option("--targets", cal.targets)->required();
    c_cal->add_option("--bins", cal.bins);
    c_cal->add_option("--out", cal.out)->required();

    ReliabilityArgs rel;
    auto* c_rel = app.add_subcommand("reliability", "Reliability diagram and ECE");
    c_rel->add_option("--probs", rel.probs)->required();
    c_rel->add_option("--targets", rel.targets)->required();
    c_rel->add_option("--bins", rel.bins);
    c_rel->add_option("--out", rel.out)->required();

    EvaluateArgs evl;
    auto* c_evl = app.add_subcommand("evaluate", "Per-image Dice against target masks");
    c_evl->add_option("--pred", evl.pred)->required();
    c_evl->add_option("--target", evl.target)->required();
    c_evl->add_option("--out", evl.out)->required();

    CompareArgs cmp;
    auto* c_cmp = app.add_subcommand("compare", "Paired statistical comparison");
    c_cmp->add_option("--a", cmp.a_csv)->required();
    c_cmp->add_option("--b", cmp.b_csv)->required();
    c_cmp->add_option("--alpha", cmp.alpha);
    c_cmp->add_option("--out", cmp.out)->required();

    QuantifyArgs qnt;
    auto* c_qnt = app.add_subcommand("quantify", "Morphometrics of a carbide mask");
    c_qnt->add_option("--mask", qnt.mask)->required();
    c_qnt->add_option("--pixel-size-nm", qnt.pixel_size_nm);
    c_qnt->add_option("--ecd-bin-width-nm", qnt.bin_width);
    c_qnt->add_option("--large-threshold-nm", qnt.large_threshold);
    c_qnt->add_option("--out", qnt.out)->required();

    HpoArgs hpo;
    auto* c_hpo = app.add_subcommand("hpo", "Random hyperparameter search");
    c_hpo->add_option("--config", hpo.config, "Run config with a [search] section");
    c_hpo->add_option("--budget", hpo.budget);
    c_hpo->add_option("--data", hpo.data)->required();
    c_hpo->add_option("--out", hpo.out)->required();

    ReproArgs rep;
    auto* c_rep = app.add_subcommand("repro", "Seeded end-to-end synthetic pipeline");
    c_rep->add_option("--seed", rep.seed);
    c_rep->add_option("--out", rep.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*c_gen) return run_generate(gen);
        if (*c_til) return run_tile(til);
        if (*c_spl) return run_split(spl);
        if (*c_bas) return run_baseline(bas);
        if (*c_trn) return run_train(trn);
        if (*c_prd) return run_predict(prd);
        if (*c_cal) return run_calibrate(cal);
        if (*c_rel) return run_reliability(rel);
        if (*c_evl) return run_evaluate(evl);
        if (*c_cmp) return run_compare(cmp);
        if (*c_qnt) return run_quantify(qnt);
        if (*c_hpo) return run_hpo(hpo);
        if (*c_rep) return run_repro(rep);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
