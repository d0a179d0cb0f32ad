#include "carbideseg/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "carbideseg/evaluation.hpp"

namespace carbideseg {

using net::Tensor4;
using net::UNet;

void TrainConfig::validate() const {
    unet.validate();
    if (lr0 < 0.0) throw std::invalid_argument("TrainConfig: lr0 must be >= 0");
    if (lr_decay_factor <= 0.0 || lr_decay_factor >= 1.0)
        throw std::invalid_argument("TrainConfig: lr_decay_factor must be in (0,1)");
    if (lr_patience < 1 || early_stop_patience < 1)
        throw std::invalid_argument("TrainConfig: patience values must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
    if (dice_smooth < 0.0) throw std::invalid_argument("TrainConfig: dice_smooth must be >= 0");
    if (objective != "val_loss" && objective != "val_dice")
        throw std::invalid_argument("TrainConfig: objective must be val_loss or val_dice");
}

namespace {

void fill_batch(const TileSet& tiles, const std::vector<std::size_t>& idx,
                std::size_t begin, std::size_t end, Tensor4<float>& input,
                Tensor4<float>& target, const AugmentationSpec* aug, Rng* rng,
                std::uint64_t epoch) {
    const int ts = tiles.tile_size;
    const int n = static_cast<int>(end - begin);
    input = Tensor4<float>(n, 2, ts, ts);
    target = Tensor4<float>(n, 1, ts, ts);
    for (int b = 0; b < n; ++b) {
        const Tile* t = &tiles.tiles[idx[begin + b]];
        Tile augmented;
        if (aug) {
            // one child stream per (epoch, tile) so parallel assembly stays
            // reproducible under any scheduling
            Rng tile_rng = rng->fork(epoch * 1000003ULL + idx[begin + b]);
            augmented = augment(*t, *aug, tile_rng);
            t = &augmented;
        }
        std::copy(t->se.begin(), t->se.end(), input.plane(b, 0));
        std::copy(t->inlens.begin(), t->inlens.end(), input.plane(b, 1));
        float* yp = target.plane(b, 0);
        for (std::size_t i = 0; i < t->target.size(); ++i) yp[i] = t->target[i] ? 1.0f : 0.0f;
    }
}

struct ValScores {
    double loss = 0.0;
    double mean_dice = 0.0;
};

ValScores validate_epoch(UNet<float>& model, const TileSet& val_tiles, int batch_size,
                         float eps) {
    std::vector<std::size_t> idx(val_tiles.size());
    std::iota(idx.begin(), idx.end(), 0);
    double loss_sum = 0.0;
    double dice_sum = 0.0;
    std::size_t n_tiles = 0;
    for (std::size_t b = 0; b < idx.size(); b += batch_size) {
        std::size_t e = std::min(idx.size(), b + batch_size);
        Tensor4<float> input, target;
        fill_batch(val_tiles, idx, b, e, input, target, nullptr, nullptr, 0);
        Tensor4<float> probs = net::sigmoid_forward(model.forward(input, false));
        loss_sum += static_cast<double>(dice_loss(probs, target, eps)) *
                    static_cast<double>(e - b);
        // per-tile hard Dice at the 0.5 threshold
        const std::size_t plane = static_cast<std::size_t>(val_tiles.tile_size) *
                                  val_tiles.tile_size;
        for (std::size_t t = 0; t < e - b; ++t) {
            const float* pp = probs.plane(static_cast<int>(t), 0);
            const float* yp = target.plane(static_cast<int>(t), 0);
            ConfusionCounts cc;
            for (std::size_t i = 0; i < plane; ++i) {
                bool p = pp[i] >= 0.5f, y = yp[i] >= 0.5f;
                cc.tp += (p && y);
                cc.fp += (p && !y);
                cc.fn += (!p && y);
                cc.tn += (!p && !y);
            }
            dice_sum += dice_coefficient(cc);
            ++n_tiles;
        }
    }
    return {loss_sum / static_cast<double>(val_tiles.size()),
            dice_sum / static_cast<double>(n_tiles)};
}

} // namespace

TrainResult train(const TileSet& train_tiles, const TileSet& val_tiles,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_tiles.empty() || val_tiles.empty())
        throw std::invalid_argument("train: empty train or validation set");
    const int stride = 1 << cfg.unet.encoder_blocks;
    if (train_tiles.tile_size % stride != 0)
        throw std::invalid_argument("train: tile size not divisible by 2^encoder_blocks");

    UNet<float> model(cfg.unet, cfg.seed);
    net::Adam<float> adam;
    Rng rng(cfg.seed ^ 0x5eedf00dULL);

    TrainReport report;
    UNet<float> best = model;
    double lr = cfg.lr0;
    int lr_bad = 0, es_bad = 0;
    const bool maximize = cfg.objective == "val_dice";
    double best_metric = maximize ? -std::numeric_limits<double>::infinity()
                                  : std::numeric_limits<double>::infinity();
    const float eps = static_cast<float>(cfg.dice_smooth);

    std::vector<std::size_t> order(train_tiles.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        Rng epoch_rng = rng.fork(static_cast<std::uint64_t>(epoch));
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[epoch_rng.uniform_index(i + 1)]);

        double train_loss_sum = 0.0;
        bool finite = true;
        for (std::size_t b = 0; b < order.size() && finite;
             b += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t e = std::min(order.size(), b + cfg.batch_size);
            Tensor4<float> input, target;
            fill_batch(train_tiles, order, b, e, input, target,
                       cfg.augment_enabled ? &cfg.augmentation : nullptr, &rng,
                       static_cast<std::uint64_t>(epoch));
            Tensor4<float> logits = model.forward(input, true);
            Tensor4<float> probs = net::sigmoid_forward(logits);
            Tensor4<float> grad_probs;
            float loss = dice_loss(probs, target, eps, &grad_probs);
            if (!std::isfinite(loss)) {
                finite = false;
                break;
            }
            Tensor4<float> grad_logits = net::sigmoid_backward(grad_probs, probs);
            model.params().zero_grad();
            model.backward(grad_logits);
            adam.step(model.params(), static_cast<float>(lr));
            train_loss_sum += static_cast<double>(loss) * static_cast<double>(e - b);
        }
        if (!finite) {
            report.stop_reason = "non_finite_loss";
            break;
        }

        ValScores val = validate_epoch(model, val_tiles, cfg.batch_size, eps);
        auto t1 = std::chrono::steady_clock::now();

        EpochStats es;
        es.epoch = epoch;
        es.train_loss = train_loss_sum / static_cast<double>(train_tiles.size());
        es.val_loss = val.loss;
        es.val_dice = val.mean_dice;
        es.lr = lr;
        es.seconds = std::chrono::duration<double>(t1 - t0).count();
        report.epochs.push_back(es);

        const double metric = maximize ? val.mean_dice : val.loss;
        const bool improved = maximize ? metric > best_metric : metric < best_metric;
        if (improved) {
            best_metric = metric;
            report.best_epoch = epoch;
            report.best_val_loss = val.loss;
            report.best_val_dice = val.mean_dice;
            model.invalidate_cache();
            best = model;
            lr_bad = 0;
            es_bad = 0;
        } else {
            ++lr_bad;
            ++es_bad;
            if (lr_bad > cfg.lr_patience) {
                lr *= cfg.lr_decay_factor;
                lr_bad = 0;
            }
            if (es_bad >= cfg.early_stop_patience) {
                report.stop_reason = "early_stop";
                break;
            }
        }
    }
    if (report.stop_reason.empty()) report.stop_reason = "max_epochs";
    return {std::move(best), std::move(report)};
}

void write_report_csv(const TrainReport& report, const std::string& path) {
    std::filesystem::path tmp = std::filesystem::path(path).concat(".tmp");
    {
        std::ofstream os(tmp);
        os << "epoch,train_loss,val_loss,val_dice,lr\n";
        for (const auto& e : report.epochs)
            os << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ','
               << e.val_dice << ',' << e.lr << '\n';
    }
    std::filesystem::rename(tmp, path);
}

namespace {

// mirror-pad on the right/bottom to the next multiple of `multiple`
Image2D mirror_pad(const Image2D& img, int multiple) {
    const int W = (img.width + multiple - 1) / multiple * multiple;
    const int H = (img.height + multiple - 1) / multiple * multiple;
    if (W == img.width && H == img.height) return img;
    Image2D out(W, H);
    out.pixel_size_nm = img.pixel_size_nm;
    for (int r = 0; r < H; ++r) {
        int sr = r < img.height ? r : 2 * img.height - 2 - r;
        sr = std::clamp(sr, 0, img.height - 1);
        for (int c = 0; c < W; ++c) {
            int sc = c < img.width ? c : 2 * img.width - 2 - c;
            sc = std::clamp(sc, 0, img.width - 1);
            out.at(r, c) = img.at(sr, sc);
        }
    }
    return out;
}

} // namespace

Image2D predict_logits(UNet<float>& model, const ChannelPair& pair, int tile_size) {
    pair.check_aligned();
    if (tile_size % (1 << model.config().encoder_blocks) != 0)
        throw std::invalid_argument("predict: tile size not divisible by 2^encoder_blocks");
    Image2D se = mirror_pad(pair.se, tile_size);
    Image2D inlens = mirror_pad(pair.inlens, tile_size);

    const int nx = se.width / tile_size, ny = se.height / tile_size;
    Image2D logits(se.width, se.height);
    Tensor4<float> input(1, 2, tile_size, tile_size);
    for (int ty = 0; ty < ny; ++ty) {
        for (int tx = 0; tx < nx; ++tx) {
            const int r0 = ty * tile_size, c0 = tx * tile_size;
            for (int r = 0; r < tile_size; ++r)
                for (int c = 0; c < tile_size; ++c) {
                    input.at(0, 0, r, c) = se.at(r0 + r, c0 + c);
                    input.at(0, 1, r, c) = inlens.at(r0 + r, c0 + c);
                }
            Tensor4<float> out = model.forward(input, false);
            for (int r = 0; r < tile_size; ++r)
                for (int c = 0; c < tile_size; ++c)
                    logits.at(r0 + r, c0 + c) = out.at(0, 0, r, c);
        }
    }
    // crop padded border back off
    if (logits.width != pair.se.width || logits.height != pair.se.height) {
        Image2D cropped(pair.se.width, pair.se.height);
        for (int r = 0; r < cropped.height; ++r)
            for (int c = 0; c < cropped.width; ++c) cropped.at(r, c) = logits.at(r, c);
        return cropped;
    }
    return logits;
}

Prediction predict_image(UNet<float>& model, const ChannelPair& pair, int tile_size,
                         double temperature, double threshold) {
    if (temperature <= 0.0)
        throw std::invalid_argument("predict_image: temperature must be positive");
    Image2D logits = predict_logits(model, pair, tile_size);
    Prediction out;
    out.prob_map = Image2D(logits.width, logits.height);
    out.prob_map.pixel_size_nm = pair.se.pixel_size_nm;
    out.mask = BinaryMask(logits.width, logits.height);
    const float inv_t = static_cast<float>(1.0 / temperature);
    const float th = static_cast<float>(threshold);
    for (std::size_t i = 0; i < logits.data.size(); ++i) {
        float p = net::sigmoid(logits.data[i] * inv_t);
        out.prob_map.data[i] = p;
        out.mask.data[i] = p >= th ? 1 : 0;
    }
    return out;
}

} // namespace carbideseg
