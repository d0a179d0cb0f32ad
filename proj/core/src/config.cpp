#include "carbideseg/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace carbideseg {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool parse_number(const std::string& s, double& out) {
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size();
}

bool is_integer_literal(const std::string& s) {
    if (s.empty()) return false;
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) return false;
    for (; i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

ConfigFile::Value parse_value(const std::string& raw, int line_no) {
    const std::string v = trim(raw);
    if (v.empty()) throw std::runtime_error("config line " + std::to_string(line_no) + ": empty value");
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '"' && v.back() == '"' && v.size() >= 2)
        return v.substr(1, v.size() - 2);
    if (v.front() == '[') {
        if (v.back() != ']')
            throw std::runtime_error("config line " + std::to_string(line_no) + ": unterminated array");
        std::vector<double> arr;
        std::stringstream ss(v.substr(1, v.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            double d;
            if (!parse_number(item, d))
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": bad array element '" + item + "'");
            arr.push_back(d);
        }
        return arr;
    }
    if (is_integer_literal(v)) return static_cast<std::int64_t>(std::stoll(v));
    double d;
    if (parse_number(v, d)) return d;
    return v;  // bare string
}

} // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
    ConfigFile cf;
    std::istringstream is(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(line_no) +
                                         ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty() || section.empty())
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": key outside a [section]");
        cf.values_[section + "." + key] = parse_value(line.substr(eq + 1), line_no);
    }
    return cf;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_string(ss.str());
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    return values_.count(section + "." + key) != 0;
}

const ConfigFile::Value* ConfigFile::find(const std::string& section, const std::string& key) {
    auto it = values_.find(section + "." + key);
    if (it == values_.end()) return nullptr;
    consumed_[it->first] = true;
    return &it->second;
}

bool ConfigFile::get_bool(const std::string& s, const std::string& k, bool def) {
    const Value* v = find(s, k);
    if (!v) return def;
    if (auto* b = std::get_if<bool>(v)) return *b;
    throw std::runtime_error("config: " + s + "." + k + " must be a boolean");
}

std::int64_t ConfigFile::get_int(const std::string& s, const std::string& k, std::int64_t def) {
    const Value* v = find(s, k);
    if (!v) return def;
    if (auto* i = std::get_if<std::int64_t>(v)) return *i;
    throw std::runtime_error("config: " + s + "." + k + " must be an integer");
}

double ConfigFile::get_double(const std::string& s, const std::string& k, double def) {
    const Value* v = find(s, k);
    if (!v) return def;
    if (auto* d = std::get_if<double>(v)) return *d;
    if (auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
    throw std::runtime_error("config: " + s + "." + k + " must be a number");
}

std::string ConfigFile::get_string(const std::string& s, const std::string& k,
                                   const std::string& def) {
    const Value* v = find(s, k);
    if (!v) return def;
    if (auto* str = std::get_if<std::string>(v)) return *str;
    throw std::runtime_error("config: " + s + "." + k + " must be a string");
}

std::vector<double> ConfigFile::get_array(const std::string& s, const std::string& k,
                                          const std::vector<double>& def) {
    const Value* v = find(s, k);
    if (!v) return def;
    if (auto* a = std::get_if<std::vector<double>>(v)) return *a;
    throw std::runtime_error("config: " + s + "." + k + " must be an array");
}

void ConfigFile::reject_unknown_keys() const {
    std::string unknown;
    for (const auto& [key, _] : values_)
        if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    if (!unknown.empty())
        throw std::runtime_error("config: unknown keys: " + unknown);
}

RunConfig RunConfig::from_file(const std::string& path) {
    ConfigFile cf = ConfigFile::parse_file(path);
    return from_config(cf);
}

RunConfig RunConfig::from_config(ConfigFile& cf) {
    RunConfig rc;

    rc.data_dir = cf.get_string("data", "dir", rc.data_dir);
    rc.tile_size = static_cast<int>(cf.get_int("data", "tile_size", rc.tile_size));
    auto fr = cf.get_array("data", "fractions", {0.8, 0.1, 0.1});
    if (fr.size() != 3) throw std::runtime_error("config: data.fractions needs 3 entries");
    rc.fractions = {fr[0], fr[1], fr[2]};
    rc.split_seed = static_cast<std::uint64_t>(cf.get_int("data", "split_seed", 0));
    rc.per_image_split = cf.get_bool("data", "per_image_split", rc.per_image_split);
    rc.crop_top = static_cast<int>(cf.get_int("data", "crop_top", rc.crop_top));
    rc.crop_bottom = static_cast<int>(cf.get_int("data", "crop_bottom", rc.crop_bottom));

    auto& u = rc.training.unet;
    u.in_channels = static_cast<int>(cf.get_int("unet", "in_channels", u.in_channels));
    u.encoder_blocks = static_cast<int>(cf.get_int("unet", "encoder_blocks", u.encoder_blocks));
    u.base_features = static_cast<int>(cf.get_int("unet", "base_features", u.base_features));
    u.convs_per_block = static_cast<int>(cf.get_int("unet", "convs_per_block", u.convs_per_block));
    u.kernel_size = static_cast<int>(cf.get_int("unet", "kernel_size", u.kernel_size));
    u.out_channels = static_cast<int>(cf.get_int("unet", "out_channels", u.out_channels));
    u.mve_head = cf.get_bool("unet", "mve_head", u.mve_head);
    u.bilinear_upsample = cf.get_bool("unet", "bilinear_upsample", u.bilinear_upsample);

    auto& t = rc.training;
    t.lr0 = cf.get_double("training", "lr0", t.lr0);
    t.lr_decay_factor = cf.get_double("training", "lr_decay_factor", t.lr_decay_factor);
    t.lr_patience = static_cast<int>(cf.get_int("training", "lr_patience", t.lr_patience));
    t.early_stop_patience =
        static_cast<int>(cf.get_int("training", "early_stop_patience", t.early_stop_patience));
    t.batch_size = static_cast<int>(cf.get_int("training", "batch_size", t.batch_size));
    t.max_epochs = static_cast<int>(cf.get_int("training", "max_epochs", t.max_epochs));
    t.dice_smooth = cf.get_double("training", "dice_smooth", t.dice_smooth);
    t.seed = static_cast<std::uint64_t>(cf.get_int("training", "seed", 0));
    t.objective = cf.get_string("training", "objective", t.objective);

    auto& a = rc.training.augmentation;
    rc.training.augment_enabled = cf.get_bool("augmentation", "enabled", true);
    a.rotate90 = cf.get_bool("augmentation", "rotate90", a.rotate90);
    a.flip_horizontal = cf.get_bool("augmentation", "flip_horizontal", a.flip_horizontal);
    a.flip_vertical = cf.get_bool("augmentation", "flip_vertical", a.flip_vertical);
    a.p_rotate = cf.get_double("augmentation", "p_rotate", a.p_rotate);
    a.p_flip = cf.get_double("augmentation", "p_flip", a.p_flip);
    a.p_noise = cf.get_double("augmentation", "p_noise", a.p_noise);
    a.p_blur = cf.get_double("augmentation", "p_blur", a.p_blur);
    a.noise_sigma = cf.get_double("augmentation", "noise_sigma", a.noise_sigma);
    a.blur_sigma_lo = cf.get_double("augmentation", "blur_sigma_lo", a.blur_sigma_lo);
    a.blur_sigma_hi = cf.get_double("augmentation", "blur_sigma_hi", a.blur_sigma_hi);

    auto& b = rc.baseline;
    b.merge_ratio = cf.get_double("baseline", "merge_ratio", b.merge_ratio);
    b.denoise_sigma = cf.get_double("baseline", "denoise_sigma", b.denoise_sigma);
    b.tophat_radius = static_cast<int>(cf.get_int("baseline", "tophat_radius", b.tophat_radius));
    b.min_component_size =
        static_cast<int>(cf.get_int("baseline", "min_component_size", b.min_component_size));
    b.connectivity = static_cast<int>(cf.get_int("baseline", "connectivity", b.connectivity));
    b.square_structuring_element =
        cf.get_bool("baseline", "square_structuring_element", b.square_structuring_element);

    rc.reliability_bins = static_cast<int>(cf.get_int("calibration", "bins", rc.reliability_bins));
    rc.alpha = cf.get_double("evaluation", "alpha", rc.alpha);
    rc.pixel_size_nm = cf.get_double("evaluation", "pixel_size_nm", rc.pixel_size_nm);
    rc.ecd_bin_width_nm = cf.get_double("evaluation", "ecd_bin_width_nm", rc.ecd_bin_width_nm);
    rc.large_threshold_nm =
        cf.get_double("evaluation", "large_threshold_nm", rc.large_threshold_nm);

    auto& s = rc.scene;
    s.width = static_cast<int>(cf.get_int("scene", "width", s.width));
    s.height = static_cast<int>(cf.get_int("scene", "height", s.height));
    s.count_lo = static_cast<int>(cf.get_int("scene", "count_lo", s.count_lo));
    s.count_hi = static_cast<int>(cf.get_int("scene", "count_hi", s.count_hi));
    s.axis_lo_px = cf.get_double("scene", "axis_lo_px", s.axis_lo_px);
    s.axis_hi_px = cf.get_double("scene", "axis_hi_px", s.axis_hi_px);
    s.matrix_level = cf.get_double("scene", "matrix_level", s.matrix_level);
    s.carbide_level_se = cf.get_double("scene", "carbide_level_se", s.carbide_level_se);
    s.carbide_level_inlens = cf.get_double("scene", "carbide_level_inlens", s.carbide_level_inlens);
    s.carbide_jitter = cf.get_double("scene", "carbide_jitter", s.carbide_jitter);
    s.texture_amplitude = cf.get_double("scene", "texture_amplitude", s.texture_amplitude);
    s.texture_correlation_px =
        cf.get_double("scene", "texture_correlation_px", s.texture_correlation_px);
    s.gradient_amplitude = cf.get_double("scene", "gradient_amplitude", s.gradient_amplitude);
    s.channel_correlation = cf.get_double("scene", "channel_correlation", s.channel_correlation);
    s.noise_sigma = cf.get_double("scene", "noise_sigma", s.noise_sigma);
    s.blur_sigma = cf.get_double("scene", "blur_sigma", s.blur_sigma);
    s.pixel_size_nm = cf.get_double("scene", "pixel_size_nm", s.pixel_size_nm);
    s.seed = static_cast<std::uint64_t>(cf.get_int("scene", "seed", 0));
    if (cf.get_bool("scene", "hard_mode", false)) {
        auto hard = SceneConfig::hard_mode();
        std::uint64_t seed = s.seed;
        int w = s.width, h = s.height;
        s = hard;
        s.seed = seed;
        s.width = w;
        s.height = h;
    }

    auto& sp = rc.search;
    sp.lr0_lo = cf.get_double("search", "lr0_lo", sp.lr0_lo);
    sp.lr0_hi = cf.get_double("search", "lr0_hi", sp.lr0_hi);
    sp.patience_lo = static_cast<int>(cf.get_int("search", "patience_lo", sp.patience_lo));
    sp.patience_hi = static_cast<int>(cf.get_int("search", "patience_hi", sp.patience_hi));
    auto bf = cf.get_array("search", "base_features_choices", {});
    if (!bf.empty()) {
        sp.base_features_choices.clear();
        for (double v : bf) sp.base_features_choices.push_back(static_cast<int>(v));
    }
    auto eb = cf.get_array("search", "encoder_blocks_choices", {});
    if (!eb.empty()) {
        sp.encoder_blocks_choices.clear();
        for (double v : eb) sp.encoder_blocks_choices.push_back(static_cast<int>(v));
    }
    sp.budget = static_cast<int>(cf.get_int("search", "budget", sp.budget));
    sp.max_epochs_per_trial =
        static_cast<int>(cf.get_int("search", "max_epochs_per_trial", sp.max_epochs_per_trial));
    sp.seed = static_cast<std::uint64_t>(cf.get_int("search", "seed", 0));

    cf.reject_unknown_keys();
    rc.validate();
    return rc;
}

void RunConfig::validate() const {
    if (tile_size < 1) throw std::runtime_error("RunConfig: tile_size must be >= 1");
    training.validate();
    training.augmentation.validate();
    baseline.validate();
    scene.validate();
    if (alpha <= 0.0 || alpha >= 1.0)
        throw std::runtime_error("RunConfig: alpha must be in (0,1)");
}

} // namespace carbideseg
