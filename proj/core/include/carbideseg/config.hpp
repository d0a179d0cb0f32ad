#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "carbideseg/classical.hpp"
#include "carbideseg/synthdata.hpp"
#include "carbideseg/tiling.hpp"
#include "carbideseg/training.hpp"

namespace carbideseg {

// Minimal declarative config format: [section] headers, key = value lines,
// '#' comments. Values: bool, integer, float, quoted string, or [a, b, c]
// arrays of numbers.
class ConfigFile {
public:
    using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;

    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;

    bool get_bool(const std::string& section, const std::string& key, bool def);
    std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t def);
    double get_double(const std::string& section, const std::string& key, double def);
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& def);
    std::vector<double> get_array(const std::string& section, const std::string& key,
                                  const std::vector<double>& def);

    // throws listing every key never consumed by a get_* call
    void reject_unknown_keys() const;

private:
    const Value* find(const std::string& section, const std::string& key);

    std::map<std::string, Value> values_;  // "section.key"
    std::map<std::string, bool> consumed_;
};

// One experiment in a single record; defaults follow the reference
// protocol constants.
struct RunConfig {
    std::string data_dir;
    int tile_size = 128;
    SplitFractions fractions;
    std::uint64_t split_seed = 0;
    bool per_image_split = false;
    int crop_top = 0;
    int crop_bottom = 0;

    TrainConfig training;       // includes unet + augmentation
    BaselineConfig baseline;
    int reliability_bins = 10;
    double alpha = 0.001;
    double pixel_size_nm = 6.98;
    double ecd_bin_width_nm = 50.0;
    double large_threshold_nm = 500.0;
    SceneConfig scene;
    SearchSpace search;

    static RunConfig from_file(const std::string& path);
    static RunConfig from_config(ConfigFile& cf);
    void validate() const;
};

} // namespace carbideseg
