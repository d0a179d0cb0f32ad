#include "carbideseg/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "carbideseg/classical.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace carbideseg {

void AugmentationSpec::validate() const {
    for (double p : {p_rotate, p_flip, p_noise, p_blur})
        if (p < 0.0 || p > 1.0)
            throw std::invalid_argument("AugmentationSpec: probability outside [0,1]");
    if (noise_sigma < 0.0)
        throw std::invalid_argument("AugmentationSpec: noise_sigma must be >= 0");
    if (blur_sigma_lo < 0.0 || blur_sigma_hi < blur_sigma_lo)
        throw std::invalid_argument("AugmentationSpec: blur sigma range must be non-negative and ordered");
}

TileSet tile(const ChannelPair& pair, const BinaryMask& mask, int tile_size,
             int source_id) {
    pair.check_aligned();
    if (tile_size < 1)
        throw std::invalid_argument("tile: tile_size must be >= 1");
    if (mask.width != pair.se.width || mask.height != pair.se.height)
        throw std::invalid_argument("tile: mask dimensions do not match channels");
    const int nx = pair.se.width / tile_size;
    const int ny = pair.se.height / tile_size;

    TileSet ts;
    ts.tile_size = tile_size;
    ts.tiles.reserve(static_cast<std::size_t>(nx) * ny);
    for (int ty = 0; ty < ny; ++ty) {
        for (int tx = 0; tx < nx; ++tx) {
            Tile t;
            t.size = tile_size;
            t.origin_row = ty * tile_size;
            t.origin_col = tx * tile_size;
            t.source_id = source_id;
            t.se.resize(static_cast<std::size_t>(tile_size) * tile_size);
            t.inlens.resize(t.se.size());
            t.target.resize(t.se.size());
            for (int r = 0; r < tile_size; ++r) {
                for (int c = 0; c < tile_size; ++c) {
                    std::size_t i = static_cast<std::size_t>(r) * tile_size + c;
                    t.se[i] = pair.se.at(t.origin_row + r, t.origin_col + c);
                    t.inlens[i] = pair.inlens.at(t.origin_row + r, t.origin_col + c);
                    t.target[i] = mask.at(t.origin_row + r, t.origin_col + c);
                }
            }
            ts.tiles.push_back(std::move(t));
        }
    }
    return ts;
}

SplitResult split(const TileSet& tiles, const SplitFractions& fractions,
                  std::uint64_t seed, bool per_image) {
    const double sum = fractions.train + fractions.val + fractions.test;
    if (fractions.train <= 0.0 || fractions.val <= 0.0 || fractions.test <= 0.0 ||
        std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split: fractions must be positive and sum to 1");
    if (tiles.size() < 3)
        throw std::invalid_argument("split: fewer tiles than partitions");

    // units are tiles, or whole source images when per_image is set
    std::vector<std::vector<std::size_t>> units;
    if (per_image) {
        std::vector<int> ids;
        for (const auto& t : tiles.tiles)
            if (std::find(ids.begin(), ids.end(), t.source_id) == ids.end())
                ids.push_back(t.source_id);
        for (int id : ids) {
            auto& u = units.emplace_back();
            for (std::size_t i = 0; i < tiles.size(); ++i)
                if (tiles.tiles[i].source_id == id) u.push_back(i);
        }
    } else {
        for (std::size_t i = 0; i < tiles.size(); ++i)
            units.push_back({i});
    }
    if (units.size() < 3)
        throw std::invalid_argument("split: fewer units than partitions");

    std::vector<std::size_t> order(units.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    // Fisher-Yates
    for (std::size_t i = order.size() - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_index(i + 1)]);

    const std::size_t n = units.size();
    const auto n_val = static_cast<std::size_t>(std::llround(n * fractions.val));
    const auto n_test = static_cast<std::size_t>(std::llround(n * fractions.test));
    const std::size_t n_train = n - n_val - n_test;

    SplitResult out;
    out.train.tile_size = out.val.tile_size = out.test.tile_size = tiles.tile_size;
    for (std::size_t i = 0; i < n; ++i) {
        TileSet& dst = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
        for (std::size_t ti : units[order[i]]) dst.tiles.push_back(tiles.tiles[ti]);
    }
    return out;
}

namespace {

template <typename T>
std::vector<T> rot90_cw(const std::vector<T>& src, int n) {
    std::vector<T> out(src.size());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            out[static_cast<std::size_t>(c) * n + (n - 1 - r)] =
                src[static_cast<std::size_t>(r) * n + c];
    return out;
}

template <typename T>
std::vector<T> flip_h(const std::vector<T>& src, int n) {
    std::vector<T> out(src.size());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            out[static_cast<std::size_t>(r) * n + (n - 1 - c)] =
                src[static_cast<std::size_t>(r) * n + c];
    return out;
}

template <typename T>
std::vector<T> flip_v(const std::vector<T>& src, int n) {
    std::vector<T> out(src.size());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            out[static_cast<std::size_t>(n - 1 - r) * n + c] =
                src[static_cast<std::size_t>(r) * n + c];
    return out;
}

void blur_channel(std::vector<float>& ch, int n, double sigma) {
    Image2D img(n, n);
    img.data = ch;
    ch = gaussian_blur(img, sigma).data;
}

} // namespace

Tile augment(const Tile& t, const AugmentationSpec& spec, Rng& rng) {
    spec.validate();
    Tile out = t;
    const int n = t.size;

    if (spec.rotate90 && rng.bernoulli(spec.p_rotate)) {
        int k = 1 + static_cast<int>(rng.uniform_index(3));
        for (int i = 0; i < k; ++i) {
            out.se = rot90_cw(out.se, n);
            out.inlens = rot90_cw(out.inlens, n);
            out.target = rot90_cw(out.target, n);
        }
    }
    if (spec.flip_horizontal && rng.bernoulli(spec.p_flip)) {
        out.se = flip_h(out.se, n);
        out.inlens = flip_h(out.inlens, n);
        out.target = flip_h(out.target, n);
    }
    if (spec.flip_vertical && rng.bernoulli(spec.p_flip)) {
        out.se = flip_v(out.se, n);
        out.inlens = flip_v(out.inlens, n);
        out.target = flip_v(out.target, n);
    }
    if (rng.bernoulli(spec.p_noise) && spec.noise_sigma > 0.0) {
        for (auto& v : out.se)
            v = std::clamp(v + static_cast<float>(rng.normal(0.0, spec.noise_sigma)), 0.0f, 1.0f);
        for (auto& v : out.inlens)
            v = std::clamp(v + static_cast<float>(rng.normal(0.0, spec.noise_sigma)), 0.0f, 1.0f);
    }
    if (rng.bernoulli(spec.p_blur) && spec.blur_sigma_hi > 0.0) {
        double sigma = rng.uniform(std::max(spec.blur_sigma_lo, 1e-3), spec.blur_sigma_hi);
        blur_channel(out.se, n, sigma);
        blur_channel(out.inlens, n, sigma);
        for (auto& v : out.se) v = std::clamp(v, 0.0f, 1.0f);
        for (auto& v : out.inlens) v = std::clamp(v, 0.0f, 1.0f);
    }
    return out;
}

namespace {

void append_tileset(json& manifest, const TileSet& ts, const fs::path& dir,
                    const std::string& split_name, int& next_id) {
    for (const auto& t : ts.tiles) {
        char stem[16];
        std::snprintf(stem, sizeof(stem), "%05d", next_id);
        Image2D se(t.size, t.size), inlens(t.size, t.size);
        se.data = t.se;
        inlens.data = t.inlens;
        BinaryMask m(t.size, t.size);
        m.data = t.target;
        std::string se_name = std::string(stem) + "_se.png";
        std::string in_name = std::string(stem) + "_inlens.png";
        std::string mask_name = std::string(stem) + "_mask.png";
        save_image_png(se, (dir / se_name).string());
        save_image_png(inlens, (dir / in_name).string());
        save_mask_png(m, (dir / mask_name).string());
        manifest["tiles"].push_back({{"id", next_id},
                                     {"origin", {t.origin_row, t.origin_col}},
                                     {"source_id", t.source_id},
                                     {"split", split_name},
                                     {"se", se_name},
                                     {"inlens", in_name},
                                     {"mask", mask_name}});
        ++next_id;
    }
}

void write_manifest(const json& manifest, const fs::path& dir) {
    fs::path tmp = dir / "manifest.json.tmp";
    {
        std::ofstream os(tmp);
        os << manifest.dump(2) << "\n";
    }
    fs::rename(tmp, dir / "manifest.json");
}

} // namespace

void save_tileset(const TileSet& ts, const std::string& dir, const std::string& split_name) {
    fs::create_directories(dir);
    json manifest;
    manifest["tile_size"] = ts.tile_size;
    manifest["tiles"] = json::array();
    int id = 0;
    append_tileset(manifest, ts, dir, split_name, id);
    write_manifest(manifest, dir);
}

void save_split(const SplitResult& sr, const std::string& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["tile_size"] = sr.train.tile_size;
    manifest["tiles"] = json::array();
    int id = 0;
    append_tileset(manifest, sr.train, dir, "train", id);
    append_tileset(manifest, sr.val, dir, "val", id);
    append_tileset(manifest, sr.test, dir, "test", id);
    write_manifest(manifest, dir);
}

TileSet load_tileset(const std::string& dir, const std::string& split_name) {
    fs::path base(dir);
    std::ifstream is(base / "manifest.json");
    if (!is)
        throw std::runtime_error("load_tileset: no manifest.json in " + dir);
    json manifest = json::parse(is);

    TileSet ts;
    ts.tile_size = manifest.at("tile_size").get<int>();
    for (const auto& e : manifest.at("tiles")) {
        if (!split_name.empty() && e.at("split").get<std::string>() != split_name) continue;
        Tile t;
        t.size = ts.tile_size;
        t.origin_row = e.at("origin")[0].get<int>();
        t.origin_col = e.at("origin")[1].get<int>();
        t.source_id = e.at("source_id").get<int>();
        t.se = load_image((base / e.at("se").get<std::string>()).string()).data;
        t.inlens = load_image((base / e.at("inlens").get<std::string>()).string()).data;
        t.target = load_mask((base / e.at("mask").get<std::string>()).string()).data;
        ts.tiles.push_back(std::move(t));
    }
    return ts;
}

Image2D reassemble(const std::vector<std::pair<Image2D, std::pair<int, int>>>& tiles,
                   int width, int height) {
    Image2D out(width, height);
    for (const auto& [img, origin] : tiles) {
        const auto [r0, c0] = origin;
        for (int r = 0; r < img.height; ++r)
            for (int c = 0; c < img.width; ++c)
                out.at(r0 + r, c0 + c) = img.at(r, c);
    }
    return out;
}

} // namespace carbideseg
