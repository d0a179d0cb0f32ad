#include "carbideseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "carbideseg/classical.hpp"
#include "carbideseg/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace carbideseg {

void SceneConfig::validate() const {
    if (width < 8 || height < 8) throw std::invalid_argument("SceneConfig: image too small");
    if (count_lo < 0 || count_hi < count_lo)
        throw std::invalid_argument("SceneConfig: carbide count range not ordered");
    if (axis_lo_px <= 0.0 || axis_hi_px < axis_lo_px)
        throw std::invalid_argument("SceneConfig: axis range not ordered");
    for (double v : {matrix_level, carbide_level_se, carbide_level_inlens})
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("SceneConfig: intensity outside [0,1]");
    if (channel_correlation < 0.0 || channel_correlation > 1.0)
        throw std::invalid_argument("SceneConfig: channel_correlation outside [0,1]");
    if (noise_sigma < 0.0 || blur_sigma < 0.0 || texture_amplitude < 0.0)
        throw std::invalid_argument("SceneConfig: negative amplitude");
}

SceneConfig SceneConfig::hard_mode() {
    SceneConfig cfg;
    cfg.carbide_level_se = 0.47;
    cfg.carbide_level_inlens = 0.56;
    cfg.carbide_jitter = 0.05;
    cfg.texture_amplitude = 0.10;
    cfg.gradient_amplitude = 0.16;
    cfg.noise_sigma = 0.05;
    cfg.blur_sigma = 1.2;
    return cfg;
}

namespace {

struct Ellipse {
    double cx, cy, a, b, angle;
    double bound() const { return std::max(a, b); }
};

Image2D correlated_texture(int w, int h, double correlation_px, Rng& rng) {
    Image2D noise(w, h);
    for (auto& v : noise.data) v = static_cast<float>(rng.normal());
    if (correlation_px <= 0.0) return noise;
    Image2D tex = gaussian_blur(noise, correlation_px);
    // rescale to unit standard deviation
    double s = 0.0, s2 = 0.0;
    for (float v : tex.data) {
        s += v;
        s2 += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(tex.data.size());
    const double mean = s / n;
    const double sd = std::sqrt(std::max(1e-12, s2 / n - mean * mean));
    for (auto& v : tex.data) v = static_cast<float>((v - mean) / sd);
    return tex;
}

} // namespace

Scene generate_scene(const SceneConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const int w = cfg.width, h = cfg.height;

    // ground-truth particles, non-overlapping by bounding-circle test
    const int count = cfg.count_lo +
                      static_cast<int>(rng.uniform_index(
                          static_cast<std::uint64_t>(cfg.count_hi - cfg.count_lo + 1)));
    std::vector<Ellipse> ellipses;
    for (int i = 0; i < count; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_placement_retries; ++attempt) {
            Ellipse e;
            e.a = rng.uniform(cfg.axis_lo_px, cfg.axis_hi_px);
            e.b = rng.uniform(cfg.axis_lo_px, cfg.axis_hi_px);
            e.angle = rng.uniform(0.0, M_PI);
            const double m = e.bound() + 1.0;
            e.cx = rng.uniform(m, w - m);
            e.cy = rng.uniform(m, h - m);
            bool ok = true;
            for (const auto& o : ellipses) {
                const double dx = e.cx - o.cx, dy = e.cy - o.cy;
                const double min_d = e.bound() + o.bound() + 2.0;
                if (dx * dx + dy * dy < min_d * min_d) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                ellipses.push_back(e);
                placed = true;
                break;
            }
        }
        if (!placed)
            throw std::runtime_error("generate_scene: cannot place requested carbide count");
    }

    // exact rasterization: a pixel is foreground iff its center lies inside
    BinaryMask mask(w, h);
    for (const auto& e : ellipses) {
        const double ca = std::cos(e.angle), sa = std::sin(e.angle);
        const int r0 = std::max(0, static_cast<int>(e.cy - e.bound() - 1));
        const int r1 = std::min(h - 1, static_cast<int>(e.cy + e.bound() + 1));
        const int c0 = std::max(0, static_cast<int>(e.cx - e.bound() - 1));
        const int c1 = std::min(w - 1, static_cast<int>(e.cx + e.bound() + 1));
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) {
                const double dx = c - e.cx, dy = r - e.cy;
                const double u = (dx * ca + dy * sa) / e.a;
                const double v = (-dx * sa + dy * ca) / e.b;
                if (u * u + v * v <= 1.0) mask.at(r, c) = 1;
            }
    }

    // illumination plane shared by both channels
    const double gdir = rng.uniform(0.0, 2.0 * M_PI);
    const double gx = std::cos(gdir), gy = std::sin(gdir);

    Image2D tex_common = correlated_texture(w, h, cfg.texture_correlation_px, rng);
    Image2D tex_se = correlated_texture(w, h, cfg.texture_correlation_px, rng);
    Image2D tex_in = correlated_texture(w, h, cfg.texture_correlation_px, rng);
    const double rho = cfg.channel_correlation;
    const double mix = std::sqrt(std::max(0.0, 1.0 - rho * rho));

    std::vector<double> level_se(ellipses.size()), level_in(ellipses.size());
    for (std::size_t i = 0; i < ellipses.size(); ++i) {
        level_se[i] = cfg.carbide_level_se + rng.normal(0.0, cfg.carbide_jitter);
        level_in[i] = cfg.carbide_level_inlens + rng.normal(0.0, cfg.carbide_jitter);
    }

    // particle id per pixel for per-particle intensities
    std::vector<int> owner(mask.size(), -1);
    {
        int id = 0;
        for (const auto& e : ellipses) {
            const double ca = std::cos(e.angle), sa = std::sin(e.angle);
            const int r0 = std::max(0, static_cast<int>(e.cy - e.bound() - 1));
            const int r1 = std::min(h - 1, static_cast<int>(e.cy + e.bound() + 1));
            const int c0 = std::max(0, static_cast<int>(e.cx - e.bound() - 1));
            const int c1 = std::min(w - 1, static_cast<int>(e.cx + e.bound() + 1));
            for (int r = r0; r <= r1; ++r)
                for (int c = c0; c <= c1; ++c) {
                    const double dx = c - e.cx, dy = r - e.cy;
                    const double u = (dx * ca + dy * sa) / e.a;
                    const double v = (-dx * sa + dy * ca) / e.b;
                    if (u * u + v * v <= 1.0) owner[static_cast<std::size_t>(r) * w + c] = id;
                }
            ++id;
        }
    }

    auto render = [&](const Image2D& tex_own, const std::vector<double>& level,
                      Rng& noise_rng) {
        Image2D img(w, h);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * w + c;
                const double plane = cfg.gradient_amplitude *
                                     (gx * (c / static_cast<double>(w) - 0.5) +
                                      gy * (r / static_cast<double>(h) - 0.5));
                const double tex = cfg.texture_amplitude *
                                   (rho * tex_common.data[i] + mix * tex_own.data[i]);
                double v = owner[i] >= 0 ? level[owner[i]] : cfg.matrix_level;
                v += plane + tex;
                img.data[i] = static_cast<float>(v);
            }
        if (cfg.blur_sigma > 0.0) img = gaussian_blur(img, cfg.blur_sigma);
        if (cfg.noise_sigma > 0.0)
            for (auto& v : img.data)
                v += static_cast<float>(noise_rng.normal(0.0, cfg.noise_sigma));
        for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
        img.pixel_size_nm = cfg.pixel_size_nm;
        return img;
    };

    Scene scene;
    Rng noise_se = rng.fork(11), noise_in = rng.fork(22);
    scene.channels.se = render(tex_se, level_se, noise_se);
    scene.channels.inlens = render(tex_in, level_in, noise_in);
    scene.mask = std::move(mask);
    return scene;
}

DatasetStats generate_dataset(const SceneConfig& cfg, int n_images,
                              const std::string& out_dir) {
    if (n_images < 1)
        throw std::invalid_argument("generate_dataset: need at least one image");
    fs::create_directories(out_dir);
    Rng seeder(cfg.seed);

    json manifest;
    manifest["width"] = cfg.width;
    manifest["height"] = cfg.height;
    manifest["pixel_size_nm"] = cfg.pixel_size_nm;
    manifest["scenes"] = json::array();

    DatasetStats stats;
    stats.scenes = n_images;
    for (int i = 0; i < n_images; ++i) {
        SceneConfig scfg = cfg;
        scfg.seed = seeder.next_u64();
        Scene scene = generate_scene(scfg);
        char stem[16];
        std::snprintf(stem, sizeof(stem), "%04d", i);
        const std::string se = std::string(stem) + "_se.png";
        const std::string in = std::string(stem) + "_inlens.png";
        const std::string mk = std::string(stem) + "_mask.png";
        save_image_png(scene.channels.se, (fs::path(out_dir) / se).string());
        save_image_png(scene.channels.inlens, (fs::path(out_dir) / in).string());
        save_mask_png(scene.mask, (fs::path(out_dir) / mk).string());
        const double frac = static_cast<double>(scene.mask.foreground_count()) /
                            static_cast<double>(scene.mask.size());
        stats.mean_foreground_fraction += frac;
        manifest["scenes"].push_back({{"id", i},
                                      {"se", se},
                                      {"inlens", in},
                                      {"mask", mk},
                                      {"seed", scfg.seed},
                                      {"foreground_fraction", frac}});
    }
    stats.mean_foreground_fraction /= n_images;

    fs::path tmp = fs::path(out_dir) / "manifest.json.tmp";
    {
        std::ofstream os(tmp);
        os << manifest.dump(2) << "\n";
    }
    fs::rename(tmp, fs::path(out_dir) / "manifest.json");
    return stats;
}

} // namespace carbideseg
