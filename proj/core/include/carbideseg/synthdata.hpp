#pragma once

#include <cstdint>
#include <string>

#include "carbideseg/image.hpp"

namespace carbideseg {

// SEM-like scene: bright elliptical particles on a textured, unevenly lit
// matrix, rendered through two channels with distinct contrast transfer.
struct SceneConfig {
    int width = 512;
    int height = 512;
    int count_lo = 10;
    int count_hi = 24;
    double axis_lo_px = 3.0;   // ellipse semi-axes
    double axis_hi_px = 14.0;
    double matrix_level = 0.35;
    double carbide_level_se = 0.72;      // SE channel carbide intensity
    double carbide_level_inlens = 0.88;  // InLens shows carbides at higher contrast
    double carbide_jitter = 0.03;        // per-particle intensity spread
    double texture_amplitude = 0.04;
    double texture_correlation_px = 4.0;
    double gradient_amplitude = 0.08;    // illumination plane tilt
    double channel_correlation = 0.7;    // shared fraction of the texture fields
    double noise_sigma = 0.02;
    double blur_sigma = 0.8;
    double pixel_size_nm = 6.98;
    int max_placement_retries = 500;
    std::uint64_t seed = 0;

    void validate() const;

    // Gray levels of particles overlap the matrix texture; the classical
    // pipeline degrades here while two-channel contrast remains learnable.
    static SceneConfig hard_mode();
};

struct Scene {
    ChannelPair channels;
    BinaryMask mask;
};

Scene generate_scene(const SceneConfig& cfg);

struct DatasetStats {
    int scenes = 0;
    double mean_foreground_fraction = 0.0;
};

// n scenes with seeds derived from cfg.seed; writes <i>_se.png,
// <i>_inlens.png, <i>_mask.png plus manifest.json with per-scene stats.
DatasetStats generate_dataset(const SceneConfig& cfg, int n_images,
                              const std::string& out_dir);

} // namespace carbideseg
