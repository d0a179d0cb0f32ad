#pragma once

#include <array>
#include <string>
#include <vector>

#include "carbideseg/image.hpp"
#include "carbideseg/rng.hpp"

namespace carbideseg {

// One 2-channel training sample with its target mask and provenance.
struct Tile {
    int size = 0;
    std::vector<float> se;
    std::vector<float> inlens;
    std::vector<std::uint8_t> target;
    int origin_row = 0;
    int origin_col = 0;
    int source_id = 0;
};

struct TileSet {
    int tile_size = 0;
    std::vector<Tile> tiles;

    std::size_t size() const { return tiles.size(); }
    bool empty() const { return tiles.empty(); }
};

struct AugmentationSpec {
    bool rotate90 = true;           // rotations by k*90 degrees, k in {1,2,3}
    bool flip_horizontal = true;
    bool flip_vertical = true;
    double p_rotate = 0.5;
    double p_flip = 0.5;
    double p_noise = 0.5;
    double p_blur = 0.5;
    double noise_sigma = 0.03;      // additive Gaussian, intensity units
    double blur_sigma_lo = 0.5;     // blur sigma drawn uniformly from this range
    double blur_sigma_hi = 1.5;

    void validate() const;
    static AugmentationSpec none() {
        AugmentationSpec s;
        s.p_rotate = s.p_flip = s.p_noise = s.p_blur = 0.0;
        return s;
    }
};

// Non-overlapping grid tiling from the top-left corner; partial border
// strips are discarded.
TileSet tile(const ChannelPair& pair, const BinaryMask& mask, int tile_size,
             int source_id = 0);

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

struct SplitResult {
    TileSet train;
    TileSet val;
    TileSet test;
};

// Seeded random partition; sizes are round(n*f_val) / round(n*f_test) with
// the remainder assigned to train. Set per_image to keep all tiles of one
// source image in the same partition.
SplitResult split(const TileSet& tiles, const SplitFractions& fractions,
                  std::uint64_t seed, bool per_image = false);

// Geometric transforms hit channels and mask identically; noise and blur
// hit the channels only. Requires a square tile when rotations are enabled.
Tile augment(const Tile& t, const AugmentationSpec& spec, Rng& rng);

// On-disk representation: paired PNGs plus a JSON manifest.
void save_tileset(const TileSet& ts, const std::string& dir,
                  const std::string& split_name = "unassigned");
void save_split(const SplitResult& sr, const std::string& dir);
TileSet load_tileset(const std::string& dir, const std::string& split_name = "");

// Reassemble per-tile rasters into a full image using recorded origins.
Image2D reassemble(const std::vector<std::pair<Image2D, std::pair<int, int>>>& tiles,
                   int width, int height);

} // namespace carbideseg
