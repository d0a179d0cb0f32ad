#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace carbideseg {

// Single-channel raster of intensities in [0,1], row-major.
// pixel_size is physical length per pixel in nanometers when known.
struct Image2D {
    int width = 0;
    int height = 0;
    std::vector<float> data;
    std::optional<double> pixel_size_nm;

    Image2D() = default;
    Image2D(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
    float at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
    float* row(int r) { return data.data() + static_cast<std::size_t>(r) * width; }
    const float* row(int r) const { return data.data() + static_cast<std::size_t>(r) * width; }
    std::size_t size() const { return data.size(); }
};

// Foreground flags, row-major, dimensions matching the annotated image.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    std::uint8_t& at(int row, int col) { return data[static_cast<std::size_t>(row) * width + col]; }
    std::uint8_t at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
    std::size_t size() const { return data.size(); }

    std::size_t foreground_count() const {
        std::size_t n = 0;
        for (auto v : data) n += (v != 0);
        return n;
    }
};

// Connected-component instance labels; 0 is background.
struct LabelMap {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> data;
    std::int32_t num_components = 0;

    std::int32_t at(int row, int col) const { return data[static_cast<std::size_t>(row) * width + col]; }
};

// The two detector signals of one field of view, pre-aligned.
struct ChannelPair {
    Image2D se;
    Image2D inlens;

    void check_aligned() const {
        if (se.width != inlens.width || se.height != inlens.height)
            throw std::invalid_argument("channel pair dimensions differ");
    }
};

// --- image I/O (PNG / TIFF, 8 or 16 bit grayscale) ---

Image2D load_image(const std::string& path, bool normalize = true);
void save_image_png(const Image2D& img, const std::string& path);

BinaryMask load_mask(const std::string& path);
void save_mask_png(const BinaryMask& mask, const std::string& path);

// --- preprocessing ---

Image2D crop_rows(const Image2D& img, int top, int bottom);
Image2D merge_channels(const ChannelPair& pair, double ratio);

} // namespace carbideseg
