#pragma once

#include "carbideseg/image.hpp"

namespace carbideseg {

struct BaselineConfig {
    double merge_ratio = 0.5;
    double denoise_sigma = 1.0;
    int tophat_radius = 30;
    int min_component_size = 3;
    int connectivity = 8;           // foreground connectivity, 4 or 8
    bool square_structuring_element = false;

    void validate() const;
};

// Separable Gaussian, kernel radius ceil(3*sigma), replicate border.
Image2D gaussian_blur(const Image2D& img, double sigma);

// Grayscale erosion / dilation by a discrete Euclidean disk
// {(dx,dy): dx^2+dy^2 <= r^2}, or a (2r+1)^2 square when square_se is set.
// Sliding-window extrema per chord, O(diameter) per pixel.
Image2D erode(const Image2D& img, int radius, bool square_se = false);
Image2D dilate(const Image2D& img, int radius, bool square_se = false);
Image2D opening(const Image2D& img, int radius, bool square_se = false);

// img - opening(img); removes slowly varying background, keeps small
// bright features.
Image2D white_tophat(const Image2D& img, int radius, bool square_se = false);

// Otsu threshold over a 256-bin histogram on [0,1]. Returns the upper edge
// of the best split bin; foreground is "value > threshold". Ties break
// toward the lower threshold. Throws on constant images.
double otsu_threshold(const Image2D& img);

BinaryMask threshold_above(const Image2D& img, double threshold);

// Background components not reachable from the border (4-connected flood
// fill on background) become foreground.
BinaryMask fill_holes(const BinaryMask& mask);

LabelMap label_components(const BinaryMask& mask, int connectivity = 8);

BinaryMask remove_small(const BinaryMask& mask, int min_size, int connectivity = 8);

// merge -> blur -> top-hat -> Otsu -> fill holes -> remove small.
BinaryMask baseline_segment(const ChannelPair& pair, const BaselineConfig& cfg = {});

} // namespace carbideseg
