#include "carbideseg/classical.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace carbideseg {

namespace {

std::vector<float> gaussian_kernel(double sigma) {
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<float> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = static_cast<float>(w);
        sum += w;
    }
    for (auto& w : k) w = static_cast<float>(w / sum);
    return k;
}

// Sliding-window extremum over columns [x-h, x+h], clamped to the row.
// Monotonic deque, O(1) amortized per pixel.
template <typename Cmp>
void sliding_extremum_row(const float* src, int w, int h, float* dst, Cmp better) {
    std::deque<int> q;  // indices, values monotonic under `better`
    int right = 0;
    for (int x = 0; x < w; ++x) {
        int hi = std::min(w - 1, x + h);
        for (; right <= hi; ++right) {
            while (!q.empty() && !better(src[q.back()], src[right])) q.pop_back();
            q.push_back(right);
        }
        int lo = std::max(0, x - h);
        while (q.front() < lo) q.pop_front();
        dst[x] = src[q.front()];
    }
}

// Grayscale erosion/dilation by chord decomposition of the structuring
// element: per row offset dy the element contributes a horizontal segment
// of half-length chord[|dy|]; the 2-D extremum is the vertical extremum of
// per-chord horizontal extrema. Replicate border via index clamping.
template <typename Cmp>
Image2D morph_extremum(const Image2D& img, int radius, bool square_se, Cmp better,
                       float init) {
    const int w = img.width, h = img.height;
    std::vector<int> chord(radius + 1);
    for (int dy = 0; dy <= radius; ++dy) {
        chord[dy] = square_se
                        ? radius
                        : static_cast<int>(std::floor(std::sqrt(
                              static_cast<double>(radius) * radius - static_cast<double>(dy) * dy)));
    }

    Image2D out(w, h);
    std::vector<float> rowbuf(w);
    for (int y = 0; y < h; ++y) {
        float* dst = out.row(y);
        std::fill(dst, dst + w, init);
        for (int dy = -radius; dy <= radius; ++dy) {
            int sy = std::clamp(y + dy, 0, h - 1);
            sliding_extremum_row(img.row(sy), w, chord[std::abs(dy)], rowbuf.data(), better);
            for (int x = 0; x < w; ++x)
                if (better(rowbuf[x], dst[x])) dst[x] = rowbuf[x];
        }
    }
    return out;
}

} // namespace

Image2D gaussian_blur(const Image2D& img, double sigma) {
    if (sigma <= 0.0)
        throw std::invalid_argument("gaussian_blur: sigma must be positive");
    const auto k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    const int w = img.width, h = img.height;

    // horizontal pass
    Image2D tmp(w, h);
    for (int y = 0; y < h; ++y) {
        const float* src = img.row(y);
        float* dst = tmp.row(y);
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int i = -radius; i <= radius; ++i)
                acc += k[i + radius] * src[std::clamp(x + i, 0, w - 1)];
            dst[x] = acc;
        }
    }
    // vertical pass
    Image2D out(w, h);
    out.pixel_size_nm = img.pixel_size_nm;
    for (int y = 0; y < h; ++y) {
        float* dst = out.row(y);
        for (int i = -radius; i <= radius; ++i) {
            const float kv = k[i + radius];
            const float* src = tmp.row(std::clamp(y + i, 0, h - 1));
            if (i == -radius)
                for (int x = 0; x < w; ++x) dst[x] = kv * src[x];
            else
                for (int x = 0; x < w; ++x) dst[x] += kv * src[x];
        }
    }
    return out;
}

Image2D erode(const Image2D& img, int radius, bool square_se) {
    if (radius < 1) throw std::invalid_argument("erode: radius must be >= 1");
    return morph_extremum(img, radius, square_se,
                          [](float a, float b) { return a < b; }, 1.0f);
}

Image2D dilate(const Image2D& img, int radius, bool square_se) {
    if (radius < 1) throw std::invalid_argument("dilate: radius must be >= 1");
    return morph_extremum(img, radius, square_se,
                          [](float a, float b) { return a > b; }, 0.0f);
}

Image2D opening(const Image2D& img, int radius, bool square_se) {
    return dilate(erode(img, radius, square_se), radius, square_se);
}

Image2D white_tophat(const Image2D& img, int radius, bool square_se) {
    Image2D opened = opening(img, radius, square_se);
    Image2D out(img.width, img.height);
    out.pixel_size_nm = img.pixel_size_nm;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::max(0.0f, img.data[i] - opened.data[i]);
    return out;
}

} // namespace carbideseg
