#include "carbideseg/classical.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace carbideseg {

void BaselineConfig::validate() const {
    if (merge_ratio < 0.0 || merge_ratio > 1.0)
        throw std::invalid_argument("BaselineConfig: merge_ratio outside [0,1]");
    if (denoise_sigma <= 0.0)
        throw std::invalid_argument("BaselineConfig: denoise_sigma must be positive");
    if (tophat_radius < 1)
        throw std::invalid_argument("BaselineConfig: tophat_radius must be >= 1");
    if (min_component_size < 1)
        throw std::invalid_argument("BaselineConfig: min_component_size must be >= 1");
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("BaselineConfig: connectivity must be 4 or 8");
}

double otsu_threshold(const Image2D& img) {
    constexpr int kBins = 256;
    std::array<std::int64_t, kBins> hist{};
    for (float v : img.data) {
        int b = static_cast<int>(v * kBins);
        hist[std::clamp(b, 0, kBins - 1)]++;
    }

    int occupied = 0;
    for (auto c : hist) occupied += (c > 0);
    if (occupied < 2)
        throw std::invalid_argument("otsu_threshold: constant image has no valid threshold");

    const auto total = static_cast<double>(img.data.size());
    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) sum_all += static_cast<double>(b) * hist[b];

    // maximize between-class variance w0*w1*(mu0-mu1)^2; ties break low
    double best_var = -1.0;
    int best_k = 0;
    double w0 = 0.0, sum0 = 0.0;
    for (int k = 0; k < kBins - 1; ++k) {
        w0 += static_cast<double>(hist[k]);
        sum0 += static_cast<double>(k) * hist[k];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_k = k;
        }
    }
    // boundary between bin best_k (background) and bin best_k+1
    return static_cast<double>(best_k + 1) / kBins;
}

BinaryMask threshold_above(const Image2D& img, double threshold) {
    BinaryMask mask(img.width, img.height);
    const float t = static_cast<float>(threshold);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        mask.data[i] = img.data[i] >= t ? 1 : 0;
    return mask;
}

BinaryMask fill_holes(const BinaryMask& mask) {
    const int w = mask.width, h = mask.height;
    std::vector<std::uint8_t> reached(mask.size(), 0);
    std::vector<int> stack;
    auto push = [&](int r, int c) {
        std::size_t i = static_cast<std::size_t>(r) * w + c;
        if (!reached[i] && !mask.data[i]) {
            reached[i] = 1;
            stack.push_back(static_cast<int>(i));
        }
    };
    for (int c = 0; c < w; ++c) { push(0, c); push(h - 1, c); }
    for (int r = 0; r < h; ++r) { push(r, 0); push(r, w - 1); }

    // 4-connected flood fill over background from the border
    while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        int r = i / w, c = i % w;
        if (r > 0) push(r - 1, c);
        if (r < h - 1) push(r + 1, c);
        if (c > 0) push(r, c - 1);
        if (c < w - 1) push(r, c + 1);
    }

    BinaryMask out(w, h);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = (mask.data[i] || !reached[i]) ? 1 : 0;
    return out;
}

LabelMap label_components(const BinaryMask& mask, int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("label_components: connectivity must be 4 or 8");
    const int w = mask.width, h = mask.height;
    LabelMap lm;
    lm.width = w;
    lm.height = h;
    lm.data.assign(mask.size(), 0);

    static constexpr int dr8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
    static constexpr int dc8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
    static constexpr int dr4[] = {-1, 0, 0, 1};
    static constexpr int dc4[] = {0, -1, 1, 0};
    const int* dr = connectivity == 8 ? dr8 : dr4;
    const int* dc = connectivity == 8 ? dc8 : dc4;
    const int ndirs = connectivity;

    std::vector<int> stack;
    std::int32_t next_label = 0;
    for (std::size_t seed = 0; seed < mask.size(); ++seed) {
        if (!mask.data[seed] || lm.data[seed]) continue;
        ++next_label;
        lm.data[seed] = next_label;
        stack.push_back(static_cast<int>(seed));
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            int r = i / w, c = i % w;
            for (int d = 0; d < ndirs; ++d) {
                int nr = r + dr[d], nc = c + dc[d];
                if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
                std::size_t ni = static_cast<std::size_t>(nr) * w + nc;
                if (mask.data[ni] && !lm.data[ni]) {
                    lm.data[ni] = next_label;
                    stack.push_back(static_cast<int>(ni));
                }
            }
        }
    }
    lm.num_components = next_label;
    return lm;
}

BinaryMask remove_small(const BinaryMask& mask, int min_size, int connectivity) {
    if (min_size < 1)
        throw std::invalid_argument("remove_small: min_size must be >= 1");
    LabelMap lm = label_components(mask, connectivity);
    std::vector<std::int64_t> area(lm.num_components + 1, 0);
    for (auto l : lm.data) area[l]++;
    BinaryMask out(mask.width, mask.height);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = (lm.data[i] && area[lm.data[i]] >= min_size) ? 1 : 0;
    return out;
}

BinaryMask baseline_segment(const ChannelPair& pair, const BaselineConfig& cfg) {
    cfg.validate();
    Image2D merged = merge_channels(pair, cfg.merge_ratio);
    Image2D blurred = gaussian_blur(merged, cfg.denoise_sigma);
    Image2D flat = white_tophat(blurred, cfg.tophat_radius, cfg.square_structuring_element);
    double t = otsu_threshold(flat);
    BinaryMask mask = threshold_above(flat, t);
    mask = fill_holes(mask);
    return remove_small(mask, cfg.min_component_size, cfg.connectivity);
}

} // namespace carbideseg
