#include "carbideseg/image.hpp"

#include <algorithm>

namespace carbideseg {

Image2D crop_rows(const Image2D& img, int top, int bottom) {
    if (top < 0 || bottom < 0)
        throw std::invalid_argument("crop_rows: negative crop");
    if (top + bottom >= img.height)
        throw std::invalid_argument("crop_rows: crop exceeds image height");
    Image2D out(img.width, img.height - top - bottom);
    out.pixel_size_nm = img.pixel_size_nm;
    std::copy(img.data.begin() + static_cast<std::size_t>(top) * img.width,
              img.data.begin() + static_cast<std::size_t>(img.height - bottom) * img.width,
              out.data.begin());
    return out;
}

Image2D merge_channels(const ChannelPair& pair, double ratio) {
    pair.check_aligned();
    if (ratio < 0.0 || ratio > 1.0)
        throw std::invalid_argument("merge_channels: ratio outside [0,1]");
    Image2D out(pair.se.width, pair.se.height);
    out.pixel_size_nm = pair.se.pixel_size_nm;
    const float r = static_cast<float>(ratio);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        float v = r * pair.se.data[i] + (1.0f - r) * pair.inlens.data[i];
        out.data[i] = std::clamp(v, 0.0f, 1.0f);
    }
    return out;
}

} // namespace carbideseg
