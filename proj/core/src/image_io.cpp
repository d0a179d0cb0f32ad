#include "carbideseg/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace carbideseg {

Image2D load_image(const std::string& path, bool normalize) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty())
        throw std::runtime_error("load_image: cannot read " + path);
    if (m.channels() != 1)
        throw std::runtime_error("load_image: expected single-channel image, got " +
                                 std::to_string(m.channels()) + " channels: " + path);

    Image2D out(m.cols, m.rows);
    if (m.depth() == CV_8U) {
        const float scale = normalize ? 1.0f / 255.0f : 1.0f;
        for (int r = 0; r < m.rows; ++r) {
            const std::uint8_t* src = m.ptr<std::uint8_t>(r);
            for (int c = 0; c < m.cols; ++c) out.at(r, c) = src[c] * scale;
        }
    } else if (m.depth() == CV_16U) {
        // 16-bit normalized by 65535
        const float scale = normalize ? 1.0f / 65535.0f : 1.0f;
        for (int r = 0; r < m.rows; ++r) {
            const std::uint16_t* src = m.ptr<std::uint16_t>(r);
            for (int c = 0; c < m.cols; ++c) out.at(r, c) = src[c] * scale;
        }
    } else {
        throw std::runtime_error("load_image: unsupported bit depth in " + path);
    }
    return out;
}

void save_image_png(const Image2D& img, const std::string& path) {
    cv::Mat m(img.height, img.width, CV_16UC1);
    for (int r = 0; r < img.height; ++r) {
        std::uint16_t* dst = m.ptr<std::uint16_t>(r);
        for (int c = 0; c < img.width; ++c) {
            float v = std::min(std::max(img.at(r, c), 0.0f), 1.0f);
            dst[c] = static_cast<std::uint16_t>(v * 65535.0f + 0.5f);
        }
    }
    if (!cv::imwrite(path, m))
        throw std::runtime_error("save_image_png: cannot write " + path);
}

BinaryMask load_mask(const std::string& path) {
    Image2D img = load_image(path, true);
    BinaryMask mask(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        mask.data[i] = img.data[i] >= 0.5f ? 1 : 0;
    return mask;
}

void save_mask_png(const BinaryMask& mask, const std::string& path) {
    cv::Mat m(mask.height, mask.width, CV_8UC1);
    for (int r = 0; r < mask.height; ++r) {
        std::uint8_t* dst = m.ptr<std::uint8_t>(r);
        for (int c = 0; c < mask.width; ++c) dst[c] = mask.at(r, c) ? 255 : 0;
    }
    if (!cv::imwrite(path, m))
        throw std::runtime_error("save_mask_png: cannot write " + path);
}

} // namespace carbideseg
