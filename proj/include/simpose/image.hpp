#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "simpose/types.hpp"

namespace simpose {

/// Row-major interleaved image; data layout is (y, x, c).
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c = 1, T fill = T{})
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    T& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    const T& at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool contains(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
    bool operator==(const Image&) const = default;
};

using ImageU8 = Image<std::uint8_t>;
using ImageF32 = Image<float>;
using ImageU16 = Image<std::uint16_t>;

template <typename T>
using Video = std::vector<Image<T>>;

inline std::uint8_t clamp_u8(float v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f) + 0.5f);
}

/// Clamped single-channel bilinear lookup.
inline float sample_bilinear(const ImageF32& img, float x, float y, int c = 0) {
    x = std::clamp(x, 0.0f, static_cast<float>(img.width - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(img.height - 1));
    const int x0 = std::min(static_cast<int>(x), img.width - 2 >= 0 ? img.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(y), img.height - 2 >= 0 ? img.height - 2 : 0);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const float fx = x - static_cast<float>(x0);
    const float fy = y - static_cast<float>(y0);
    const float a = img.at(x0, y0, c) * (1.0f - fx) + img.at(x1, y0, c) * fx;
    const float b = img.at(x0, y1, c) * (1.0f - fx) + img.at(x1, y1, c) * fx;
    return a * (1.0f - fy) + b * fy;
}

/// Bilinear lookup on an 8-bit image, one channel, returned as float.
inline float sample_bilinear_u8(const ImageU8& img, float x, float y, int c) {
    x = std::clamp(x, 0.0f, static_cast<float>(img.width - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(img.height - 1));
    const int x0 = std::min(static_cast<int>(x), img.width - 2 >= 0 ? img.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(y), img.height - 2 >= 0 ? img.height - 2 : 0);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const float fx = x - static_cast<float>(x0);
    const float fy = y - static_cast<float>(y0);
    const float a = img.at(x0, y0, c) * (1.0f - fx) + img.at(x1, y0, c) * fx;
    const float b = img.at(x0, y1, c) * (1.0f - fx) + img.at(x1, y1, c) * fx;
    return a * (1.0f - fy) + b * fy;
}

/// Separable Gaussian blur with reflected boundaries.
inline ImageF32 gaussian_blur(const ImageF32& img, float sigma) {
    if (sigma <= 0.0f) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0f * sigma)));
    std::vector<float> kernel(static_cast<std::size_t>(2 * radius + 1));
    float sum = 0.0f;
    for (int i = -radius; i <= radius; ++i) {
        const float v = std::exp(-0.5f * (i * i) / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : kernel) v /= sum;

    const auto reflect = [](int i, int n) {
        if (n == 1) return 0;
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * n - 2 - i;
        }
        return i;
    };

    ImageF32 tmp(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                float acc = 0.0f;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[static_cast<std::size_t>(i + radius)] * img.at(reflect(x + i, img.width), y, c);
                tmp.at(x, y, c) = acc;
            }
    ImageF32 out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                float acc = 0.0f;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[static_cast<std::size_t>(i + radius)] * tmp.at(x, reflect(y + i, img.height), c);
                out.at(x, y, c) = acc;
            }
    return out;
}

/// Bilinear resize to the exact target size.
template <typename T>
Image<T> resize_bilinear(const Image<T>& img, int out_w, int out_h) {
    Image<T> out(out_w, out_h, img.channels);
    const float sx = static_cast<float>(img.width) / static_cast<float>(out_w);
    const float sy = static_cast<float>(img.height) / static_cast<float>(out_h);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            const float src_x = (static_cast<float>(x) + 0.5f) * sx - 0.5f;
            const float src_y = (static_cast<float>(y) + 0.5f) * sy - 0.5f;
            for (int c = 0; c < img.channels; ++c) {
                float v;
                if constexpr (std::is_same_v<T, std::uint8_t>) {
                    v = sample_bilinear_u8(img, src_x, src_y, c);
                    out.at(x, y, c) = clamp_u8(v);
                } else {
                    v = sample_bilinear(img, src_x, src_y, c);
                    out.at(x, y, c) = static_cast<T>(v);
                }
            }
        }
    return out;
}

/// Rec.601 luma of an RGB(A) 8-bit image, scaled to [0, 1].
inline ImageF32 to_grayscale(const ImageU8& img) {
    ImageF32 out(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const float r = img.at(x, y, 0);
            const float g = img.channels > 1 ? img.at(x, y, 1) : r;
            const float b = img.channels > 2 ? img.at(x, y, 2) : r;
            out.at(x, y) = (0.299f * r + 0.587f * g + 0.114f * b) / 255.0f;
        }
    return out;
}

}  // namespace simpose
