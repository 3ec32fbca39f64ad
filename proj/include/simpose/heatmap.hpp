#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "simpose/image.hpp"
#include "simpose/types.hpp"

namespace simpose::keypoints {

/// Per-frame keypoint heatmaps, one channel per input keypoint. A channel is
/// all-zero exactly when its keypoint is hidden (any Hidden state).
struct HeatmapStack {
    std::vector<ImageF32> maps;  // T images of size x size x 12

    int length() const { return static_cast<int>(maps.size()); }
};

/// Gaussian bumps with unit peak: value at q is exp(-|q - p|^2 / (2 sigma^2))
/// for a visible keypoint at p, evaluated over the whole crop.
inline HeatmapStack rasterize_heatmaps(const std::vector<std::array<Keypoint2D, kInputKeypointCount>>& keypoints,
                                       int size = 224, float sigma = 10.0f) {
    if (sigma <= 0.0f) throw Error("rasterize_heatmaps: sigma must be positive");
    HeatmapStack stack;
    stack.maps.reserve(keypoints.size());
    const float inv_2s2 = 1.0f / (2.0f * sigma * sigma);
    for (const auto& kps : keypoints) {
        ImageF32 map(size, size, kInputKeypointCount);
        for (int c = 0; c < kInputKeypointCount; ++c) {
            const auto& kp = kps[static_cast<std::size_t>(c)];
            if (is_hidden(kp.state)) continue;
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x) {
                    const float dx = static_cast<float>(x) - kp.position.x;
                    const float dy = static_cast<float>(y) - kp.position.y;
                    map.at(x, y, c) = std::exp(-(dx * dx + dy * dy) * inv_2s2);
                }
        }
        stack.maps.push_back(std::move(map));
    }
    return stack;
}

// Tensor container: 16-byte header (magic "MHTK", three little-endian
// uint32 dims), then row-major float32 payload. Heatmap frames are stored
// as (height, width, channels).

inline constexpr char kMhtkMagic[4] = {'M', 'H', 'T', 'K'};

inline void write_mhtk(const std::string& path, std::array<std::uint32_t, 3> dims,
                       const std::vector<float>& data) {
    if (static_cast<std::size_t>(dims[0]) * dims[1] * dims[2] != data.size())
        throw Error("write_mhtk: dims do not match payload size");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for write: " + path);
    out.write(kMhtkMagic, 4);
    out.write(reinterpret_cast<const char*>(dims.data()), 12);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * 4));
    if (!out) throw Error("short write: " + path);
}

struct MhtkTensor {
    std::array<std::uint32_t, 3> dims{};
    std::vector<float> data;
};

inline MhtkTensor read_mhtk(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    char magic[4];
    MhtkTensor t;
    if (!in.read(magic, 4) || !in.read(reinterpret_cast<char*>(t.dims.data()), 12))
        throw Error("truncated mhtk header: " + path);
    if (std::string(magic, 4) != std::string(kMhtkMagic, 4)) throw Error("bad magic in " + path);
    t.data.resize(static_cast<std::size_t>(t.dims[0]) * t.dims[1] * t.dims[2]);
    if (!in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 4)))
        throw Error("truncated mhtk payload: " + path);
    return t;
}

inline void write_heatmap_frame(const ImageF32& map, const std::string& path) {
    write_mhtk(path,
               {static_cast<std::uint32_t>(map.height), static_cast<std::uint32_t>(map.width),
                static_cast<std::uint32_t>(map.channels)},
               map.data);
}

}  // namespace simpose::keypoints
