#pragma once

// Middlebury .flo format: little-endian, float magic 202021.25, int32 width,
// int32 height, then height*width interleaved (u, v) float pairs, row-major.

#include <cstdint>
#include <fstream>
#include <string>

#include "simpose/flow.hpp"

namespace simpose::flow {

inline constexpr float kFloMagic = 202021.25f;

inline void write_flo(const FlowField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for write: " + path);
    const std::int32_t w = field.width, h = field.height;
    out.write(reinterpret_cast<const char*>(&kFloMagic), 4);
    out.write(reinterpret_cast<const char*>(&w), 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    out.write(reinterpret_cast<const char*>(field.vectors.data()),
              static_cast<std::streamsize>(field.vectors.size() * sizeof(Vec2f)));
    if (!out) throw Error("short write: " + path);
}

inline FlowField read_flo(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    float magic = 0.0f;
    std::int32_t w = 0, h = 0;
    if (!in.read(reinterpret_cast<char*>(&magic), 4) || !in.read(reinterpret_cast<char*>(&w), 4) ||
        !in.read(reinterpret_cast<char*>(&h), 4))
        throw Error("truncated flo header: " + path);
    if (magic != kFloMagic) throw Error("bad magic in " + path);
    if (w <= 0 || h <= 0) throw Error("bad dimensions in " + path);
    FlowField field(w, h);
    if (!in.read(reinterpret_cast<char*>(field.vectors.data()),
                 static_cast<std::streamsize>(field.vectors.size() * sizeof(Vec2f))))
        throw Error("truncated flo payload: " + path);
    return field;
}

}  // namespace simpose::flow
