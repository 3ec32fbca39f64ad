#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace simpose {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct Vec2f {
    float x = 0.0f;
    float y = 0.0f;

    Vec2f() = default;
    Vec2f(float x_, float y_) : x(x_), y(y_) {}

    Vec2f operator+(Vec2f o) const { return {x + o.x, y + o.y}; }
    Vec2f operator-(Vec2f o) const { return {x - o.x, y - o.y}; }
    Vec2f operator*(float s) const { return {x * s, y * s}; }
    Vec2f& operator+=(Vec2f o) { x += o.x; y += o.y; return *this; }
    bool operator==(const Vec2f&) const = default;

    float norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3f {
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;

    Vec3f() = default;
    Vec3f(float x_, float y_, float z_) : x(x_), y(y_), z(z_) {}

    Vec3f operator+(Vec3f o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3f operator-(Vec3f o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3f operator*(float s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3f&) const = default;

    float norm() const { return std::sqrt(x * x + y * y + z * z); }
};

enum class KeypointState : std::uint8_t {
    Visible,
    HiddenOutOfFrame,
    HiddenOccluder,
    HiddenTotalOcclusion,
    HiddenDepth,
    HiddenRandom,
};

inline bool is_hidden(KeypointState s) { return s != KeypointState::Visible; }

inline const char* to_string(KeypointState s) {
    switch (s) {
        case KeypointState::Visible: return "visible";
        case KeypointState::HiddenOutOfFrame: return "hidden_out_of_frame";
        case KeypointState::HiddenOccluder: return "hidden_occluder";
        case KeypointState::HiddenTotalOcclusion: return "hidden_total_occlusion";
        case KeypointState::HiddenDepth: return "hidden_depth";
        case KeypointState::HiddenRandom: return "hidden_random";
    }
    return "?";
}

inline KeypointState keypoint_state_from_string(const std::string& s) {
    if (s == "visible") return KeypointState::Visible;
    if (s == "hidden_out_of_frame") return KeypointState::HiddenOutOfFrame;
    if (s == "hidden_occluder") return KeypointState::HiddenOccluder;
    if (s == "hidden_total_occlusion") return KeypointState::HiddenTotalOcclusion;
    if (s == "hidden_depth") return KeypointState::HiddenDepth;
    if (s == "hidden_random") return KeypointState::HiddenRandom;
    throw Error("unknown keypoint state: " + s);
}

struct Keypoint2D {
    Vec2f position;
    KeypointState state = KeypointState::Visible;
};

inline constexpr int kEvalJointCount = 14;
inline constexpr int kInputKeypointCount = 12;

/// 14 x 3 joint grid, meters, camera coordinates.
struct Pose3D {
    std::array<Vec3f, kEvalJointCount> joints{};
};

struct Rect {
    float x = 0.0f;
    float y = 0.0f;
    float w = 0.0f;
    float h = 0.0f;
};

/// Axis-aligned similarity: p' = scale * p + translation.
struct SimilarityTransform {
    float scale = 1.0f;
    Vec2f translation;

    Vec2f apply(Vec2f p) const { return {scale * p.x + translation.x, scale * p.y + translation.y}; }
    Vec2f invert(Vec2f p) const { return {(p.x - translation.x) / scale, (p.y - translation.y) / scale}; }
};

}  // namespace simpose
