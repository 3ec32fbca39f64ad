#pragma once

#include <cmath>
#include <vector>

#include "simpose/clips.hpp"
#include "simpose/image.hpp"
#include "simpose/rng.hpp"
#include "simpose/schema.hpp"
#include "simpose/types.hpp"

namespace simpose::keypoints {

struct VisibilityParams {
    float depth_threshold = 0.20f;  // meters
    double leg_unhide_prob = 0.5;
    double flip_prob = 0.05;

    void validate() const {
        if (depth_threshold <= 0.0f) throw Error("visibility: depth_threshold must be positive");
        if (leg_unhide_prob < 0.0 || leg_unhide_prob > 1.0 || flip_prob < 0.0 || flip_prob > 1.0)
            throw Error("visibility: probabilities must be in [0, 1]");
    }
};

/// True when the joint sits at least `threshold` meters behind the rendered
/// surface at its image position. Positions without a surface (alpha == 0)
/// or outside the grid report false.
inline bool classify_depth_hidden(float joint_z, Vec2f joint2d, const ImageF32& depth,
                                  const ImageU8& rgba, float threshold) {
    const int px = static_cast<int>(std::lround(joint2d.x));
    const int py = static_cast<int>(std::lround(joint2d.y));
    if (!depth.contains(px, py)) return false;
    if (rgba.at(px, py, 3) == 0) return false;
    return joint_z - depth.at(px, py) >= threshold;
}

struct VisibilityInputs {
    int frame_width = 0;
    int frame_height = 0;
    const Video<std::uint8_t>* occluder_mask = nullptr;       // accepted occluder volume, or null
    const std::vector<std::uint8_t>* total_occluded = nullptr;  // per-frame flags, or null
    const Video<float>* person_depth = nullptr;               // translated person depth, meters
    const Video<std::uint8_t>* person_rgba = nullptr;         // translated person frames (alpha validity)
    const std::vector<std::array<float, kInputKeypointCount>>* keypoint_z = nullptr;  // meters
};

/// Domain-randomized visibility. Rules per keypoint, first match wins:
///   1. outside the frame canvas            -> HiddenOutOfFrame
///   2. covered by the accepted occluder    -> HiddenOccluder
///   3. frame totally occluded              -> HiddenTotalOcclusion
///   4. >= depth_threshold behind the mesh  -> HiddenDepth
/// then, skipping totally occluded frames entirely:
///   5. hidden leg keypoints (ankles, knees) recover with leg_unhide_prob
///   6. every keypoint flips Visible <-> HiddenRandom with flip_prob
///      (a hidden keypoint flips back to Visible)
/// One draw is consumed per leg keypoint in (5) and per keypoint in (6)
/// regardless of state, so the stream does not depend on earlier outcomes.
inline std::vector<std::array<Keypoint2D, kInputKeypointCount>> visibility_pass(
    const std::vector<std::array<Keypoint2D, kInputKeypointCount>>& keypoints,
    const VisibilityInputs& in, const VisibilityParams& params, Rng& rng,
    const JointSchema& schema = JointSchema::coco14()) {
    params.validate();
    auto out = keypoints;
    const int frame_count = static_cast<int>(keypoints.size());

    for (int t = 0; t < frame_count; ++t) {
        const bool total = in.total_occluded && (*in.total_occluded)[static_cast<std::size_t>(t)] != 0;
        auto& kps = out[static_cast<std::size_t>(t)];
        for (int i = 0; i < kInputKeypointCount; ++i) {
            auto& kp = kps[static_cast<std::size_t>(i)];
            const Vec2f p = kp.position;
            const int px = static_cast<int>(std::lround(p.x));
            const int py = static_cast<int>(std::lround(p.y));
            const bool in_frame = p.x >= 0.0f && p.x < static_cast<float>(in.frame_width) && p.y >= 0.0f &&
                                  p.y < static_cast<float>(in.frame_height);

            if (!in_frame) {
                kp.state = KeypointState::HiddenOutOfFrame;
            } else if (in.occluder_mask && (*in.occluder_mask)[static_cast<std::size_t>(t)].contains(px, py) &&
                       (*in.occluder_mask)[static_cast<std::size_t>(t)].at(px, py)) {
                kp.state = KeypointState::HiddenOccluder;
            } else if (total) {
                kp.state = KeypointState::HiddenTotalOcclusion;
            } else if (in.person_depth && in.person_rgba && in.keypoint_z &&
                       classify_depth_hidden((*in.keypoint_z)[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)],
                                             p, (*in.person_depth)[static_cast<std::size_t>(t)],
                                             (*in.person_rgba)[static_cast<std::size_t>(t)],
                                             params.depth_threshold)) {
                kp.state = KeypointState::HiddenDepth;
            } else {
                kp.state = KeypointState::Visible;
            }
        }

        if (total) continue;  // exempt from randomization

        for (int leg : schema.leg_subset) {
            const bool recover = rng.next_bool(params.leg_unhide_prob);
            auto& kp = kps[static_cast<std::size_t>(leg)];
            if (recover && is_hidden(kp.state)) kp.state = KeypointState::Visible;
        }
        for (int i = 0; i < kInputKeypointCount; ++i) {
            const bool flip = rng.next_bool(params.flip_prob);
            if (!flip) continue;
            auto& kp = kps[static_cast<std::size_t>(i)];
            kp.state = is_hidden(kp.state) ? KeypointState::Visible : KeypointState::HiddenRandom;
        }
    }
    return out;
}

}  // namespace simpose::keypoints
