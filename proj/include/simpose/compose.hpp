#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "simpose/clips.hpp"
#include "simpose/flow.hpp"
#include "simpose/image.hpp"
#include "simpose/rng.hpp"
#include "simpose/slic.hpp"
#include "simpose/types.hpp"

namespace simpose::compose {

inline constexpr int kCropSize = 224;
inline constexpr float kPersonHeightPx = 150.0f;
inline constexpr float kHeightFactor = 1.1f;  // keypoint extent underestimates the body
inline constexpr int kAlphaThreshold = 128;
inline constexpr int kMaxTotalOcclusionFrames = 15;

struct OccluderMask {
    Video<std::uint8_t> mask;
    int label = -1;
    bool accepted = false;
};

/// One crop window applied to a consecutive frame pair.
struct BoxPair {
    Rect box;  // frame coordinates
    int frame_a = 0;
    int frame_b = 0;
};

namespace detail {

// Bilinear sample of one channel with zero fill outside the source.
inline float sample_zero(const ImageU8& img, float x, float y, int c) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const float fx = x - static_cast<float>(x0);
    const float fy = y - static_cast<float>(y0);
    float acc = 0.0f;
    for (int dy = 0; dy <= 1; ++dy)
        for (int dx = 0; dx <= 1; ++dx) {
            const int sx = x0 + dx, sy = y0 + dy;
            if (!img.contains(sx, sy)) continue;
            const float w = (dx ? fx : 1.0f - fx) * (dy ? fy : 1.0f - fy);
            acc += w * static_cast<float>(img.at(sx, sy, c));
        }
    return acc;
}

inline float sample_zero_f(const ImageF32& img, float x, float y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const float fx = x - static_cast<float>(x0);
    const float fy = y - static_cast<float>(y0);
    float acc = 0.0f;
    for (int dy = 0; dy <= 1; ++dy)
        for (int dx = 0; dx <= 1; ++dx) {
            const int sx = x0 + dx, sy = y0 + dy;
            if (!img.contains(sx, sy)) continue;
            const float w = (dx ? fx : 1.0f - fx) * (dy ? fy : 1.0f - fy);
            acc += w * img.at(sx, sy);
        }
    return acc;
}

}  // namespace detail

/// Shift the person to follow the camera: frame t is warped by track[t]
/// (RGBA and depth, bilinear, alpha as an ordinary channel, zero outside the
/// source), 2D joints move by exactly track[t], joints that leave the canvas
/// become HiddenOutOfFrame, 3D joints are untouched.
inline PersonClip translate_person(const PersonClip& person, const flow::CameraTrack& track) {
    if (track.length() != person.length()) throw Error("translate_person: length mismatch");
    PersonClip out;
    out.fps = person.fps;
    out.joints3d = person.joints3d;
    const int w = person.width(), h = person.height();
    out.frames.reserve(static_cast<std::size_t>(person.length()));
    out.depth.reserve(static_cast<std::size_t>(person.length()));
    out.joints2d.reserve(static_cast<std::size_t>(person.length()));

    for (int t = 0; t < person.length(); ++t) {
        const Vec2f off = track.offsets[static_cast<std::size_t>(t)];
        const auto& src = person.frames[static_cast<std::size_t>(t)];
        const auto& src_depth = person.depth[static_cast<std::size_t>(t)];
        ImageU8 frame(w, h, 4);
        ImageF32 depth(w, h, 1);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const float sx = static_cast<float>(x) - off.x;
                const float sy = static_cast<float>(y) - off.y;
                for (int c = 0; c < 4; ++c)
                    frame.at(x, y, c) = clamp_u8(detail::sample_zero(src, sx, sy, c));
                depth.at(x, y) = detail::sample_zero_f(src_depth, sx, sy);
            }
        out.frames.push_back(std::move(frame));
        out.depth.push_back(std::move(depth));

        auto kps = person.joints2d[static_cast<std::size_t>(t)];
        for (auto& kp : kps) {
            kp.position += off;
            const bool inside = kp.position.x >= 0.0f && kp.position.x < static_cast<float>(w) &&
                                kp.position.y >= 0.0f && kp.position.y < static_cast<float>(h);
            if (!inside) kp.state = KeypointState::HiddenOutOfFrame;
        }
        out.joints2d.push_back(kps);
    }
    return out;
}

/// Draw one superpixel uniformly and accept it as an occluder only if it
/// overlaps the person and leaves, per frame on average, at least 7 of the
/// 14 joints uncovered. Rejection is a value, not an error: a rejected
/// occluder means no masking downstream.
inline OccluderMask pick_occluder(const slic::SuperpixelLabels& labels, const PersonClip& person, Rng& rng) {
    if (labels.length() != person.length()) throw Error("pick_occluder: length mismatch");
    if (labels.length() > 0 && (labels.labels[0].width != person.width() || labels.labels[0].height != person.height()))
        throw Error("pick_occluder: dimensions mismatch");

    OccluderMask occ;
    occ.label = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(labels.cluster_count)));
    occ.mask = slic::mask_from_label(labels, occ.label);

    bool overlaps = false;
    double remaining_sum = 0.0;
    for (int t = 0; t < person.length(); ++t) {
        const auto& m = occ.mask[static_cast<std::size_t>(t)];
        const auto& frame = person.frames[static_cast<std::size_t>(t)];
        if (!overlaps)
            for (std::size_t i = 0; i < m.data.size() && !overlaps; ++i)
                if (m.data[i] && frame.data[i * 4 + 3] > 0) overlaps = true;

        int remaining = 0;
        for (const auto& kp : person.joints2d[static_cast<std::size_t>(t)]) {
            const int px = static_cast<int>(std::lround(kp.position.x));
            const int py = static_cast<int>(std::lround(kp.position.y));
            const bool covered = m.contains(px, py) && m.at(px, py);
            if (!covered) ++remaining;
        }
        remaining_sum += remaining;
    }
    const double avg_remaining = remaining_sum / std::max(1, person.length());
    occ.accepted = overlaps && avg_remaining >= 7.0;
    return occ;
}

/// With the given probability, mark one contiguous chunk of frames totally
/// occluded; length uniform in [1, max_len] (clamped to T), start uniform
/// over valid positions.
inline std::vector<std::uint8_t> apply_total_occlusion(int frame_count, Rng& rng, double probability,
                                                       int max_len = kMaxTotalOcclusionFrames) {
    if (frame_count < 1) throw Error("apply_total_occlusion: need at least one frame");
    if (probability < 0.0 || probability > 1.0)
        throw Error("apply_total_occlusion: probability outside [0, 1]");
    std::vector<std::uint8_t> flags(static_cast<std::size_t>(frame_count), 0);
    if (!rng.next_bool(probability)) return flags;
    const int len = rng.next_int(1, std::min(max_len, frame_count));
    const int start = rng.next_int(0, frame_count - len);
    for (int t = start; t < start + len; ++t) flags[static_cast<std::size_t>(t)] = 1;
    return flags;
}

struct CompositeFrames {
    Video<std::uint8_t> frames;  // T x H x W x 3
    std::vector<std::array<Keypoint2D, kEvalJointCount>> joints2d;
};

/// Hard compositing, per pixel: an accepted occluder wins, then person
/// pixels with alpha >= threshold, then background. Joints under the
/// accepted occluder become HiddenOccluder.
inline CompositeFrames composite(const BackgroundClip& bg, const PersonClip& person, const OccluderMask& occ,
                                 int alpha_threshold = kAlphaThreshold) {
    if (bg.length() != person.length() || bg.width() != person.width() || bg.height() != person.height())
        throw Error("composite: dimension mismatch");
    if (occ.accepted && static_cast<int>(occ.mask.size()) != bg.length())
        throw Error("composite: occluder mask length mismatch");

    CompositeFrames out;
    out.joints2d = person.joints2d;
    const int w = bg.width(), h = bg.height();
    out.frames.reserve(static_cast<std::size_t>(bg.length()));
    for (int t = 0; t < bg.length(); ++t) {
        const auto& bg_frame = bg.frames[static_cast<std::size_t>(t)];
        const auto& p_frame = person.frames[static_cast<std::size_t>(t)];
        ImageU8 frame(w, h, 3);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const bool occluded = occ.accepted && occ.mask[static_cast<std::size_t>(t)].at(x, y);
                const bool person_px = !occluded && p_frame.at(x, y, 3) >= alpha_threshold;
                for (int c = 0; c < 3; ++c)
                    frame.at(x, y, c) = person_px ? p_frame.at(x, y, c) : bg_frame.at(x, y, c);
            }
        out.frames.push_back(std::move(frame));

        if (occ.accepted) {
            const auto& m = occ.mask[static_cast<std::size_t>(t)];
            for (auto& kp : out.joints2d[static_cast<std::size_t>(t)]) {
                if (kp.state != KeypointState::Visible) continue;
                const int px = static_cast<int>(std::lround(kp.position.x));
                const int py = static_cast<int>(std::lround(kp.position.y));
                if (m.contains(px, py) && m.at(px, py)) kp.state = KeypointState::HiddenOccluder;
            }
        }
    }
    return out;
}

struct CropResult {
    Video<std::uint8_t> frames;  // T x 224 x 224 x 3
    std::vector<std::array<Keypoint2D, kInputKeypointCount>> keypoints;  // crop coordinates
    std::vector<SimilarityTransform> transforms;                         // frame -> crop
};

/// Resample one frame through a frame->crop similarity into a crop_size
/// square, zero-padded outside the source.
inline ImageU8 resample_crop(const ImageU8& frame, const SimilarityTransform& tf, int crop_size = kCropSize) {
    ImageU8 out(crop_size, crop_size, frame.channels);
    for (int y = 0; y < crop_size; ++y)
        for (int x = 0; x < crop_size; ++x) {
            const Vec2f src = tf.invert({static_cast<float>(x), static_cast<float>(y)});
            for (int c = 0; c < frame.channels; ++c)
                out.at(x, y, c) = clamp_u8(detail::sample_zero(frame, src.x, src.y, c));
        }
    return out;
}

/// Detector-style cropping: center on the visible-keypoint bounding box and
/// scale so the person is about 150 px tall (1.1 x the keypoint vertical
/// extent), resample into a 224 x 224 window with zero padding. Frames with
/// no visible keypoint coast on the nearest preceding transform.
inline CropResult crop_clip(const Video<std::uint8_t>& frames,
                            const std::vector<std::array<Keypoint2D, kInputKeypointCount>>& keypoints,
                            int crop_size = kCropSize, float target_height = kPersonHeightPx,
                            float height_factor = kHeightFactor) {
    if (frames.size() != keypoints.size()) throw Error("crop_clip: frame/keypoint count mismatch");
    const int frame_count = static_cast<int>(frames.size());

    // transforms, with coasting for frames lacking visible keypoints
    std::vector<SimilarityTransform> transforms(static_cast<std::size_t>(frame_count));
    std::vector<bool> has_own(static_cast<std::size_t>(frame_count), false);
    const float half = static_cast<float>(crop_size) / 2.0f;
    for (int t = 0; t < frame_count; ++t) {
        float min_x = 0, min_y = 0, max_x = 0, max_y = 0;
        bool any = false;
        for (const auto& kp : keypoints[static_cast<std::size_t>(t)]) {
            if (kp.state != KeypointState::Visible) continue;
            if (!any) {
                min_x = max_x = kp.position.x;
                min_y = max_y = kp.position.y;
                any = true;
            } else {
                min_x = std::min(min_x, kp.position.x);
                max_x = std::max(max_x, kp.position.x);
                min_y = std::min(min_y, kp.position.y);
                max_y = std::max(max_y, kp.position.y);
            }
        }
        if (!any) continue;
        const Vec2f center{(min_x + max_x) / 2.0f, (min_y + max_y) / 2.0f};
        const float person_height = height_factor * (max_y - min_y);
        float scale = target_height / std::max(person_height, 1e-6f);
        scale = std::clamp(scale, 1.0f / 16.0f, 16.0f);
        transforms[static_cast<std::size_t>(t)] = {scale, {half - scale * center.x, half - scale * center.y}};
        has_own[static_cast<std::size_t>(t)] = true;
    }
    int first_own = -1;
    for (int t = 0; t < frame_count && first_own < 0; ++t)
        if (has_own[static_cast<std::size_t>(t)]) first_own = t;
    if (first_own < 0) throw Error("crop_clip: no visible keypoints in the whole clip");
    for (int t = 0; t < first_own; ++t)
        transforms[static_cast<std::size_t>(t)] = transforms[static_cast<std::size_t>(first_own)];
    for (int t = first_own + 1; t < frame_count; ++t)
        if (!has_own[static_cast<std::size_t>(t)])
            transforms[static_cast<std::size_t>(t)] = transforms[static_cast<std::size_t>(t - 1)];

    CropResult out;
    out.transforms = transforms;
    out.frames.reserve(static_cast<std::size_t>(frame_count));
    out.keypoints.reserve(static_cast<std::size_t>(frame_count));
    for (int t = 0; t < frame_count; ++t) {
        out.frames.push_back(
            resample_crop(frames[static_cast<std::size_t>(t)], transforms[static_cast<std::size_t>(t)], crop_size));
        auto kps = keypoints[static_cast<std::size_t>(t)];
        for (auto& kp : kps) kp.position = transforms[static_cast<std::size_t>(t)].apply(kp.position);
        out.keypoints.push_back(kps);
    }
    return out;
}

/// Extend each frame's crop window one frame into the future: T-1 pairs.
inline std::vector<BoxPair> paired_boxes(const std::vector<SimilarityTransform>& transforms,
                                         int crop_size = kCropSize) {
    const int frame_count = static_cast<int>(transforms.size());
    if (frame_count < 2) throw Error("paired_boxes: need >= 2 frames");
    std::vector<BoxPair> pairs;
    pairs.reserve(static_cast<std::size_t>(frame_count - 1));
    for (int t = 0; t + 1 < frame_count; ++t) {
        const auto& tf = transforms[static_cast<std::size_t>(t)];
        const Vec2f corner = tf.invert({0.0f, 0.0f});
        const float side = static_cast<float>(crop_size) / tf.scale;
        pairs.push_back({{corner.x, corner.y, side, side}, t, t + 1});
    }
    return pairs;
}

}  // namespace simpose::compose
