#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "simpose/compose.hpp"
#include "simpose/config.hpp"
#include "simpose/flo_io.hpp"
#include "simpose/flow.hpp"
#include "simpose/heatmap.hpp"
#include "simpose/rng.hpp"
#include "simpose/slic.hpp"
#include "simpose/visibility.hpp"

namespace simpose::pipeline {

// Named randomness substreams, one per stage. Each stage draws from its own
// stream derived from the clip seed, so toggling or reordering stages never
// perturbs the draws of another stage.
inline constexpr std::string_view kStreamBackground = "background";
inline constexpr std::string_view kStreamPersonTime = "person_time";
inline constexpr std::string_view kStreamSlicParams = "slic_params";
inline constexpr std::string_view kStreamOccluder = "occluder";
inline constexpr std::string_view kStreamTotalOcclusion = "total_occlusion";
inline constexpr std::string_view kStreamKeypointVis = "keypoint_vis";

struct ClipStats {
    int occluder_label = -1;
    bool occluder_accepted = false;
    int slic_k = 0;
    float slic_coord_scale = 0.0f;
    int total_occluded_frames = 0;
    std::array<int, 6> keypoint_state_counts{};  // indexed by KeypointState
};

/// Final training clip.
struct CompositeClip {
    Video<std::uint8_t> frames;  // T x crop x crop x 3
    std::vector<std::uint8_t> total_occluded;
    std::vector<std::array<Keypoint2D, kInputKeypointCount>> keypoints;  // crop coordinates
    std::vector<SimilarityTransform> crop_transforms;
    std::vector<Pose3D> joints3d;
    std::vector<compose::BoxPair> flow_pairs;     // T-1 paired boxes
    std::vector<flow::FlowField> person_flow;     // T-1 fields at crop size (may be empty)
    ClipStats stats;

    int length() const { return static_cast<int>(frames.size()); }
};

/// Intermediate stage outputs, exposed for tests and inspection.
struct BuildArtifacts {
    BackgroundClip background;  // sampled, canvas-sized
    PersonClip person;          // sampled, translated
    flow::CameraTrack track;
    slic::SlicParams slic_params;
    compose::OccluderMask occluder;
    std::vector<std::array<Keypoint2D, kInputKeypointCount>> frame_keypoints;  // post-visibility, frame coords
};

namespace detail {

// reflect-101 style loop for sampling windows longer than the source
inline int reflect_index(int i, int n) {
    if (n <= 1) return 0;
    const int period = 2 * n - 2;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

/// Resize (cover, one dimension exact) and randomly crop a background to the
/// canvas, then sample a clip_length window at a random start.
inline BackgroundClip sample_background(const BackgroundClip& bg, int canvas_w, int canvas_h, int clip_length,
                                        bool static_background, Rng& rng) {
    // spatial: scale so one dimension matches the canvas exactly, crop the other
    const double sx = static_cast<double>(canvas_w) / bg.width();
    const double sy = static_cast<double>(canvas_h) / bg.height();
    const double s = std::max(sx, sy);
    int rw = std::max(canvas_w, static_cast<int>(std::lround(bg.width() * s)));
    int rh = std::max(canvas_h, static_cast<int>(std::lround(bg.height() * s)));
    if (sx >= sy) rw = canvas_w;  // x is the exactly-matching dimension
    else rh = canvas_h;
    const int max_ox = rw - canvas_w;
    const int max_oy = rh - canvas_h;
    const int ox = max_ox > 0 ? rng.next_int(0, max_ox) : 0;
    const int oy = max_oy > 0 ? rng.next_int(0, max_oy) : 0;

    // temporal window
    std::vector<int> indices(static_cast<std::size_t>(clip_length));
    if (static_background) {
        const int pick = bg.length() > 1 ? rng.next_int(0, bg.length() - 1) : 0;
        std::fill(indices.begin(), indices.end(), pick);
    } else if (bg.length() >= clip_length) {
        const int start = rng.next_int(0, bg.length() - clip_length);
        for (int i = 0; i < clip_length; ++i) indices[static_cast<std::size_t>(i)] = start + i;
    } else {
        for (int i = 0; i < clip_length; ++i) indices[static_cast<std::size_t>(i)] = reflect_index(i, bg.length());
    }

    BackgroundClip out;
    out.fps = bg.fps;
    out.source_id = bg.source_id;
    out.frames.reserve(indices.size());
    std::vector<int> cache_keys;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        // static backgrounds repeat one frame; avoid resampling it repeatedly
        if (i > 0 && indices[i] == indices[i - 1]) {
            out.frames.push_back(out.frames.back());
            continue;
        }
        const auto& src = bg.frames[static_cast<std::size_t>(indices[i])];
        ImageU8 resized = (src.width == rw && src.height == rh) ? src : resize_bilinear(src, rw, rh);
        ImageU8 cropped(canvas_w, canvas_h, 3);
        for (int y = 0; y < canvas_h; ++y)
            for (int x = 0; x < canvas_w; ++x)
                for (int c = 0; c < 3; ++c) cropped.at(x, y, c) = resized.at(x + ox, y + oy, c);
        out.frames.push_back(std::move(cropped));
    }
    return out;
}

inline PersonClip sample_person(const PersonClip& person, int clip_length, Rng& rng) {
    std::vector<int> indices(static_cast<std::size_t>(clip_length));
    if (person.length() >= clip_length) {
        const int start = rng.next_int(0, person.length() - clip_length);
        for (int i = 0; i < clip_length; ++i) indices[static_cast<std::size_t>(i)] = start + i;
    } else {
        for (int i = 0; i < clip_length; ++i)
            indices[static_cast<std::size_t>(i)] = reflect_index(i, person.length());
    }
    PersonClip out;
    out.fps = person.fps;
    for (int idx : indices) {
        out.frames.push_back(person.frames[static_cast<std::size_t>(idx)]);
        out.depth.push_back(person.depth[static_cast<std::size_t>(idx)]);
        out.joints2d.push_back(person.joints2d[static_cast<std::size_t>(idx)]);
        out.joints3d.push_back(person.joints3d[static_cast<std::size_t>(idx)]);
    }
    return out;
}

}  // namespace detail

/// Run the full generation pipeline for one manifest. Stage order:
/// background sampling, camera tracking from TV-L1 median flow, person
/// translation, superpixel occluder, compositing, total occlusion, cropping,
/// paired boxes and person-level flow, keypoint visibility randomization.
/// All randomness derives from derive_clip_seed(master_seed, clip_index).
inline CompositeClip build_training_clip(const ClipManifest& manifest, const PipelineConfig& config,
                                         BuildArtifacts* artifacts = nullptr,
                                         const JointSchema& schema = JointSchema::coco14()) {
    manifest.validate();
    config.validate();
    const std::uint64_t clip_seed = derive_clip_seed(manifest.master_seed, manifest.clip_index);
    const int clip_len = manifest.clip_length;

    PersonClip person_src = load_person_clip(manifest.person_path, schema);
    BackgroundClip bg_src = load_background_clip(manifest.background_path);
    const int canvas_w = person_src.width();
    const int canvas_h = person_src.height();

    Rng person_rng = substream(clip_seed, kStreamPersonTime);
    PersonClip person = detail::sample_person(person_src, clip_len, person_rng);

    Rng bg_rng = substream(clip_seed, kStreamBackground);
    BackgroundClip bg =
        detail::sample_background(bg_src, canvas_w, canvas_h, clip_len, config.static_background, bg_rng);

    // camera track from per-pair median background flow, center frame as reference
    const int center = (clip_len - 1) / 2;
    flow::CameraTrack track;
    if (config.no_camera_tracking) {
        track.center_index = center;
        track.offsets.assign(static_cast<std::size_t>(clip_len), Vec2f{});
    } else {
        std::vector<ImageF32> gray;
        gray.reserve(static_cast<std::size_t>(clip_len));
        for (const auto& frame : bg.frames) gray.push_back(to_grayscale(frame));
        std::vector<Vec2f> medians;
        medians.reserve(static_cast<std::size_t>(clip_len - 1));
        for (int t = 0; t + 1 < clip_len; ++t) {
            const flow::FlowField f = flow::tvl1_flow(gray[static_cast<std::size_t>(t)],
                                                      gray[static_cast<std::size_t>(t + 1)], config.tvl1);
            medians.push_back(flow::median_flow(f));
        }
        track = flow::integrate_camera(medians, center);
    }

    PersonClip translated = compose::translate_person(person, track);

    // superpixel occluder
    slic::SlicParams slic_params;
    compose::OccluderMask occluder;
    if (!config.no_occluders) {
        Rng slic_rng = substream(clip_seed, kStreamSlicParams);
        slic_params = slic::sample_slic_params(slic_rng);
        slic_params.scale_by_max_dim = config.slic_scale_by_max_dim;
        const slic::SuperpixelLabels labels = slic::slic_video(bg, track, slic_params);
        Rng occ_rng = substream(clip_seed, kStreamOccluder);
        occluder = compose::pick_occluder(labels, translated, occ_rng);
    }

    compose::CompositeFrames composited = compose::composite(bg, translated, occluder, config.alpha_threshold);

    std::vector<std::uint8_t> total(static_cast<std::size_t>(clip_len), 0);
    if (!config.no_total_occlusions) {
        Rng total_rng = substream(clip_seed, kStreamTotalOcclusion);
        total = compose::apply_total_occlusion(clip_len, total_rng, config.total_occlusion_prob,
                                               config.total_occlusion_max_len);
    }

    // the 12 input keypoints, frame coordinates, states as composited
    const std::vector<int> input_map = schema.input_indices_in_eval();
    std::vector<std::array<Keypoint2D, kInputKeypointCount>> frame_kps(static_cast<std::size_t>(clip_len));
    std::vector<std::array<float, kInputKeypointCount>> keypoint_z(static_cast<std::size_t>(clip_len));
    for (int t = 0; t < clip_len; ++t)
        for (int i = 0; i < kInputKeypointCount; ++i) {
            const int e = input_map[static_cast<std::size_t>(i)];
            frame_kps[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] =
                composited.joints2d[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)];
            keypoint_z[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] =
                translated.joints3d[static_cast<std::size_t>(t)].joints[static_cast<std::size_t>(e)].z;
        }

    compose::CropResult crop = compose::crop_clip(composited.frames, frame_kps, config.crop_size,
                                                  config.crop_target_height, config.crop_height_factor);
    std::vector<compose::BoxPair> pairs = compose::paired_boxes(crop.transforms, config.crop_size);

    // person-level flow over paired-box crops
    std::vector<flow::FlowField> person_flow;
    if (config.compute_person_flow) {
        person_flow.reserve(pairs.size());
        for (const auto& pair : pairs) {
            const auto& tf = crop.transforms[static_cast<std::size_t>(pair.frame_a)];
            const ImageF32 a = to_grayscale(crop.frames[static_cast<std::size_t>(pair.frame_a)]);
            const ImageF32 b = to_grayscale(
                compose::resample_crop(composited.frames[static_cast<std::size_t>(pair.frame_b)], tf, config.crop_size));
            person_flow.push_back(flow::tvl1_flow(a, b, config.tvl1));
        }
    }

    // visibility randomization on frame-coordinate keypoints
    keypoints::VisibilityInputs vis_in;
    vis_in.frame_width = canvas_w;
    vis_in.frame_height = canvas_h;
    vis_in.occluder_mask = occluder.accepted ? &occluder.mask : nullptr;
    vis_in.total_occluded = &total;
    vis_in.person_depth = &translated.depth;
    vis_in.person_rgba = &translated.frames;
    vis_in.keypoint_z = &keypoint_z;
    Rng vis_rng = substream(clip_seed, kStreamKeypointVis);
    const auto randomized =
        keypoints::visibility_pass(frame_kps, vis_in, config.visibility, vis_rng, schema);

    CompositeClip clip;
    clip.frames = std::move(crop.frames);
    clip.total_occluded = total;
    clip.crop_transforms = crop.transforms;
    clip.joints3d = translated.joints3d;
    clip.flow_pairs = std::move(pairs);
    clip.person_flow = std::move(person_flow);
    clip.keypoints.resize(static_cast<std::size_t>(clip_len));
    for (int t = 0; t < clip_len; ++t)
        for (int i = 0; i < kInputKeypointCount; ++i) {
            Keypoint2D kp = randomized[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
            kp.position = clip.crop_transforms[static_cast<std::size_t>(t)].apply(kp.position);
            clip.keypoints[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)] = kp;
        }

    clip.stats.occluder_label = occluder.label;
    clip.stats.occluder_accepted = occluder.accepted;
    clip.stats.slic_k = config.no_occluders ? 0 : slic_params.k;
    clip.stats.slic_coord_scale = config.no_occluders ? 0.0f : slic_params.coord_scale;
    for (std::uint8_t f : total) clip.stats.total_occluded_frames += f;
    for (const auto& kps : clip.keypoints)
        for (const auto& kp : kps) ++clip.stats.keypoint_state_counts[static_cast<std::size_t>(kp.state)];

    if (artifacts) {
        artifacts->background = std::move(bg);
        artifacts->person = std::move(translated);
        artifacts->track = std::move(track);
        artifacts->slic_params = slic_params;
        artifacts->occluder = std::move(occluder);
        artifacts->frame_keypoints = randomized;
    }
    return clip;
}

/// Network-facing tensor for pair index t in [0, T-1): three flow channels
/// (u/20, v/20, magnitude/20), twelve keypoint heatmap channels, and one
/// total-occlusion indicator channel, constant over the frame. On totally
/// occluded frames every channel is zero except the indicator, which is 1.
inline ImageF32 net_input_tensor(const CompositeClip& clip, int t, float heatmap_sigma = 10.0f) {
    if (t < 0 || t + 1 >= clip.length()) throw Error("net_input_tensor: pair index out of range");
    const int size = clip.frames.empty() ? compose::kCropSize : clip.frames[0].width;
    ImageF32 out(size, size, 16);
    const bool total = clip.total_occluded[static_cast<std::size_t>(t)] != 0;
    if (total) {
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) out.at(x, y, 15) = 1.0f;
        return out;
    }
    if (!clip.person_flow.empty()) {
        const ImageF32 fin = flow::flow_to_net_input(clip.person_flow[static_cast<std::size_t>(t)]);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = fin.at(x, y, c);
    }
    const keypoints::HeatmapStack maps = keypoints::rasterize_heatmaps(
        {clip.keypoints[static_cast<std::size_t>(t)]}, size, heatmap_sigma);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < kInputKeypointCount; ++c) out.at(x, y, 3 + c) = maps.maps[0].at(x, y, c);
    return out;
}

// Output clip directory:
//   config.json        the exact config + manifest that produced the clip
//   frame_0000.ppm     cropped composite frames
//   flow_0000.flo      person-level flow per paired box (when computed)
//   heatmap_0000.mhtk  keypoint heatmaps (when enabled)
//   clip.jsonl         meta record, then one record per frame

inline void write_composite_clip(const CompositeClip& clip, const std::string& dir,
                                 const PipelineConfig& config, const ClipManifest& manifest,
                                 const JointSchema& schema = JointSchema::coco14()) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    std::ofstream(dir + "/config.json")
        << nlohmann::json{{"config", config.to_json()}, {"manifest", manifest.to_json()}}.dump(2) << "\n";

    for (int t = 0; t < clip.length(); ++t)
        pnm::write_ppm(clip.frames[static_cast<std::size_t>(t)], dir + "/" + frame_name("frame", t, "ppm"));
    for (std::size_t i = 0; i < clip.person_flow.size(); ++i)
        flow::write_flo(clip.person_flow[i], dir + "/" + frame_name("flow", static_cast<int>(i), "flo"));
    if (config.emit_heatmaps) {
        const keypoints::HeatmapStack maps =
            keypoints::rasterize_heatmaps(clip.keypoints, config.crop_size, config.heatmap_sigma);
        for (int t = 0; t < maps.length(); ++t)
            keypoints::write_heatmap_frame(maps.maps[static_cast<std::size_t>(t)],
                                           dir + "/" + frame_name("heatmap", t, "mhtk"));
    }

    std::ofstream out(dir + "/clip.jsonl");
    nlohmann::json total = nlohmann::json::array();
    for (std::uint8_t f : clip.total_occluded) total.push_back(static_cast<int>(f));
    out << nlohmann::json{{"type", "meta"},
                          {"clip_index", manifest.clip_index},
                          {"frame_count", clip.length()},
                          {"crop_size", config.crop_size},
                          {"occluder_label", clip.stats.occluder_label},
                          {"occluder_accepted", clip.stats.occluder_accepted},
                          {"slic_k", clip.stats.slic_k},
                          {"slic_coord_scale", clip.stats.slic_coord_scale},
                          {"total_occluded", total}}
               .dump()
        << "\n";
    for (int t = 0; t < clip.length(); ++t) {
        nlohmann::json kps = nlohmann::json::array();
        for (int i = 0; i < kInputKeypointCount; ++i) {
            const auto& kp = clip.keypoints[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
            kps.push_back({{"name", schema.input_keypoints[static_cast<std::size_t>(i)]},
                           {"x", kp.position.x},
                           {"y", kp.position.y},
                           {"state", to_string(kp.state)}});
        }
        nlohmann::json j3 = nlohmann::json::array();
        for (const auto& p : clip.joints3d[static_cast<std::size_t>(t)].joints) j3.push_back({p.x, p.y, p.z});
        const auto& tf = clip.crop_transforms[static_cast<std::size_t>(t)];
        nlohmann::json rec = {{"type", "frame"},
                              {"frame", t},
                              {"total_occluded", clip.total_occluded[static_cast<std::size_t>(t)] != 0},
                              {"transform", {{"scale", tf.scale}, {"tx", tf.translation.x}, {"ty", tf.translation.y}}},
                              {"keypoints", kps},
                              {"joints3d", j3}};
        if (t + 1 < clip.length()) {
            const auto& bp = clip.flow_pairs[static_cast<std::size_t>(t)];
            rec["box_pair"] = {{"x", bp.box.x}, {"y", bp.box.y}, {"w", bp.box.w}, {"h", bp.box.h},
                               {"frame_a", bp.frame_a}, {"frame_b", bp.frame_b}};
        }
        out << rec.dump() << "\n";
    }
}

struct ClipSidecar {
    nlohmann::json meta;
    std::vector<nlohmann::json> frames;
};

inline ClipSidecar read_clip_sidecar(const std::string& dir) {
    std::ifstream in(dir + "/clip.jsonl");
    if (!in) throw Error("cannot open: " + dir + "/clip.jsonl");
    ClipSidecar side;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        if (j.value("type", "") == "meta") side.meta = j;
        else side.frames.push_back(j);
    }
    if (side.meta.is_null()) throw Error("missing meta record in " + dir + "/clip.jsonl");
    return side;
}

struct ClipBuildOutcome {
    std::size_t manifest_index = 0;
    std::string directory;
    std::string error;  // empty on success

    bool ok() const { return error.empty(); }
};

inline std::string clip_directory_name(std::uint64_t clip_index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "clip_%06llu", static_cast<unsigned long long>(clip_index));
    return buf;
}

/// Build every manifest into out_root with a clip-level worker pool. Output
/// bytes are independent of the worker count because each clip's randomness
/// comes only from its derived seed.
inline std::vector<ClipBuildOutcome> run_manifests(const std::vector<ClipManifest>& manifests,
                                                   const PipelineConfig& config, const std::string& out_root,
                                                   int jobs) {
    namespace fs = std::filesystem;
    fs::create_directories(out_root);
    std::vector<ClipBuildOutcome> outcomes(manifests.size());
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(manifests.size())));

    const auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= manifests.size()) return;
            ClipBuildOutcome& outcome = outcomes[i];
            outcome.manifest_index = i;
            const std::string dir = out_root + "/" + clip_directory_name(manifests[i].clip_index);
            outcome.directory = dir;
            try {
                const CompositeClip clip = build_training_clip(manifests[i], config);
                write_composite_clip(clip, dir, config, manifests[i]);
            } catch (const std::exception& e) {
                outcome.error = e.what();
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) threads.emplace_back(work);
        for (auto& th : threads) th.join();
    }
    return outcomes;
}

}  // namespace simpose::pipeline
