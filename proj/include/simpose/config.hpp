#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "simpose/compose.hpp"
#include "simpose/flow.hpp"
#include "simpose/types.hpp"
#include "simpose/visibility.hpp"

namespace simpose {

/// Everything that determines a generation run. The serialized form is
/// embedded in every output directory, and re-running from that embedded
/// config reproduces the directory byte for byte.
struct PipelineConfig {
    std::uint64_t master_seed = 0;
    int clip_length = 31;

    // ablation flags; each one disables a single stage
    bool static_background = false;    // one background frame repeated
    bool no_camera_tracking = false;   // zero camera track
    bool no_occluders = false;         // skip superpixel occluders
    bool no_total_occlusions = false;  // total-occlusion probability treated as 0

    // execution-only; never serialized, since output bytes must not depend
    // on the worker count
    int jobs = 1;

    flow::TvL1Params tvl1;
    keypoints::VisibilityParams visibility;
    double total_occlusion_prob = 0.3;
    int total_occlusion_max_len = compose::kMaxTotalOcclusionFrames;
    int crop_size = compose::kCropSize;
    float crop_target_height = compose::kPersonHeightPx;
    float crop_height_factor = compose::kHeightFactor;
    int alpha_threshold = compose::kAlphaThreshold;
    bool slic_scale_by_max_dim = false;
    bool compute_person_flow = true;   // off reproduces the keypoints-only data variant
    bool emit_heatmaps = false;
    float heatmap_sigma = 10.0f;

    void validate() const {
        if (clip_length < 2) throw Error("config: clip_length must be >= 2");
        if (jobs < 1) throw Error("config: jobs must be >= 1");
        if (total_occlusion_prob < 0.0 || total_occlusion_prob > 1.0)
            throw Error("config: total_occlusion_prob outside [0, 1]");
        if (total_occlusion_max_len < 1) throw Error("config: total_occlusion_max_len must be >= 1");
        if (crop_size < 16) throw Error("config: crop_size must be >= 16");
        tvl1.validate();
        visibility.validate();
    }

    void set_ablation(const std::string& name) {
        if (name == "static_background") static_background = true;
        else if (name == "no_camera_tracking") no_camera_tracking = true;
        else if (name == "no_occluders") no_occluders = true;
        else if (name == "no_total_occlusions") no_total_occlusions = true;
        else throw Error("unknown ablation: " + name);
    }

    nlohmann::json to_json() const {
        return {{"master_seed", master_seed},
                {"clip_length", clip_length},
                {"static_background", static_background},
                {"no_camera_tracking", no_camera_tracking},
                {"no_occluders", no_occluders},
                {"no_total_occlusions", no_total_occlusions},
                {"tvl1",
                 {{"lambda_data", tvl1.lambda_data},
                  {"theta", tvl1.theta},
                  {"tau", tvl1.tau},
                  {"pyramid_scale", tvl1.pyramid_scale},
                  {"levels", tvl1.levels},
                  {"warps", tvl1.warps},
                  {"iterations", tvl1.iterations},
                  {"epsilon", tvl1.epsilon}}},
                {"visibility",
                 {{"depth_threshold", visibility.depth_threshold},
                  {"leg_unhide_prob", visibility.leg_unhide_prob},
                  {"flip_prob", visibility.flip_prob}}},
                {"total_occlusion_prob", total_occlusion_prob},
                {"total_occlusion_max_len", total_occlusion_max_len},
                {"crop_size", crop_size},
                {"crop_target_height", crop_target_height},
                {"crop_height_factor", crop_height_factor},
                {"alpha_threshold", alpha_threshold},
                {"slic_scale_by_max_dim", slic_scale_by_max_dim},
                {"compute_person_flow", compute_person_flow},
                {"emit_heatmaps", emit_heatmaps},
                {"heatmap_sigma", heatmap_sigma}};
    }

    static PipelineConfig from_json(const nlohmann::json& j) {
        PipelineConfig c;
        c.master_seed = j.value("master_seed", c.master_seed);
        c.clip_length = j.value("clip_length", c.clip_length);
        c.static_background = j.value("static_background", c.static_background);
        c.no_camera_tracking = j.value("no_camera_tracking", c.no_camera_tracking);
        c.no_occluders = j.value("no_occluders", c.no_occluders);
        c.no_total_occlusions = j.value("no_total_occlusions", c.no_total_occlusions);
        if (j.contains("tvl1")) {
            const auto& t = j.at("tvl1");
            c.tvl1.lambda_data = t.value("lambda_data", c.tvl1.lambda_data);
            c.tvl1.theta = t.value("theta", c.tvl1.theta);
            c.tvl1.tau = t.value("tau", c.tvl1.tau);
            c.tvl1.pyramid_scale = t.value("pyramid_scale", c.tvl1.pyramid_scale);
            c.tvl1.levels = t.value("levels", c.tvl1.levels);
            c.tvl1.warps = t.value("warps", c.tvl1.warps);
            c.tvl1.iterations = t.value("iterations", c.tvl1.iterations);
            c.tvl1.epsilon = t.value("epsilon", c.tvl1.epsilon);
        }
        if (j.contains("visibility")) {
            const auto& v = j.at("visibility");
            c.visibility.depth_threshold = v.value("depth_threshold", c.visibility.depth_threshold);
            c.visibility.leg_unhide_prob = v.value("leg_unhide_prob", c.visibility.leg_unhide_prob);
            c.visibility.flip_prob = v.value("flip_prob", c.visibility.flip_prob);
        }
        c.total_occlusion_prob = j.value("total_occlusion_prob", c.total_occlusion_prob);
        c.total_occlusion_max_len = j.value("total_occlusion_max_len", c.total_occlusion_max_len);
        c.crop_size = j.value("crop_size", c.crop_size);
        c.crop_target_height = j.value("crop_target_height", c.crop_target_height);
        c.crop_height_factor = j.value("crop_height_factor", c.crop_height_factor);
        c.alpha_threshold = j.value("alpha_threshold", c.alpha_threshold);
        c.slic_scale_by_max_dim = j.value("slic_scale_by_max_dim", c.slic_scale_by_max_dim);
        c.compute_person_flow = j.value("compute_person_flow", c.compute_person_flow);
        c.emit_heatmaps = j.value("emit_heatmaps", c.emit_heatmaps);
        c.heatmap_sigma = j.value("heatmap_sigma", c.heatmap_sigma);
        c.validate();
        return c;
    }
};

}  // namespace simpose
