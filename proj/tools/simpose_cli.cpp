// Command-line surface for the synthetic-motion data pipeline:
//   compose  build training clips from a manifest list
//   flow     dense TV-L1 flow between consecutive frames of a directory
//   eval     PA-MPJPE evaluation of prediction records against ground truth
//   inspect  aggregate statistics over an output tree

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "simpose/clips.hpp"
#include "simpose/config.hpp"
#include "simpose/eval.hpp"
#include "simpose/flo_io.hpp"
#include "simpose/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

simpose::PipelineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw simpose::Error("cannot open config: " + path);
    json j;
    in >> j;
    if (j.contains("config")) j = j.at("config");  // accept embedded config.json from an output dir
    return simpose::PipelineConfig::from_json(j);
}

struct ManifestEntry {
    simpose::ClipManifest manifest;
    int line = 0;
    std::string error;  // parse failure
};

std::vector<ManifestEntry> read_manifests(const std::string& path, const simpose::PipelineConfig& config) {
    std::ifstream in(path);
    if (!in) throw simpose::Error("cannot open manifest list: " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        ManifestEntry e;
        e.line = line_no;
        try {
            json j = json::parse(line);
            if (!j.contains("master_seed")) j["master_seed"] = config.master_seed;
            if (!j.contains("clip_length")) j["clip_length"] = config.clip_length;
            e.manifest = simpose::ClipManifest::from_json(j);
        } catch (const std::exception& ex) {
            e.error = ex.what();
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

int cmd_compose(const std::string& manifest_path, const std::string& out_dir,
                const simpose::PipelineConfig& config) {
    const auto entries = read_manifests(manifest_path, config);
    std::vector<simpose::ClipManifest> manifests;
    std::vector<std::pair<int, std::string>> failures;  // manifest line, message
    for (const auto& e : entries) {
        if (e.error.empty()) manifests.push_back(e.manifest);
        else failures.push_back({e.line, "manifest parse error: " + e.error});
    }

    std::cerr << "composing " << manifests.size() << " clips with " << config.jobs << " jobs\n";
    const auto outcomes = simpose::pipeline::run_manifests(manifests, config, out_dir, config.jobs);
    for (const auto& o : outcomes) {
        if (o.ok()) {
            std::cerr << "done " << o.directory << "\n";
        } else {
            std::cerr << "FAILED " << o.directory << ": " << o.error << "\n";
            failures.push_back({-1, o.directory + ": " + o.error});
        }
    }

    if (!failures.empty()) {
        fs::create_directories(out_dir);
        std::ofstream report(out_dir + "/failures.txt");
        for (const auto& [line, msg] : failures) {
            if (line >= 0) report << manifest_path << ":" << line << " " << msg << "\n";
            else report << msg << "\n";
        }
        std::cerr << failures.size() << " failure(s); see " << out_dir << "/failures.txt\n";
        return 1;
    }
    return 0;
}

int cmd_flow(const std::string& frames_dir, const std::string& out_dir,
             const simpose::PipelineConfig& config) {
    std::vector<std::string> frame_paths;
    for (const auto& entry : fs::directory_iterator(frames_dir))
        if (entry.path().extension() == ".ppm") frame_paths.push_back(entry.path().string());
    std::sort(frame_paths.begin(), frame_paths.end());
    if (frame_paths.size() < 2) throw simpose::Error("need >= 2 frames in " + frames_dir);

    fs::create_directories(out_dir);
    simpose::ImageF32 prev = simpose::to_grayscale(simpose::pnm::read_ppm(frame_paths[0]));
    for (std::size_t t = 1; t < frame_paths.size(); ++t) {
        simpose::ImageF32 next = simpose::to_grayscale(simpose::pnm::read_ppm(frame_paths[t]));
        const auto field = simpose::flow::tvl1_flow(prev, next, config.tvl1);
        const std::string out_path =
            out_dir + "/" + simpose::frame_name("flow", static_cast<int>(t - 1), "flo");
        simpose::flow::write_flo(field, out_path);
        std::cerr << "wrote " << out_path << "\n";
        prev = std::move(next);
    }
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, const std::string& out_dir) {
    auto pred = simpose::eval::read_pose_records(pred_path, false);
    auto gt = simpose::eval::read_pose_records(gt_path, true);

    std::set<std::string> pred_ids, gt_ids;
    for (const auto& s : pred) pred_ids.insert(s.person_id);
    for (const auto& s : gt) gt_ids.insert(s.person_id);
    if (pred_ids != gt_ids) {
        std::cerr << "person id mismatch between files\n";
        std::cerr << "only in predictions:";
        for (const auto& id : pred_ids)
            if (!gt_ids.count(id)) std::cerr << " " << id;
        std::cerr << "\nonly in ground truth:";
        for (const auto& id : gt_ids)
            if (!pred_ids.count(id)) std::cerr << " " << id;
        std::cerr << "\n";
        return 1;
    }

    const auto report = simpose::eval::evaluate_dataset(pred, gt);
    fs::create_directories(out_dir);
    std::ofstream(out_dir + "/report.json") << simpose::eval::report_to_json(report).dump(2) << "\n";
    std::ofstream(out_dir + "/report.txt") << simpose::eval::report_table(report);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    std::printf("PA-MPJPE: %.1f\n", report.dataset_mean);
    return 0;
}

int cmd_inspect(const std::string& root) {
    std::vector<std::string> clip_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory() && fs::exists(entry.path() / "clip.jsonl"))
            clip_dirs.push_back(entry.path().string());
    std::sort(clip_dirs.begin(), clip_dirs.end());
    if (clip_dirs.empty()) throw simpose::Error("no clip directories under " + root);

    int clips = 0, accepted = 0, clips_with_total = 0;
    long frames = 0, total_frames = 0;
    std::map<std::string, long> state_counts;
    long keypoints = 0;
    for (const auto& dir : clip_dirs) {
        const auto side = simpose::pipeline::read_clip_sidecar(dir);
        ++clips;
        if (side.meta.value("occluder_accepted", false)) ++accepted;
        bool any_total = false;
        for (const auto& rec : side.frames) {
            ++frames;
            if (rec.value("total_occluded", false)) {
                ++total_frames;
                any_total = true;
            }
            for (const auto& kp : rec.at("keypoints")) {
                ++keypoints;
                ++state_counts[kp.at("state").get<std::string>()];
            }
        }
        if (any_total) ++clips_with_total;
    }

    std::printf("clips: %d\n", clips);
    std::printf("occluder acceptance rate: %.3f\n", static_cast<double>(accepted) / clips);
    std::printf("total-occlusion clip rate: %.3f\n", static_cast<double>(clips_with_total) / clips);
    std::printf("total-occluded frame rate: %.3f\n",
                frames > 0 ? static_cast<double>(total_frames) / static_cast<double>(frames) : 0.0);
    for (const auto& [state, count] : state_counts)
        std::printf("keypoint %s rate: %.4f\n", state.c_str(),
                    static_cast<double>(count) / static_cast<double>(keypoints));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic-human motion clip generation and 3D pose evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    int clip_length = 0;
    int jobs = 0;
    std::vector<std::string> ablations;
    std::string out_dir = ".";

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (or an output config.json)")
            ->envname("SIMPOSE_CONFIG");
        sub->add_option("--seed", seed, "master seed")->envname("SIMPOSE_SEED");
        sub->add_option("--clip-length", clip_length, "frames per clip")->envname("SIMPOSE_CLIP_LENGTH");
        sub->add_option("--jobs", jobs, "parallel clip builds")->envname("SIMPOSE_JOBS");
        sub->add_option("--ablation", ablations,
                        "disable one stage (static_background, no_camera_tracking, no_occluders, "
                        "no_total_occlusions); repeatable")
            ->envname("SIMPOSE_ABLATION");
        sub->add_option("--out", out_dir, "output directory")->envname("SIMPOSE_OUT");
    };

    std::string manifest_path;
    auto* compose = app.add_subcommand("compose", "build training clips from a manifest list");
    compose->add_option("manifests", manifest_path, "manifest list, one json record per line")->required();
    add_common(compose);

    std::string frames_dir;
    auto* flow_cmd = app.add_subcommand("flow", "TV-L1 flow for consecutive frames of a directory");
    flow_cmd->add_option("frames", frames_dir, "directory of .ppm frames")->required();
    add_common(flow_cmd);

    std::string pred_path, gt_path;
    auto* eval_cmd = app.add_subcommand("eval", "PA-MPJPE evaluation of pose records");
    eval_cmd->add_option("predictions", pred_path, "prediction record file")->required();
    eval_cmd->add_option("ground_truth", gt_path, "ground-truth record file")->required();
    add_common(eval_cmd);

    std::string inspect_root;
    auto* inspect_cmd = app.add_subcommand("inspect", "statistics over an output tree");
    inspect_cmd->add_option("root", inspect_root, "output root from compose")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        simpose::PipelineConfig config;
        if (!config_path.empty()) config = load_config_file(config_path);
        for (const auto* sub : {compose, flow_cmd, eval_cmd}) {
            if (!sub->parsed()) continue;
            if (sub->count("--seed")) config.master_seed = seed;
            if (sub->count("--clip-length")) config.clip_length = clip_length;
            if (sub->count("--jobs")) config.jobs = jobs;
        }
        for (const auto& a : ablations) config.set_ablation(a);
        config.validate();

        if (compose->parsed()) return cmd_compose(manifest_path, out_dir, config);
        if (flow_cmd->parsed()) return cmd_flow(frames_dir, out_dir, config);
        if (eval_cmd->parsed()) return cmd_eval(pred_path, gt_path, out_dir);
        if (inspect_cmd->parsed()) return cmd_inspect(inspect_root);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
