#pragma once

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "simpose/procrustes.hpp"
#include "simpose/types.hpp"

namespace simpose::eval {

struct PersonResult {
    std::string person_id;
    double mean_mm = 0.0;
    int frames_used = 0;
    int frames_skipped = 0;
};

struct EvalReport {
    std::vector<PersonResult> per_person;
    double dataset_mean = 0.0;            // unweighted mean over persons with usable frames
    std::vector<std::string> warnings;    // persons excluded for having no usable frames
};

struct PoseSequence {
    std::string person_id;
    std::vector<int> frame_indices;
    std::vector<Pose3D> poses;
    std::vector<int> visible_counts;  // ground truth only; empty for predictions
};

inline constexpr int kMinVisibleKeypoints = 7;

/// Per-person PA-MPJPE with frame filtering: frames whose ground truth has
/// fewer than min_visible visible keypoints are skipped but counted. The
/// dataset mean averages person means without weighting by frame counts.
inline EvalReport evaluate_dataset(const std::vector<PoseSequence>& predictions,
                                   const std::vector<PoseSequence>& ground_truth,
                                   int min_visible = kMinVisibleKeypoints, bool with_scale = true) {
    if (predictions.size() != ground_truth.size())
        throw Error("evaluate_dataset: person count mismatch");
    EvalReport report;
    double sum_means = 0.0;
    int persons_used = 0;
    for (std::size_t p = 0; p < predictions.size(); ++p) {
        const auto& pred = predictions[p];
        const auto& gt = ground_truth[p];
        if (pred.person_id != gt.person_id)
            throw Error("evaluate_dataset: person id mismatch: " + pred.person_id + " vs " + gt.person_id);
        if (pred.poses.size() != gt.poses.size() || gt.poses.size() != gt.visible_counts.size())
            throw Error("evaluate_dataset: frame count mismatch for person " + pred.person_id);

        PersonResult res;
        res.person_id = pred.person_id;
        double sum = 0.0;
        for (std::size_t f = 0; f < gt.poses.size(); ++f) {
            if (gt.visible_counts[f] < min_visible) {
                ++res.frames_skipped;
                continue;
            }
            sum += pa_mpjpe(pred.poses[f], gt.poses[f], with_scale);
            ++res.frames_used;
        }
        if (res.frames_used > 0) {
            res.mean_mm = sum / res.frames_used;
            sum_means += res.mean_mm;
            ++persons_used;
        } else {
            report.warnings.push_back("person " + res.person_id + " has no usable frames; excluded");
        }
        report.per_person.push_back(res);
    }
    report.dataset_mean = persons_used > 0 ? sum_means / persons_used : 0.0;
    return report;
}

// Pose record files are line-delimited text:
//   person_id frame_index x1 y1 z1 ... x14 y14 z14 [visible_count]
// coordinates in meters; the trailing count is present in ground truth.

inline std::vector<PoseSequence> read_pose_records(const std::string& path, bool with_visibility) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path);
    std::map<std::string, PoseSequence> by_person;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string id;
        int frame = 0;
        if (!(ls >> id >> frame))
            throw Error("bad record at " + path + ":" + std::to_string(line_no));
        Pose3D pose;
        for (int i = 0; i < kEvalJointCount; ++i) {
            float x, y, z;
            if (!(ls >> x >> y >> z))
                throw Error("expected 42 reals at " + path + ":" + std::to_string(line_no));
            pose.joints[static_cast<std::size_t>(i)] = {x, y, z};
        }
        int vis = kEvalJointCount;
        if (with_visibility && !(ls >> vis))
            throw Error("missing visible count at " + path + ":" + std::to_string(line_no));
        auto& seq = by_person[id];
        seq.person_id = id;
        seq.frame_indices.push_back(frame);
        seq.poses.push_back(pose);
        if (with_visibility) seq.visible_counts.push_back(vis);
    }
    std::vector<PoseSequence> out;
    out.reserve(by_person.size());
    for (auto& [id, seq] : by_person) {
        // sort frames by index
        std::vector<std::size_t> order(seq.frame_indices.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return seq.frame_indices[a] < seq.frame_indices[b]; });
        PoseSequence sorted;
        sorted.person_id = seq.person_id;
        for (std::size_t i : order) {
            sorted.frame_indices.push_back(seq.frame_indices[i]);
            sorted.poses.push_back(seq.poses[i]);
            if (with_visibility) sorted.visible_counts.push_back(seq.visible_counts[i]);
        }
        out.push_back(std::move(sorted));
    }
    return out;
}

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json per_person = nlohmann::json::array();
    for (const auto& p : report.per_person)
        per_person.push_back({{"person_id", p.person_id},
                              {"mean_mm", p.mean_mm},
                              {"frames_used", p.frames_used},
                              {"frames_skipped", p.frames_skipped}});
    return {{"per_person", per_person}, {"dataset_mean_mm", report.dataset_mean}, {"warnings", report.warnings}};
}

inline std::string report_table(const EvalReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(20) << "person" << std::right << std::setw(12) << "pa-mpjpe" << std::setw(8)
       << "used" << std::setw(9) << "skipped" << "\n";
    for (const auto& p : report.per_person) {
        os << std::left << std::setw(20) << p.person_id << std::right << std::setw(12) << std::fixed
           << std::setprecision(2) << p.mean_mm << std::setw(8) << p.frames_used << std::setw(9)
           << p.frames_skipped << "\n";
    }
    os << std::left << std::setw(20) << "dataset" << std::right << std::setw(12) << std::fixed
       << std::setprecision(2) << report.dataset_mean << "\n";
    for (const auto& w : report.warnings) os << "# " << w << "\n";
    return os.str();
}

}  // namespace simpose::eval
