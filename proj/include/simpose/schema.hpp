#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "simpose/types.hpp"

namespace simpose {

/// Joint naming and ordering used across the pipeline.
///
/// The evaluation set is the 14 joints shared by the common parametric-body
/// and 2D-keypoint conventions, in the order
///   [right ankle, right knee, right hip, left hip, left knee, left ankle,
///    right wrist, right elbow, right shoulder, left shoulder, left elbow,
///    left wrist, neck, head top].
/// The 12 input keypoints are the limb joints (ankles, knees, hips,
/// shoulders, elbows, wrists), i.e. the evaluation set minus neck/head.
/// Source datasets with different joint sets are remapped to these names at
/// ingestion time; the mapping is configuration, not code.
struct JointSchema {
    std::vector<std::string> eval_joints;       // exactly 14
    std::vector<std::string> input_keypoints;   // exactly 12, subset of eval_joints
    std::vector<int> leg_subset;                // indices into input_keypoints, size 4

    static JointSchema coco14() {
        JointSchema s;
        s.eval_joints = {
            "right_ankle", "right_knee", "right_hip", "left_hip",  "left_knee",  "left_ankle",
            "right_wrist", "right_elbow", "right_shoulder", "left_shoulder", "left_elbow",
            "left_wrist", "neck", "head_top"};
        s.input_keypoints = {
            "right_ankle", "right_knee", "right_hip", "left_hip",  "left_knee",  "left_ankle",
            "right_wrist", "right_elbow", "right_shoulder", "left_shoulder", "left_elbow",
            "left_wrist"};
        s.leg_subset = {0, 1, 4, 5};  // ankles and knees
        s.validate();
        return s;
    }

    void validate() const {
        if (eval_joints.size() != kEvalJointCount) throw Error("schema: eval_joints must have 14 entries");
        if (input_keypoints.size() != kInputKeypointCount)
            throw Error("schema: input_keypoints must have 12 entries");
        for (const auto& name : input_keypoints)
            if (std::find(eval_joints.begin(), eval_joints.end(), name) == eval_joints.end())
                throw Error("schema: input keypoint '" + name + "' not among eval joints");
        if (leg_subset.size() != 4) throw Error("schema: leg_subset must have 4 entries");
        for (int idx : leg_subset)
            if (idx < 0 || idx >= kInputKeypointCount) throw Error("schema: leg_subset index out of range");
    }

    int eval_index(const std::string& name) const {
        const auto it = std::find(eval_joints.begin(), eval_joints.end(), name);
        if (it == eval_joints.end()) throw Error("schema: unknown joint '" + name + "'");
        return static_cast<int>(it - eval_joints.begin());
    }

    /// For each of the 12 input keypoints, its index within the 14 eval joints.
    std::vector<int> input_indices_in_eval() const {
        std::vector<int> out;
        out.reserve(input_keypoints.size());
        for (const auto& name : input_keypoints) out.push_back(eval_index(name));
        return out;
    }

    bool is_leg(int input_index) const {
        return std::find(leg_subset.begin(), leg_subset.end(), input_index) != leg_subset.end();
    }
};

}  // namespace simpose
