#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "simpose/pnm.hpp"
#include "simpose/schema.hpp"
#include "simpose/types.hpp"

namespace simpose {

/// Pre-rendered person frames with alpha, per-frame depth and joints.
struct PersonClip {
    Video<std::uint8_t> frames;              // T x H x W x 4 (RGBA)
    Video<float> depth;                      // T x H x W, meters, valid where alpha > 0
    std::vector<std::array<Keypoint2D, kEvalJointCount>> joints2d;
    std::vector<Pose3D> joints3d;
    double fps = 0.0;

    int length() const { return static_cast<int>(frames.size()); }
    int width() const { return frames.empty() ? 0 : frames[0].width; }
    int height() const { return frames.empty() ? 0 : frames[0].height; }
};

struct BackgroundClip {
    Video<std::uint8_t> frames;  // T x H x W x 3
    double fps = 0.0;
    std::string source_id;

    int length() const { return static_cast<int>(frames.size()); }
    int width() const { return frames.empty() ? 0 : frames[0].width; }
    int height() const { return frames.empty() ? 0 : frames[0].height; }
};

struct ClipManifest {
    std::string person_path;
    std::string background_path;
    std::uint64_t master_seed = 0;
    std::uint64_t clip_index = 0;
    int clip_length = 31;

    void validate() const {
        if (clip_length < 2) throw Error("manifest: clip_length must be >= 2");
    }

    static ClipManifest from_json(const nlohmann::json& j) {
        ClipManifest m;
        m.person_path = j.at("person_path").get<std::string>();
        m.background_path = j.at("background_path").get<std::string>();
        if (j.contains("master_seed")) m.master_seed = j.at("master_seed").get<std::uint64_t>();
        if (j.contains("clip_index")) m.clip_index = j.at("clip_index").get<std::uint64_t>();
        if (j.contains("clip_length")) m.clip_length = j.at("clip_length").get<int>();
        m.validate();
        return m;
    }

    nlohmann::json to_json() const {
        return {{"person_path", person_path},
                {"background_path", background_path},
                {"master_seed", master_seed},
                {"clip_index", clip_index},
                {"clip_length", clip_length}};
    }
};

inline std::string frame_name(const std::string& stem, int index, const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "_%04d.", index);
    return stem + buf + ext;
}

namespace detail {

inline nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("bad json in " + path + ": " + e.what());
    }
    return j;
}

}  // namespace detail

// Person clip directory layout:
//   meta.json                fps, frame_count, width, height, joint_names (14)
//   frame_0000.pam ...       RGBA frames
//   depth_0000.pgm ...       16-bit depth, millimeters
//   joints.jsonl             one record per frame: joints2d (x, y, state) and
//                            joints3d (x, y, z in meters), both in eval order

inline PersonClip load_person_clip(const std::string& dir, const JointSchema& schema = JointSchema::coco14()) {
    const auto meta = detail::load_json_file(dir + "/meta.json");
    const int frame_count = meta.at("frame_count").get<int>();
    const int width = meta.at("width").get<int>();
    const int height = meta.at("height").get<int>();
    if (frame_count < 1) throw Error("person clip must have at least one frame: " + dir);
    if (meta.contains("joint_names")) {
        const auto names = meta.at("joint_names").get<std::vector<std::string>>();
        if (names != schema.eval_joints)
            throw Error("joint names in " + dir + "/meta.json do not match the schema");
    }

    PersonClip clip;
    clip.fps = meta.value("fps", 0.0);
    clip.frames.reserve(static_cast<std::size_t>(frame_count));
    clip.depth.reserve(static_cast<std::size_t>(frame_count));

    for (int t = 0; t < frame_count; ++t) {
        const std::string fpath = dir + "/" + frame_name("frame", t, "pam");
        ImageU8 frame = pnm::read_pam_rgba(fpath);
        if (frame.width != width || frame.height != height)
            throw Error("dimension mismatch in " + fpath);

        const std::string dpath = dir + "/" + frame_name("depth", t, "pgm");
        ImageU16 mm = pnm::read_pgm16(dpath);
        if (mm.width != width || mm.height != height)
            throw Error("dimension mismatch in " + dpath);
        ImageF32 depth(width, height, 1);
        for (std::size_t i = 0; i < mm.data.size(); ++i)
            depth.data[i] = static_cast<float>(mm.data[i]) / 1000.0f;

        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (frame.at(x, y, 3) > 0 && depth.at(x, y) <= 0.0f)
                    throw Error("zero depth under nonzero alpha in " + dpath);

        clip.frames.push_back(std::move(frame));
        clip.depth.push_back(std::move(depth));
    }

    const std::string jpath = dir + "/joints.jsonl";
    std::ifstream jin(jpath);
    if (!jin) throw Error("cannot open: " + jpath);
    std::string line;
    int line_no = 0;
    while (std::getline(jin, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error("bad json at " + jpath + ":" + std::to_string(line_no) + ": " + e.what());
        }
        const auto& j2 = j.at("joints2d");
        const auto& j3 = j.at("joints3d");
        if (j2.size() != kEvalJointCount || j3.size() != kEvalJointCount)
            throw Error("joint count != 14 at " + jpath + ":" + std::to_string(line_no));
        std::array<Keypoint2D, kEvalJointCount> kps;
        Pose3D pose;
        for (int i = 0; i < kEvalJointCount; ++i) {
            kps[static_cast<std::size_t>(i)].position = {j2[i].at("x").get<float>(), j2[i].at("y").get<float>()};
            kps[static_cast<std::size_t>(i)].state =
                keypoint_state_from_string(j2[i].value("state", "visible"));
            pose.joints[static_cast<std::size_t>(i)] = {j3[i][0].get<float>(), j3[i][1].get<float>(),
                                                        j3[i][2].get<float>()};
        }
        clip.joints2d.push_back(kps);
        clip.joints3d.push_back(pose);
    }
    if (static_cast<int>(clip.joints2d.size()) != frame_count)
        throw Error("joint record count != frame_count in " + jpath);
    return clip;
}

inline void save_person_clip(const PersonClip& clip, const std::string& dir,
                             const JointSchema& schema = JointSchema::coco14()) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json meta = {{"fps", clip.fps},
                           {"frame_count", clip.length()},
                           {"width", clip.width()},
                           {"height", clip.height()},
                           {"joint_names", schema.eval_joints}};
    std::ofstream(dir + "/meta.json") << meta.dump(2) << "\n";

    for (int t = 0; t < clip.length(); ++t) {
        pnm::write_pam_rgba(clip.frames[static_cast<std::size_t>(t)], dir + "/" + frame_name("frame", t, "pam"));
        const ImageF32& depth = clip.depth[static_cast<std::size_t>(t)];
        ImageU16 mm(depth.width, depth.height, 1);
        for (std::size_t i = 0; i < depth.data.size(); ++i) {
            const float v = depth.data[i] * 1000.0f;
            mm.data[i] = static_cast<std::uint16_t>(std::clamp(v + 0.5f, 0.0f, 65535.0f));
        }
        pnm::write_pgm16(mm, dir + "/" + frame_name("depth", t, "pgm"));
    }

    std::ofstream jout(dir + "/joints.jsonl");
    for (int t = 0; t < clip.length(); ++t) {
        nlohmann::json j2 = nlohmann::json::array();
        nlohmann::json j3 = nlohmann::json::array();
        for (int i = 0; i < kEvalJointCount; ++i) {
            const auto& kp = clip.joints2d[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
            j2.push_back({{"x", kp.position.x}, {"y", kp.position.y}, {"state", to_string(kp.state)}});
            const auto& p = clip.joints3d[static_cast<std::size_t>(t)].joints[static_cast<std::size_t>(i)];
            j3.push_back({p.x, p.y, p.z});
        }
        jout << nlohmann::json{{"frame", t}, {"joints2d", j2}, {"joints3d", j3}}.dump() << "\n";
    }
}

// Background clip directory layout: meta.json + frame_0000.ppm ...

inline BackgroundClip load_background_clip(const std::string& dir) {
    const auto meta = detail::load_json_file(dir + "/meta.json");
    const int frame_count = meta.at("frame_count").get<int>();
    if (frame_count < 1) throw Error("background clip must have at least one frame: " + dir);
    BackgroundClip clip;
    clip.fps = meta.value("fps", 0.0);
    clip.source_id = meta.value("source_id", std::string{});
    for (int t = 0; t < frame_count; ++t) {
        const std::string fpath = dir + "/" + frame_name("frame", t, "ppm");
        ImageU8 frame = pnm::read_ppm(fpath);
        if (t > 0 && (frame.width != clip.frames[0].width || frame.height != clip.frames[0].height))
            throw Error("dimension mismatch in " + fpath);
        clip.frames.push_back(std::move(frame));
    }
    return clip;
}

inline void save_background_clip(const BackgroundClip& clip, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json meta = {{"fps", clip.fps},
                           {"frame_count", clip.length()},
                           {"width", clip.width()},
                           {"height", clip.height()},
                           {"source_id", clip.source_id}};
    std::ofstream(dir + "/meta.json") << meta.dump(2) << "\n";
    for (int t = 0; t < clip.length(); ++t)
        pnm::write_ppm(clip.frames[static_cast<std::size_t>(t)], dir + "/" + frame_name("frame", t, "ppm"));
}

}  // namespace simpose
