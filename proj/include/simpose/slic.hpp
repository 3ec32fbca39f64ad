#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "simpose/clips.hpp"
#include "simpose/flow.hpp"
#include "simpose/image.hpp"
#include "simpose/pnm.hpp"
#include "simpose/rng.hpp"

namespace simpose::slic {

/// Per-cell cluster ids over the whole video volume.
struct SuperpixelLabels {
    Video<std::uint32_t> labels;  // T x H x W
    int cluster_count = 0;

    int length() const { return static_cast<int>(labels.size()); }
};

struct SlicParams {
    int k = 20;
    float compactness = 0.01f;
    float coord_scale = 5e-4f;
    int iterations = 10;
    // When set, the coordinate features use raw pixel units times
    // coord_scale * max(H, W) instead of the max-dimension-normalized
    // default. The default reproduces the reference weighting at 240x320.
    bool scale_by_max_dim = false;

    void validate() const {
        if (k < 1) throw Error("slic: k must be >= 1");
        if (compactness <= 0.0f) throw Error("slic: compactness must be positive");
        if (coord_scale <= 0.0f) throw Error("slic: coord_scale must be positive");
        if (iterations < 1) throw Error("slic: iterations must be >= 1");
    }
};

/// Randomized per-clip parameters: k uniform in [10, 30], coord_scale
/// uniform in [4e-4, 6e-4], compactness pinned at 0.01.
inline SlicParams sample_slic_params(Rng& rng) {
    SlicParams p;
    p.k = rng.next_int(10, 30);
    p.coord_scale = static_cast<float>(rng.next_real(4e-4, 6e-4));
    p.compactness = 0.01f;
    p.iterations = 10;
    return p;
}

/// Cluster the video volume in a feature space of (R, G, B in [0,1]) plus
/// camera-compensated coordinates (x - track_x[t], y - track_y[t]) weighted
/// by coord_scale, with a compactness-weighted anchor to each cluster's
/// seed position. Seeds form a regular grid on the center frame, replicated
/// across time. Assignment is a global argmin over clusters, so labels
/// depend only on cell features, which makes the labeling equivariant to
/// integer camera translations that are reflected in the track.
inline SuperpixelLabels slic_video(const BackgroundClip& bg, const flow::CameraTrack& track,
                                   const SlicParams& params) {
    params.validate();
    const int frame_count = bg.length();
    if (track.length() != frame_count) throw Error("slic_video: track length mismatch");
    const int w = bg.width(), h = bg.height();
    const std::size_t cells = static_cast<std::size_t>(frame_count) * w * h;
    if (static_cast<std::size_t>(params.k) > cells) throw Error("slic_video: k exceeds number of cells");

    const float coord_w =
        params.scale_by_max_dim ? params.coord_scale * static_cast<float>(std::max(w, h)) : params.coord_scale;

    // regular grid on the center frame, first k positions row-major
    const int center = track.center_index;
    int grid_w = std::max(1, static_cast<int>(std::lround(
                                  std::sqrt(static_cast<double>(params.k) * w / std::max(1, h)))));
    grid_w = std::min(grid_w, params.k);
    const int grid_h = (params.k + grid_w - 1) / grid_w;

    struct Center {
        float r, g, b, fx, fy;
        float seed_x, seed_y;  // compensated coordinates, fixed
    };
    std::vector<Center> centers;
    centers.reserve(static_cast<std::size_t>(params.k));
    const auto& center_frame = bg.frames[static_cast<std::size_t>(center)];
    const Vec2f center_off = track.offsets[static_cast<std::size_t>(center)];
    for (int gy = 0; gy < grid_h && static_cast<int>(centers.size()) < params.k; ++gy)
        for (int gx = 0; gx < grid_w && static_cast<int>(centers.size()) < params.k; ++gx) {
            const float sx = (static_cast<float>(gx) + 0.5f) * static_cast<float>(w) / static_cast<float>(grid_w);
            const float sy = (static_cast<float>(gy) + 0.5f) * static_cast<float>(h) / static_cast<float>(grid_h);
            const int px = std::min(static_cast<int>(sx), w - 1);
            const int py = std::min(static_cast<int>(sy), h - 1);
            Center c;
            c.r = center_frame.at(px, py, 0) / 255.0f;
            c.g = center_frame.at(px, py, 1) / 255.0f;
            c.b = center_frame.at(px, py, 2) / 255.0f;
            c.fx = coord_w * (sx - center_off.x);
            c.fy = coord_w * (sy - center_off.y);
            c.seed_x = sx - center_off.x;
            c.seed_y = sy - center_off.y;
            centers.push_back(c);
        }

    const float step = std::sqrt(static_cast<float>(w) * static_cast<float>(h) / static_cast<float>(params.k));
    const float anchor_w2 = (params.compactness / step) * (params.compactness / step);

    // cell colors once, in [0,1]
    std::vector<float> colors(cells * 3);
    {
        std::size_t i = 0;
        for (int t = 0; t < frame_count; ++t) {
            const auto& frame = bg.frames[static_cast<std::size_t>(t)];
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x, i += 3) {
                    colors[i] = frame.at(x, y, 0) / 255.0f;
                    colors[i + 1] = frame.at(x, y, 1) / 255.0f;
                    colors[i + 2] = frame.at(x, y, 2) / 255.0f;
                }
        }
    }

    SuperpixelLabels out;
    out.cluster_count = params.k;
    out.labels.assign(static_cast<std::size_t>(frame_count), Image<std::uint32_t>(w, h, 1));

    struct Accum {
        double r = 0, g = 0, b = 0, fx = 0, fy = 0;
        std::size_t count = 0;
    };

    const auto cell_distance = [&](std::size_t ci, float r, float g, float b, float cx, float cy) {
        const Center& c = centers[ci];
        const float dr = r - c.r, dg = g - c.g, db = b - c.b;
        const float dfx = coord_w * cx - c.fx, dfy = coord_w * cy - c.fy;
        const float ax = cx - c.seed_x, ay = cy - c.seed_y;
        return dr * dr + dg * dg + db * db + dfx * dfx + dfy * dfy + anchor_w2 * (ax * ax + ay * ay);
    };

    for (int iter = 0; iter < params.iterations; ++iter) {
        std::vector<Accum> accum(static_cast<std::size_t>(params.k));
        std::size_t ci = 0;
        for (int t = 0; t < frame_count; ++t) {
            const Vec2f off = track.offsets[static_cast<std::size_t>(t)];
            auto& lab = out.labels[static_cast<std::size_t>(t)];
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x, ++ci) {
                    const float r = colors[ci * 3], g = colors[ci * 3 + 1], b = colors[ci * 3 + 2];
                    const float cx = static_cast<float>(x) - off.x;
                    const float cy = static_cast<float>(y) - off.y;
                    std::uint32_t best = 0;
                    float best_d = cell_distance(0, r, g, b, cx, cy);
                    for (std::size_t k = 1; k < centers.size(); ++k) {
                        const float d = cell_distance(k, r, g, b, cx, cy);
                        if (d < best_d) {
                            best_d = d;
                            best = static_cast<std::uint32_t>(k);
                        }
                    }
                    lab.at(x, y) = best;
                    Accum& a = accum[best];
                    a.r += r;
                    a.g += g;
                    a.b += b;
                    a.fx += coord_w * cx;
                    a.fy += coord_w * cy;
                    ++a.count;
                }
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (accum[k].count == 0) continue;  // keep stale center
            const double n = static_cast<double>(accum[k].count);
            centers[k].r = static_cast<float>(accum[k].r / n);
            centers[k].g = static_cast<float>(accum[k].g / n);
            centers[k].b = static_cast<float>(accum[k].b / n);
            centers[k].fx = static_cast<float>(accum[k].fx / n);
            centers[k].fy = static_cast<float>(accum[k].fy / n);
        }
    }

    // every label must occur at least once: move the best-matching cell of a
    // multi-member cluster into each empty one, in label order
    std::vector<std::size_t> counts(static_cast<std::size_t>(params.k), 0);
    for (const auto& lab : out.labels)
        for (std::uint32_t v : lab.data) ++counts[v];
    for (std::uint32_t empty = 0; empty < static_cast<std::uint32_t>(params.k); ++empty) {
        if (counts[empty] > 0) continue;
        std::size_t best_cell = cells;
        float best_d = 0.0f;
        std::size_t ci = 0;
        for (int t = 0; t < frame_count; ++t) {
            const Vec2f off = track.offsets[static_cast<std::size_t>(t)];
            const auto& lab = out.labels[static_cast<std::size_t>(t)];
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x, ++ci) {
                    if (counts[lab.at(x, y)] < 2) continue;
                    const float d = cell_distance(empty, colors[ci * 3], colors[ci * 3 + 1], colors[ci * 3 + 2],
                                                  static_cast<float>(x) - off.x, static_cast<float>(y) - off.y);
                    if (best_cell == cells || d < best_d) {
                        best_cell = ci;
                        best_d = d;
                    }
                }
        }
        if (best_cell == cells) throw Error("slic_video: cannot repair empty cluster");
        const int t = static_cast<int>(best_cell / (static_cast<std::size_t>(w) * h));
        const int rem = static_cast<int>(best_cell % (static_cast<std::size_t>(w) * h));
        auto& lab = out.labels[static_cast<std::size_t>(t)];
        --counts[lab.at(rem % w, rem / w)];
        lab.at(rem % w, rem / w) = empty;
        ++counts[empty];
    }
    return out;
}

/// Boolean volume selecting one cluster.
inline Video<std::uint8_t> mask_from_label(const SuperpixelLabels& labels, int label) {
    if (label < 0 || label >= labels.cluster_count) throw Error("mask_from_label: label out of range");
    Video<std::uint8_t> mask;
    mask.reserve(labels.labels.size());
    for (const auto& lab : labels.labels) {
        ImageU8 m(lab.width, lab.height, 1);
        for (std::size_t i = 0; i < lab.data.size(); ++i)
            m.data[i] = lab.data[i] == static_cast<std::uint32_t>(label) ? 1 : 0;
        mask.push_back(std::move(m));
    }
    return mask;
}

/// Export: one 16-bit label image per frame plus a sidecar record.
inline void write_labels(const SuperpixelLabels& labels, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (int t = 0; t < labels.length(); ++t)
        pnm::write_label_image(labels.labels[static_cast<std::size_t>(t)],
                               dir + "/" + frame_name("label", t, "pgm"));
    std::ofstream(dir + "/labels.json")
        << nlohmann::json{{"cluster_count", labels.cluster_count}, {"frame_count", labels.length()}}.dump(2)
        << "\n";
}

}  // namespace simpose::slic
