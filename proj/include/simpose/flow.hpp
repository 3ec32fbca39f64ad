#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "simpose/image.hpp"
#include "simpose/types.hpp"

namespace simpose::flow {

/// Dense per-pixel motion, pixels per frame. u is the x displacement.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<Vec2f> vectors;

    FlowField() = default;
    FlowField(int w, int h) : width(w), height(h), vectors(static_cast<std::size_t>(w) * h) {}

    Vec2f& at(int x, int y) { return vectors[static_cast<std::size_t>(y) * width + x]; }
    const Vec2f& at(int x, int y) const { return vectors[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return vectors.size(); }
    bool operator==(const FlowField&) const = default;
};

/// Cumulative camera offset per frame, zero at the center frame.
struct CameraTrack {
    std::vector<Vec2f> offsets;
    int center_index = 0;

    int length() const { return static_cast<int>(offsets.size()); }
};

struct TvL1Params {
    float lambda_data = 0.15f;  // data attachment weight
    float theta = 0.3f;         // tightness of the quadratic coupling
    float tau = 0.25f;          // dual ascent step
    float pyramid_scale = 0.5f;
    int levels = 16;            // cap; effective depth keeps the coarsest side >= 16
    int warps = 5;
    int iterations = 50;
    float epsilon = 0.01f;      // stopping threshold on the mean flow update

    void validate() const {
        if (lambda_data <= 0 || theta <= 0 || tau <= 0 || epsilon <= 0)
            throw Error("tvl1: parameters must be positive");
        if (pyramid_scale <= 0.0f || pyramid_scale >= 1.0f) throw Error("tvl1: pyramid_scale must be in (0,1)");
        if (levels < 1 || warps < 1 || iterations < 1) throw Error("tvl1: counts must be >= 1");
    }
};

namespace detail {

inline constexpr float kGradEps = 1e-10f;
inline constexpr int kMinSide = 16;
// Inputs arrive in [0, 1]; the solver works on the conventional 0..255
// intensity scale so the default lambda matches the cited settings.
inline constexpr float kIntensityScale = 255.0f;

inline ImageF32 downsample(const ImageF32& img, float scale) {
    const int ow = std::max(1, static_cast<int>(std::lround(img.width * scale)));
    const int oh = std::max(1, static_cast<int>(std::lround(img.height * scale)));
    const float sigma = 0.6f * std::sqrt(1.0f / (scale * scale) - 1.0f);
    const ImageF32 smoothed = gaussian_blur(img, sigma);
    return resize_bilinear(smoothed, ow, oh);
}

inline void central_gradient(const ImageF32& img, ImageF32& gx, ImageF32& gy) {
    gx = ImageF32(img.width, img.height, 1);
    gy = ImageF32(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, img.width - 1);
            const int ym = std::max(y - 1, 0), yp = std::min(y + 1, img.height - 1);
            gx.at(x, y) = 0.5f * (img.at(xp, y) - img.at(xm, y));
            gy.at(x, y) = 0.5f * (img.at(x, yp) - img.at(x, ym));
        }
}

inline void warp_image(const ImageF32& src, const std::vector<float>& u, const std::vector<float>& v,
                       ImageF32& dst) {
    dst = ImageF32(src.width, src.height, 1);
    std::size_t i = 0;
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x, ++i)
            dst.data[i] = sample_bilinear(src, static_cast<float>(x) + u[i], static_cast<float>(y) + v[i]);
}

// 3x3 median filter, replicated borders; applied to the flow between warps
// to damp fixed-point oscillation.
inline void median3x3(std::vector<float>& field, int w, int h) {
    std::vector<float> out(field.size());
    float window[9];
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int sx = std::clamp(x + dx, 0, w - 1);
                    const int sy = std::clamp(y + dy, 0, h - 1);
                    window[n++] = field[static_cast<std::size_t>(sy) * w + sx];
                }
            std::nth_element(window, window + 4, window + 9);
            out[static_cast<std::size_t>(y) * w + x] = window[4];
        }
    field = std::move(out);
}

// One pyramid level of the duality-based solver: alternate a pointwise
// threshold on the data term, a primal update from the divergence of the
// dual field, and a projected ascent on the dual field.
inline void solve_level(const ImageF32& I0, const ImageF32& I1, std::vector<float>& u1,
                        std::vector<float>& u2, const TvL1Params& p) {
    const int w = I0.width, h = I0.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const float l_t = p.lambda_data * p.theta;
    const float taut = p.tau / p.theta;

    ImageF32 I1x, I1y;
    central_gradient(I1, I1x, I1y);

    std::vector<float> p11(n, 0.0f), p12(n, 0.0f), p21(n, 0.0f), p22(n, 0.0f);
    std::vector<float> v1(n), v2(n), rho_c(n), grad(n);
    ImageF32 I1w, I1wx, I1wy;

    for (int warp = 0; warp < p.warps; ++warp) {
        warp_image(I1, u1, u2, I1w);
        warp_image(I1x, u1, u2, I1wx);
        warp_image(I1y, u1, u2, I1wy);
        for (std::size_t i = 0; i < n; ++i) {
            grad[i] = I1wx.data[i] * I1wx.data[i] + I1wy.data[i] * I1wy.data[i];
            rho_c[i] = I1w.data[i] - I1wx.data[i] * u1[i] - I1wy.data[i] * u2[i] - I0.data[i];
        }

        for (int it = 0; it < p.iterations; ++it) {
            // pointwise minimization of the data term
            for (std::size_t i = 0; i < n; ++i) {
                const float rho = rho_c[i] + I1wx.data[i] * u1[i] + I1wy.data[i] * u2[i];
                float d1 = 0.0f, d2 = 0.0f;
                if (rho < -l_t * grad[i]) {
                    d1 = l_t * I1wx.data[i];
                    d2 = l_t * I1wy.data[i];
                } else if (rho > l_t * grad[i]) {
                    d1 = -l_t * I1wx.data[i];
                    d2 = -l_t * I1wy.data[i];
                } else if (grad[i] > kGradEps) {
                    d1 = -rho * I1wx.data[i] / grad[i];
                    d2 = -rho * I1wy.data[i] / grad[i];
                }
                v1[i] = u1[i] + d1;
                v2[i] = u2[i] + d2;
            }

            // primal update from the divergence of the dual field
            double error = 0.0;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    const float div1 = (x < w - 1 ? p11[i] : 0.0f) - (x > 0 ? p11[i - 1] : 0.0f) +
                                       (y < h - 1 ? p12[i] : 0.0f) - (y > 0 ? p12[i - w] : 0.0f);
                    const float div2 = (x < w - 1 ? p21[i] : 0.0f) - (x > 0 ? p21[i - 1] : 0.0f) +
                                       (y < h - 1 ? p22[i] : 0.0f) - (y > 0 ? p22[i - w] : 0.0f);
                    const float n1 = v1[i] + p.theta * div1;
                    const float n2 = v2[i] + p.theta * div2;
                    error += (n1 - u1[i]) * (n1 - u1[i]) + (n2 - u2[i]) * (n2 - u2[i]);
                    u1[i] = n1;
                    u2[i] = n2;
                }
            error /= static_cast<double>(n);

            // projected ascent on the dual variables (forward differences)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    const float u1x = x < w - 1 ? u1[i + 1] - u1[i] : 0.0f;
                    const float u1y = y < h - 1 ? u1[i + w] - u1[i] : 0.0f;
                    const float u2x = x < w - 1 ? u2[i + 1] - u2[i] : 0.0f;
                    const float u2y = y < h - 1 ? u2[i + w] - u2[i] : 0.0f;
                    const float ng1 = 1.0f + taut * std::sqrt(u1x * u1x + u1y * u1y);
                    const float ng2 = 1.0f + taut * std::sqrt(u2x * u2x + u2y * u2y);
                    p11[i] = (p11[i] + taut * u1x) / ng1;
                    p12[i] = (p12[i] + taut * u1y) / ng1;
                    p21[i] = (p21[i] + taut * u2x) / ng2;
                    p22[i] = (p22[i] + taut * u2y) / ng2;
                }

            if (error < static_cast<double>(p.epsilon) * p.epsilon) break;
        }
    }
}

inline void upscale_flow(std::vector<float>& u, int in_w, int in_h, int out_w, int out_h, float factor) {
    ImageF32 src(in_w, in_h, 1);
    src.data = u;
    ImageF32 dst = resize_bilinear(src, out_w, out_h);
    u.assign(dst.data.begin(), dst.data.end());
    for (auto& v : u) v *= factor;
}

}  // namespace detail

/// Dense TV-L1 optical flow between two grayscale images in [0, 1].
/// Coarse-to-fine with fixed-point warping; deterministic for fixed inputs.
inline FlowField tvl1_flow(const ImageF32& prev, const ImageF32& next, const TvL1Params& params = {}) {
    params.validate();
    if (prev.width != next.width || prev.height != next.height)
        throw Error("tvl1_flow: image dimensions differ");
    if (prev.channels != 1 || next.channels != 1) throw Error("tvl1_flow: images must be single-channel");
    if (prev.width < detail::kMinSide || prev.height < detail::kMinSide)
        throw Error("tvl1_flow: images must be at least 16x16");
    for (float v : prev.data)
        if (!std::isfinite(v)) throw Error("tvl1_flow: non-finite pixel in first image");
    for (float v : next.data)
        if (!std::isfinite(v)) throw Error("tvl1_flow: non-finite pixel in second image");

    // number of levels keeping the coarsest side >= 16
    const int min_side = std::min(prev.width, prev.height);
    int levels = 1;
    float side = static_cast<float>(min_side);
    while (levels < params.levels && side * params.pyramid_scale >= detail::kMinSide) {
        side *= params.pyramid_scale;
        ++levels;
    }

    const float presmooth_sigma = 0.8f;
    ImageF32 scaled_prev = prev, scaled_next = next;
    for (auto& v : scaled_prev.data) v *= detail::kIntensityScale;
    for (auto& v : scaled_next.data) v *= detail::kIntensityScale;
    std::vector<ImageF32> pyr0(static_cast<std::size_t>(levels)), pyr1(static_cast<std::size_t>(levels));
    pyr0[0] = gaussian_blur(scaled_prev, presmooth_sigma);
    pyr1[0] = gaussian_blur(scaled_next, presmooth_sigma);
    for (int l = 1; l < levels; ++l) {
        pyr0[static_cast<std::size_t>(l)] = detail::downsample(pyr0[static_cast<std::size_t>(l - 1)], params.pyramid_scale);
        pyr1[static_cast<std::size_t>(l)] = detail::downsample(pyr1[static_cast<std::size_t>(l - 1)], params.pyramid_scale);
    }

    const auto& coarsest = pyr0[static_cast<std::size_t>(levels - 1)];
    std::vector<float> u1(coarsest.pixel_count(), 0.0f), u2(coarsest.pixel_count(), 0.0f);
    for (int l = levels - 1; l >= 0; --l) {
        detail::solve_level(pyr0[static_cast<std::size_t>(l)], pyr1[static_cast<std::size_t>(l)], u1, u2, params);
        if (l > 0) {
            const auto& fine = pyr0[static_cast<std::size_t>(l - 1)];
            const auto& coarse = pyr0[static_cast<std::size_t>(l)];
            detail::upscale_flow(u1, coarse.width, coarse.height, fine.width, fine.height,
                                 static_cast<float>(fine.width) / static_cast<float>(coarse.width));
            detail::upscale_flow(u2, coarse.width, coarse.height, fine.width, fine.height,
                                 static_cast<float>(fine.height) / static_cast<float>(coarse.height));
        }
    }

    FlowField out(prev.width, prev.height);
    for (std::size_t i = 0; i < out.size(); ++i) out.vectors[i] = {u1[i], u2[i]};
    return out;
}

/// Component-wise median; for even counts, the mean of the two middle values.
inline Vec2f median_flow(const FlowField& field, const ImageU8* valid_mask = nullptr) {
    if (field.size() == 0) throw Error("median_flow: empty flow field");
    std::vector<float> xs, ys;
    xs.reserve(field.size());
    ys.reserve(field.size());
    if (valid_mask) {
        if (valid_mask->width != field.width || valid_mask->height != field.height)
            throw Error("median_flow: mask dimensions differ");
        for (int y = 0; y < field.height; ++y)
            for (int x = 0; x < field.width; ++x)
                if (valid_mask->at(x, y)) {
                    xs.push_back(field.at(x, y).x);
                    ys.push_back(field.at(x, y).y);
                }
        if (xs.empty()) throw Error("median_flow: mask selects no cells");
    } else {
        for (const auto& v : field.vectors) {
            xs.push_back(v.x);
            ys.push_back(v.y);
        }
    }

    const auto median = [](std::vector<float>& vals) {
        const std::size_t n = vals.size();
        const std::size_t mid = n / 2;
        std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid), vals.end());
        float hi = vals[mid];
        if (n % 2 == 1) return hi;
        std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid - 1),
                         vals.begin() + static_cast<std::ptrdiff_t>(mid));
        return 0.5f * (vals[mid - 1] + hi);
    };
    return {median(xs), median(ys)};
}

/// Accumulate per-frame medians into cumulative offsets, zero at the center.
inline CameraTrack integrate_camera(const std::vector<Vec2f>& medians, int center_index) {
    const int frame_count = static_cast<int>(medians.size()) + 1;
    if (center_index < 0 || center_index >= frame_count)
        throw Error("integrate_camera: center_index out of range");
    CameraTrack track;
    track.center_index = center_index;
    track.offsets.assign(static_cast<std::size_t>(frame_count), Vec2f{});
    for (int t = center_index + 1; t < frame_count; ++t)
        track.offsets[static_cast<std::size_t>(t)] =
            track.offsets[static_cast<std::size_t>(t - 1)] + medians[static_cast<std::size_t>(t - 1)];
    for (int t = center_index - 1; t >= 0; --t)
        track.offsets[static_cast<std::size_t>(t)] =
            track.offsets[static_cast<std::size_t>(t + 1)] - medians[static_cast<std::size_t>(t)];
    return track;
}

/// Network-facing encoding: (u/20, v/20, |flow|/20).
inline ImageF32 flow_to_net_input(const FlowField& field) {
    ImageF32 out(field.width, field.height, 3);
    for (int y = 0; y < field.height; ++y)
        for (int x = 0; x < field.width; ++x) {
            const Vec2f f = field.at(x, y);
            out.at(x, y, 0) = f.x / 20.0f;
            out.at(x, y, 1) = f.y / 20.0f;
            out.at(x, y, 2) = f.norm() / 20.0f;
        }
    return out;
}

}  // namespace simpose::flow
