#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "simpose/flo_io.hpp"
#include "simpose/flow.hpp"
#include "test_support.hpp"

using namespace simpose;
using namespace simpose::flow;

namespace {

ImageF32 normalized(const ImageF32& tex) {
    ImageF32 out = tex;
    for (auto& v : out.data) v /= 255.0f;
    return out;
}

/// Two views of one larger texture, offset by (dx, dy): ground-truth flow is
/// exactly (dx, dy) everywhere.
std::pair<ImageF32, ImageF32> shifted_pair(int w, int h, int dx, int dy, std::uint64_t seed) {
    const int pad = 8;
    const ImageF32 base = testsup::make_texture(w + 2 * pad, h + 2 * pad, seed);
    ImageF32 a(w, h, 1), b(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            a.at(x, y) = base.at(x + pad, y + pad) / 255.0f;
            b.at(x, y) = base.at(x + pad - dx, y + pad - dy) / 255.0f;
        }
    return {a, b};
}

double mean_endpoint_error(const FlowField& f, float dx, float dy) {
    double sum = 0.0;
    for (const auto& v : f.vectors) sum += std::sqrt((v.x - dx) * (v.x - dx) + (v.y - dy) * (v.y - dy));
    return sum / static_cast<double>(f.size());
}

}  // namespace

TEST_CASE("tvl1 returns near-zero flow for identical images") {
    const ImageF32 img = normalized(testsup::make_texture(64, 64, 3));
    const FlowField f = tvl1_flow(img, img);
    double mean_mag = 0.0;
    for (const auto& v : f.vectors) mean_mag += v.norm();
    mean_mag /= static_cast<double>(f.size());
    REQUIRE(mean_mag < 0.05);
}

TEST_CASE("tvl1 recovers an integer shift of (+3, 0)") {
    const auto [a, b] = shifted_pair(64, 64, 3, 0, 21);
    REQUIRE(mean_endpoint_error(tvl1_flow(a, b), 3.0f, 0.0f) < 0.3);
}

TEST_CASE("tvl1 recovers an integer shift of (0, -2)") {
    const auto [a, b] = shifted_pair(64, 64, 0, -2, 22);
    REQUIRE(mean_endpoint_error(tvl1_flow(a, b), 0.0f, -2.0f) < 0.3);
}

TEST_CASE("tvl1 shift recovery holds for random shifts up to 4 px") {
    Rng rng(99);
    for (int i = 0; i < 5; ++i) {
        const int dx = rng.next_int(-4, 4);
        const int dy = rng.next_int(-4, 4);
        const auto [a, b] = shifted_pair(64, 64, dx, dy, 100 + static_cast<std::uint64_t>(i));
        const double epe = mean_endpoint_error(tvl1_flow(a, b), static_cast<float>(dx), static_cast<float>(dy));
        INFO("shift (" << dx << ", " << dy << ") epe " << epe);
        REQUIRE(epe < 0.3);
    }
}

TEST_CASE("tvl1 is deterministic") {
    const auto [a, b] = shifted_pair(48, 40, 2, 1, 5);
    REQUIRE(tvl1_flow(a, b) == tvl1_flow(a, b));
}

TEST_CASE("tvl1 validates inputs") {
    const ImageF32 a(64, 64, 1, 0.5f);
    REQUIRE_THROWS_AS(tvl1_flow(a, ImageF32(32, 64, 1, 0.5f)), Error);
    REQUIRE_THROWS_AS(tvl1_flow(ImageF32(8, 8, 1, 0.5f), ImageF32(8, 8, 1, 0.5f)), Error);
    ImageF32 bad = a;
    bad.at(3, 4) = std::numeric_limits<float>::quiet_NaN();
    REQUIRE_THROWS_AS(tvl1_flow(a, bad), Error);
    TvL1Params p;
    p.pyramid_scale = 1.5f;
    REQUIRE_THROWS_AS(tvl1_flow(a, a, p), Error);
}

TEST_CASE("median_flow of a constant field is that constant") {
    FlowField f(6, 4);
    for (auto& v : f.vectors) v = {2.0f, -1.0f};
    const Vec2f m = median_flow(f);
    REQUIRE(m.x == 2.0f);
    REQUIRE(m.y == -1.0f);
}

TEST_CASE("median_flow returns the strict-majority value") {
    FlowField f(10, 10);
    Rng rng(4);
    for (std::size_t i = 0; i < f.vectors.size(); ++i) {
        if (i < 60) f.vectors[i] = {5.0f, 5.0f};
        else f.vectors[i] = {static_cast<float>(rng.next_real(-1.0, 1.0)),
                             static_cast<float>(rng.next_real(-1.0, 1.0))};
    }
    const Vec2f m = median_flow(f);
    REQUIRE(m.x == 5.0f);
    REQUIRE(m.y == 5.0f);
}

TEST_CASE("median_flow averages the two middle values for even counts") {
    FlowField f(2, 1);
    f.vectors[0] = {0.0f, 0.0f};
    f.vectors[1] = {2.0f, 4.0f};
    const Vec2f m = median_flow(f);
    REQUIRE(m.x == 1.0f);
    REQUIRE(m.y == 2.0f);
}

TEST_CASE("median_flow is invariant to cell permutation and tolerant of outliers") {
    Rng rng(8);
    FlowField f(9, 7);
    for (auto& v : f.vectors)
        v = {static_cast<float>(rng.next_real(-3.0, 3.0)), static_cast<float>(rng.next_real(-3.0, 3.0))};
    const Vec2f before = median_flow(f);
    // permute
    for (std::size_t i = f.vectors.size() - 1; i > 0; --i)
        std::swap(f.vectors[i], f.vectors[rng.next_below(i + 1)]);
    const Vec2f after = median_flow(f);
    REQUIRE(before == after);

    // exact majority value survives < 50% outliers
    FlowField g(11, 1);
    for (int i = 0; i < 6; ++i) g.vectors[static_cast<std::size_t>(i)] = {7.0f, -7.0f};
    for (int i = 6; i < 11; ++i) g.vectors[static_cast<std::size_t>(i)] = {100.0f + i, -100.0f - i};
    REQUIRE(median_flow(g) == Vec2f{7.0f, -7.0f});
}

TEST_CASE("median_flow honors the valid mask") {
    FlowField f(3, 1);
    f.vectors = {{1.0f, 1.0f}, {50.0f, 50.0f}, {3.0f, 3.0f}};
    ImageU8 mask(3, 1, 1, 0);
    mask.at(0, 0) = 1;
    mask.at(2, 0) = 1;
    REQUIRE(median_flow(f, &mask) == Vec2f{2.0f, 2.0f});

    ImageU8 empty(3, 1, 1, 0);
    REQUIRE_THROWS_AS(median_flow(f, &empty), Error);
}

TEST_CASE("integrate_camera matches the worked examples") {
    {
        const std::vector<Vec2f> med(4, {1.0f, 0.0f});
        const CameraTrack t = integrate_camera(med, 2);
        const std::vector<Vec2f> want = {{-2, 0}, {-1, 0}, {0, 0}, {1, 0}, {2, 0}};
        REQUIRE(t.offsets == want);
    }
    {
        const std::vector<Vec2f> med(4, {0.0f, 0.0f});
        const CameraTrack t = integrate_camera(med, 2);
        for (const auto& o : t.offsets) REQUIRE(o == Vec2f{0.0f, 0.0f});
    }
    {
        const std::vector<Vec2f> med = {{1, 1}, {-1, 2}, {0, 0}};
        const CameraTrack t = integrate_camera(med, 0);
        const std::vector<Vec2f> want = {{0, 0}, {1, 1}, {0, 3}, {0, 3}};
        REQUIRE(t.offsets == want);
    }
    REQUIRE_THROWS_AS(integrate_camera({{1, 1}}, 2), Error);
    REQUIRE_THROWS_AS(integrate_camera({{1, 1}}, -1), Error);
}

TEST_CASE("integrate_camera satisfies the recurrence within one ulp") {
    Rng rng(14);
    std::vector<Vec2f> med;
    for (int i = 0; i < 30; ++i)
        med.push_back({static_cast<float>(rng.next_real(-5.0, 5.0)), static_cast<float>(rng.next_real(-5.0, 5.0))});
    const CameraTrack t = integrate_camera(med, 15);
    REQUIRE(t.offsets[15] == Vec2f{0.0f, 0.0f});
    for (std::size_t i = 0; i + 1 < t.offsets.size(); ++i) {
        const float dx = t.offsets[i + 1].x - t.offsets[i].x;
        const float dy = t.offsets[i + 1].y - t.offsets[i].y;
        // one rounded operation: exact to an ulp at the offsets' magnitude
        const float bound_x = 2.0f * std::numeric_limits<float>::epsilon() *
                              std::max({std::abs(t.offsets[i].x), std::abs(t.offsets[i + 1].x), std::abs(med[i].x)});
        const float bound_y = 2.0f * std::numeric_limits<float>::epsilon() *
                              std::max({std::abs(t.offsets[i].y), std::abs(t.offsets[i + 1].y), std::abs(med[i].y)});
        REQUIRE_THAT(dx, Catch::Matchers::WithinAbs(med[i].x, bound_x));
        REQUIRE_THAT(dy, Catch::Matchers::WithinAbs(med[i].y, bound_y));
    }
}

TEST_CASE("flow_to_net_input matches the arithmetic examples") {
    FlowField f(3, 1);
    f.vectors = {{20.0f, 0.0f}, {0.0f, 0.0f}, {-40.0f, 30.0f}};
    const ImageF32 net = flow_to_net_input(f);
    REQUIRE(net.channels == 3);
    REQUIRE(net.at(0, 0, 0) == 1.0f);
    REQUIRE(net.at(0, 0, 1) == 0.0f);
    REQUIRE(net.at(0, 0, 2) == 1.0f);
    REQUIRE(net.at(1, 0, 0) == 0.0f);
    REQUIRE(net.at(1, 0, 2) == 0.0f);
    REQUIRE(net.at(2, 0, 0) == -2.0f);
    REQUIRE(net.at(2, 0, 1) == 1.5f);
    REQUIRE(net.at(2, 0, 2) == 2.5f);
}

TEST_CASE("flow_to_net_input magnitude channel is consistent") {
    Rng rng(31);
    FlowField f(16, 9);
    for (auto& v : f.vectors)
        v = {static_cast<float>(rng.next_real(-60.0, 60.0)), static_cast<float>(rng.next_real(-60.0, 60.0))};
    const ImageF32 net = flow_to_net_input(f);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            const float m = net.at(x, y, 2);
            REQUIRE(m >= 0.0f);
            const float lhs = m * m;
            const float rhs = net.at(x, y, 0) * net.at(x, y, 0) + net.at(x, y, 1) * net.at(x, y, 1);
            REQUIRE_THAT(lhs, Catch::Matchers::WithinRel(rhs, 1e-6f));
        }
}

TEST_CASE("flo files round-trip bit-exactly") {
    testsup::TempDir tmp("simpose_flo");
    Rng rng(77);
    FlowField f(13, 9);
    for (auto& v : f.vectors)
        v = {static_cast<float>(rng.next_real(-30.0, 30.0)), static_cast<float>(rng.next_real(-30.0, 30.0))};
    const std::string path = tmp.path + "/a.flo";
    write_flo(f, path);
    REQUIRE(read_flo(path) == f);
}

TEST_CASE("flo reader rejects bad files") {
    testsup::TempDir tmp("simpose_flo_bad");
    const std::string path = tmp.path + "/bad.flo";
    {
        std::ofstream out(path, std::ios::binary);
        const float wrong = 123.456f;
        const std::int32_t w = 2, h = 2;
        out.write(reinterpret_cast<const char*>(&wrong), 4);
        out.write(reinterpret_cast<const char*>(&w), 4);
        out.write(reinterpret_cast<const char*>(&h), 4);
    }
    REQUIRE_THROWS_WITH(read_flo(path), Catch::Matchers::ContainsSubstring("bad magic"));

    const std::string trunc = tmp.path + "/trunc.flo";
    {
        FlowField f(4, 4);
        write_flo(f, trunc);
        std::filesystem::resize_file(trunc, 20);
    }
    REQUIRE_THROWS_WITH(read_flo(trunc), Catch::Matchers::ContainsSubstring("truncated"));
}

TEST_CASE("a 2x2 flo file is exactly 44 bytes") {
    testsup::TempDir tmp("simpose_flo_size");
    const std::string path = tmp.path + "/two.flo";
    write_flo(FlowField(2, 2), path);
    REQUIRE(std::filesystem::file_size(path) == 12 + 32);
}
