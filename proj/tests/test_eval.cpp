#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "eval_oracles.hpp"
#include "simpose/eval.hpp"
#include "simpose/procrustes.hpp"
#include "test_support.hpp"

using namespace simpose;
using namespace simpose::eval;
using testsup::apply_similarity;
using testsup::gaussian;
using testsup::nm_alignment_oracle;
using testsup::random_pose_matrix;
using testsup::random_rotation;

namespace {

Pose3D random_pose(Rng& rng, float span = 1.0f) {
    Pose3D p;
    for (auto& j : p.joints)
        j = {static_cast<float>(rng.next_real(-span, span)), static_cast<float>(rng.next_real(-span, span)),
             static_cast<float>(rng.next_real(-span, span)) + 3.0f};
    return p;
}

/// Pose with all coordinates multiples of 1/16: similarity transforms built
/// from dyadic factors stay exact in float.
Pose3D dyadic_pose(Rng& rng) {
    Pose3D p;
    for (auto& j : p.joints)
        j = {static_cast<float>(rng.next_int(-16, 16)) / 16.0f, static_cast<float>(rng.next_int(-16, 16)) / 16.0f,
             static_cast<float>(rng.next_int(-16, 16)) / 16.0f};
    return p;
}

}  // namespace

TEST_CASE("aligning a pose with itself is the identity transform") {
    Rng rng(1);
    const Pose3D p = random_pose(rng);
    const AlignmentResult res = procrustes_align(p, p);
    REQUIRE_THAT(res.scale, Catch::Matchers::WithinAbs(1.0, 1e-12));
    REQUIRE((res.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-10);
    REQUIRE(res.translation.norm() < 1e-10);
    REQUIRE(res.residual_sq < 1e-18);
}

TEST_CASE("an exact similarity is recovered to floating precision") {
    Rng rng(2);
    Pose3D source = dyadic_pose(rng);
    // 90-degree rotation about z, scale 2, dyadic translation: exact in float
    Pose3D target;
    for (int i = 0; i < kEvalJointCount; ++i) {
        const Vec3f v = source.joints[static_cast<std::size_t>(i)];
        target.joints[static_cast<std::size_t>(i)] = {2.0f * -v.y + 0.125f, 2.0f * v.x, 2.0f * v.z};
    }
    const AlignmentResult res = procrustes_align(source, target);
    REQUIRE_THAT(res.scale, Catch::Matchers::WithinAbs(2.0, 1e-9));
    REQUIRE(std::sqrt(res.residual_sq) < 1e-9);  // meters
}

TEST_CASE("rotation factor is orthogonal with determinant +1") {
    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const AlignmentResult res = procrustes_align(random_pose(rng), random_pose(rng));
        REQUIRE((res.rotation.transpose() * res.rotation - Eigen::Matrix3d::Identity()).norm() < 1e-6);
        REQUIRE_THAT(res.rotation.determinant(), Catch::Matchers::WithinAbs(1.0, 1e-6));
        REQUIRE(res.scale > 0.0);
    }
}

TEST_CASE("closed form beats random similarity probes") {
    Rng rng(4);
    for (int instance = 0; instance < 10; ++instance) {
        const PoseMatrix x = random_pose_matrix(rng);
        const PoseMatrix y = random_pose_matrix(rng);
        const double closed = procrustes_align(x, y).residual_sq;
        for (int probe = 0; probe < 10000; ++probe) {
            const double s = std::exp(rng.next_real(-1.0, 1.0));
            const Eigen::Matrix3d r = random_rotation(rng);
            const Eigen::Vector3d t{rng.next_real(-1.0, 1.0), rng.next_real(-1.0, 1.0), rng.next_real(-1.0, 1.0)};
            const double probe_residual = (apply_similarity(x, s, r, t) - y).squaredNorm();
            REQUIRE(closed <= probe_residual + 1e-12);
        }
    }
}

TEST_CASE("degenerate sources are rejected") {
    Pose3D flat;
    for (auto& j : flat.joints) j = {1.0f, 2.0f, 3.0f};
    const Pose3D target = flat;
    REQUIRE_THROWS_AS(procrustes_align(flat, target), Error);
    Pose3D bad = flat;
    bad.joints[0].x = std::numeric_limits<float>::infinity();
    REQUIRE_THROWS_AS(procrustes_align(bad, target), Error);
}

TEST_CASE("pa_mpjpe vanishes on similarity-transformed ground truth") {
    Rng rng(5);
    REQUIRE(pa_mpjpe(random_pose(rng), random_pose(rng)) >= 0.0);
    const Pose3D gt = random_pose(rng);
    REQUIRE(pa_mpjpe(gt, gt) < 1e-9);  // identical poses, numerically zero

    // double-precision path: generic rotation and scale, < 1e-6 mm
    const PoseMatrix g = random_pose_matrix(rng);
    const Eigen::Matrix3d r30 = Eigen::AngleAxisd(M_PI / 6.0, Eigen::Vector3d(0.3, 0.5, 0.8).normalized())
                                    .toRotationMatrix();
    const PoseMatrix pred = apply_similarity(g, 0.7, r30, {0.1, -0.2, 0.3});
    REQUIRE(pa_mpjpe(pred, g) < 1e-6);
}

TEST_CASE("pa_mpjpe is invariant to similarity transforms of the prediction") {
    Rng rng(6);
    for (int rep = 0; rep < 20; ++rep) {
        const PoseMatrix pred = random_pose_matrix(rng);
        const PoseMatrix gt = random_pose_matrix(rng);
        const double base = pa_mpjpe(pred, gt);
        const double s = std::exp(rng.next_real(-1.0, 1.0));
        const PoseMatrix moved = apply_similarity(pred, s, random_rotation(rng), {0.3, 0.1, -0.7});
        REQUIRE_THAT(pa_mpjpe(moved, gt), Catch::Matchers::WithinAbs(base, 1e-6));

        // rigid transforms of the ground truth leave it unchanged; a scale
        // on the ground truth scales the metric linearly
        const Eigen::Matrix3d r = random_rotation(rng);
        const PoseMatrix gt_rigid = apply_similarity(gt, 1.0, r, {-0.2, 0.4, 0.1});
        REQUIRE_THAT(pa_mpjpe(pred, gt_rigid), Catch::Matchers::WithinAbs(base, 1e-6));
        const PoseMatrix gt_scaled = apply_similarity(gt, 2.5, Eigen::Matrix3d::Identity(), {0, 0, 0});
        REQUIRE_THAT(pa_mpjpe(pred, gt_scaled), Catch::Matchers::WithinRel(2.5 * base, 1e-9));
    }
}

TEST_CASE("pa_mpjpe never exceeds unaligned mpjpe") {
    Rng rng(7);
    for (int rep = 0; rep < 300; ++rep) {
        const Pose3D a = random_pose(rng);
        const Pose3D b = random_pose(rng);
        REQUIRE(pa_mpjpe(a, b) <= mpjpe(a, b) + 1e-9);
    }
}

TEST_CASE("noisy poses match the numerical-minimization oracle") {
    Rng rng(8);
    for (int instance = 0; instance < 3; ++instance) {
        const PoseMatrix gt = random_pose_matrix(rng);
        PoseMatrix pred = gt;
        for (int i = 0; i < kEvalJointCount; ++i)
            for (int c = 0; c < 3; ++c) pred(i, c) += 0.010 * gaussian(rng);  // sigma 10 mm
        const double closed = pa_mpjpe(pred, gt);
        const double oracle = nm_alignment_oracle(pred, gt, 40, rng);
        INFO("closed " << closed << " oracle " << oracle);
        REQUIRE_THAT(closed, Catch::Matchers::WithinAbs(oracle, 1e-3));
    }
}

TEST_CASE("rigid mode fixes the scale at one") {
    Rng rng(9);
    const PoseMatrix gt = random_pose_matrix(rng);
    const PoseMatrix pred = apply_similarity(gt, 2.0, Eigen::Matrix3d::Identity(), {0, 0, 0});
    const AlignmentResult rigid = procrustes_align(pred, gt, false);
    REQUIRE(rigid.scale == 1.0);
    REQUIRE(pa_mpjpe(pred, gt, false) > 1.0);   // scale mismatch hurts in rigid mode
    REQUIRE(pa_mpjpe(pred, gt, true) < 1e-6);   // similarity mode absorbs it
}

namespace {

/// Exact-metric construction: the prediction has two coincident joints; the
/// ground truth moves them apart by +/- d. The optimal alignment is then
/// exactly the identity and the metric is 2|d|/14, in closed form.
std::pair<Pose3D, Pose3D> exact_error_pair(Rng& rng, float d_m) {
    Pose3D pred = random_pose(rng);
    pred.joints[3] = pred.joints[2];  // hips coincide
    Pose3D gt = pred;
    gt.joints[2].x += d_m;
    gt.joints[3].x -= d_m;
    return {pred, gt};
}

}  // namespace

TEST_CASE("dataset evaluation averages per person, unweighted") {
    Rng rng(10);
    // person A: exact 10 mm per frame over 31 frames; person B: exact 20 mm
    // over 62 frames -> dataset mean (10 + 20) / 2 = 15
    PoseSequence pred_a{"alice", {}, {}, {}}, gt_a{"alice", {}, {}, {}};
    for (int f = 0; f < 31; ++f) {
        const auto [p, g] = exact_error_pair(rng, 0.07f);
        pred_a.frame_indices.push_back(f);
        pred_a.poses.push_back(p);
        gt_a.frame_indices.push_back(f);
        gt_a.poses.push_back(g);
        gt_a.visible_counts.push_back(14);
    }
    PoseSequence pred_b{"bob", {}, {}, {}}, gt_b{"bob", {}, {}, {}};
    for (int f = 0; f < 62; ++f) {
        const auto [p, g] = exact_error_pair(rng, 0.14f);
        pred_b.frame_indices.push_back(f);
        pred_b.poses.push_back(p);
        gt_b.frame_indices.push_back(f);
        gt_b.poses.push_back(g);
        gt_b.visible_counts.push_back(14);
    }

    const EvalReport report = evaluate_dataset({pred_a, pred_b}, {gt_a, gt_b});
    REQUIRE(report.per_person.size() == 2);
    REQUIRE_THAT(report.per_person[0].mean_mm, Catch::Matchers::WithinAbs(10.0, 1e-4));
    REQUIRE_THAT(report.per_person[1].mean_mm, Catch::Matchers::WithinAbs(20.0, 1e-4));
    REQUIRE_THAT(report.dataset_mean, Catch::Matchers::WithinAbs(15.0, 1e-4));
    // the dataset mean is exactly the unweighted mean of the person means
    REQUIRE(report.dataset_mean == (report.per_person[0].mean_mm + report.per_person[1].mean_mm) / 2.0);
}

TEST_CASE("frames with fewer than 7 visible keypoints are skipped") {
    Rng rng(11);
    PoseSequence pred{"p", {}, {}, {}}, gt{"p", {}, {}, {}};
    for (int f = 0; f < 5; ++f) {
        const Pose3D pose = random_pose(rng);
        pred.frame_indices.push_back(f);
        pred.poses.push_back(pose);
        gt.frame_indices.push_back(f);
        gt.poses.push_back(pose);
        gt.visible_counts.push_back(f == 2 ? 6 : 7);
    }
    const EvalReport report = evaluate_dataset({pred}, {gt});
    REQUIRE(report.per_person[0].frames_used == 4);
    REQUIRE(report.per_person[0].frames_skipped == 1);
    REQUIRE(report.per_person[0].frames_used + report.per_person[0].frames_skipped == 5);
    REQUIRE(report.warnings.empty());
}

TEST_CASE("persons with no usable frames are excluded with a warning") {
    Rng rng(12);
    const Pose3D pose = random_pose(rng);
    PoseSequence pred{"ghost", {0}, {pose}, {}}, gt{"ghost", {0}, {pose}, {3}};
    PoseSequence pred2{"ok", {0}, {pose}, {}}, gt2{"ok", {0}, {pose}, {14}};
    const EvalReport report = evaluate_dataset({pred, pred2}, {gt, gt2});
    REQUIRE(report.warnings.size() == 1);
    REQUIRE_THAT(report.warnings[0], Catch::Matchers::ContainsSubstring("ghost"));
    REQUIRE(report.dataset_mean < 1e-9);  // only "ok" contributes, with zero error
    REQUIRE(report.per_person.size() == 2);
}

TEST_CASE("evaluate_dataset validates alignment of inputs") {
    Rng rng(13);
    const Pose3D pose = random_pose(rng);
    PoseSequence a{"a", {0}, {pose}, {}}, ga{"b", {0}, {pose}, {14}};
    REQUIRE_THROWS_AS(evaluate_dataset({a}, {ga}), Error);
    PoseSequence short_gt{"a", {0}, {}, {}};
    REQUIRE_THROWS_AS(evaluate_dataset({a}, {short_gt}), Error);
    REQUIRE_THROWS_AS(evaluate_dataset({a}, {}), Error);
}

TEST_CASE("pose records parse, sort, and round-trip") {
    testsup::TempDir tmp("simpose_records");
    const std::string gt_path = tmp.path + "/gt.txt";
    {
        std::ofstream out(gt_path);
        out << "walker 1";
        for (int i = 0; i < 42; ++i) out << " " << (0.1 * i);
        out << " 9\n";
        out << "walker 0";
        for (int i = 0; i < 42; ++i) out << " " << (0.2 * i);
        out << " 14\n";
    }
    const auto seqs = read_pose_records(gt_path, true);
    REQUIRE(seqs.size() == 1);
    REQUIRE(seqs[0].person_id == "walker");
    REQUIRE(seqs[0].frame_indices == std::vector<int>{0, 1});  // sorted
    REQUIRE(seqs[0].visible_counts == std::vector<int>{14, 9});
    REQUIRE_THAT(seqs[0].poses[0].joints[1].x, Catch::Matchers::WithinAbs(0.6, 1e-6));

    std::ofstream(tmp.path + "/bad.txt") << "p 0 1 2 3\n";
    REQUIRE_THROWS_WITH(read_pose_records(tmp.path + "/bad.txt", false),
                        Catch::Matchers::ContainsSubstring("42 reals"));
    std::ofstream(tmp.path + "/novis.txt") << "p 0" << [] {
        std::string s;
        for (int i = 0; i < 42; ++i) s += " 0.5";
        return s;
    }() << "\n";
    REQUIRE_THROWS_WITH(read_pose_records(tmp.path + "/novis.txt", true),
                        Catch::Matchers::ContainsSubstring("visible count"));
}

TEST_CASE("report serialization carries the bookkeeping") {
    EvalReport report;
    report.per_person.push_back({"a", 12.5, 10, 2});
    report.dataset_mean = 12.5;
    report.warnings.push_back("person b has no usable frames; excluded");
    const auto j = report_to_json(report);
    REQUIRE(j.at("dataset_mean_mm").get<double>() == 12.5);
    REQUIRE(j.at("per_person")[0].at("frames_skipped").get<int>() == 2);
    const std::string table = report_table(report);
    REQUIRE_THAT(table, Catch::Matchers::ContainsSubstring("12.50"));
    REQUIRE_THAT(table, Catch::Matchers::ContainsSubstring("dataset"));
}
