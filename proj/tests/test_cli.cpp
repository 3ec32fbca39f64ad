#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "simpose/clips.hpp"
#include "simpose/flo_io.hpp"
#include "simpose/pipeline.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace simpose;

namespace {

struct RunResult {
    int exit_code = 0;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args, const std::string& workdir) {
    const std::string out_path = workdir + "/stdout.txt";
    const std::string err_path = workdir + "/stderr.txt";
    const std::string cmd = std::string(SIMPOSE_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ostringstream so, se;
    so << std::ifstream(out_path).rdbuf();
    se << std::ifstream(err_path).rdbuf();
    r.out = so.str();
    r.err = se.str();
    return r;
}

struct CliFixture {
    testsup::TempDir root{"simpose_cli_fx"};
    std::string manifest_path;

    CliFixture() {
        save_person_clip(testsup::make_person(128, 96, 6, 1.0f), root.path + "/person");
        save_background_clip(testsup::make_background(160, 120, 6, 77, 1, 0), root.path + "/bg");
        manifest_path = root.path + "/manifests.jsonl";
        std::ofstream out(manifest_path);
        for (int i = 0; i < 3; ++i) {
            ClipManifest m;
            m.person_path = root.path + "/person";
            m.background_path = root.path + "/bg";
            m.clip_index = static_cast<std::uint64_t>(i);
            m.clip_length = 4;
            m.master_seed = 11;
            out << m.to_json().dump() << "\n";
        }
    }

    std::string config_path() {
        const std::string path = root.path + "/config.json";
        PipelineConfig cfg;
        cfg.master_seed = 11;
        cfg.clip_length = 4;
        cfg.crop_size = 64;
        std::ofstream(path) << cfg.to_json().dump(2) << "\n";
        return path;
    }
};

}  // namespace

TEST_CASE("compose builds one directory per manifest and exits zero") {
    CliFixture fx;
    const std::string out_dir = fx.root.path + "/out";
    const RunResult r = run_cli("compose " + fx.manifest_path + " --config " + fx.config_path() + " --out " +
                                    out_dir + " --jobs 2",
                                fx.root.path);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    for (int i = 0; i < 3; ++i) {
        const std::string dir = out_dir + "/" + pipeline::clip_directory_name(static_cast<std::uint64_t>(i));
        REQUIRE(fs::exists(dir + "/clip.jsonl"));
        REQUIRE(fs::exists(dir + "/config.json"));
        REQUIRE(fs::exists(dir + "/frame_0000.ppm"));
        REQUIRE(fs::exists(dir + "/flow_0000.flo"));
    }
    REQUIRE_FALSE(fs::exists(out_dir + "/failures.txt"));

    SECTION("a rerun reproduces the tree byte for byte") {
        const std::string out2 = fx.root.path + "/out2";
        const RunResult r2 = run_cli("compose " + fx.manifest_path + " --config " + fx.config_path() +
                                         " --out " + out2 + " --jobs 1",
                                     fx.root.path);
        REQUIRE(r2.exit_code == 0);
        REQUIRE(testsup::tree_checksum(out_dir) == testsup::tree_checksum(out2));
    }
}

TEST_CASE("a broken manifest is reported and fails the run") {
    CliFixture fx;
    {
        std::ofstream out(fx.manifest_path, std::ios::app);
        nlohmann::json j = {{"person_path", fx.root.path + "/nowhere"},
                            {"background_path", fx.root.path + "/bg"},
                            {"clip_index", 9},
                            {"clip_length", 4}};
        out << j.dump() << "\n";
    }
    const std::string out_dir = fx.root.path + "/out";
    const RunResult r = run_cli("compose " + fx.manifest_path + " --config " + fx.config_path() + " --out " +
                                    out_dir,
                                fx.root.path);
    REQUIRE(r.exit_code != 0);
    REQUIRE(fs::exists(out_dir + "/failures.txt"));
    std::ostringstream fails;
    fails << std::ifstream(out_dir + "/failures.txt").rdbuf();
    REQUIRE_THAT(fails.str(), Catch::Matchers::ContainsSubstring("clip_000009"));
    // the healthy manifests still produced clips
    REQUIRE(fs::exists(out_dir + "/clip_000000/clip.jsonl"));
    REQUIRE(fs::exists(out_dir + "/clip_000002/clip.jsonl"));
}

TEST_CASE("flow writes one field per consecutive pair") {
    CliFixture fx;
    const std::string frames_dir = fx.root.path + "/bg";
    const std::string out_dir = fx.root.path + "/flow_out";
    const RunResult r = run_cli("flow " + frames_dir + " --out " + out_dir, fx.root.path);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    int count = 0;
    for (const auto& e : fs::directory_iterator(out_dir))
        if (e.path().extension() == ".flo") ++count;
    REQUIRE(count == 5);  // 6 frames -> 5 pairs
    const auto field = flow::read_flo(out_dir + "/flow_0000.flo");
    REQUIRE(field.width == 160);
    REQUIRE(field.height == 120);

    SECTION("rerunning produces identical files") {
        const std::uint64_t before = testsup::tree_checksum(out_dir);
        const RunResult r2 = run_cli("flow " + frames_dir + " --out " + out_dir, fx.root.path);
        REQUIRE(r2.exit_code == 0);
        REQUIRE(testsup::tree_checksum(out_dir) == before);
    }
}

TEST_CASE("flow needs at least two frames") {
    testsup::TempDir tmp("simpose_cli_oneframe");
    save_background_clip(testsup::make_background(32, 24, 1, 5), tmp.path + "/one");
    fs::remove(tmp.path + "/one/meta.json");
    const RunResult r = run_cli("flow " + tmp.path + "/one --out " + tmp.path + "/out", tmp.path);
    REQUIRE(r.exit_code != 0);
    REQUIRE_THAT(r.err, Catch::Matchers::ContainsSubstring(">= 2 frames"));
}

namespace {

void write_pose_line(std::ofstream& out, const std::string& id, int frame, float base, int vis = -1) {
    out << id << " " << frame;
    for (int i = 0; i < 42; ++i) out << " " << base + 0.01f * static_cast<float>(i);
    if (vis >= 0) out << " " << vis;
    out << "\n";
}

}  // namespace

TEST_CASE("eval prints the dataset mean with one decimal") {
    testsup::TempDir tmp("simpose_cli_eval");
    {
        std::ofstream pred(tmp.path + "/pred.txt"), gt(tmp.path + "/gt.txt");
        for (int f = 0; f < 3; ++f) {
            write_pose_line(pred, "a", f, 0.3f);
            write_pose_line(gt, "a", f, 0.3f, 14);
        }
        // one frame below the visibility threshold
        write_pose_line(pred, "a", 3, 0.9f);
        write_pose_line(gt, "a", 3, 0.3f, 6);
    }
    const RunResult r =
        run_cli("eval " + tmp.path + "/pred.txt " + tmp.path + "/gt.txt --out " + tmp.path, tmp.path);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.out == "PA-MPJPE: 0.0\n");
    std::ifstream report(tmp.path + "/report.json");
    nlohmann::json j;
    report >> j;
    REQUIRE(j.at("per_person")[0].at("frames_skipped").get<int>() == 1);
    REQUIRE(j.at("per_person")[0].at("frames_used").get<int>() == 3);
    REQUIRE(fs::exists(tmp.path + "/report.txt"));
}

TEST_CASE("eval rejects mismatched person ids, listing both sides") {
    testsup::TempDir tmp("simpose_cli_eval_bad");
    {
        std::ofstream pred(tmp.path + "/pred.txt"), gt(tmp.path + "/gt.txt");
        write_pose_line(pred, "alice", 0, 0.2f);
        write_pose_line(gt, "bob", 0, 0.2f, 14);
    }
    const RunResult r =
        run_cli("eval " + tmp.path + "/pred.txt " + tmp.path + "/gt.txt --out " + tmp.path, tmp.path);
    REQUIRE(r.exit_code != 0);
    REQUIRE_THAT(r.err, Catch::Matchers::ContainsSubstring("alice"));
    REQUIRE_THAT(r.err, Catch::Matchers::ContainsSubstring("bob"));
}

TEST_CASE("inspect aggregates sidecar statistics") {
    CliFixture fx;
    const std::string out_dir = fx.root.path + "/out";
    REQUIRE(run_cli("compose " + fx.manifest_path + " --config " + fx.config_path() + " --out " + out_dir,
                    fx.root.path)
                .exit_code == 0);
    const RunResult r = run_cli("inspect " + out_dir, fx.root.path);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    REQUIRE_THAT(r.out, Catch::Matchers::ContainsSubstring("clips: 3"));
    REQUIRE_THAT(r.out, Catch::Matchers::ContainsSubstring("occluder acceptance rate:"));
    REQUIRE_THAT(r.out, Catch::Matchers::ContainsSubstring("total-occlusion clip rate:"));
    REQUIRE_THAT(r.out, Catch::Matchers::ContainsSubstring("keypoint visible rate:"));
}

TEST_CASE("ablation flags are accepted on the command line") {
    CliFixture fx;
    const std::string out_dir = fx.root.path + "/out_ablate";
    const RunResult r = run_cli("compose " + fx.manifest_path + " --config " + fx.config_path() + " --out " +
                                    out_dir + " --ablation no_occluders --ablation no_total_occlusions",
                                fx.root.path);
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const auto side = pipeline::read_clip_sidecar(out_dir + "/clip_000000");
    REQUIRE(side.meta.at("occluder_accepted").get<bool>() == false);
    REQUIRE(side.meta.at("occluder_label").get<int>() == -1);

    const RunResult bad = run_cli("compose " + fx.manifest_path + " --ablation bogus --out " + out_dir,
                                  fx.root.path);
    REQUIRE(bad.exit_code != 0);
}
