#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace pcs;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Run pcs_cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = "cd '" + dir.string() + "' && '" PCS_CLI_PATH "' " + args + " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "stdout.txt"), slurp(dir / "stderr.txt")};
}

std::size_t line_count(const fs::path& p) {
    const auto s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

/// Fixture files: a sphere cloud, the cube mesh and an untrained small network.
fs::path workspace(const std::string& name) {
    const auto dir = pcs_test::temp_dir("cli_" + name);
    Rng rng(1);
    write_cloud(PointCloud(pcs_test::sphere_points(2000, rng)), dir / "sphere.xyz");
    write_mesh(pcs_test::cube_mesh(), dir / "cube.obj");
    PcsNetConfig c;
    c.extractor.width = 8;
    c.m = 16;
    c.patch_size = 64;
    c.offset_widths = {16, 16, 8, 3};
    save_checkpoint(to_checkpoint(init_pcs_net(c, rng)), dir / "net.ckpt");
    return dir;
}

nlohmann::json error_line(const Run& r) {
    const auto j = nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
    return j.at("error");
}

} // namespace

TEST(Cli, GradcheckPasses) {
    const auto dir = pcs_test::temp_dir("cli_grad");
    const auto r = pcs_cli("gradcheck", dir);
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("loss L_rep"), std::string::npos);
}

TEST(Cli, MetricsOnIdenticalClouds) {
    const auto dir = workspace("metrics");
    const auto r = pcs_cli("metrics --gt-cloud sphere.xyz --points sphere.xyz --out report.json", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(j["d_c"], 0.0);
    EXPECT_EQ(j["d_h"], 0.0);
    EXPECT_FALSE(j.contains("g_mean"));
    const auto mesh = pcs_cli("metrics --gt-mesh cube.obj --points sphere.xyz --recon-mesh cube.obj --w 500 --out m.json", dir);
    ASSERT_EQ(mesh.code, 0) << mesh.err;
    const auto k = nlohmann::json::parse(slurp(dir / "m.json"));
    EXPECT_TRUE(k.contains("p2f"));
    EXPECT_NEAR(k["g_mean"].get<double>(), std::sqrt(3.0) / (1 + std::sqrt(2.0)), 1e-9);
}

TEST(Cli, SimplifyWritesExactlyTargetLines) {
    const auto dir = workspace("simplify");
    const auto r = pcs_cli("simplify --in sphere.xyz --out out.xyz --ckpt net.ckpt --target 512 --seed 4", dir);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(line_count(dir / "out.xyz"), 512u);
}

TEST(Cli, DeterministicGivenSeed) {
    const auto dir = workspace("determinism");
    for (const std::string args : {"simplify --in sphere.xyz --ckpt net.ckpt --target 100 --seed 9",
                                   "baseline --in sphere.xyz --method random --target 100 --seed 9",
                                   "noise --in sphere.xyz --amplitude-pct 2 --seed 9",
                                   "sample-mesh --in cube.obj --count 300 --seed 9"}) {
        ASSERT_EQ(pcs_cli(args + " --out a.xyz", dir).code, 0) << args;
        ASSERT_EQ(pcs_cli(args + " --out b.xyz --threads 3", dir).code, 0) << args;
        EXPECT_EQ(slurp(dir / "a.xyz"), slurp(dir / "b.xyz")) << args;
    }
}

TEST(Cli, PatchTrainSimplifyChain) {
    const auto dir = workspace("chain");
    ASSERT_EQ(pcs_cli("saliency --in sphere.xyz --out sal.xyz --k 16 --h 0.05 --smooth", dir).code, 0);
    EXPECT_EQ(line_count(dir / "sal.xyz"), 2000u);
    const auto patch = pcs_cli("patch --in sal.xyz --out-dir patches --patches 4 --mode adaptive --n 64 --seed 2", dir);
    ASSERT_EQ(patch.code, 0) << patch.err;
    EXPECT_TRUE(fs::exists(dir / "patches" / "manifest.json"));
    std::ofstream(dir / "train.json") << R"({"epochs": 3, "loss_mode": "saliency",
        "network": {"extractor": {"width": 8, "neighbors": 8, "blocks": 1}, "m": 8, "offset_widths": [8, 8, 8, 3]}})";
    const auto train = pcs_cli("train --patch-dir patches --config train.json --out trained.ckpt", dir);
    ASSERT_EQ(train.code, 0) << train.err;
    EXPECT_EQ(slurp(dir / "trained.csv").substr(0, 30), "epoch,L_r,L_sp_or_s,L_rep,L,t\n");
    EXPECT_EQ(line_count(dir / "trained.csv"), 4u);
    const auto simp = pcs_cli("simplify --in sal.xyz --out s.xyz --ckpt trained.ckpt --target 77 --mode adaptive", dir);
    ASSERT_EQ(simp.code, 0) << simp.err;
    EXPECT_EQ(line_count(dir / "s.xyz"), 77u);
}

TEST(Cli, UsageErrorsExitOne) {
    const auto dir = workspace("usage");
    const auto r = pcs_cli("noise --in sphere.xyz --out x.xyz --amplitude-pct 1 --no-such-flag", dir);
    EXPECT_EQ(r.code, 1);
    const auto e = error_line(r);
    EXPECT_EQ(e["kind"], "usage");
    EXPECT_NE(e["message"].get<std::string>().find("--no-such-flag"), std::string::npos);
    EXPECT_EQ(pcs_cli("", dir).code, 1);
    EXPECT_EQ(pcs_cli("frobnicate", dir).code, 1);
    EXPECT_EQ(error_line(pcs_cli("simplify --in sphere.xyz --out x.xyz --ckpt net.ckpt --target 5 --mode fast", dir))["code"],
              "bad-mode");
    EXPECT_EQ(pcs_cli("metrics --gt-mesh cube.obj --gt-cloud sphere.xyz --points sphere.xyz", dir).code, 1);
}

TEST(Cli, DataErrorsExitTwo) {
    const auto dir = workspace("data");
    std::ofstream(dir / "bad.xyz") << "0 0 0\n1 1\n";
    const auto r = pcs_cli("noise --in bad.xyz --out x.xyz --amplitude-pct 1", dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(error_line(r)["code"], "ragged-columns");
    EXPECT_EQ(pcs_cli("noise --in missing.xyz --out x.xyz --amplitude-pct 1", dir).code, 2);
    EXPECT_EQ(pcs_cli("simplify --in sphere.xyz --out x.xyz --ckpt sphere.xyz --target 5", dir).code, 2);
}

TEST(Cli, NumericalFailureExitsThree) {
    const auto dir = workspace("numerical");
    ASSERT_EQ(pcs_cli("patch --in sphere.xyz --out-dir patches --patches 2 --n 32 --seed 1", dir).code, 0);
    std::ofstream(dir / "hot.json") << R"({"epochs": 2, "learning_rate": 1e300,
        "network": {"extractor": {"width": 8, "neighbors": 8, "blocks": 1}, "m": 8}})";
    const auto r = pcs_cli("train --patch-dir patches --config hot.json --out x.ckpt", dir);
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(error_line(r)["kind"], "numerical");
}

TEST(Cli, HelpDocumentsEveryFlag) {
    const auto dir = pcs_test::temp_dir("cli_help");
    const auto top = pcs_cli("--help", dir);
    EXPECT_EQ(top.code, 0);
    const std::vector<std::pair<std::string, std::vector<std::string>>> flags{
        {"sample-mesh", {"--in", "--out", "--count", "--seed"}},
        {"saliency", {"--in", "--out", "--k", "--h", "--smooth"}},
        {"patch", {"--in", "--out-dir", "--patches", "--mode", "--n", "--seed", "--clean"}},
        {"train", {"--patch-dir", "--config", "--out", "--log", "--resume", "--checkpoint-every"}},
        {"train-saliency", {"--data-dir", "--config", "--out", "--log"}},
        {"simplify", {"--in", "--out", "--ckpt", "--target", "--mode", "--seed", "--saliency-ckpt", "--temperature"}},
        {"baseline", {"--in", "--out", "--method", "--target", "--seed"}},
        {"noise", {"--in", "--out", "--amplitude-pct", "--seed"}},
        {"metrics", {"--gt-mesh", "--gt-cloud", "--points", "--recon-mesh", "--w", "--out"}},
        {"gradcheck", {"--full"}},
    };
    for (const auto& [sub, names] : flags) {
        EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
        const auto r = pcs_cli(sub + " --help", dir);
        EXPECT_EQ(r.code, 0) << sub;
        for (const auto& f : names) EXPECT_NE(r.out.find(f + " "), std::string::npos) << sub << " " << f;
        EXPECT_NE(r.out.find("--threads"), std::string::npos) << sub;
    }
}
