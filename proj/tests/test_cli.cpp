#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "cli_support.hpp"
#include "sirenflow/io.hpp"
#include "sirenflow/siren.hpp"

using namespace sirenflow;
using clitest::run;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("sirenflow_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string out_dir() const { return dir_.string(); }

    // A small pulsatile tube phantom with even dims so it can be degraded.
    void make_phantom(const std::string& dims = "12,12,12,8") {
        const auto o = run({"--out-dir", out_dir(), "phantom", "--radius", "5", "--vmax", "0.5", "--amplitude",
                            "0.2", "--period", "0.4", "--dims", dims, "--dt", "0.05", "--wall-around", "16",
                            "--wall-along", "4"});
        ASSERT_EQ(o.code, 0) << o.err;
    }

    fs::path dir_;
};

TEST_F(CliTest, PhantomCenterlineAndWall) {
    const auto o = run({"--out-dir", out_dir(), "phantom", "--vmax", "1", "--radius", "10", "--dims", "21,21,3,2"});
    ASSERT_EQ(o.code, 0) << o.err;
    const auto img = io::read_vf1(path("phantom.vf1"));
    EXPECT_NEAR(img.at(10, 10, 1, 0).norm(), 1.0, 1e-12);
    EXPECT_EQ(img.at(0, 0, 1, 0).norm(), 0.0);
    EXPECT_FALSE(img.fluid(0, 0, 1, 0));
    const auto wall = io::read_wall_csv(path("wall.csv"));
    EXPECT_EQ(wall.size(), 64u * 3u);
    for (const auto& p : wall.points()) EXPECT_NEAR(std::hypot(p[0], p[1]), 10.0, 1e-9);
    EXPECT_TRUE(fs::exists(path("truth.json")));
    EXPECT_TRUE(fs::exists(path("phantom.manifest.json")));
}

TEST_F(CliTest, ZeroAmplitudeGivesZeroField) {
    const auto o = run({"--out-dir", out_dir(), "phantom", "--vmax", "0", "--dims", "6,6,4,3"});
    ASSERT_EQ(o.code, 0) << o.err;
    const auto img = io::read_vf1(path("phantom.vf1"));
    for (double v : img.data()) EXPECT_EQ(v, 0.0);
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run({"--out-dir", out_dir(), "phantom", "--bogus"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"--out-dir", out_dir(), "phantom", "--radius", "-1"}).code, cli::kExitConfig);
    EXPECT_EQ(run({"--out-dir", out_dir(), "degrade", "--in", path("missing.vf1")}).code, cli::kExitIo);
    EXPECT_EQ(run({}).code, cli::kExitConfig);
    EXPECT_EQ(run({"--help"}).code, cli::kExitOk);

    io::write_text(path("bad.json"), "{\"depth\": \"four\"}");
    make_phantom();
    const auto o = run({"--out-dir", out_dir(), "fit", "--in", path("phantom.vf1"), "--wall", path("wall.csv"), "--cfg",
                        path("bad.json")});
    EXPECT_EQ(o.code, cli::kExitConfig);
    EXPECT_NE(o.err.find("depth"), std::string::npos) << o.err;

    // Odd spatial dims cannot be truncated in k-space.
    ASSERT_EQ(run({"--out-dir", path("odd"), "phantom", "--dims", "5,6,6,2"}).code, 0);
    EXPECT_EQ(run({"--out-dir", out_dir(), "degrade", "--in", path("odd/phantom.vf1")}).code, cli::kExitConfig);
}

TEST_F(CliTest, MetricsOfIdenticalFilesIsZero) {
    make_phantom();
    ASSERT_EQ(run({"--out-dir", out_dir(), "query", "--model", path("truth.json"), "--spatial", "1", "--temporal",
                   "1"})
                  .code,
              0);
    const auto o = run({"--out-dir", out_dir(), "metrics", "--ref", path("predictions.csv"), "--cand",
                        path("predictions.csv")});
    ASSERT_EQ(o.code, 0) << o.err;
    const auto m = io::read_json(path("metrics.json"));
    EXPECT_EQ(m.at("mnrmse").get<double>(), 0.0);
    EXPECT_EQ(m.at("vnrmse").get<double>(), 0.0);
    EXPECT_EQ(m.at("de").get<double>(), 0.0);
}

TEST_F(CliTest, QueryAtTrainingResolutionReproducesModel) {
    make_phantom();
    ASSERT_EQ(run({"--out-dir", out_dir(), "fit", "--in", path("phantom.vf1"), "--wall", path("wall.csv"),
                   "--depth", "2", "--width", "8", "--max-iterations", "5"})
                  .code,
              0);
    ASSERT_EQ(run({"--out-dir", out_dir(), "query", "--model", path("model.sm1"), "--spatial", "1", "--temporal",
                   "1"})
                  .code,
              0);
    std::vector<Point4> pts;
    const auto v = io::read_prediction_csv(path("predictions.csv"), &pts);
    const auto img = io::read_vf1(path("phantom.vf1"));
    ASSERT_EQ(pts.size(), img.dims().voxels());
    const SirenSampler model(io::read_sm1(path("model.sm1")));
    const auto& g = img.geometry();
    std::size_t k = 0;
    for (std::size_t r = 0; r < g.dims.nr; ++r)
        for (std::size_t c = 0; c < g.dims.nc; ++c)
            for (std::size_t s = 0; s < g.dims.ns; ++s)
                for (std::size_t t = 0; t < g.dims.nt; ++t, ++k) {
                    ASSERT_NEAR((pts[k].x - g.position(r, c, s)).norm(), 0.0, 1e-12);
                    ASSERT_NEAR(pts[k].t, g.time(t), 1e-15);
                    EXPECT_NEAR((v[k] - model.at(pts[k].x, pts[k].t)).norm(), 0.0, 1e-12);
                }
}

TEST_F(CliTest, FluidFractionSubsamplesTrainingVoxels) {
    make_phantom();
    const auto fit = [&](const std::string& fraction, const std::string& out) {
        return run({"--out-dir", out_dir(), "fit", "--in", path("phantom.vf1"), "--wall", path("wall.csv"), "--depth",
                    "2", "--width", "8", "--max-iterations", "3", "--fluid-fraction", fraction, "--out", out})
            .code;
    };
    ASSERT_EQ(fit("1", "full.sm1"), 0);
    ASSERT_EQ(fit("0.5", "half.sm1"), 0);
    EXPECT_NE(clitest::bytes(path("full.sm1")), clitest::bytes(path("half.sm1")));
    EXPECT_EQ(io::read_json(path("fit.manifest.json")).at("config").at("fluid_fraction"), 0.5);
    EXPECT_EQ(fit("0", "none.sm1"), cli::kExitConfig);
    EXPECT_EQ(fit("1.5", "over.sm1"), cli::kExitConfig);
}

TEST_F(CliTest, QueryCountsOversampledGrid) {
    make_phantom("4,4,4,3");
    ASSERT_EQ(run({"--out-dir", out_dir(), "query", "--model", path("phantom.vf1"), "--spatial", "3", "--temporal",
                   "2"})
                  .code,
              0);
    const auto m = io::read_json(path("query.manifest.json"));
    EXPECT_EQ(m.at("summary").at("points").get<std::size_t>(), 10u * 10u * 10u * 5u);
}

TEST_F(CliTest, AnalyticWssOnCircularTube) {
    make_phantom();
    const auto o = run({"--out-dir", out_dir(), "wss", "--model", path("truth.json"), "--wall", path("wall.csv"),
                        "--times", "0:0.1:0.3"});
    ASSERT_EQ(o.code, 0) << o.err;
    static const std::string cols[] = {"x", "y", "z", "t", "wss_x", "wss_y", "wss_z", "|wss|", "flag"};
    const auto rows = io::read_csv(path("wss.csv"), cols);
    ASSERT_EQ(rows.size(), 64u * 4u);
    for (const auto& r : rows) {
        const double v = 0.5 + 0.2 * std::sin(2 * M_PI * r[3] / 0.4);
        EXPECT_NEAR(r[7], 2 * 0.004 * v / 5e-3, 1e-9 * r[7]);
        EXPECT_EQ(r[8], 0.0);
    }
}

TEST_F(CliTest, BaselineLitpAtVoxelCentres) {
    make_phantom();
    ASSERT_EQ(run({"--out-dir", out_dir(), "baseline", "--method", "litp", "--in", path("phantom.vf1"),
                   "--spatial", "1", "--temporal", "1"})
                  .code,
              0);
    const auto v = io::read_prediction_csv(path("baseline.csv"));
    const auto img = io::read_vf1(path("phantom.vf1"));
    ASSERT_EQ(v.size() * 3, img.data().size());
    for (std::size_t i = 0; i < v.size(); ++i)
        for (int a = 0; a < 3; ++a) EXPECT_NEAR(v[i][a], img.data()[3 * i + a], 1e-12);
}

TEST_F(CliTest, SweepOneByOneIsSingleRow) {
    make_phantom();
    const auto o = run({"--out-dir", out_dir(), "sweep", "--clean", path("phantom.vf1"), "--wall", path("wall.csv"),
                        "--truth", path("truth.json"), "--depths", "2", "--widths", "8", "--levels", "mild",
                        "--max-iterations", "3"});
    ASSERT_EQ(o.code, 0) << o.err;
    const std::string csv = clitest::bytes(path("results.csv"));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
    EXPECT_EQ(csv.rfind("depth,width,noise,mnrmse,vnrmse,de,iterations,status\n2,8,mild,", 0), 0u) << csv;
    const auto sel = io::read_json(path("selection.json"));
    EXPECT_EQ(sel.at("depth"), 2);
    EXPECT_EQ(sel.at("width"), 8);
    EXPECT_TRUE(fs::exists(path("sweep_timings.csv")));
}

TEST_F(CliTest, SweepRecordsFailuresAndContinues) {
    make_phantom();
    // Depth 0 is invalid: that run fails, the other completes and is selected.
    const auto o = run({"--out-dir", out_dir(), "sweep", "--clean", path("phantom.vf1"), "--wall", path("wall.csv"), "--depths", "0,2",
                        "--widths", "8", "--levels", "mild", "--max-iterations", "2"});
    ASSERT_EQ(o.code, 0) << o.err;
    const std::string csv = clitest::bytes(path("results.csv"));
    EXPECT_NE(csv.find("0,8,mild,nan,nan,nan,0,InvalidArgument"), std::string::npos) << csv;
    EXPECT_EQ(io::read_json(path("selection.json")).at("depth"), 2);
}

// phantom -> degrade(medium) -> fit(depth 20, width 300) -> metrics, every
// step leaving its manifest.
TEST_F(CliTest, PipelineSmoke) {
    make_phantom();
    const std::string d = out_dir();
    ASSERT_EQ(run({"--out-dir", d, "degrade", "--in", path("phantom.vf1"), "--level", "medium"}).code, 0);
    const auto f = run({"--out-dir", d, "fit", "--in", path("degraded.vf1"), "--wall", path("wall.csv"),
                        "--depth", "20", "--width", "300", "--max-iterations", "2"});
    ASSERT_EQ(f.code, 0) << f.err;
    const auto m = run({"--out-dir", d, "metrics", "--ref", path("truth.json"), "--cand", path("model.sm1"),
                        "--coords", path("coords.csv")});
    EXPECT_EQ(m.code, cli::kExitIo); // no coords file yet
    const auto img = io::read_vf1(path("degraded.vf1"));
    std::vector<Point4> pts;
    for (std::size_t t = 0; t < img.dims().nt; ++t) pts.push_back({img.geometry().position(2, 3, 1), img.geometry().time(t)});
    io::write_coords_csv(path("coords.csv"), pts);
    ASSERT_EQ(run({"--out-dir", d, "metrics", "--ref", path("truth.json"), "--cand", path("model.sm1"), "--coords",
                   path("coords.csv")})
                  .code,
              0);
    for (const char* name : {"phantom", "degrade", "fit", "metrics"}) {
        const auto man = io::read_json(path(std::string(name) + ".manifest.json"));
        EXPECT_EQ(man.at("format"), "MANIFEST");
        EXPECT_EQ(man.at("subcommand"), name);
        EXPECT_TRUE(man.contains("timings"));
        EXPECT_TRUE(man.contains("code_version"));
    }
    EXPECT_EQ(io::read_json(path("fit.manifest.json")).at("config").at("fit").at("depth"), 20);
}

TEST_F(CliTest, ReplayReproducesEverySubcommand) {
    const std::string d = out_dir();
    make_phantom();
    ASSERT_EQ(run({"--seed", "11", "--out-dir", d, "degrade", "--in", path("phantom.vf1"), "--level", "mild"}).code, 0);
    ASSERT_EQ(run({"--seed", "5", "--out-dir", d, "fit", "--in", path("degraded.vf1"), "--wall", path("wall.csv"),
                   "--depth", "2", "--width", "8", "--max-iterations", "4"})
                  .code,
              0);
    ASSERT_EQ(run({"--out-dir", d, "query", "--model", path("model.sm1"), "--spatial", "2", "--temporal", "2"}).code,
              0);
    ASSERT_EQ(run({"--out-dir", d, "metrics", "--ref", path("truth.json"), "--cand", path("model.sm1"), "--coords",
                   path("wall.csv")})
                  .code,
              cli::kExitIo); // wall.csv lacks a t column
    ASSERT_EQ(run({"--out-dir", d, "metrics", "--ref", path("phantom.vf1"), "--cand", path("model.sm1")}).code, 0);
    ASSERT_EQ(run({"--out-dir", d, "wss", "--model", path("model.sm1"), "--wall", path("wall.csv")}).code, 0);
    ASSERT_EQ(run({"--out-dir", d, "baseline", "--method", "rbf4d", "--in", path("degraded.vf1"), "--wall",
                   path("wall.csv"), "--spatial", "1", "--temporal", "2"})
                  .code,
              0);
    ASSERT_EQ(run({"--seed", "3", "--out-dir", d, "sweep", "--clean", path("phantom.vf1"), "--wall", path("wall.csv"), "--depths", "2",
                   "--widths", "4,8", "--levels", "mild,extreme", "--max-iterations", "3"})
                  .code,
              0);
    for (const char* name : {"phantom", "degrade", "fit", "query", "metrics", "wss", "baseline", "sweep"}) {
        const auto diffs =
            clitest::replay_differences(path(std::string(name) + ".manifest.json"), dir_ / "replay" / name);
        EXPECT_TRUE(diffs.empty()) << name << ": " << diffs.front();
    }
}

TEST_F(CliTest, ReplayResolvesInputsAgainstOriginalDirectory) {
    make_phantom();
    const auto o = run({"--input-base", out_dir(), "--out-dir", "rel", "query", "--model", "phantom.vf1",
                        "--spatial", "1", "--temporal", "1"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_TRUE(fs::exists(path("rel/predictions.csv")));
    EXPECT_TRUE(clitest::replay_differences(path("rel/query.manifest.json"), dir_ / "again").empty());
}

} // namespace

namespace {

TEST_F(CliTest, OutputsIndependentOfThreadCount) {
    make_phantom();
    for (const char* threads : {"1", "3"}) {
        const std::string d = path(std::string("t") + threads);
        ASSERT_EQ(run({"--threads", threads, "--seed", "9", "--out-dir", d, "degrade", "--in", path("phantom.vf1")})
                      .code,
                  0);
        ASSERT_EQ(run({"--threads", threads, "--out-dir", d, "fit", "--in", d + "/degraded.vf1", "--wall",
                       path("wall.csv"), "--depth", "2", "--width", "16", "--max-iterations", "6"})
                      .code,
                  0);
    }
    for (const char* f : {"degraded.vf1.bin", "model.sm1.bin", "trace.csv"})
        EXPECT_EQ(clitest::bytes(path(std::string("t1/") + f)), clitest::bytes(path(std::string("t3/") + f))) << f;
}

} // namespace
