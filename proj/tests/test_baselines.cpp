#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "sirenflow/baselines.hpp"
#include "sirenflow/error.hpp"
#include "sirenflow/phantom.hpp"

using namespace sirenflow;

namespace {

GridGeometry grid(std::size_t n, std::size_t nt) {
    GridGeometry g;
    g.dims = {n, n + 1, n - 1, nt};
    g.spacing = Vec3(2.0, 1.5, 1.0);
    g.dt = 0.04;
    g.origin = Vec3(-3.0, 1.0, 0.5);
    g.t0 = 0.2;
    return g;
}

Vec3 linear_field(const Vec3& x, double t) {
    return Vec3(0.1 * x[0] - 0.05 * x[1] + 2.0 * t, 0.3 + 0.02 * x[2], -t + 0.01 * x[0]);
}

template <class F>
VelocityImage image_of(const GridGeometry& g, F f) {
    VelocityImage img(g);
    for (std::size_t r = 0; r < g.dims.nr; ++r)
        for (std::size_t c = 0; c < g.dims.nc; ++c)
            for (std::size_t s = 0; s < g.dims.ns; ++s)
                for (std::size_t t = 0; t < g.dims.nt; ++t)
                    img.set(r, c, s, t, Vec3(f(g.position(r, c, s), g.time(t))));
    return img;
}

SampleSet samples_of(const VelocityImage& img, const WallSurface& wall) {
    const auto pts = fluid_voxel_centers(img);
    return build_sample_set(img, pts, wall, nondim_for(img.geometry()));
}

WallSurface dummy_wall(const GridGeometry& g) {
    return WallSurface({g.position(0, 0, 0) - Vec3(5, 5, 5)}, {Vec3::UnitX()}, WallSurface::Provenance::Analytic);
}

} // namespace

TEST(Litp, VoxelCentersAreExact) {
    const auto g = grid(4, 3);
    const auto img = image_of(g, [](const Vec3& x, double t) { return Vec3(std::sin(x[0]), x[1] * x[2], t * t); });
    std::vector<Point4> pts;
    std::vector<Vec3> ref;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 5; ++c)
            for (std::size_t t = 0; t < 3; ++t) {
                pts.push_back({g.position(r, c, 2), g.time(t)});
                ref.push_back(img.at(r, c, 2, t));
            }
    const auto out = litp_query(img, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(out[i], ref[i]);
}

TEST(Litp, MidpointBetweenFrames) {
    const auto g = grid(4, 2);
    VelocityImage img(g);
    img.set(1, 1, 1, 0, Vec3(1, 2, 3));
    img.set(1, 1, 1, 1, Vec3(3, 0, -1));
    const Point4 p{g.position(1, 1, 1), g.t0 + 0.5 * g.dt};
    const auto out = litp_query(img, std::span(&p, 1));
    EXPECT_LT((out[0] - Vec3(2, 1, 1)).norm(), 1e-12);
}

TEST(Litp, LinearFieldIsExactEverywhere) {
    const auto g = grid(5, 4);
    const auto img = image_of(g, linear_field);
    const auto d = g.domain();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Point4> pts;
    for (int i = 0; i < 200; ++i) {
        Vec3 x;
        for (int a = 0; a < 3; ++a) x[a] = d.lo[a] + u(rng) * (d.hi[a] - d.lo[a]);
        pts.push_back({x, d.t_lo + u(rng) * (d.t_hi - d.t_lo)});
    }
    std::vector<std::uint8_t> clamped;
    const auto out = litp_query(img, pts, &clamped);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_LT((out[i] - linear_field(pts[i].x, pts[i].t)).norm(), 1e-12);
        EXPECT_EQ(clamped[i], 0);
    }
}

TEST(Litp, OutsideIsClampedAndFlagged) {
    const auto g = grid(4, 2);
    const auto img = image_of(g, linear_field);
    const std::vector<Point4> pts{{g.position(0, 0, 0) - Vec3(1, 0, 0), g.t0}, {g.position(1, 1, 1), g.t0 + 1.0}};
    std::vector<std::uint8_t> clamped;
    const auto out = litp_query(img, pts, &clamped);
    EXPECT_EQ(clamped, (std::vector<std::uint8_t>{1, 1}));
    EXPECT_EQ(out[0], img.at(0, 0, 0, 0));
    EXPECT_EQ(out[1], img.at(1, 1, 1, 1));
    LitpSampler s(img);
    EXPECT_FALSE(s.contains(pts[0].x, pts[0].t));
    EXPECT_TRUE(s.contains(g.position(1, 1, 1), g.t0));
}

TEST(Rbf4d, InterpolatesSamplePoints) {
    const auto g = grid(4, 3);
    const auto img = image_of(g, [](const Vec3& x, double t) { return Vec3(std::sin(x[0]), x[1] * x[2], t * t); });
    const Rbf4dModel model(samples_of(img, dummy_wall(g)), Rbf4dConfig{});
    std::vector<Point4> pts;
    std::vector<Vec3> ref;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t t = 0; t < 3; ++t) {
            pts.push_back({g.position(r, 2, 1), g.time(t)});
            ref.push_back(img.at(r, 2, 1, t));
        }
    std::vector<Vec3> out(pts.size());
    std::vector<std::uint8_t> flags;
    model.query(pts, out, &flags);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        EXPECT_LT((out[i] - ref[i]).norm(), 1e-8);
        EXPECT_EQ(flags[i], Rbf4dModel::Ok);
    }
}

TEST(Rbf4d, ReproducesConstants) {
    const auto g = grid(5, 3);
    const auto img = image_of(g, [](const Vec3&, double) { return Vec3(0.2, -0.1, 0.05); });
    Rbf4dConfig cfg;
    cfg.include_wall_zeros = false;
    const Rbf4dModel model(samples_of(img, dummy_wall(g)), cfg);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.2, 0.8);
    const auto d = g.domain();
    std::vector<Point4> pts;
    for (int i = 0; i < 100; ++i) {
        Vec3 x;
        for (int a = 0; a < 3; ++a) x[a] = d.lo[a] + u(rng) * (d.hi[a] - d.lo[a]);
        pts.push_back({x, d.t_lo + u(rng) * (d.t_hi - d.t_lo)});
    }
    std::vector<Vec3> out(pts.size());
    model.query(pts, out);
    for (const auto& v : out) EXPECT_LT((v - Vec3(0.2, -0.1, 0.05)).norm(), 1e-8);
}

TEST(Rbf4d, ZeroSamplesPredictZero) {
    const auto g = grid(4, 2);
    const auto img = image_of(g, [](const Vec3&, double) { return Vec3::Zero(); });
    const Rbf4dModel model(samples_of(img, dummy_wall(g)), Rbf4dConfig{});
    const std::vector<Point4> pts{{g.position(1, 1, 1) + Vec3(0.3, 0.2, 0.1), g.t0 + 0.01}};
    std::vector<Vec3> out(1);
    model.query(pts, out);
    EXPECT_EQ(out[0], Vec3::Zero());
}

TEST(Rbf4d, DuplicatesAreMerged) {
    const auto g = grid(4, 2);
    const auto img = image_of(g, linear_field);
    auto samples = samples_of(img, dummy_wall(g));
    const auto n = samples.size();
    samples.coords.conservativeResize(Eigen::NoChange, Eigen::Index(n + 1));
    samples.targets.conservativeResize(Eigen::NoChange, Eigen::Index(n + 1));
    samples.coords.col(Eigen::Index(n)) = samples.coords.col(0);
    samples.targets.col(Eigen::Index(n)) = samples.targets.col(0) + Vec3(2, 0, 0);
    samples.kinds.push_back(SampleKind::Fluid);
    const Rbf4dModel model(samples, Rbf4dConfig{});
    EXPECT_EQ(model.duplicates_merged(), 1u);
    EXPECT_EQ(model.size(), n);
    const Point4 p = samples.params.denormalize(samples.coords.col(0));
    std::vector<Vec3> out(1);
    model.query(std::span(&p, 1), out);
    EXPECT_LT((out[0] - (Vec3(samples.targets.col(0)) + Vec3(1, 0, 0))).norm(), 1e-8);
}

TEST(Rbf4d, TooFewSamplesThrows) {
    GridGeometry g;
    g.dims = {2, 2, 1, 1};
    const auto img = image_of(g, linear_field);
    try {
        Rbf4dModel model(samples_of(img, dummy_wall(g)), Rbf4dConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooFewSamples);
    }
    Rbf4dConfig cfg;
    cfg.k_neighbors = 3;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(Rbf4d, WallZerosReduceWallPrediction) {
    PhantomSpec s;
    s.radius = 4.0;
    GridGeometry g;
    g.dims = {10, 10, 4, 3};
    g.origin = Vec3(-4.5, -4.5, -1.5);
    g.dt = 0.04;
    const auto img = sample_on_grid(s, g);
    const auto wall = phantom_wall(s, 24, 4, -1.5, 1.5);
    const auto samples = build_sample_set(img, fluid_voxel_centers(img), wall, nondim_for(g));
    Rbf4dConfig on, off;
    off.include_wall_zeros = false;
    const Rbf4dModel with(samples, on), without(samples, off);
    const auto probe_wall = phantom_wall(s, 7, 1, 0.25, 0.25);
    std::vector<Point4> pts;
    for (const auto& p : probe_wall.points()) pts.push_back({p, 0.04});
    std::vector<Vec3> a(pts.size()), b(pts.size());
    with.query(pts, a);
    without.query(pts, b);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LT(a[i].norm(), b[i].norm());
}

TEST(Rbf4d, DefaultScales) {
    const auto g = grid(4, 3);
    const auto img = image_of(g, linear_field);
    const Rbf4dModel model(samples_of(img, dummy_wall(g)), Rbf4dConfig{});
    EXPECT_NEAR(model.time_scale(), g.spacing.mean() / g.dt, 1e-9);
    EXPECT_GT(model.c_mq(), 0.0);
    Rbf4dConfig cfg;
    cfg.c_mq = 2.5;
    EXPECT_EQ(Rbf4dModel(samples_of(img, dummy_wall(g)), cfg).c_mq(), 2.5);
}

TEST(Rbf4d, DeterministicQueries) {
    const auto g = grid(5, 3);
    const auto img = image_of(g, [](const Vec3& x, double t) { return Vec3(std::cos(x[1]), x[0] * t, 1.0); });
    const Rbf4dModel m(samples_of(img, dummy_wall(g)), Rbf4dConfig{});
    std::vector<Point4> pts;
    for (int i = 0; i < 600; ++i) pts.push_back({g.origin + Vec3(0.013 * i, 0.007 * i, 0.002 * i), g.t0 + 1e-4 * i});
    std::vector<Vec3> a(pts.size()), b(pts.size());
    m.query(pts, a);
    m.query(pts, b);
    EXPECT_EQ(a, b);
}
