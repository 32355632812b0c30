#include <cmath>

#include <gtest/gtest.h>

#include "sirenflow/fit.hpp"
#include "sirenflow/metrics.hpp"

using namespace sirenflow;

namespace {

GridGeometry tiny_grid() {
    GridGeometry g;
    g.dims = {4, 4, 4, 2};
    g.spacing = Vec3(2.0, 2.0, 2.0);
    g.dt = 0.04;
    g.origin = Vec3(-3.0, -3.0, -3.0);
    g.t0 = 0.2;
    return g;
}

// Fluid rows only: every target is reproducible by a network.
SampleSet fluid_only(const GridGeometry& g, const std::function<Vec3(std::size_t)>& target) {
    SampleSet s;
    s.params = nondim_for(g);
    const std::size_t n = g.dims.voxels();
    s.coords.resize(4, Eigen::Index(n));
    s.targets.resize(3, Eigen::Index(n));
    std::size_t k = 0;
    for (std::size_t r = 0; r < g.dims.nr; ++r)
        for (std::size_t c = 0; c < g.dims.nc; ++c)
            for (std::size_t q = 0; q < g.dims.ns; ++q)
                for (std::size_t t = 0; t < g.dims.nt; ++t, ++k) {
                    s.coords.col(Eigen::Index(k)) = s.params.nondimensionalize(g.position(r, c, q), g.time(t));
                    s.targets.col(Eigen::Index(k)) = target(k);
                }
    s.kinds.assign(n, SampleKind::Fluid);
    s.n_fluid = g.dims.spatial();
    s.n_frames = g.dims.nt;
    return s;
}

} // namespace

TEST(Fit, ModelGeneratedSamplesNeedNoIterations) {
    FitConfig cfg;
    cfg.depth = 2;
    cfg.width = 8;
    cfg.seed = 3;
    const auto g = tiny_grid();
    const SirenModel model = init_model(cfg, nondim_for(g));
    SampleSet s = fluid_only(g, [](std::size_t) { return Vec3::Zero(); });
    s.targets = forward(model, s.coords);
    const auto result = optim::fit(model, s, cfg);
    EXPECT_EQ(result.iterations, 0);
    EXPECT_EQ(result.termination, optim::Termination::Converged);
    EXPECT_EQ(result.model.parameters(), model.parameters());
}

TEST(Fit, ConstantFieldIsLearned) {
    FitConfig cfg;
    cfg.depth = 2;
    cfg.width = 16;
    cfg.seed = 1;
    const auto g = tiny_grid();
    const auto s = fluid_only(g, [](std::size_t) { return Vec3(0.2, 0.0, 0.0); });
    const auto result = optim::fit(init_model(cfg, s.params), s, cfg);
    const Eigen::Matrix3Xd pred = forward(result.model, s.coords);
    std::vector<Vec3> ref, cand;
    for (Eigen::Index i = 0; i < pred.cols(); ++i) {
        ref.emplace_back(s.targets.col(i));
        cand.emplace_back(pred.col(i));
    }
    EXPECT_LT(vnrmse(ref, cand), 0.5);
}

TEST(Fit, AcceptedLossIsMonotoneAndMoreIterationsNeverHurt) {
    FitConfig cfg;
    cfg.depth = 2;
    cfg.width = 12;
    cfg.seed = 5;
    const auto g = tiny_grid();
    const auto s = fluid_only(g, [](std::size_t k) { return Vec3(std::sin(0.3 * double(k)), 0.1, -0.05 * double(k % 5)); });
    const auto init = init_model(cfg, s.params);
    double previous = std::numeric_limits<double>::infinity();
    for (int iters : {5, 10, 20, 40}) {
        cfg.max_iterations = iters;
        const auto r = optim::fit(init, s, cfg);
        for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i].loss, r.trace[i - 1].loss);
        EXPECT_LE(r.trace.back().loss, previous);
        previous = r.trace.back().loss;
    }
}

TEST(Fit, DeterministicPerSeed) {
    FitConfig cfg;
    cfg.depth = 2;
    cfg.width = 8;
    cfg.max_iterations = 15;
    const auto g = tiny_grid();
    const auto s = fluid_only(g, [](std::size_t k) { return Vec3(0.01 * double(k), 0.0, 0.1); });
    const auto a = optim::fit(init_model(cfg, s.params), s, cfg);
    const auto b = optim::fit(init_model(cfg, s.params), s, cfg);
    EXPECT_EQ(a.model.parameters(), b.model.parameters());
    EXPECT_EQ(a.trace.size(), b.trace.size());
}
