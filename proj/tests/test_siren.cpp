#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gradient_oracle.hpp"
#include "sirenflow/error.hpp"
#include "sirenflow/siren.hpp"

using namespace sirenflow;

namespace {

SampleSet random_samples(std::size_t rows, std::uint64_t seed, std::size_t wall_every = 3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(0.0, 0.2), vel(-0.5, 0.5);
    SampleSet s;
    s.coords.resize(4, Eigen::Index(rows));
    s.targets.resize(3, Eigen::Index(rows));
    for (std::size_t i = 0; i < rows; ++i) {
        for (int k = 0; k < 4; ++k) s.coords(k, Eigen::Index(i)) = coord(rng);
        const bool wall = wall_every > 0 && i % wall_every == wall_every - 1;
        for (int k = 0; k < 3; ++k) s.targets(k, Eigen::Index(i)) = wall ? 0.0 : vel(rng);
        s.kinds.push_back(wall ? SampleKind::Wall : SampleKind::Fluid);
        (wall ? s.n_wall : s.n_fluid)++;
    }
    s.n_frames = 1;
    return s;
}

FitConfig cfg_of(int depth, int width, std::uint64_t seed) {
    FitConfig c;
    c.depth = depth;
    c.width = width;
    c.seed = seed;
    return c;
}

} // namespace

TEST(InitModel, WeightsWithinUniformBound) {
    const auto m = init_model(cfg_of(3, 100, 1));
    const double hidden = std::sqrt(6.0 / 100.0);
    EXPECT_NEAR(hidden, 0.2449, 1e-4);
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const double bound = std::sqrt(6.0 / double(m.layer(l).cols));
        EXPECT_LE(m.weight(l).cwiseAbs().maxCoeff(), bound);
        EXPECT_LE(m.bias(l).cwiseAbs().maxCoeff(), bound);
    }
    EXPECT_LE(m.weight(1).cwiseAbs().maxCoeff(), hidden);
    // the bound is actually used, not a much tighter one
    EXPECT_GT(m.weight(1).cwiseAbs().maxCoeff(), 0.9 * hidden);
}

TEST(InitModel, DeterministicPerSeed) {
    const auto a = init_model(cfg_of(2, 16, 42));
    const auto b = init_model(cfg_of(2, 16, 42));
    const auto c = init_model(cfg_of(2, 16, 43));
    EXPECT_EQ(a.parameters(), b.parameters());
    EXPECT_NE(a.parameters(), c.parameters());
}

TEST(InitModel, DeepWideShapes) {
    const auto m = init_model(cfg_of(20, 300, 0));
    ASSERT_EQ(m.layer_count(), 21u);
    EXPECT_EQ(m.weight(0).rows(), 300);
    EXPECT_EQ(m.weight(0).cols(), 4);
    for (std::size_t l = 1; l < 20; ++l) {
        EXPECT_EQ(m.weight(l).rows(), 300);
        EXPECT_EQ(m.weight(l).cols(), 300);
    }
    EXPECT_EQ(m.weight(20).rows(), 3);
    EXPECT_EQ(m.weight(20).cols(), 300);
}

TEST(InitModel, RejectsInvalidConfig) {
    EXPECT_THROW(init_model(cfg_of(0, 8, 0)), Error);
    EXPECT_THROW(init_model(cfg_of(2, 0, 0)), Error);
    auto c = cfg_of(2, 8, 0);
    c.tolerance = 0.0;
    EXPECT_THROW(init_model(c), Error);
}

TEST(Forward, ZeroWeightsGiveOutputBias) {
    auto m = init_model(cfg_of(2, 8, 3));
    const Eigen::Vector3d b = m.bias(2);
    for (std::size_t l = 0; l < m.layer_count(); ++l) m.weight(l).setZero();
    const auto s = random_samples(7, 1);
    const Eigen::Matrix3Xd y = forward(m, s.coords);
    for (Eigen::Index j = 0; j < y.cols(); ++j) EXPECT_EQ(y.col(j), b);
}

TEST(Forward, BatchedEqualsPointwise) {
    const auto m = init_model(cfg_of(3, 32, 5));
    const auto s = random_samples(2500, 2);
    const Eigen::Matrix3Xd all = forward(m, s.coords);
    for (Eigen::Index j = 0; j < all.cols(); j += 97) {
        const Eigen::Matrix3Xd one = forward(m, s.coords.col(j));
        EXPECT_NEAR((one.col(0) - all.col(j)).norm(), 0.0, 1e-12 * (1.0 + all.col(j).norm()));
    }
    EXPECT_EQ(forward(m, s.coords), all);
}

TEST(Forward, HiddenActivationsBounded) {
    // with an identity-like output layer, each output is one hidden activation
    auto m = init_model(cfg_of(2, 3, 8));
    m.weight(2).setIdentity();
    m.bias(2).setZero();
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    Eigen::Matrix4Xd x(4, 200);
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (int k = 0; k < 4; ++k) x(k, j) = u(rng);
    EXPECT_LE(forward(m, x).cwiseAbs().maxCoeff(), 1.0);
}

TEST(Loss, SingleFluidRowIsSquaredResidual) {
    const auto m = init_model(cfg_of(2, 8, 9));
    auto s = random_samples(1, 3, 0);
    const Eigen::Vector3d p = forward(m, s.coords).col(0);
    const auto r = loss_and_grad(m, s, nullptr);
    EXPECT_NEAR(r.data_term, (p - s.targets.col(0)).squaredNorm(), 1e-14);
    EXPECT_EQ(r.wall_term, 0.0);
}

TEST(Loss, ExactFitGivesZeroLoss) {
    const auto m = init_model(cfg_of(2, 8, 9));
    auto s = random_samples(20, 3, 0);
    s.targets = forward(m, s.coords);
    Eigen::VectorXd g;
    const auto r = loss_and_grad(m, s, &g);
    EXPECT_EQ(r.total, 0.0);
    EXPECT_TRUE(g.allFinite());
    EXPECT_EQ(g.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Loss, DecompositionAndMeanVariant) {
    const auto m = init_model(cfg_of(2, 8, 1));
    const auto s = random_samples(30, 4);
    Eigen::VectorXd g_sum, g_mean;
    const auto sum = loss_and_grad(m, s, &g_sum);
    EXPECT_NEAR(sum.total, sum.data_term + sum.wall_term, 1e-12 * sum.total);
    EXPECT_GT(sum.wall_term, 0.0);
    const auto mean = loss_and_grad(m, s, &g_mean, LossNormalization::Mean);
    EXPECT_NEAR(mean.total * 30.0, sum.total, 1e-12 * sum.total);
    EXPECT_TRUE((g_mean * 30.0).isApprox(g_sum, 1e-12));
}

TEST(Loss, EmptySampleSetThrows) {
    const auto m = init_model(cfg_of(1, 4, 1));
    SampleSet s;
    try {
        loss_and_grad(m, s, nullptr);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptySampleSet);
    }
}

TEST(Loss, GradientMatchesCentralDifferences) {
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        SirenModel m = init_model(cfg_of(2, 8, 100 + trial));
        const auto s = random_samples(10, 200 + trial);
        Eigen::VectorXd g;
        loss_and_grad(m, s, &g);
        SirenModel probe = m;
        const auto f = [&](const Eigen::VectorXd& theta) {
            probe.parameters() = theta;
            return loss_and_grad(probe, s, nullptr).total;
        };
        const Eigen::VectorXd fd = oracle::central_difference(f, m.parameters(), 1e-4);
        EXPECT_LE(oracle::max_relative_error(g, fd), 1e-5) << "trial " << trial;
    }
}

TEST(Loss, PermutationInvariance) {
    const auto m = init_model(cfg_of(2, 16, 2));
    const auto s = random_samples(3000, 5);
    std::vector<Eigen::Index> perm(s.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(1));
    SampleSet p = s;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        p.coords.col(Eigen::Index(i)) = s.coords.col(perm[i]);
        p.targets.col(Eigen::Index(i)) = s.targets.col(perm[i]);
        p.kinds[i] = s.kinds[std::size_t(perm[i])];
    }
    Eigen::VectorXd ga, gb;
    const auto a = loss_and_grad(m, s, &ga);
    const auto b = loss_and_grad(m, p, &gb);
    EXPECT_NEAR(a.total, b.total, 1e-12 * a.total);
    EXPECT_NEAR(a.wall_term, b.wall_term, 1e-12 * a.total);
    EXPECT_LE((ga - gb).lpNorm<Eigen::Infinity>(), 1e-12 * ga.lpNorm<Eigen::Infinity>());
}

TEST(Loss, DeterministicAcrossCalls) {
    const auto m = init_model(cfg_of(3, 16, 2));
    const auto s = random_samples(2100, 6);
    Eigen::VectorXd ga, gb;
    const auto a = loss_and_grad(m, s, &ga);
    const auto b = loss_and_grad(m, s, &gb);
    EXPECT_EQ(a.total, b.total);
    EXPECT_EQ(ga, gb);
}

TEST(SirenSampler, AppliesNondimensionalization) {
    NondimParams p;
    p.x_min = Vec3(5.0, 5.0, 5.0);
    p.dx = Vec3(2.0, 2.0, 2.0);
    p.t_min = 0.1;
    p.dt = 0.05;
    auto m = init_model(cfg_of(2, 8, 1), p);
    SirenSampler sampler(m);
    const Vec3 x(9.0, 7.0, 5.0);
    const Eigen::Matrix3Xd direct = forward(m, p.nondimensionalize(x, 0.2));
    EXPECT_TRUE(sampler.at(x, 0.2).isApprox(Vec3(direct.col(0)), 1e-14));
}
