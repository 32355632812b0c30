#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sirenflow/field.hpp"
#include "sirenflow/sampler.hpp"

namespace sirenflow {

enum class LossNormalization {
    Sum,  ///< plain sums over rows
    Mean, ///< both terms divided by the total row count
};

struct FitConfig {
    int depth = 4;  ///< hidden layers
    int width = 64; ///< neurons per hidden layer
    double omega0 = 30.0;
    std::uint64_t seed = 0;
    int max_iterations = 2000;
    double tolerance = 1e-8; ///< stop when |grad|_inf <= tolerance * (1 + |loss|)
    int history = 10;
    LossNormalization loss = LossNormalization::Sum;

    void validate() const;
};

struct LossReport {
    double total = 0.0;
    double data_term = 0.0;
    double wall_term = 0.0;
    double gradient_norm = 0.0; ///< infinity norm
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sine-activated MLP R^4 -> R^3. Hidden layer l computes sin(W_l a + b_l);
/// the first multiplies W_1 x by omega0 before adding the bias; the output
/// layer is affine. Parameters are stored flat, layer by layer, each as the
/// row-major weight matrix followed by the bias.
class SirenModel {
public:
    struct Layer {
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        Eigen::Index offset = 0;
    };

    SirenModel() = default;
    SirenModel(int depth, int width, double omega0, const NondimParams& params);

    int depth() const { return depth_; }
    int width() const { return width_; }
    double omega0() const { return omega0_; }
    const NondimParams& nondim() const { return nondim_; }
    void set_nondim(const NondimParams& p) { nondim_ = p; }
    std::uint64_t seed() const { return seed_; }
    void set_seed(std::uint64_t s) { seed_ = s; }
    const std::optional<Domain>& domain() const { return domain_; }
    void set_domain(std::optional<Domain> d) { domain_ = d; }

    std::size_t layer_count() const { return layers_.size(); }
    const Layer& layer(std::size_t l) const { return layers_[l]; }

    Eigen::Map<const RowMatrix> weight(std::size_t l) const {
        const auto& L = layers_[l];
        return {params_.data() + L.offset, L.rows, L.cols};
    }
    Eigen::Map<RowMatrix> weight(std::size_t l) {
        const auto& L = layers_[l];
        return {params_.data() + L.offset, L.rows, L.cols};
    }
    Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const {
        const auto& L = layers_[l];
        return {params_.data() + L.offset + L.rows * L.cols, L.rows};
    }
    Eigen::Map<Eigen::VectorXd> bias(std::size_t l) {
        const auto& L = layers_[l];
        return {params_.data() + L.offset + L.rows * L.cols, L.rows};
    }

    const Eigen::VectorXd& parameters() const { return params_; }
    Eigen::VectorXd& parameters() { return params_; }
    void set_parameters(const Eigen::VectorXd& p);

private:
    int depth_ = 0;
    int width_ = 0;
    double omega0_ = 30.0;
    std::uint64_t seed_ = 0;
    NondimParams nondim_;
    std::optional<Domain> domain_;
    std::vector<Layer> layers_;
    Eigen::VectorXd params_;
};

/// Uniform init in [-sqrt(6/c), sqrt(6/c)], c the layer's input width, for
/// weights and biases alike. Deterministic per seed.
SirenModel init_model(const FitConfig& cfg, const NondimParams& params = {});

/// Evaluates the network on dimensionless coordinates (one column per point).
Eigen::Matrix3Xd forward(const SirenModel& m, const Eigen::Ref<const Eigen::Matrix4Xd>& coords);

/// Loss over a sample set: sum of squared residuals on fluid rows plus squared
/// outputs on wall rows. When `grad` is given it receives dL/dparameters.
LossReport loss_and_grad(const SirenModel& m, const SampleSet& samples, Eigen::VectorXd* grad,
                         LossNormalization norm = LossNormalization::Sum);

/// Physical-coordinate view of a trained model.
class SirenSampler : public VelocitySampler {
public:
    explicit SirenSampler(SirenModel model) : model_(std::move(model)) {}

    using VelocitySampler::sample;
    void sample(std::span<const Point4> points, std::span<Vec3> out) const override;
    bool contains(const Vec3& x, double t) const override;
    const SirenModel& model() const { return model_; }

private:
    SirenModel model_;
};

} // namespace sirenflow
