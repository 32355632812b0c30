#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "sirenflow/field.hpp"
#include "sirenflow/sampler.hpp"

namespace sirenflow {

/// Quadrilinear interpolation of a voxel image (trilinear in space, linear in
/// time). Queries outside the grid are clamped to it and flagged.
std::vector<Vec3> litp_query(const VelocityImage& img, std::span<const Point4> points,
                             std::vector<std::uint8_t>* clamped = nullptr);

class LitpSampler final : public VelocitySampler {
public:
    explicit LitpSampler(VelocityImage img) : img_(std::move(img)) {}

    using VelocitySampler::sample;
    void sample(std::span<const Point4> points, std::span<Vec3> out) const override;
    bool contains(const Vec3& x, double t) const override;
    const VelocityImage& image() const { return img_; }

private:
    VelocityImage img_;
};

struct Rbf4dConfig {
    std::size_t k_neighbors = 10;
    std::optional<double> c_mq;       // mm; default: mean nearest-neighbour spacing
    bool include_wall_zeros = true;
    std::optional<double> time_scale; // mm per s; default: mean voxel spacing / frame interval

    void validate() const;
};

/// Local multiquadric interpolation in scaled space-time. Each query solves
/// the k-nearest-neighbour system phi(r) = sqrt(r^2 + c^2) augmented with a
/// constant term; singular systems fall back to inverse-distance weighting.
class Rbf4dModel {
public:
    enum QueryFlag : std::uint8_t { Ok = 0, IdwFallback = 1 };

    Rbf4dModel(const SampleSet& samples, const Rbf4dConfig& cfg);
    ~Rbf4dModel();
    Rbf4dModel(Rbf4dModel&&) noexcept;
    Rbf4dModel& operator=(Rbf4dModel&&) noexcept;

    void query(std::span<const Point4> points, std::span<Vec3> out,
               std::vector<std::uint8_t>* flags = nullptr) const;

    std::size_t size() const;
    std::size_t duplicates_merged() const { return duplicates_; }
    double c_mq() const { return c_mq_; }
    double time_scale() const { return time_scale_; }
    const Domain& bounds() const { return bounds_; }

private:
    struct Index;
    std::unique_ptr<Index> index_;
    std::vector<Eigen::Vector4d> nodes_;
    std::vector<Vec3> values_;
    std::size_t k_ = 10;
    std::size_t duplicates_ = 0;
    double c_mq_ = 1.0;
    double time_scale_ = 1.0;
    Domain bounds_;
};

class Rbf4dSampler final : public VelocitySampler {
public:
    explicit Rbf4dSampler(std::shared_ptr<const Rbf4dModel> model) : model_(std::move(model)) {}

    using VelocitySampler::sample;
    void sample(std::span<const Point4> points, std::span<Vec3> out) const override;
    bool contains(const Vec3& x, double t) const override;

private:
    std::shared_ptr<const Rbf4dModel> model_;
};

} // namespace sirenflow
