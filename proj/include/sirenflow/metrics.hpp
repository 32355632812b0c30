#pragma once

#include <span>

#include "sirenflow/sampler.hpp"

namespace sirenflow {

/// Speeds below this (m/s) are excluded from the direction error.
inline constexpr double kDirectionSpeedFloor = 1e-6;

struct MetricsReport {
    double mnrmse = 0.0; // %
    double vnrmse = 0.0; // %
    double de = 0.0;     // %
    std::size_t k = 0;
    double max_ref_speed = 0.0; // m/s, over all evaluation points
    std::size_t de_excluded = 0;
};

/// Magnitude error normalized by the largest reference speed, in percent.
double mnrmse(std::span<const Vec3> ref, std::span<const Vec3> cand);
/// Vector error (Euclidean norm of the difference per point), same normalization.
double vnrmse(std::span<const Vec3> ref, std::span<const Vec3> cand);
/// Mean of 1 - |cos angle| in percent over points where both speeds reach `floor`.
double de(std::span<const Vec3> ref, std::span<const Vec3> cand, std::size_t* excluded = nullptr,
          double floor = kDirectionSpeedFloor);

MetricsReport compare(std::span<const Vec3> ref, std::span<const Vec3> cand);
MetricsReport compare(const VelocitySampler& ref, const VelocitySampler& cand, std::span<const Point4> points);

} // namespace sirenflow
