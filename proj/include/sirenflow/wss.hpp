#pragma once

#include <cstdint>
#include <vector>

#include "sirenflow/field.hpp"
#include "sirenflow/sampler.hpp"

namespace sirenflow {

struct WssConfig {
    double mu = 0.004;    // Pa s
    double delta_n = 0.5; // mm

    void validate() const;
};

/// Wall shear stress (Pa) at wall point p (mm) with inward unit normal n.
/// The tangential velocity is sampled at distances delta_n and 2 delta_n along
/// n; with zero velocity on the wall the quadratic through the three values has
/// slope (4 v1 - v2) / (2 delta_n) at the wall.
Vec3 wss_at(const VelocitySampler& sampler, const Vec3& p, const Vec3& n, double t, const WssConfig& cfg);

struct WssField {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<double> times;
    std::vector<Vec3> wss;             // point-major: [i * times.size() + j]
    std::vector<std::uint8_t> flagged; // probe left the sampler's domain
    std::vector<double> tawss;         // per point, mean |wss| over unflagged times

    const Vec3& at(std::size_t point, std::size_t time) const { return wss[point * times.size() + time]; }
    std::size_t flagged_points() const;
};

WssField wss_field(const VelocitySampler& sampler, const WallSurface& wall, const std::vector<double>& times,
                   const WssConfig& cfg);

/// Times t0, t0 + dt, ... up to and including t1 (within dt * 1e-9).
std::vector<double> time_range(double t0, double dt, double t1);

} // namespace sirenflow
