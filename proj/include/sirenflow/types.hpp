#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Core>

namespace sirenflow {

using Vec3 = Eigen::Vector3d;

/// A space-time location: position in mm, time in seconds.
struct Point4 {
    Vec3 x = Vec3::Zero();
    double t = 0.0;
};

/// Axis-aligned space-time box, closed on both ends.
struct Domain {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
    double t_lo = 0.0;
    double t_hi = 0.0;

    bool contains(const Vec3& p, double t, double tol = 1e-9) const {
        for (int i = 0; i < 3; ++i)
            if (p[i] < lo[i] - tol || p[i] > hi[i] + tol) return false;
        return t >= t_lo - tol && t <= t_hi + tol;
    }
};

} // namespace sirenflow
