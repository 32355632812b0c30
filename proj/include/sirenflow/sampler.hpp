#pragma once

#include <span>
#include <vector>

#include "sirenflow/types.hpp"

namespace sirenflow {

/// A velocity field that can be queried at arbitrary space-time points.
/// Implementations must be safe to call concurrently.
class VelocitySampler {
public:
    virtual ~VelocitySampler() = default;

    virtual void sample(std::span<const Point4> points, std::span<Vec3> out) const = 0;
    virtual bool contains(const Vec3& x, double t) const = 0;

    std::vector<Vec3> sample(std::span<const Point4> points) const {
        std::vector<Vec3> out(points.size());
        sample(points, out);
        return out;
    }
    Vec3 at(const Vec3& x, double t) const {
        const Point4 p{x, t};
        Vec3 v;
        sample(std::span<const Point4>(&p, 1), std::span<Vec3>(&v, 1));
        return v;
    }
};

} // namespace sirenflow
