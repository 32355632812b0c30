#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "sirenflow/types.hpp"

namespace sirenflow {

struct GridDims {
    std::size_t nr = 0, nc = 0, ns = 0, nt = 0;

    std::size_t spatial() const { return nr * nc * ns; }
    std::size_t voxels() const { return spatial() * nt; }
    bool operator==(const GridDims&) const = default;
};

/// Spatial and temporal sampling of a voxel grid. Voxel (r, c, s) sits at
/// origin + (r, c, s) * spacing (voxel centers); frame j at t0 + j * dt.
struct GridGeometry {
    GridDims dims;
    Vec3 spacing = Vec3::Ones(); // mm
    double dt = 1.0;             // s
    Vec3 origin = Vec3::Zero();  // mm
    double t0 = 0.0;             // s

    void validate() const;
    Vec3 position(std::size_t r, std::size_t c, std::size_t s) const {
        return origin + Vec3(double(r), double(c), double(s)).cwiseProduct(spacing);
    }
    double time(std::size_t j) const { return t0 + double(j) * dt; }
    Domain domain() const;
    bool operator==(const GridGeometry&) const = default;
};

/// Time-resolved 3-directional velocity field on a voxel grid (m/s).
/// Storage is row-major over (r, c, s, t, component).
class VelocityImage {
public:
    VelocityImage() = default;
    explicit VelocityImage(const GridGeometry& geometry);
    VelocityImage(const GridGeometry& geometry, std::vector<double> data,
                  std::optional<std::vector<std::uint8_t>> mask = std::nullopt);

    const GridGeometry& geometry() const { return geometry_; }
    const GridDims& dims() const { return geometry_.dims; }

    std::size_t voxel_index(std::size_t r, std::size_t c, std::size_t s, std::size_t t) const {
        const auto& d = geometry_.dims;
        return ((r * d.nc + c) * d.ns + s) * d.nt + t;
    }
    Vec3 at(std::size_t r, std::size_t c, std::size_t s, std::size_t t) const {
        const std::size_t i = 3 * voxel_index(r, c, s, t);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set(std::size_t r, std::size_t c, std::size_t s, std::size_t t, const Vec3& v) {
        const std::size_t i = 3 * voxel_index(r, c, s, t);
        data_[i] = v[0];
        data_[i + 1] = v[1];
        data_[i + 2] = v[2];
    }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    bool has_mask() const { return mask_.has_value(); }
    const std::optional<std::vector<std::uint8_t>>& mask() const { return mask_; }
    void set_mask(std::vector<std::uint8_t> mask);
    void clear_mask() { mask_.reset(); }
    /// True when no mask is attached.
    bool fluid(std::size_t r, std::size_t c, std::size_t s, std::size_t t) const {
        return !mask_ || (*mask_)[voxel_index(r, c, s, t)] != 0;
    }
    bool fluid_all_frames(std::size_t r, std::size_t c, std::size_t s) const;

    double max_abs_component(int axis) const;
    double max_speed() const;

private:
    GridGeometry geometry_;
    std::vector<double> data_;
    std::optional<std::vector<std::uint8_t>> mask_;
};

/// Copy of `img` with every non-fluid voxel set to zero velocity.
VelocityImage apply_mask(const VelocityImage& img);

/// Vessel wall: points (mm) with inward unit normals.
class WallSurface {
public:
    enum class Provenance { Analytic, File };

    WallSurface() = default;
    WallSurface(std::vector<Vec3> points, std::vector<Vec3> normals, Provenance provenance);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const std::vector<Vec3>& points() const { return points_; }
    const std::vector<Vec3>& normals() const { return normals_; }
    Provenance provenance() const { return provenance_; }

    WallSurface subset(std::span<const std::size_t> indices) const;

private:
    std::vector<Vec3> points_;
    std::vector<Vec3> normals_;
    Provenance provenance_ = Provenance::Analytic;
};

/// Affine map from physical (mm, s) to dimensionless network coordinates:
/// x_hat = (x - x_min) / dx * D, t_hat = (t - t_min) / dt * D.
struct NondimParams {
    Vec3 x_min = Vec3::Zero();
    double t_min = 0.0;
    Vec3 dx = Vec3::Ones();
    double dt = 1.0;
    double D = 0.01;

    void validate() const;
    Eigen::Vector4d nondimensionalize(const Vec3& x, double t) const;
    Point4 denormalize(const Eigen::Vector4d& q) const;
    bool operator==(const NondimParams&) const = default;
};

/// Parameters matching an image's grid: x_min at voxel (0,0,0), t_min at frame 0.
NondimParams nondim_for(const GridGeometry& geometry, double D = 0.01);

enum class SampleKind : std::uint8_t { Fluid = 0, Wall = 1 };

/// Training tuples. Rows are grouped per spatial point, each repeated over
/// every frame: fluid points first, then wall points.
struct SampleSet {
    NondimParams params;
    Eigen::Matrix<double, 4, Eigen::Dynamic> coords; // dimensionless
    Eigen::Matrix<double, 3, Eigen::Dynamic> targets; // m/s
    std::vector<SampleKind> kinds;
    std::size_t n_fluid = 0;
    std::size_t n_wall = 0;
    std::size_t n_frames = 0;

    std::size_t size() const { return kinds.size(); }
};

/// Centers of voxels that are fluid in every frame, in (r, c, s) order.
/// With fraction < 1 a seeded subset of round(fraction * count) voxels is kept.
std::vector<Vec3> fluid_voxel_centers(const VelocityImage& img, double fraction = 1.0,
                                      std::uint64_t seed = 0);

SampleSet build_sample_set(const VelocityImage& img, std::span<const Vec3> fluid_points,
                           const WallSurface& wall, const NondimParams& params);

/// Sorted indices of a uniform subset of size n, drawn without replacement.
std::vector<std::size_t> sample_wall_indices(std::size_t surface_size, std::size_t n,
                                             std::uint64_t seed);
WallSurface sample_wall(const WallSurface& surface, std::size_t n, std::uint64_t seed);

} // namespace sirenflow
