#include "sirenflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sirenflow/error.hpp"

namespace sirenflow {

void GridGeometry::validate() const {
    if (dims.nr == 0 || dims.nc == 0 || dims.ns == 0 || dims.nt == 0)
        throw Error(ErrorKind::DegenerateGrid, "grid has a zero-length dimension");
    for (int i = 0; i < 3; ++i)
        if (!(spacing[i] > 0.0) || !std::isfinite(spacing[i]))
            throw Error(ErrorKind::DegenerateGrid, "spatial spacing must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw Error(ErrorKind::DegenerateGrid, "temporal spacing must be positive");
}

Domain GridGeometry::domain() const {
    Domain d;
    d.lo = origin;
    d.hi = position(dims.nr - 1, dims.nc - 1, dims.ns - 1);
    d.t_lo = t0;
    d.t_hi = time(dims.nt - 1);
    return d;
}

VelocityImage::VelocityImage(const GridGeometry& geometry)
    : geometry_(geometry), data_(geometry.dims.voxels() * 3, 0.0) {
    geometry_.validate();
}

VelocityImage::VelocityImage(const GridGeometry& geometry, std::vector<double> data,
                             std::optional<std::vector<std::uint8_t>> mask)
    : geometry_(geometry), data_(std::move(data)) {
    geometry_.validate();
    if (data_.size() != geometry_.dims.voxels() * 3)
        throw Error(ErrorKind::InvalidArgument, "velocity data length does not match grid");
    if (mask) set_mask(std::move(*mask));
}

void VelocityImage::set_mask(std::vector<std::uint8_t> mask) {
    if (mask.size() != geometry_.dims.voxels())
        throw Error(ErrorKind::InvalidArgument, "mask length does not match grid");
    mask_ = std::move(mask);
}

bool VelocityImage::fluid_all_frames(std::size_t r, std::size_t c, std::size_t s) const {
    if (!mask_) return true;
    for (std::size_t t = 0; t < geometry_.dims.nt; ++t)
        if (!fluid(r, c, s, t)) return false;
    return true;
}

double VelocityImage::max_abs_component(int axis) const {
    double m = 0.0;
    for (std::size_t i = static_cast<std::size_t>(axis); i < data_.size(); i += 3)
        m = std::max(m, std::abs(data_[i]));
    return m;
}

double VelocityImage::max_speed() const {
    double m = 0.0;
    for (std::size_t i = 0; i < data_.size(); i += 3)
        m = std::max(m, std::sqrt(data_[i] * data_[i] + data_[i + 1] * data_[i + 1] +
                                  data_[i + 2] * data_[i + 2]));
    return m;
}

VelocityImage apply_mask(const VelocityImage& img) {
    VelocityImage out = img;
    if (!img.has_mask()) return out;
    const auto& mask = *img.mask();
    auto data = out.data();
    for (std::size_t v = 0; v < mask.size(); ++v)
        if (!mask[v]) data[3 * v] = data[3 * v + 1] = data[3 * v + 2] = 0.0;
    return out;
}

WallSurface::WallSurface(std::vector<Vec3> points, std::vector<Vec3> normals, Provenance provenance)
    : points_(std::move(points)), normals_(std::move(normals)), provenance_(provenance) {
    if (points_.size() != normals_.size())
        throw Error(ErrorKind::InvalidArgument, "wall points and normals differ in length");
    for (const auto& n : normals_)
        if (!(std::abs(n.norm() - 1.0) <= 1e-9))
            throw Error(ErrorKind::InvalidArgument, "wall normal is not unit length");
}

WallSurface WallSurface::subset(std::span<const std::size_t> indices) const {
    std::vector<Vec3> p, n;
    p.reserve(indices.size());
    n.reserve(indices.size());
    for (auto i : indices) {
        if (i >= points_.size()) throw Error(ErrorKind::InvalidArgument, "wall index out of range");
        p.push_back(points_[i]);
        n.push_back(normals_[i]);
    }
    return WallSurface(std::move(p), std::move(n), provenance_);
}

void NondimParams::validate() const {
    if (!(D > 0.0)) throw Error(ErrorKind::InvalidArgument, "D must be positive");
    for (int i = 0; i < 3; ++i)
        if (!(dx[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "dx must be positive");
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
}

Eigen::Vector4d NondimParams::nondimensionalize(const Vec3& x, double t) const {
    Eigen::Vector4d q;
    for (int i = 0; i < 3; ++i) q[i] = (x[i] - x_min[i]) / dx[i] * D;
    q[3] = (t - t_min) / dt * D;
    return q;
}

Point4 NondimParams::denormalize(const Eigen::Vector4d& q) const {
    Point4 p;
    for (int i = 0; i < 3; ++i) p.x[i] = q[i] / D * dx[i] + x_min[i];
    p.t = q[3] / D * dt + t_min;
    return p;
}

NondimParams nondim_for(const GridGeometry& geometry, double D) {
    NondimParams p;
    p.x_min = geometry.origin;
    p.t_min = geometry.t0;
    p.dx = geometry.spacing;
    p.dt = geometry.dt;
    p.D = D;
    p.validate();
    return p;
}

std::vector<Vec3> fluid_voxel_centers(const VelocityImage& img, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "fluid fraction must lie in (0, 1]");
    const auto& g = img.geometry();
    std::vector<Vec3> pts;
    for (std::size_t r = 0; r < g.dims.nr; ++r)
        for (std::size_t c = 0; c < g.dims.nc; ++c)
            for (std::size_t s = 0; s < g.dims.ns; ++s)
                if (img.fluid_all_frames(r, c, s)) pts.push_back(g.position(r, c, s));
    if (fraction < 1.0) {
        const auto n = static_cast<std::size_t>(std::llround(fraction * double(pts.size())));
        std::vector<Vec3> kept;
        for (auto i : sample_wall_indices(pts.size(), n, seed)) kept.push_back(pts[i]);
        pts = std::move(kept);
    }
    return pts;
}

namespace {

// Voxel index of a point that must sit on a voxel center.
bool voxel_of(const GridGeometry& g, const Vec3& x, std::size_t idx[3]) {
    const std::size_t n[3] = {g.dims.nr, g.dims.nc, g.dims.ns};
    for (int i = 0; i < 3; ++i) {
        const double f = (x[i] - g.origin[i]) / g.spacing[i];
        const double k = std::round(f);
        if (std::abs(f - k) > 1e-6 || k < 0.0 || k >= double(n[i])) return false;
        idx[i] = static_cast<std::size_t>(k);
    }
    return true;
}

} // namespace

SampleSet build_sample_set(const VelocityImage& img, std::span<const Vec3> fluid_points,
                           const WallSurface& wall, const NondimParams& params) {
    params.validate();
    if (fluid_points.empty()) throw Error(ErrorKind::EmptyInput, "no fluid coordinates");
    if (wall.empty()) throw Error(ErrorKind::EmptyInput, "no wall coordinates");

    const auto& g = img.geometry();
    const std::size_t nt = g.dims.nt;
    SampleSet s;
    s.params = params;
    s.n_fluid = fluid_points.size();
    s.n_wall = wall.size();
    s.n_frames = nt;
    const std::size_t rows = (s.n_fluid + s.n_wall) * nt;
    s.coords.resize(4, static_cast<Eigen::Index>(rows));
    s.targets.resize(3, static_cast<Eigen::Index>(rows));
    s.kinds.reserve(rows);

    Eigen::Index row = 0;
    for (const auto& x : fluid_points) {
        std::size_t idx[3];
        if (!voxel_of(g, x, idx) || !img.fluid_all_frames(idx[0], idx[1], idx[2]))
            throw Error(ErrorKind::FluidCoordOutsideMask,
                        "fluid coordinate does not index a fluid voxel center");
        for (std::size_t t = 0; t < nt; ++t, ++row) {
            s.coords.col(row) = params.nondimensionalize(x, g.time(t));
            s.targets.col(row) = img.at(idx[0], idx[1], idx[2], t);
            if (!s.targets.col(row).allFinite())
                throw Error(ErrorKind::InvalidArgument, "non-finite fluid target");
            s.kinds.push_back(SampleKind::Fluid);
        }
    }
    for (const auto& x : wall.points()) {
        for (std::size_t t = 0; t < nt; ++t, ++row) {
            s.coords.col(row) = params.nondimensionalize(x, g.time(t));
            s.targets.col(row).setZero();
            s.kinds.push_back(SampleKind::Wall);
        }
    }
    return s;
}

std::vector<std::size_t> sample_wall_indices(std::size_t surface_size, std::size_t n,
                                             std::uint64_t seed) {
    if (n > surface_size)
        throw Error(ErrorKind::NotEnoughPoints, "requested more wall points than available");
    std::vector<std::size_t> idx(surface_size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    // partial Fisher-Yates
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, surface_size - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

WallSurface sample_wall(const WallSurface& surface, std::size_t n, std::uint64_t seed) {
    const auto idx = sample_wall_indices(surface.size(), n, seed);
    return surface.subset(idx);
}

} // namespace sirenflow
