#pragma once

#include <optional>
#include <string_view>

#include "sirenflow/field.hpp"
#include "sirenflow/sampler.hpp"

namespace sirenflow {

/// V(t) = mean + amplitude * sin(2 pi t / period + phase).
struct Waveform {
    double mean = 1.0;
    double amplitude = 0.0;
    double period = 1.0; // s
    double phase = 0.0;  // rad

    double operator()(double t) const;
    void validate() const;
};

enum class PhantomKind { Tube, Swirl };

PhantomKind phantom_kind_from_string(std::string_view s);
const char* to_string(PhantomKind k);

/// Analytic flow in a straight rigid vessel along `axis` through `center`.
///
/// Tube: elliptic cross-section with semi-axes `radius` (along `major`) and
/// `minor_radius`; Poiseuille profile v = V(t) (1 - rho^2) axis, rho^2 the
/// elliptic radius. Swirl: circular section of `radius`; the Tube axial profile
/// plus an azimuthal vortex u_theta = S(t) (r/core) exp(1/2 - r^2 / (2 core^2))
/// (1 - r^2 / R^2). Both are divergence-free and vanish on the wall.
struct PhantomSpec {
    PhantomKind kind = PhantomKind::Tube;
    Vec3 center = Vec3::Zero(); // mm
    Vec3 axis = Vec3::UnitZ();
    Vec3 major = Vec3::UnitX(); // projected onto the plane normal to axis
    double radius = 10.0;       // mm
    std::optional<double> minor_radius; // mm; defaults to radius
    Waveform axial;             // V(t), m/s at the centerline
    Waveform swirl{0.0, 0.0, 1.0, 0.0}; // S(t), peak azimuthal speed in m/s
    double core = 4.0;          // mm

    void validate() const;
};

/// Orthonormal frame (major, minor, axis) of a phantom.
struct PhantomFrame {
    Vec3 e1, e2, axis;
};
PhantomFrame phantom_frame(const PhantomSpec& spec);

Vec3 phantom_velocity(const PhantomSpec& spec, const Vec3& x, double t);
bool phantom_inside(const PhantomSpec& spec, const Vec3& x);

/// Exact wall shear stress (Pa) at wall point p with mu in Pa s.
Vec3 phantom_wss(const PhantomSpec& spec, const Vec3& p, double t, double mu);

/// Inward unit normal of the vessel wall at (or nearest to) p.
Vec3 phantom_inward_normal(const PhantomSpec& spec, const Vec3& p);

class AnalyticSampler final : public VelocitySampler {
public:
    explicit AnalyticSampler(PhantomSpec spec, std::optional<Domain> domain = std::nullopt);

    using VelocitySampler::sample;
    void sample(std::span<const Point4> points, std::span<Vec3> out) const override;
    bool contains(const Vec3& x, double t) const override;
    const PhantomSpec& spec() const { return spec_; }

private:
    PhantomSpec spec_;
    std::optional<Domain> domain_;
};

/// Field sampled at voxel centers; voxels strictly inside the vessel are fluid.
VelocityImage sample_on_grid(const PhantomSpec& spec, const GridGeometry& geometry);

/// Wall points on `n_around` angles x `n_along` axial stations spanning
/// [along_lo, along_hi] (mm, measured along the axis from `center`).
WallSurface phantom_wall(const PhantomSpec& spec, std::size_t n_around, std::size_t n_along,
                         double along_lo, double along_hi);

} // namespace sirenflow
