#include "sirenflow/phantom.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "sirenflow/error.hpp"

namespace sirenflow {

namespace {

struct Local {
    double u, w, z; // coordinates along e1, e2, axis
};

Local to_local(const PhantomFrame& f, const PhantomSpec& spec, const Vec3& x) {
    const Vec3 d = x - spec.center;
    return {d.dot(f.e1), d.dot(f.e2), d.dot(f.axis)};
}

double minor_of(const PhantomSpec& spec) { return spec.minor_radius.value_or(spec.radius); }

// Radial envelope of the swirl without the no-slip factor.
double swirl_core(double r, double core) {
    const double q = r / core;
    return q * std::exp(0.5 - 0.5 * q * q);
}

} // namespace

double Waveform::operator()(double t) const {
    return mean + amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase);
}

void Waveform::validate() const {
    if (!std::isfinite(mean) || !std::isfinite(amplitude) || !std::isfinite(phase))
        throw Error(ErrorKind::BadSpec, "waveform values must be finite");
    if (!(period > 0.0)) throw Error(ErrorKind::BadSpec, "waveform period must be positive");
}

PhantomKind phantom_kind_from_string(std::string_view s) {
    if (s == "tube") return PhantomKind::Tube;
    if (s == "swirl") return PhantomKind::Swirl;
    throw Error(ErrorKind::BadSpec, "unknown phantom kind '" + std::string(s) + "' (expected tube or swirl)");
}

const char* to_string(PhantomKind k) { return k == PhantomKind::Tube ? "tube" : "swirl"; }

void PhantomSpec::validate() const {
    if (!(radius > 0.0)) throw Error(ErrorKind::BadSpec, "radius must be positive");
    if (minor_radius && !(*minor_radius > 0.0)) throw Error(ErrorKind::BadSpec, "minor_radius must be positive");
    if (kind == PhantomKind::Swirl && minor_radius && *minor_radius != radius)
        throw Error(ErrorKind::BadSpec, "swirl phantom requires a circular section");
    if (!(core > 0.0)) throw Error(ErrorKind::BadSpec, "core must be positive");
    if (!(axis.norm() > 0.0)) throw Error(ErrorKind::BadSpec, "axis must be nonzero");
    const Vec3 a = axis.normalized();
    if ((major - major.dot(a) * a).norm() < 1e-9 * std::max(1.0, major.norm()))
        throw Error(ErrorKind::BadSpec, "major direction must not be parallel to the axis");
    if (!center.allFinite()) throw Error(ErrorKind::BadSpec, "center must be finite");
    axial.validate();
    swirl.validate();
}

PhantomFrame phantom_frame(const PhantomSpec& spec) {
    PhantomFrame f;
    f.axis = spec.axis.normalized();
    f.e1 = (spec.major - spec.major.dot(f.axis) * f.axis).normalized();
    f.e2 = f.axis.cross(f.e1);
    return f;
}

bool phantom_inside(const PhantomSpec& spec, const Vec3& x) {
    const auto f = phantom_frame(spec);
    const Local l = to_local(f, spec, x);
    const double a = spec.radius, b = minor_of(spec);
    return l.u * l.u / (a * a) + l.w * l.w / (b * b) < 1.0;
}

Vec3 phantom_velocity(const PhantomSpec& spec, const Vec3& x, double t) {
    const auto f = phantom_frame(spec);
    const Local l = to_local(f, spec, x);
    const double a = spec.radius, b = minor_of(spec);
    const double rho2 = l.u * l.u / (a * a) + l.w * l.w / (b * b);
    if (rho2 >= 1.0) return Vec3::Zero();
    Vec3 v = spec.axial(t) * (1.0 - rho2) * f.axis;
    if (spec.kind == PhantomKind::Swirl) {
        const double r = std::hypot(l.u, l.w);
        if (r > 0.0) {
            const Vec3 e_theta = (l.u * f.e2 - l.w * f.e1) / r;
            v += spec.swirl(t) * swirl_core(r, spec.core) * (1.0 - rho2) * e_theta;
        }
    }
    return v;
}

Vec3 phantom_inward_normal(const PhantomSpec& spec, const Vec3& p) {
    const auto f = phantom_frame(spec);
    const Local l = to_local(f, spec, p);
    const double a = spec.radius, b = minor_of(spec);
    const Vec3 grad = l.u / (a * a) * f.e1 + l.w / (b * b) * f.e2;
    if (grad.norm() == 0.0) throw Error(ErrorKind::InvalidArgument, "normal undefined on the vessel axis");
    return -grad.normalized();
}

Vec3 phantom_wss(const PhantomSpec& spec, const Vec3& p, double t, double mu) {
    // Every component carries the factor (1 - rho^2); its inward derivative at
    // the wall is |grad rho^2| per mm, i.e. 1000 |grad rho^2| per metre.
    const auto f = phantom_frame(spec);
    const Local l = to_local(f, spec, p);
    const double a = spec.radius, b = minor_of(spec);
    const Vec3 grad = 2.0 * (l.u / (a * a) * f.e1 + l.w / (b * b) * f.e2);
    Vec3 amplitude = spec.axial(t) * f.axis;
    if (spec.kind == PhantomKind::Swirl) {
        const double r = std::hypot(l.u, l.w);
        const Vec3 e_theta = (l.u * f.e2 - l.w * f.e1) / r;
        amplitude += spec.swirl(t) * swirl_core(r, spec.core) * e_theta;
    }
    return mu * 1000.0 * grad.norm() * amplitude;
}

AnalyticSampler::AnalyticSampler(PhantomSpec spec, std::optional<Domain> domain)
    : spec_(std::move(spec)), domain_(domain) {
    spec_.validate();
}

void AnalyticSampler::sample(std::span<const Point4> points, std::span<Vec3> out) const {
    if (out.size() != points.size()) throw Error(ErrorKind::InvalidArgument, "output size mismatch");
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = phantom_velocity(spec_, points[i].x, points[i].t);
}

bool AnalyticSampler::contains(const Vec3& x, double t) const {
    return !domain_ || domain_->contains(x, t);
}

VelocityImage sample_on_grid(const PhantomSpec& spec, const GridGeometry& geometry) {
    spec.validate();
    geometry.validate();
    VelocityImage img(geometry);
    const auto& d = geometry.dims;
    std::vector<std::uint8_t> mask(d.voxels(), 0);
    for (std::size_t r = 0; r < d.nr; ++r)
        for (std::size_t c = 0; c < d.nc; ++c)
            for (std::size_t s = 0; s < d.ns; ++s) {
                const Vec3 x = geometry.position(r, c, s);
                const bool inside = phantom_inside(spec, x);
                for (std::size_t t = 0; t < d.nt; ++t) {
                    img.set(r, c, s, t, phantom_velocity(spec, x, geometry.time(t)));
                    mask[img.voxel_index(r, c, s, t)] = inside ? 1 : 0;
                }
            }
    img.set_mask(std::move(mask));
    return img;
}

WallSurface phantom_wall(const PhantomSpec& spec, std::size_t n_around, std::size_t n_along, double along_lo,
                         double along_hi) {
    spec.validate();
    if (n_around == 0 || n_along == 0) throw Error(ErrorKind::BadSpec, "wall resolution must be positive");
    if (along_hi < along_lo) throw Error(ErrorKind::BadSpec, "wall extent is inverted");
    const auto f = phantom_frame(spec);
    const double a = spec.radius, b = minor_of(spec);
    std::vector<Vec3> points, normals;
    points.reserve(n_around * n_along);
    normals.reserve(n_around * n_along);
    for (std::size_t k = 0; k < n_along; ++k) {
        const double z = n_along == 1 ? 0.5 * (along_lo + along_hi)
                                      : along_lo + (along_hi - along_lo) * double(k) / double(n_along - 1);
        for (std::size_t j = 0; j < n_around; ++j) {
            const double th = 2.0 * std::numbers::pi * double(j) / double(n_around);
            const double u = a * std::cos(th), w = b * std::sin(th);
            points.push_back(spec.center + u * f.e1 + w * f.e2 + z * f.axis);
            normals.push_back(-(u / (a * a) * f.e1 + w / (b * b) * f.e2).normalized());
        }
    }
    return WallSurface(std::move(points), std::move(normals), WallSurface::Provenance::Analytic);
}

} // namespace sirenflow
