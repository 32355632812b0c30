#include "sirenflow/wss.hpp"

#include <cmath>

#include "sirenflow/error.hpp"

namespace sirenflow {

namespace {

constexpr double kMmToM = 1e-3;

Vec3 tangential(const Vec3& v, const Vec3& n) { return v - v.dot(n) * n; }

Vec3 shear(const Vec3& v1, const Vec3& v2, const Vec3& n, const WssConfig& cfg) {
    const Vec3 d = (4.0 * tangential(v1, n) - tangential(v2, n)) / (2.0 * cfg.delta_n * kMmToM);
    return cfg.mu * tangential(d, n);
}

} // namespace

void WssConfig::validate() const {
    if (!(mu > 0.0)) throw Error(ErrorKind::InvalidArgument, "mu must be positive");
    if (!(delta_n > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta_n must be positive");
}

Vec3 wss_at(const VelocitySampler& sampler, const Vec3& p, const Vec3& n, double t, const WssConfig& cfg) {
    cfg.validate();
    const Point4 probes[2] = {{p + cfg.delta_n * n, t}, {p + 2.0 * cfg.delta_n * n, t}};
    for (const auto& q : probes)
        if (!sampler.contains(q.x, q.t))
            throw Error(ErrorKind::OutsideDomain, "wall probe at (" + std::to_string(q.x[0]) + ", " +
                                                      std::to_string(q.x[1]) + ", " + std::to_string(q.x[2]) +
                                                      ") mm, t=" + std::to_string(t) + " s is outside the field");
    Vec3 v[2];
    sampler.sample(probes, v);
    return shear(v[0], v[1], n, cfg);
}

std::size_t WssField::flagged_points() const {
    std::size_t count = 0;
    const std::size_t nt = times.size();
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = 0; j < nt; ++j)
            if (flagged[i * nt + j]) {
                ++count;
                break;
            }
    return count;
}

WssField wss_field(const VelocitySampler& sampler, const WallSurface& wall, const std::vector<double>& times,
                   const WssConfig& cfg) {
    cfg.validate();
    if (times.empty()) throw Error(ErrorKind::EmptyInput, "no evaluation times");
    WssField f;
    f.points = wall.points();
    f.normals = wall.normals();
    f.times = times;
    const std::size_t np = f.points.size(), nt = times.size();
    f.wss.assign(np * nt, Vec3::Zero());
    f.flagged.assign(np * nt, 0);
    f.tawss.assign(np, 0.0);

    std::vector<Point4> probes;
    std::vector<std::size_t> slots;
    probes.reserve(2 * np * nt);
    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = 0; j < nt; ++j) {
            const Point4 a{f.points[i] + cfg.delta_n * f.normals[i], times[j]};
            const Point4 b{f.points[i] + 2.0 * cfg.delta_n * f.normals[i], times[j]};
            if (!sampler.contains(a.x, a.t) || !sampler.contains(b.x, b.t)) {
                f.flagged[i * nt + j] = 1;
                continue;
            }
            probes.push_back(a);
            probes.push_back(b);
            slots.push_back(i * nt + j);
        }
    const auto v = sampler.sample(probes);
    for (std::size_t k = 0; k < slots.size(); ++k) {
        const std::size_t slot = slots[k];
        f.wss[slot] = shear(v[2 * k], v[2 * k + 1], f.normals[slot / nt], cfg);
    }
    for (std::size_t i = 0; i < np; ++i) {
        double sum = 0.0;
        std::size_t used = 0;
        for (std::size_t j = 0; j < nt; ++j)
            if (!f.flagged[i * nt + j]) {
                sum += f.wss[i * nt + j].norm();
                ++used;
            }
        f.tawss[i] = used ? sum / double(used) : 0.0;
    }
    return f;
}

std::vector<double> time_range(double t0, double dt, double t1) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "time step must be positive");
    if (t1 < t0) throw Error(ErrorKind::InvalidArgument, "time range is inverted");
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((t1 - t0) / dt + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) out.push_back(t0 + double(k) * dt);
    return out;
}

} // namespace sirenflow
