#include "sirenflow/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sirenflow/error.hpp"
#include "sirenflow/parallel.hpp"
#include "sirenflow/rng.hpp"

namespace sirenflow {

namespace {

enum StreamTag : std::uint64_t { kMaskStream = 1, kNoiseStream = 2 };

using Dims3 = std::array<std::size_t, 3>;

Dims3 spatial_dims(const GridDims& d) { return {d.nr, d.nc, d.ns}; }

} // namespace

void DegradationConfig::validate() const {
    if (h < 1) throw Error(ErrorKind::InvalidArgument, "h must be >= 1");
    if (!(snr > 0.0)) throw Error(ErrorKind::InvalidArgument, "snr must be positive");
    if (!(s_percent > 0.0 && s_percent <= 100.0))
        throw Error(ErrorKind::InvalidArgument, "s_percent must lie in (0, 100]");
    if (venc)
        for (int i = 0; i < 3; ++i)
            if (!((*venc)[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "venc must be positive");
    for (auto e : calibration_extent)
        if (e == 0) throw Error(ErrorKind::InvalidArgument, "calibration extent must be >= 1");
}

DegradationConfig DegradationConfig::preset(std::string_view level) {
    DegradationConfig c;
    if (level == "mild") {
        c.snr = 20.0;
        c.s_percent = 99.0;
    } else if (level == "medium") {
        c.snr = 5.0;
        c.s_percent = 95.0;
    } else if (level == "extreme") {
        c.snr = 2.0;
        c.s_percent = 68.0;
    } else {
        throw Error(ErrorKind::BadSpec, "unknown noise level '" + std::string(level) +
                                            "' (expected mild, medium or extreme)");
    }
    return c;
}

bool KspaceMask::in_calibration(std::size_t r, std::size_t c, std::size_t s) const {
    const std::size_t q[3] = {r, c, s};
    for (int a = 0; a < 3; ++a) {
        const long e = long(calibration_extent[a]);
        const long f = fft_frequency(q[a], dims[a]);
        if (f < -(e / 2) || f > e - 1 - e / 2) return false;
    }
    return true;
}

VelocityImage temporal_downsample(const VelocityImage& frames, int h) {
    if (h < 1) throw Error(ErrorKind::InvalidArgument, "h must be >= 1");
    const auto& g = frames.geometry();
    const std::size_t hh = static_cast<std::size_t>(h);
    if (g.dims.nt % hh != 0)
        throw Error(ErrorKind::NotDivisible, "frame count " + std::to_string(g.dims.nt) +
                                                 " is not divisible by h=" + std::to_string(h));
    GridGeometry out_geom = g;
    out_geom.dims.nt = g.dims.nt / hh;
    out_geom.dt = g.dt * double(h);
    out_geom.t0 = g.t0 + 0.5 * double(h - 1) * g.dt;
    VelocityImage out(out_geom);
    std::vector<std::uint8_t> mask;
    if (frames.has_mask()) mask.assign(out_geom.dims.voxels(), 1);

    for (std::size_t r = 0; r < g.dims.nr; ++r)
        for (std::size_t c = 0; c < g.dims.nc; ++c)
            for (std::size_t s = 0; s < g.dims.ns; ++s)
                for (std::size_t j = 0; j < out_geom.dims.nt; ++j) {
                    Vec3 acc = Vec3::Zero();
                    bool fluid = true;
                    for (std::size_t k = j * hh; k < (j + 1) * hh; ++k) {
                        acc += frames.at(r, c, s, k);
                        fluid = fluid && frames.fluid(r, c, s, k);
                    }
                    out.set(r, c, s, j, acc / double(h));
                    if (!mask.empty()) mask[out.voxel_index(r, c, s, j)] = fluid ? 1 : 0;
                }
    if (!mask.empty()) out.set_mask(std::move(mask));
    return out;
}

VelocityImage resample_to_grid(const VelocityImage& source, const GridGeometry& target) {
    GridGeometry geom = target;
    const auto& sg = source.geometry();
    geom.dims.nt = sg.dims.nt;
    geom.dt = sg.dt;
    geom.t0 = sg.t0;
    geom.validate();
    VelocityImage out(geom);
    std::vector<std::uint8_t> mask(geom.dims.voxels(), 0);
    const std::size_t n[3] = {sg.dims.nr, sg.dims.nc, sg.dims.ns};
    constexpr double tol = 1e-9;

    for (std::size_t r = 0; r < geom.dims.nr; ++r)
        for (std::size_t c = 0; c < geom.dims.nc; ++c)
            for (std::size_t s = 0; s < geom.dims.ns; ++s) {
                const Vec3 x = geom.position(r, c, s);
                std::size_t base[3];
                double frac[3];
                bool inside = true;
                for (int a = 0; a < 3; ++a) {
                    double f = (x[a] - sg.origin[a]) / sg.spacing[a];
                    if (f < -tol || f > double(n[a] - 1) + tol) {
                        inside = false;
                        break;
                    }
                    f = std::clamp(f, 0.0, double(n[a] - 1));
                    base[a] = std::min(static_cast<std::size_t>(std::floor(f)), n[a] > 1 ? n[a] - 2 : 0);
                    frac[a] = n[a] > 1 ? f - double(base[a]) : 0.0;
                }
                if (!inside) continue;
                for (std::size_t t = 0; t < geom.dims.nt; ++t) {
                    Vec3 v = Vec3::Zero();
                    bool fluid = true;
                    for (int corner = 0; corner < 8; ++corner) {
                        double w = 1.0;
                        std::size_t idx[3];
                        for (int a = 0; a < 3; ++a) {
                            const int bit = (corner >> a) & 1;
                            w *= bit ? frac[a] : 1.0 - frac[a];
                            idx[a] = std::min(base[a] + std::size_t(bit), n[a] - 1);
                        }
                        if (w == 0.0) continue;
                        v += w * source.at(idx[0], idx[1], idx[2], t);
                        fluid = fluid && source.fluid(idx[0], idx[1], idx[2], t);
                    }
                    out.set(r, c, s, t, v);
                    mask[out.voxel_index(r, c, s, t)] = fluid ? 1 : 0;
                }
            }
    out.set_mask(std::move(mask));
    return out;
}

Vec3 auto_venc(const VelocityImage& img) {
    const auto& d = img.dims();
    Vec3 vmax = Vec3::Zero();
    for (std::size_t r = 0; r < d.nr; ++r)
        for (std::size_t c = 0; c < d.nc; ++c)
            for (std::size_t s = 0; s < d.ns; ++s)
                for (std::size_t t = 0; t < d.nt; ++t)
                    if (img.fluid(r, c, s, t)) vmax = vmax.cwiseMax(img.at(r, c, s, t).cwiseAbs());
    const double largest = vmax.maxCoeff();
    if (largest == 0.0) return Vec3::Ones();
    for (int i = 0; i < 3; ++i)
        if (vmax[i] == 0.0) vmax[i] = largest;
    return 1.1 * vmax;
}

ComplexImage phase_encode(const VelocityImage& img, std::size_t frame, const Vec3& venc) {
    const auto& d = img.dims();
    if (frame >= d.nt) throw Error(ErrorKind::InvalidArgument, "frame index out of range");
    for (int i = 0; i < 3; ++i)
        if (!(venc[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "venc must be positive");
    ComplexImage out;
    out.dims = spatial_dims(d);
    out.venc = venc;
    for (auto& ch : out.channels) ch = ComplexGrid(out.dims);
    for (std::size_t r = 0; r < d.nr; ++r)
        for (std::size_t c = 0; c < d.nc; ++c)
            for (std::size_t s = 0; s < d.ns; ++s) {
                if (!img.fluid(r, c, s, frame)) continue;
                const Vec3 v = img.at(r, c, s, frame);
                const std::size_t k = out.channels[0].index(r, c, s);
                out.channels[0].data[k] = 1.0;
                for (int i = 0; i < 3; ++i) {
                    if (!(std::abs(v[i]) < venc[i]))
                        throw Error(ErrorKind::VencExceeded,
                                    "velocity " + std::to_string(v[i]) + " m/s reaches venc " +
                                        std::to_string(venc[i]) + " m/s on axis " + std::to_string(i));
                    out.channels[std::size_t(i) + 1].data[k] = std::polar(1.0, std::numbers::pi * v[i] / venc[i]);
                }
            }
    return out;
}

DecodedFrame phase_decode(const ComplexImage& image, const Vec3& venc) {
    DecodedFrame out;
    out.dims = image.dims;
    const std::size_t n = image.dims[0] * image.dims[1] * image.dims[2];
    out.velocity.assign(3 * n, 0.0);
    out.magnitude.assign(n, 0.0);
    const auto& ref = image.channels[0].data;
    for (std::size_t k = 0; k < n; ++k) {
        out.magnitude[k] = std::abs(ref[k]);
        for (std::size_t i = 0; i < 3; ++i) {
            const cdouble z = image.channels[i + 1].data[k] * std::conj(ref[k]);
            out.velocity[3 * k + i] = venc[int(i)] * std::arg(z) / std::numbers::pi;
        }
    }
    return out;
}

ComplexGrid kspace_truncate(const ComplexGrid& k) {
    for (auto n : k.dims)
        if (n % 2 != 0 || n == 0) throw Error(ErrorKind::OddDims, "k-space dims must be even");
    const Dims3 half{k.dims[0] / 2, k.dims[1] / 2, k.dims[2] / 2};
    ComplexGrid out(half);
    const double scale = double(out.size()) / double(k.size());
    for (std::size_t r = 0; r < half[0]; ++r) {
        const std::size_t ir = fft_index(fft_frequency(r, half[0]), k.dims[0]);
        for (std::size_t c = 0; c < half[1]; ++c) {
            const std::size_t ic = fft_index(fft_frequency(c, half[1]), k.dims[1]);
            for (std::size_t s = 0; s < half[2]; ++s) {
                const std::size_t is = fft_index(fft_frequency(s, half[2]), k.dims[2]);
                out(r, c, s) = scale * k(ir, ic, is);
            }
        }
    }
    return out;
}

double kspace_noise_sigma(double signal, double snr, std::size_t n_voxels) {
    if (!std::isfinite(snr)) return 0.0;
    return signal / snr * std::sqrt(double(n_voxels));
}

void add_kspace_noise(ComplexGrid& k, double snr, double signal, std::uint64_t seed) {
    if (!(snr > 0.0)) throw Error(ErrorKind::InvalidArgument, "snr must be positive");
    if (!std::isfinite(snr)) return;
    const double sigma = kspace_noise_sigma(signal, snr, k.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (auto& v : k.data) {
        const double re = normal(rng);
        const double im = normal(rng);
        v += cdouble(re, im);
    }
}

KspaceMask make_mask(Dims3 dims, double s_percent, Dims3 calibration_extent, std::uint64_t seed) {
    if (!(s_percent > 0.0 && s_percent <= 100.0))
        throw Error(ErrorKind::InvalidArgument, "s_percent must lie in (0, 100]");
    KspaceMask m;
    m.dims = dims;
    m.calibration_extent = calibration_extent;
    const std::size_t n = dims[0] * dims[1] * dims[2];
    if (n == 0) throw Error(ErrorKind::DegenerateGrid, "empty k-space grid");
    if (s_percent >= 100.0) {
        m.keep.assign(n, 1);
        m.retained_fraction = 1.0;
        return m;
    }
    for (int a = 0; a < 3; ++a)
        if (calibration_extent[a] > dims[a])
            throw Error(ErrorKind::InvalidArgument, "calibration block exceeds the k-space grid");

    m.keep.assign(n, 0);
    std::size_t calibration = 0;
    for (std::size_t r = 0; r < dims[0]; ++r)
        for (std::size_t c = 0; c < dims[1]; ++c)
            for (std::size_t s = 0; s < dims[2]; ++s)
                if (m.in_calibration(r, c, s)) {
                    m.keep[(r * dims[1] + c) * dims[2] + s] = 1;
                    ++calibration;
                }
    const auto budget = static_cast<std::size_t>(std::llround(s_percent / 100.0 * double(n)));
    if (budget < calibration)
        throw Error(ErrorKind::InfeasibleBudget, "S=" + std::to_string(s_percent) +
                                                     "% cannot cover the calibration block");

    // Weighted sampling without replacement (exponential-key method) with
    // Gaussian weights in normalized frequency; keeps exactly `budget` entries.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double inv_two_sigma2 = 1.0 / (2.0 * m.density_sigma * m.density_sigma);
    std::vector<std::pair<double, std::size_t>> keys;
    keys.reserve(n - calibration);
    for (std::size_t r = 0; r < dims[0]; ++r)
        for (std::size_t c = 0; c < dims[1]; ++c)
            for (std::size_t s = 0; s < dims[2]; ++s) {
                const std::size_t idx = (r * dims[1] + c) * dims[2] + s;
                const double u = 1.0 - unif(rng); // (0, 1]
                if (m.keep[idx]) continue;
                double r2 = 0.0;
                const std::size_t q[3] = {r, c, s};
                for (int a = 0; a < 3; ++a) {
                    const double f = double(fft_frequency(q[a], dims[a])) / (0.5 * double(dims[a]));
                    r2 += f * f;
                }
                const double w = std::exp(-r2 * inv_two_sigma2);
                keys.emplace_back(std::log(u) / w, idx);
            }
    const std::size_t extra = budget - calibration;
    auto by_key = [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    };
    if (extra > 0) {
        std::nth_element(keys.begin(), keys.begin() + std::ptrdiff_t(extra - 1), keys.end(), by_key);
        for (std::size_t i = 0; i < extra; ++i) m.keep[keys[i].second] = 1;
    }
    m.retained_fraction = double(budget) / double(n);
    return m;
}

void apply_kspace_mask(ComplexGrid& k, const KspaceMask& mask) {
    if (mask.dims != k.dims) throw Error(ErrorKind::InvalidArgument, "mask dims do not match k-space");
    for (std::size_t i = 0; i < k.size(); ++i)
        if (!mask.keep[i]) k.data[i] = 0.0;
}

VelocityImage degrade(const VelocityImage& clean, const DegradationConfig& cfg, DegradeReport* report) {
    cfg.validate();
    const auto& d0 = clean.dims();
    if (d0.nr % 2 || d0.nc % 2 || d0.ns % 2)
        throw Error(ErrorKind::OddDims, "spatial dims must be even for k-space truncation");

    const VelocityImage pooled = temporal_downsample(clean, cfg.h);
    const Vec3 venc = cfg.venc ? *cfg.venc : auto_venc(pooled);
    const auto& pg = pooled.geometry();

    GridGeometry og = pg;
    og.dims.nr /= 2;
    og.dims.nc /= 2;
    og.dims.ns /= 2;
    og.spacing = 2.0 * pg.spacing;
    VelocityImage out(og);
    std::vector<std::uint8_t> out_mask(og.dims.voxels(), 0);
    const Dims3 half = spatial_dims(og.dims);
    const std::size_t nt = og.dims.nt;

    // sample n of the half-resolution grid sits where full-resolution voxel 2n sat
    for (std::size_t r = 0; r < half[0]; ++r)
        for (std::size_t c = 0; c < half[1]; ++c)
            for (std::size_t s = 0; s < half[2]; ++s)
                for (std::size_t t = 0; t < nt; ++t)
                    out_mask[out.voxel_index(r, c, s, t)] = pooled.fluid(2 * r, 2 * c, 2 * s, t) ? 1 : 0;

    DegradeReport rep;
    rep.venc = venc;
    rep.signal_level.assign(nt, 0.0);
    rep.kspace_noise_sigma.assign(nt, 0.0);
    rep.retained_fraction.assign(nt, 1.0);

    parallel_for(nt, [&](std::size_t t) {
        const ComplexImage encoded = phase_encode(pooled, t, venc);
        ComplexImage acquired;
        acquired.dims = half;
        acquired.venc = venc;
        for (std::size_t i = 0; i < 4; ++i) {
            ComplexGrid k = encoded.channels[i];
            fft_forward(k);
            acquired.channels[i] = kspace_truncate(k);
        }

        ComplexGrid reference = acquired.channels[0];
        fft_inverse(reference);
        double sum = 0.0, all = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 0; k < reference.size(); ++k) {
            const double mag = std::abs(reference.data[k]);
            all += mag;
            const std::size_t r = k / (half[1] * half[2]);
            const std::size_t c = (k / half[2]) % half[1];
            const std::size_t s = k % half[2];
            if (out_mask[out.voxel_index(r, c, s, t)]) {
                sum += mag;
                ++count;
            }
        }
        const double signal = count > 0 ? sum / double(count) : all / double(reference.size());
        rep.signal_level[t] = signal;
        rep.kspace_noise_sigma[t] = kspace_noise_sigma(signal, cfg.snr, reference.size());

        const KspaceMask mask =
            make_mask(half, cfg.s_percent, cfg.calibration_extent, derive_seed(cfg.seed, {t, kMaskStream}));
        rep.retained_fraction[t] = mask.retained_fraction;
        rep.mask_density_sigma = mask.density_sigma;
        for (std::size_t i = 0; i < 4; ++i) {
            auto& k = acquired.channels[i];
            add_kspace_noise(k, cfg.snr, signal, derive_seed(cfg.seed, {t, kNoiseStream, i}));
            apply_kspace_mask(k, mask);
            fft_inverse(k);
        }
        const DecodedFrame frame = phase_decode(acquired, venc);
        for (std::size_t r = 0; r < half[0]; ++r)
            for (std::size_t c = 0; c < half[1]; ++c)
                for (std::size_t s = 0; s < half[2]; ++s) {
                    const std::size_t k = (r * half[1] + c) * half[2] + s;
                    out.set(r, c, s, t,
                            Vec3(frame.velocity[3 * k], frame.velocity[3 * k + 1], frame.velocity[3 * k + 2]));
                }
    });
    out.set_mask(std::move(out_mask));
    if (report) *report = std::move(rep);
    return out;
}

} // namespace sirenflow
