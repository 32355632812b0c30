#include "sirenflow/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/LU>
#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "sirenflow/error.hpp"
#include "sirenflow/parallel.hpp"

namespace sirenflow {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace {

struct Stencil {
    std::size_t lo;
    double frac;
};

Stencil stencil(double pos, std::size_t n, bool& clamped) {
    if (n == 1) {
        if (std::abs(pos) > 1e-9) clamped = true;
        return {0, 0.0};
    }
    const double hi = double(n - 1);
    if (pos < -1e-9 || pos > hi + 1e-9) clamped = true;
    pos = std::clamp(pos, 0.0, hi);
    if (const double node = std::round(pos); std::abs(pos - node) < 1e-9) pos = node;
    const auto lo = std::min(static_cast<std::size_t>(std::floor(pos)), n - 2);
    return {lo, pos - double(lo)};
}

Vec3 litp_one(const VelocityImage& img, const Point4& p, bool& clamped) {
    const auto& g = img.geometry();
    const std::size_t n[4] = {g.dims.nr, g.dims.nc, g.dims.ns, g.dims.nt};
    Stencil st[4];
    for (int a = 0; a < 3; ++a) st[a] = stencil((p.x[a] - g.origin[a]) / g.spacing[a], n[a], clamped);
    st[3] = stencil((p.t - g.t0) / g.dt, n[3], clamped);
    Vec3 v = Vec3::Zero();
    for (int corner = 0; corner < 16; ++corner) {
        double w = 1.0;
        std::size_t idx[4];
        for (int a = 0; a < 4; ++a) {
            const int bit = (corner >> a) & 1;
            w *= bit ? st[a].frac : 1.0 - st[a].frac;
            idx[a] = std::min(st[a].lo + std::size_t(bit), n[a] - 1);
        }
        if (w != 0.0) v += w * img.at(idx[0], idx[1], idx[2], idx[3]);
    }
    return v;
}

using BPoint = bg::model::point<double, 4, bg::cs::cartesian>;
using BValue = std::pair<BPoint, std::size_t>;

BPoint to_bpoint(const Eigen::Vector4d& p) {
    BPoint b;
    bg::set<0>(b, p[0]);
    bg::set<1>(b, p[1]);
    bg::set<2>(b, p[2]);
    bg::set<3>(b, p[3]);
    return b;
}

double mq(double r2, double c2) { return std::sqrt(r2 + c2); }

constexpr std::size_t kChunk = 256;

} // namespace

std::vector<Vec3> litp_query(const VelocityImage& img, std::span<const Point4> points,
                             std::vector<std::uint8_t>* clamped) {
    if (img.dims().voxels() == 0) throw Error(ErrorKind::EmptyInput, "empty image");
    std::vector<Vec3> out(points.size());
    if (clamped) clamped->assign(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool c = false;
        out[i] = litp_one(img, points[i], c);
        if (clamped) (*clamped)[i] = c ? 1 : 0;
    }
    return out;
}

void LitpSampler::sample(std::span<const Point4> points, std::span<Vec3> out) const {
    if (out.size() != points.size()) throw Error(ErrorKind::InvalidArgument, "output size mismatch");
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool c = false;
        out[i] = litp_one(img_, points[i], c);
    }
}

bool LitpSampler::contains(const Vec3& x, double t) const { return img_.geometry().domain().contains(x, t); }

void Rbf4dConfig::validate() const {
    if (k_neighbors < 4) throw Error(ErrorKind::InvalidArgument, "k_neighbors must be >= 4");
    if (c_mq && !(*c_mq > 0.0)) throw Error(ErrorKind::InvalidArgument, "c_mq must be positive");
    if (time_scale && !(*time_scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "time_scale must be positive");
}

struct Rbf4dModel::Index {
    bgi::rtree<BValue, bgi::rstar<16>> tree;
};

Rbf4dModel::~Rbf4dModel() = default;
Rbf4dModel::Rbf4dModel(Rbf4dModel&&) noexcept = default;
Rbf4dModel& Rbf4dModel::operator=(Rbf4dModel&&) noexcept = default;

std::size_t Rbf4dModel::size() const { return nodes_.size(); }

Rbf4dModel::Rbf4dModel(const SampleSet& samples, const Rbf4dConfig& cfg) {
    cfg.validate();
    samples.params.validate();
    k_ = cfg.k_neighbors;
    time_scale_ = cfg.time_scale.value_or(samples.params.dx.mean() / samples.params.dt);

    // Physical space-time with time stretched to mm; exact duplicates are averaged.
    std::map<std::array<double, 4>, std::pair<Vec3, std::size_t>> merged;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!cfg.include_wall_zeros && samples.kinds[i] == SampleKind::Wall) continue;
        const Point4 p = samples.params.denormalize(samples.coords.col(Eigen::Index(i)));
        const std::array<double, 4> key{p.x[0], p.x[1], p.x[2], p.t * time_scale_};
        auto [it, fresh] = merged.try_emplace(key, Vec3::Zero(), 0);
        it->second.first += samples.targets.col(Eigen::Index(i));
        ++it->second.second;
        if (!fresh) ++duplicates_;
    }
    if (merged.size() < k_)
        throw Error(ErrorKind::TooFewSamples, std::to_string(merged.size()) + " distinct samples but k_neighbors=" +
                                                  std::to_string(k_));
    std::vector<BValue> values;
    values.reserve(merged.size());
    for (const auto& [key, acc] : merged) {
        nodes_.emplace_back(key[0], key[1], key[2], key[3]);
        values_.push_back(acc.first / double(acc.second));
        values.emplace_back(to_bpoint(nodes_.back()), nodes_.size() - 1);
    }
    index_ = std::make_unique<Index>(Index{bgi::rtree<BValue, bgi::rstar<16>>(values.begin(), values.end())});

    bounds_.lo = bounds_.hi = nodes_[0].head<3>();
    bounds_.t_lo = bounds_.t_hi = nodes_[0][3] / time_scale_;
    for (const auto& n : nodes_) {
        bounds_.lo = bounds_.lo.cwiseMin(n.head<3>());
        bounds_.hi = bounds_.hi.cwiseMax(n.head<3>());
        bounds_.t_lo = std::min(bounds_.t_lo, n[3] / time_scale_);
        bounds_.t_hi = std::max(bounds_.t_hi, n[3] / time_scale_);
    }

    if (cfg.c_mq) {
        c_mq_ = *cfg.c_mq;
    } else {
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            std::vector<BValue> nn;
            index_->tree.query(bgi::nearest(to_bpoint(nodes_[i]), 2), std::back_inserter(nn));
            double best = std::numeric_limits<double>::infinity();
            for (const auto& v : nn)
                if (v.second != i) best = std::min(best, (nodes_[v.second] - nodes_[i]).norm());
            sum += best;
        }
        c_mq_ = sum / double(nodes_.size());
    }
}

void Rbf4dModel::query(std::span<const Point4> points, std::span<Vec3> out, std::vector<std::uint8_t>* flags) const {
    if (out.size() != points.size()) throw Error(ErrorKind::InvalidArgument, "output size mismatch");
    std::vector<std::uint8_t> local(points.size(), Ok);
    const double c2 = c_mq_ * c_mq_;
    const std::size_t k = k_;
    const std::size_t chunks = (points.size() + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t chunk) {
        Eigen::MatrixXd A(k + 1, k + 1);
        Eigen::MatrixXd rhs(k + 1, 3);
        std::vector<BValue> nn;
        std::vector<std::pair<double, std::size_t>> near;
        const std::size_t end = std::min(points.size(), (chunk + 1) * kChunk);
        for (std::size_t q = chunk * kChunk; q < end; ++q) {
            const Eigen::Vector4d x(points[q].x[0], points[q].x[1], points[q].x[2], points[q].t * time_scale_);
            nn.clear();
            index_->tree.query(bgi::nearest(to_bpoint(x), unsigned(k)), std::back_inserter(nn));
            near.clear();
            for (const auto& v : nn) near.emplace_back((nodes_[v.second] - x).squaredNorm(), v.second);
            std::sort(near.begin(), near.end());

            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t j = 0; j < k; ++j)
                    A(i, j) = mq((nodes_[near[i].second] - nodes_[near[j].second]).squaredNorm(), c2);
                A(i, k) = A(k, i) = 1.0;
                rhs.row(i) = values_[near[i].second].transpose();
            }
            A(k, k) = 0.0;
            rhs.row(k).setZero();

            const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            bool ok = lu.isInvertible();
            Eigen::MatrixXd w;
            if (ok) {
                w = lu.solve(rhs);
                ok = w.allFinite() && (A * w - rhs).norm() <= 1e-8 * (1.0 + rhs.norm());
            }
            if (ok) {
                Vec3 v = w.row(k).transpose();
                for (std::size_t i = 0; i < k; ++i)
                    v += mq(near[i].first, c2) * w.row(i).transpose();
                out[q] = v;
            } else {
                local[q] = IdwFallback;
                Vec3 v = Vec3::Zero();
                double wsum = 0.0;
                bool exact = false;
                for (std::size_t i = 0; i < k && !exact; ++i) {
                    if (near[i].first == 0.0) {
                        v = values_[near[i].second];
                        exact = true;
                    } else {
                        const double wi = 1.0 / near[i].first;
                        v += wi * values_[near[i].second];
                        wsum += wi;
                    }
                }
                out[q] = exact ? v : Vec3(v / wsum);
            }
        }
    });
    if (flags) *flags = std::move(local);
}

void Rbf4dSampler::sample(std::span<const Point4> points, std::span<Vec3> out) const { model_->query(points, out); }

bool Rbf4dSampler::contains(const Vec3& x, double t) const { return model_->bounds().contains(x, t); }

} // namespace sirenflow
