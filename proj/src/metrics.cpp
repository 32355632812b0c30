#include "sirenflow/metrics.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "sirenflow/error.hpp"

namespace sirenflow {

namespace {

double max_speed(std::span<const Vec3> ref, std::span<const Vec3> cand) {
    if (ref.size() != cand.size())
        throw Error(ErrorKind::InvalidArgument, "reference and candidate differ in length (" +
                                                    std::to_string(ref.size()) + " vs " +
                                                    std::to_string(cand.size()) + ")");
    if (ref.empty()) throw Error(ErrorKind::EmptyInput, "no evaluation points");
    double m = 0.0;
    for (const auto& v : ref) m = std::max(m, v.norm());
    if (!(m > 0.0)) throw Error(ErrorKind::ZeroReference, "reference field is zero at every evaluation point");
    return m;
}

} // namespace

double mnrmse(std::span<const Vec3> ref, std::span<const Vec3> cand) {
    const double m = max_speed(ref, cand);
    double sq = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = cand[i].norm() - ref[i].norm();
        sq += d * d;
    }
    return 100.0 * std::sqrt(sq / double(ref.size())) / m;
}

double vnrmse(std::span<const Vec3> ref, std::span<const Vec3> cand) {
    const double m = max_speed(ref, cand);
    double sq = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) sq += (cand[i] - ref[i]).squaredNorm();
    return 100.0 * std::sqrt(sq / double(ref.size())) / m;
}

double de(std::span<const Vec3> ref, std::span<const Vec3> cand, std::size_t* excluded, double floor) {
    if (ref.size() != cand.size()) throw Error(ErrorKind::InvalidArgument, "reference and candidate differ in length");
    if (ref.empty()) throw Error(ErrorKind::EmptyInput, "no evaluation points");
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double a = ref[i].norm(), b = cand[i].norm();
        if (a < floor || b < floor) continue;
        // 1 - |cos| written as sin^2 / (1 + |cos|): exact zero for parallel
        // vectors and free of cancellation near them
        const double c = std::min(1.0, std::abs(ref[i].dot(cand[i])) / (a * b));
        const double s = ref[i].cross(cand[i]).norm() / (a * b);
        sum += s * s / (1.0 + c);
        ++used;
    }
    if (excluded) *excluded = ref.size() - used;
    if (used == 0)
        throw Error(ErrorKind::AllPointsDegenerate, "every evaluation point is below the direction speed floor");
    return 100.0 * sum / double(used);
}

MetricsReport compare(std::span<const Vec3> ref, std::span<const Vec3> cand) {
    MetricsReport r;
    r.max_ref_speed = max_speed(ref, cand);
    r.k = ref.size();
    r.mnrmse = mnrmse(ref, cand);
    r.vnrmse = vnrmse(ref, cand);
    r.de = de(ref, cand, &r.de_excluded);
    return r;
}

MetricsReport compare(const VelocitySampler& ref, const VelocitySampler& cand, std::span<const Point4> points) {
    const auto a = ref.sample(points);
    const auto b = cand.sample(points);
    return compare(a, b);
}

} // namespace sirenflow
