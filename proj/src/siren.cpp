#include "sirenflow/siren.hpp"

#include <cmath>
#include <random>

#include "sirenflow/error.hpp"
#include "sirenflow/parallel.hpp"

namespace sirenflow {

namespace {

constexpr Eigen::Index kChunk = 1024;

Eigen::Index chunk_count(Eigen::Index n) { return (n + kChunk - 1) / kChunk; }

} // namespace

void FitConfig::validate() const {
    if (depth < 1) throw Error(ErrorKind::InvalidArgument, "depth must be >= 1");
    if (width < 1) throw Error(ErrorKind::InvalidArgument, "width must be >= 1");
    if (!(omega0 > 0.0)) throw Error(ErrorKind::InvalidArgument, "omega0 must be positive");
    if (!(tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
    if (max_iterations < 0) throw Error(ErrorKind::InvalidArgument, "max_iterations must be >= 0");
    if (history < 1) throw Error(ErrorKind::InvalidArgument, "history must be >= 1");
}

SirenModel::SirenModel(int depth, int width, double omega0, const NondimParams& params)
    : depth_(depth), width_(width), omega0_(omega0), nondim_(params) {
    if (depth < 1 || width < 1 || !(omega0 > 0.0))
        throw Error(ErrorKind::InvalidArgument, "invalid SIREN architecture");
    Eigen::Index offset = 0;
    Eigen::Index in = 4;
    for (int l = 0; l <= depth; ++l) {
        const Eigen::Index out = (l == depth) ? 3 : width;
        layers_.push_back({out, in, offset});
        offset += out * in + out;
        in = out;
    }
    params_ = Eigen::VectorXd::Zero(offset);
}

void SirenModel::set_parameters(const Eigen::VectorXd& p) {
    if (p.size() != params_.size())
        throw Error(ErrorKind::InvalidArgument, "parameter vector has the wrong length");
    params_ = p;
}

SirenModel init_model(const FitConfig& cfg, const NondimParams& params) {
    cfg.validate();
    SirenModel m(cfg.depth, cfg.width, cfg.omega0, params);
    m.set_seed(cfg.seed);
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t l = 0; l < m.layer_count(); ++l) {
        const double bound = std::sqrt(6.0 / double(m.layer(l).cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        auto W = m.weight(l);
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = u(rng);
        auto b = m.bias(l);
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
    }
    return m;
}

namespace {

Eigen::MatrixXd pre_activation(const SirenModel& m, std::size_t l, const Eigen::MatrixXd& in) {
    Eigen::MatrixXd z = m.weight(l) * in;
    if (l == 0) z *= m.omega0();
    z.colwise() += m.bias(l);
    return z;
}

} // namespace

Eigen::Matrix3Xd forward(const SirenModel& m, const Eigen::Ref<const Eigen::Matrix4Xd>& coords) {
    const Eigen::Index n = coords.cols();
    Eigen::Matrix3Xd out(3, n);
    const Eigen::Index chunks = chunk_count(n);
    parallel_for(static_cast<std::size_t>(chunks), [&](std::size_t c) {
        const Eigen::Index begin = Eigen::Index(c) * kChunk;
        const Eigen::Index len = std::min(kChunk, n - begin);
        Eigen::MatrixXd a = coords.middleCols(begin, len);
        for (std::size_t l = 0; l + 1 < m.layer_count(); ++l)
            a = pre_activation(m, l, a).array().sin().matrix();
        Eigen::MatrixXd y = m.weight(m.layer_count() - 1) * a;
        y.colwise() += m.bias(m.layer_count() - 1);
        out.middleCols(begin, len) = y;
    });
    return out;
}

namespace {

struct ChunkResult {
    double data_term = 0.0;
    double wall_term = 0.0;
    Eigen::VectorXd grad;
};

ChunkResult chunk_loss(const SirenModel& m, const SampleSet& s, Eigen::Index begin, Eigen::Index len,
                       double scale, bool want_grad) {
    const std::size_t L = m.layer_count();
    // activations[l] is the input to layer l; cosines[l] the derivative of the sine of layer l
    std::vector<Eigen::MatrixXd> activations(L);
    std::vector<Eigen::MatrixXd> cosines(L - 1);
    activations[0] = s.coords.middleCols(begin, len);
    for (std::size_t l = 0; l + 1 < L; ++l) {
        Eigen::MatrixXd z = pre_activation(m, l, activations[l]);
        if (want_grad) cosines[l] = z.array().cos().matrix();
        activations[l + 1] = z.array().sin().matrix();
    }
    Eigen::MatrixXd residual = m.weight(L - 1) * activations[L - 1];
    residual.colwise() += m.bias(L - 1);
    residual -= s.targets.middleCols(begin, len);

    ChunkResult r;
    for (Eigen::Index j = 0; j < len; ++j) {
        const double sq = residual.col(j).squaredNorm();
        if (s.kinds[std::size_t(begin + j)] == SampleKind::Fluid)
            r.data_term += sq;
        else
            r.wall_term += sq;
    }
    r.data_term *= scale;
    r.wall_term *= scale;
    if (!want_grad) return r;

    r.grad = Eigen::VectorXd::Zero(m.parameters().size());
    Eigen::MatrixXd g = (2.0 * scale) * residual; // dL/d(layer output)
    for (std::size_t l = L; l-- > 0;) {
        const auto& layer = m.layer(l);
        if (l + 1 < L) g.array() *= cosines[l].array();
        Eigen::Map<RowMatrix> dW(r.grad.data() + layer.offset, layer.rows, layer.cols);
        Eigen::Map<Eigen::VectorXd> db(r.grad.data() + layer.offset + layer.rows * layer.cols, layer.rows);
        dW.noalias() = g * activations[l].transpose();
        if (l == 0) dW *= m.omega0();
        db = g.rowwise().sum();
        if (l > 0) g = m.weight(l).transpose() * g;
    }
    return r;
}

} // namespace

LossReport loss_and_grad(const SirenModel& m, const SampleSet& s, Eigen::VectorXd* grad,
                         LossNormalization norm) {
    const Eigen::Index n = static_cast<Eigen::Index>(s.size());
    if (n == 0) throw Error(ErrorKind::EmptySampleSet, "sample set has no rows");
    const double scale = norm == LossNormalization::Mean ? 1.0 / double(n) : 1.0;
    const Eigen::Index chunks = chunk_count(n);
    std::vector<ChunkResult> parts(static_cast<std::size_t>(chunks));
    parallel_for(parts.size(), [&](std::size_t c) {
        const Eigen::Index begin = Eigen::Index(c) * kChunk;
        parts[c] = chunk_loss(m, s, begin, std::min(kChunk, n - begin), scale, grad != nullptr);
    });

    // fixed-order reduction keeps results independent of the thread count
    LossReport report;
    for (const auto& p : parts) {
        report.data_term += p.data_term;
        report.wall_term += p.wall_term;
    }
    report.total = report.data_term + report.wall_term;
    if (grad) {
        *grad = parts.front().grad;
        for (std::size_t c = 1; c < parts.size(); ++c) *grad += parts[c].grad;
        report.gradient_norm = grad->lpNorm<Eigen::Infinity>();
    }
    return report;
}

void SirenSampler::sample(std::span<const Point4> points, std::span<Vec3> out) const {
    Eigen::Matrix4Xd coords(4, static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i)
        coords.col(Eigen::Index(i)) = model_.nondim().nondimensionalize(points[i].x, points[i].t);
    const Eigen::Matrix3Xd v = forward(model_, coords);
    for (std::size_t i = 0; i < points.size(); ++i) out[i] = v.col(Eigen::Index(i));
}

bool SirenSampler::contains(const Vec3& x, double t) const {
    return !model_.domain() || model_.domain()->contains(x, t);
}

} // namespace sirenflow
