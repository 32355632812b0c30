#include "sirenflow/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "sirenflow/error.hpp"

namespace sirenflow::optim {

void LbfgsConfig::validate() const {
    if (max_iterations < 0) throw Error(ErrorKind::InvalidArgument, "max_iterations must be >= 0");
    if (!(tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
    if (history < 1) throw Error(ErrorKind::InvalidArgument, "history must be >= 1");
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0))
        throw Error(ErrorKind::InvalidArgument, "Wolfe constants need 0 < c1 < c2 < 1");
}

bool LbfgsState::push(const Eigen::VectorXd& s_new, const Eigen::VectorXd& y_new) {
    const double sy = s_new.dot(y_new);
    if (!(sy > 1e-12 * s_new.norm() * y_new.norm())) return false;
    if (s.size() == capacity) {
        s.pop_front();
        y.pop_front();
        rho.pop_front();
    }
    s.push_back(s_new);
    y.push_back(y_new);
    rho.push_back(1.0 / sy);
    return true;
}

Eigen::VectorXd LbfgsState::direction(const Eigen::VectorXd& g) const {
    Eigen::VectorXd q = -g;
    const std::size_t m = s.size();
    if (m == 0) return q;
    std::vector<double> alpha(m);
    for (std::size_t i = m; i-- > 0;) {
        alpha[i] = rho[i] * s[i].dot(q);
        q -= alpha[i] * y[i];
    }
    q *= s.back().dot(y.back()) / y.back().squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho[i] * y[i].dot(q);
        q += (alpha[i] - beta) * s[i];
    }
    return q;
}

void LbfgsState::clear() {
    s.clear();
    y.clear();
    rho.clear();
}

namespace {

struct Probe {
    double alpha = 0.0;
    double f = 0.0;
    double dphi = 0.0;
    ObjectiveValue value;
    Eigen::VectorXd theta;
    Eigen::VectorXd grad;
};

double finite_or_inf(double f) { return std::isfinite(f) ? f : std::numeric_limits<double>::infinity(); }

// Minimizer of the cubic matching values and slopes at a and b; NaN when undefined.
double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
    if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(da) || !std::isfinite(db))
        return std::numeric_limits<double>::quiet_NaN();
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return b - (b - a) * (db + d2 - d1) / denom;
}

class LineSearch {
public:
    LineSearch(const Objective& objective, const LbfgsConfig& cfg, const Eigen::VectorXd& theta,
               double f0, const Eigen::VectorXd& d, double dphi0, int& evaluations)
        : objective_(objective), cfg_(cfg), theta_(theta), f0_(f0), d_(d), dphi0_(dphi0),
          evaluations_(evaluations) {}

    /// Strong-Wolfe step search. On failure falls back to the lowest point that
    /// still satisfies sufficient decrease, if any.
    bool run(double alpha_init, Probe& out) {
        Probe prev;
        prev.alpha = 0.0;
        prev.f = f0_;
        prev.dphi = dphi0_;
        double alpha = alpha_init;
        for (int i = 0; budget_left(); ++i) {
            Probe cur = evaluate(alpha);
            if (cur.f > f0_ + cfg_.c1 * cur.alpha * dphi0_ || (i > 0 && cur.f >= prev.f))
                return zoom(prev, cur, out);
            if (std::abs(cur.dphi) <= -cfg_.c2 * dphi0_) {
                out = std::move(cur);
                return true;
            }
            if (cur.dphi >= 0.0) return zoom(cur, prev, out);
            const double width = cur.alpha - prev.alpha;
            double next = cubic_minimizer(prev.alpha, prev.f, prev.dphi, cur.alpha, cur.f, cur.dphi);
            const double lo = cur.alpha + 1.1 * width;
            const double hi = cur.alpha + 10.0 * width;
            if (!std::isfinite(next) || next < lo || next > hi) next = (next > hi) ? hi : lo;
            prev = std::move(cur);
            alpha = next;
        }
        return fallback(out);
    }

private:
    bool budget_left() const { return used_ < cfg_.max_line_search_evals; }

    Probe evaluate(double alpha) {
        Probe p;
        p.alpha = alpha;
        p.theta = theta_ + alpha * d_;
        p.grad.resize(theta_.size());
        p.value = objective_(p.theta, p.grad);
        ++used_;
        ++evaluations_;
        p.f = finite_or_inf(p.value.total);
        p.dphi = std::isfinite(p.f) && p.grad.allFinite() ? p.grad.dot(d_)
                                                          : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(p.dphi)) p.f = std::numeric_limits<double>::infinity();
        if (p.f < f0_ + cfg_.c1 * alpha * dphi0_ && (!have_best_ || p.f < best_.f)) {
            best_ = p;
            have_best_ = true;
        }
        return p;
    }

    bool zoom(Probe lo, Probe hi, Probe& out) {
        while (budget_left()) {
            const double a = std::min(lo.alpha, hi.alpha);
            const double b = std::max(lo.alpha, hi.alpha);
            const double width = b - a;
            if (width <= 1e-16 * std::max(1.0, b)) break;
            double alpha = cubic_minimizer(lo.alpha, lo.f, lo.dphi, hi.alpha, hi.f, hi.dphi);
            if (!std::isfinite(alpha) || alpha < a + 0.1 * width || alpha > b - 0.1 * width)
                alpha = 0.5 * (a + b);
            Probe cur = evaluate(alpha);
            if (cur.f > f0_ + cfg_.c1 * cur.alpha * dphi0_ || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                if (std::abs(cur.dphi) <= -cfg_.c2 * dphi0_) {
                    out = std::move(cur);
                    return true;
                }
                if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
        }
        return fallback(out);
    }

    bool fallback(Probe& out) {
        if (!have_best_ || !(best_.f < f0_)) return false;
        out = best_;
        return true;
    }

    const Objective& objective_;
    const LbfgsConfig& cfg_;
    const Eigen::VectorXd& theta_;
    double f0_;
    const Eigen::VectorXd& d_;
    double dphi0_;
    int& evaluations_;
    int used_ = 0;
    Probe best_;
    bool have_best_ = false;
};

} // namespace

MinimizeResult minimize(const Objective& objective, const Eigen::VectorXd& theta0, const LbfgsConfig& cfg) {
    cfg.validate();
    if (!theta0.allFinite()) throw Error(ErrorKind::InvalidArgument, "initial parameters are not finite");

    MinimizeResult result;
    Eigen::VectorXd theta = theta0;
    Eigen::VectorXd g(theta.size());
    ObjectiveValue value = objective(theta, g);
    ++result.evaluations;
    if (!std::isfinite(value.total) || !g.allFinite())
        throw Error(ErrorKind::NonFiniteObjective, "objective is not finite at the starting point");

    LbfgsState state;
    state.capacity = static_cast<std::size_t>(cfg.history);
    state.last_loss = value.total;
    state.last_grad_norm = g.lpNorm<Eigen::Infinity>();
    result.trace.push_back({0, value.total, value.data_term, value.wall_term, state.last_grad_norm, 0.0});

    auto converged = [&] { return state.last_grad_norm <= cfg.tolerance * (1.0 + std::abs(value.total)); };

    result.termination = Termination::MaxIterations;
    if (converged()) {
        result.termination = Termination::Converged;
    } else {
        while (state.iteration < cfg.max_iterations) {
            Eigen::VectorXd d = state.direction(g);
            double gd = g.dot(d);
            if (!(gd < 0.0)) {
                state.clear();
                d = -g;
                gd = -g.squaredNorm();
            }
            const double alpha0 = state.s.empty() ? std::min(1.0, 1.0 / g.lpNorm<1>()) : 1.0;
            Probe step;
            LineSearch search(objective, cfg, theta, value.total, d, gd, result.evaluations);
            if (!search.run(alpha0, step)) {
                if (!state.s.empty()) {
                    state.clear();
                    continue;
                }
                result.termination = Termination::LineSearchFailed;
                break;
            }
            state.push(step.theta - theta, step.grad - g);
            theta = std::move(step.theta);
            g = std::move(step.grad);
            value = step.value;
            ++state.iteration;
            state.last_loss = value.total;
            state.last_grad_norm = g.lpNorm<Eigen::Infinity>();
            result.trace.push_back({state.iteration, value.total, value.data_term, value.wall_term,
                                    state.last_grad_norm, step.alpha});
            if (converged()) {
                result.termination = Termination::Converged;
                break;
            }
        }
    }
    result.iterations = state.iteration;
    result.theta = std::move(theta);
    return result;
}

std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::LineSearchFailed: return "line_search_failed";
    }
    return "unknown";
}

void write_trace_csv(std::ostream& os, const std::vector<TraceEntry>& trace) {
    os << "iteration,loss,data_term,wall_term,grad_norm,step_length\n";
    const auto old = os.precision(17);
    for (const auto& e : trace)
        os << e.iteration << ',' << e.loss << ',' << e.data_term << ',' << e.wall_term << ','
           << e.grad_norm << ',' << e.step_length << '\n';
    os.precision(old);
}

} // namespace sirenflow::optim
