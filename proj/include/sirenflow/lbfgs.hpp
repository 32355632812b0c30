#pragma once

#include <deque>
#include <functional>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace sirenflow::optim {

/// Objective value split the way the SIREN loss reports it. Generic objectives
/// put everything into data_term.
struct ObjectiveValue {
    double total = 0.0;
    double data_term = 0.0;
    double wall_term = 0.0;
};

/// Evaluates the objective at theta and writes the gradient into grad.
using Objective = std::function<ObjectiveValue(const Eigen::VectorXd& theta, Eigen::VectorXd& grad)>;

struct LbfgsConfig {
    int max_iterations = 2000;
    double tolerance = 1e-8; ///< |grad|_inf <= tolerance * (1 + |f|)
    int history = 10;
    double c1 = 1e-4;
    double c2 = 0.9;
    int max_line_search_evals = 40;

    void validate() const;
};

struct TraceEntry {
    int iteration = 0;
    double loss = 0.0;
    double data_term = 0.0;
    double wall_term = 0.0;
    double grad_norm = 0.0;
    double step_length = 0.0;
};

enum class Termination { Converged, MaxIterations, LineSearchFailed };

struct MinimizeResult {
    Eigen::VectorXd theta;
    std::vector<TraceEntry> trace; ///< entry 0 is the starting point
    int iterations = 0;
    int evaluations = 0;
    Termination termination = Termination::Converged;
};

/// Curvature pairs and bookkeeping for the two-loop recursion.
struct LbfgsState {
    std::deque<Eigen::VectorXd> s;
    std::deque<Eigen::VectorXd> y;
    std::deque<double> rho;
    std::size_t capacity = 10;
    int iteration = 0;
    double last_loss = 0.0;
    double last_grad_norm = 0.0;

    /// Stores (s, y) unless s.y <= 1e-12 |s||y|; returns whether it was kept.
    bool push(const Eigen::VectorXd& s_new, const Eigen::VectorXd& y_new);
    /// -H g via the two-loop recursion with H0 = (s.y / y.y) I from the newest pair.
    Eigen::VectorXd direction(const Eigen::VectorXd& g) const;
    void clear();
};

MinimizeResult minimize(const Objective& objective, const Eigen::VectorXd& theta0, const LbfgsConfig& cfg);

std::string_view to_string(Termination t);
void write_trace_csv(std::ostream& os, const std::vector<TraceEntry>& trace);

} // namespace sirenflow::optim
