#include "sirenflow/fit.hpp"

namespace sirenflow::optim {

LbfgsConfig lbfgs_config(const FitConfig& cfg) {
    LbfgsConfig out;
    out.max_iterations = cfg.max_iterations;
    out.tolerance = cfg.tolerance;
    out.history = cfg.history;
    return out;
}

FitResult fit(const SirenModel& initial, const SampleSet& samples, const FitConfig& cfg) {
    cfg.validate();
    SirenModel work = initial;
    work.set_nondim(samples.params);
    const Objective objective = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        work.parameters() = theta;
        const LossReport r = loss_and_grad(work, samples, &grad, cfg.loss);
        return ObjectiveValue{r.total, r.data_term, r.wall_term};
    };
    MinimizeResult m = minimize(objective, initial.parameters(), lbfgs_config(cfg));

    FitResult out;
    out.model = initial;
    out.model.set_nondim(samples.params);
    out.model.set_parameters(m.theta);
    out.trace = std::move(m.trace);
    out.iterations = m.iterations;
    out.evaluations = m.evaluations;
    out.termination = m.termination;
    return out;
}

} // namespace sirenflow::optim
