#pragma once

#include "sirenflow/lbfgs.hpp"
#include "sirenflow/siren.hpp"

namespace sirenflow::optim {

struct FitResult {
    SirenModel model;
    std::vector<TraceEntry> trace;
    int iterations = 0;
    int evaluations = 0;
    Termination termination = Termination::Converged;
};

LbfgsConfig lbfgs_config(const FitConfig& cfg);

/// Minimizes the sample-set loss over the model parameters, starting from `initial`.
FitResult fit(const SirenModel& initial, const SampleSet& samples, const FitConfig& cfg);

} // namespace sirenflow::optim
