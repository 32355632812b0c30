#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "sirenflow/sampler.hpp"

namespace sirenflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

/// Runs the command line `args` (without the program name). Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Opens any queryable field file: VF1 (quadrilinear interpolation), SM1
/// (trained network) or PHANTOM (analytic field).
std::unique_ptr<VelocitySampler> open_source(const std::string& path);

} // namespace sirenflow::cli
