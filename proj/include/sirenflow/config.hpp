#pragma once

#include "sirenflow/baselines.hpp"
#include "sirenflow/degrade.hpp"
#include "sirenflow/io.hpp"
#include "sirenflow/phantom.hpp"
#include "sirenflow/siren.hpp"
#include "sirenflow/wss.hpp"

namespace sirenflow::config {

using io::Json;

// Parsing rejects unknown keys and wrong types with ErrorKind::BadSpec and
// validates the result. Missing keys keep their defaults.

DegradationConfig degradation_from_json(const Json& j);
Json to_json(const DegradationConfig& c);

FitConfig fit_from_json(const Json& j);
Json to_json(const FitConfig& c);

PhantomSpec phantom_from_json(const Json& j);
Json to_json(const PhantomSpec& s);

GridGeometry grid_from_json(const Json& j);
Json to_json(const GridGeometry& g);

WssConfig wss_from_json(const Json& j);
Json to_json(const WssConfig& c);

Rbf4dConfig rbf_from_json(const Json& j);
Json to_json(const Rbf4dConfig& c);

} // namespace sirenflow::config
