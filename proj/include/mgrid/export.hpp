#pragma once

#include "mgrid/conductor.hpp"
#include "mgrid/metrics.hpp"

#include <string>

namespace mgrid::scenario {

/// Writes timeseries.csv, triggers.csv, delivery.csv, observer.csv and
/// metrics.json into `dir` (created if missing). Floats use 9 significant
/// digits. Throws std::runtime_error naming the path on I/O failure.
void export_csv(const RunOutput& out, const Metrics& m, const std::string& dir);

/// "%.9g".
std::string fmt9(double v);

}  // namespace mgrid::scenario
