#pragma once

#include <optional>
#include <vector>

#include "hsgd/core.hpp"

namespace hsgd {

struct TraceRecord {
  double epoch = 0.0;      // cumulative grad_evals / n
  double objective = 0.0;  // F(x_t)
  double gm_norm = 0.0;    // || G_eta(x_t) || at the reporting eta
  std::optional<double> train_acc;
  std::optional<double> test_acc;
  long long wall_ms = 0;
  long iteration = 0;
  long stage = 0;
};

using RunTrace = std::vector<TraceRecord>;

class Dataset;  // dataset.hpp

// Telemetry settings. Metric evaluations (objective, gradient-mapping norm,
// accuracy) run outside the solver's oracle budget and never touch its RNG
// streams, so enabling them cannot change the iterate sequence.
struct Telemetry {
  bool enabled = true;
  double metric_eta = 0.5;  // reporting eta for || G_eta ||
  long metric_stride = 0;   // iterations between records; 0 = about once per epoch
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
  bool keep_iterates = false;  // test hook: record every x_t
};

}  // namespace hsgd
