#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "snce/forecaster.hpp"
#include "snce/simulator.hpp"

namespace snce {

struct SuiteResult {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
  bool passed = true;
};

struct GradCheckOptions {
  std::uint64_t seed = 0;
  /// Random coordinates probed per network.
  std::size_t probes_per_network = 100;
  double tolerance = 1e-4;
  double step = 1e-5;
  ModelShape shape;
  ScenarioConfig scenario;
};

/// A sample from a freshly simulated scene whose primary has at least one
/// neighbor at every horizon offset.
Sample grad_check_sample(const GradCheckOptions& options, std::size_t horizon);

/// Finite differences of task + weight * Social-NCE with respect to every
/// network of a randomly initialized model. One result per network.
std::vector<SuiteResult> combined_grad_check(const GradCheckOptions& options, const NceConfig& nce);

/// Same for the Social-NCE term alone (query head, key head, encoder). The
/// analytic gradient is computed under `analytic_cfg` when given, so a
/// mismatched configuration should fail.
std::vector<SuiteResult> snce_grad_check(const GradCheckOptions& options, const NceConfig& cfg,
                                         const NceConfig* analytic_cfg = nullptr);

/// Every finite-difference suite the CLI `gradcheck` command runs.
std::vector<SuiteResult> run_gradcheck_suites(const GradCheckOptions& options);

bool all_passed(const std::vector<SuiteResult>& results);

}  // namespace snce
