#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ebselect/prior.hpp"
#include "ebselect/selection.hpp"

namespace ebselect {

enum class Method { EbNormal, EbScaleMixture, EbNpmle, Unshrunk };

std::string method_name(Method m);
Method method_from_name(const std::string& name);
bool method_is_fitted(Method m);

enum class Metric { Regret, PropMistakes, MaxShrinkageError, W1 };

std::string metric_name(Metric m);

/// Scaling-study configuration. One iteration draws n effects from g0 and n
/// noise sds from h0 (times the multiplier), fits each requested method, and
/// compares its choice set with the oracle's.
struct StudyConfig {
  std::vector<int> n_grid;
  double alpha = 0.1;  // m = floor(alpha * n)
  int iterations = 200;
  std::vector<double> noise_multipliers{1.0};
  std::vector<Method> methods;
  Prior g0;
  DiscretePrior h0;
  std::uint64_t master_seed = 0;
};

void validate_study_config(const StudyConfig& cfg);

/// Result of one method inside one iteration. `flagged` marks a degenerate
/// fit; flagged rows carry no usable report and are excluded from
/// aggregates.
struct MethodOutcome {
  RegretReport report;
  std::optional<double> w1;
  bool flagged = false;
  std::size_t em_violations = 0;
  bool bound_violation = false;
};

/// One full iteration: shared draws, oracle selection, then every requested
/// method with a shared tie-break stream. Deterministic in
/// (master_seed, n, multiplier, iteration).
std::vector<MethodOutcome> run_iteration(const StudyConfig& cfg, int n,
                                         double multiplier,
                                         std::uint64_t iteration);

struct IterationRecord {
  std::vector<MethodOutcome> outcomes;  // aligned with cfg.methods
};

/// All per-iteration records for the (n, multiplier, iteration) grid.
struct StudyGrid {
  StudyConfig config;
  std::vector<IterationRecord> records;

  const IterationRecord& at(std::size_t n_idx, std::size_t mult_idx,
                            std::size_t iter) const;
};

struct SummaryRow {
  int n = 0;
  double multiplier = 1.0;
  Method method = Method::Unshrunk;
  Metric metric = Metric::Regret;
  double mean = 0.0;
  double p99 = 0.0;
  double ci_halfwidth = 0.0;
  int iterations = 0;
};

struct SlopeRow {
  Method method = Method::Unshrunk;
  double multiplier = 1.0;
  Metric metric = Metric::Regret;
  double slope = 0.0;
};

struct ScalingSummary {
  std::vector<SummaryRow> rows;
  std::vector<SlopeRow> slopes;  // log-log slope of the mean against n
  long long total_em_violations = 0;
  long long bound_violations = 0;
  long long flagged_outcomes = 0;
  long long decompose_calls = 0;
};

/// Evaluate the whole grid; `threads` <= 0 picks the hardware concurrency.
/// Output is independent of the thread count.
StudyGrid run_study_grid(const StudyConfig& cfg, int threads = 0);

ScalingSummary summarize(const StudyGrid& grid);

ScalingSummary run_scaling_study(const StudyConfig& cfg, int threads = 0);

/// Location-family study: sigma is 1 or 2 with equal probability, effects
/// are N(eta0, 1), the location parameter is refit by closed-form MLE each
/// iteration, and n * regret is recorded.
struct SharpnessConfig {
  std::vector<int> n_grid;
  int iterations = 400;
  double eta0 = 0.0;
  double alpha = 0.5;
  std::uint64_t master_seed = 0;
  double threshold_c = 0.0;  // reported as the frequency of n*regret > c
};

void validate_sharpness_config(const SharpnessConfig& cfg);

/// Test instrumentation: replace the fitted location with a fixed value, or
/// change the two-point sigma law.
struct SharpnessHooks {
  std::optional<double> eta_hat_override;
  double sigma_low = 1.0;
  double sigma_high = 2.0;
};

struct SharpnessRow {
  int n = 0;
  double mean_nr = 0.0;
  double p10_nr = 0.0;
  double p50_nr = 0.0;
  double p90_nr = 0.0;
  double freq_above_threshold = 0.0;
  int iterations = 0;
};

struct SharpnessResult {
  std::vector<SharpnessRow> rows;
  std::vector<std::vector<double>> nr_values;  // per n_grid entry
  // Iterations where a mistake pair did not swap a low-sigma unit for a
  // high-sigma one while the fitted location was positive.
  long long crossing_violations = 0;
  double threshold_c = 0.0;
};

SharpnessResult run_sharpness_study(const SharpnessConfig& cfg,
                                    int threads = 0,
                                    const SharpnessHooks& hooks = {});

}  // namespace ebselect
