#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "ebselect/observation.hpp"
#include "ebselect/prior.hpp"

namespace ebselect {

/// One two-arm experiment's raw counts.
struct RawExperiment {
  std::string experiment_id;
  std::int64_t control_impressions = 0;
  std::int64_t control_clicks = 0;
  std::int64_t treatment_impressions = 0;
  std::int64_t treatment_clicks = 0;
};

struct IngestReport {
  std::int64_t total_rows = 0;
  std::int64_t kept_rows = 0;
  std::int64_t dropped_filter = 0;
  std::int64_t dropped_malformed = 0;
};

/// Parses the count CSV. Malformed rows (bad counts, clicks > impressions,
/// wrong arity) are counted and skipped. A missing or wrong header throws
/// std::invalid_argument.
std::pair<std::vector<RawExperiment>, IngestReport> parse_experiments_csv(
    std::istream& in);
std::pair<std::vector<RawExperiment>, IngestReport> parse_experiments_csv(
    const std::string& text);

/// Both arms must clear the impression and click minima, and the pooled
/// standard error must be positive (rows where both arms have click rates of
/// exactly 0 or 1 carry no noise estimate and are dropped).
bool passes_filters(const RawExperiment& raw, std::int64_t min_impressions,
                    std::int64_t min_clicks);

/// Rate difference with the unpooled two-proportion standard error.
Observation effect_of(const RawExperiment& raw);

/// Observations for the surviving experiments, in input order.
std::vector<Observation> compute_effects(const std::vector<RawExperiment>& raw,
                                         std::int64_t min_impressions = 1000,
                                         std::int64_t min_clicks = 100);

/// Empirical distribution of the noise sds: sorted unique values with their
/// frequencies.
DiscretePrior empirical_sigma_distribution(const std::vector<Observation>& obs);

}  // namespace ebselect
