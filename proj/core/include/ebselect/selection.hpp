#pragma once

#include <cstddef>
#include <vector>

#include "ebselect/observation.hpp"
#include "ebselect/prior.hpp"
#include "ebselect/rng.hpp"

namespace ebselect {

/// A chosen index set plus the scores that produced it. `selected` is sorted
/// ascending; `threshold_score` is the m-th largest score.
struct SelectionOutcome {
  std::vector<std::size_t> selected;
  std::vector<double> scores;
  double threshold_score = 0.0;
};

/// Per-iteration regret bookkeeping. `two_parts_bound` is
/// 2 * prop_mistakes * max_shrinkage_error.
struct RegretReport {
  std::size_t n = 0;
  double regret = 0.0;
  std::size_t n_mistakes = 0;
  double prop_mistakes = 0.0;
  double max_shrinkage_error = 0.0;
  double two_parts_bound = 0.0;
};

/// Indices of the m largest scores; exact ties at the threshold are broken
/// by a uniform random permutation drawn from `rng`.
SelectionOutcome select_top_m(const std::vector<double>& scores, std::size_t m,
                              SplitMix64& rng);

/// Average oracle-score gap between two equal-size choice sets:
/// (1/n) sum_i (1[i in j_bayes] - 1[i in j_alt]) theta_i.
double regret(const std::vector<double>& theta_oracle,
              const std::vector<std::size_t>& j_bayes,
              const std::vector<std::size_t>& j_alt);

/// Regret together with the mistake count/proportion, the largest
/// |theta - theta_hat| over the symmetric difference, and the product bound.
RegretReport decompose(const std::vector<double>& theta,
                       const std::vector<double>& theta_hat,
                       const std::vector<std::size_t>& j_bayes,
                       const std::vector<std::size_t>& j_eb);

/// Elementwise posterior means, order-preserving. Degenerate priors are
/// rejected.
std::vector<double> score_units(const Prior& prior,
                                const std::vector<Observation>& obs);

}  // namespace ebselect
