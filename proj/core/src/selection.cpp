#include "ebselect/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ebselect {

namespace {

std::vector<char> membership(const std::vector<std::size_t>& idx,
                             std::size_t n, const char* who) {
  std::vector<char> in(n, 0);
  for (std::size_t i : idx) {
    if (i >= n) throw std::invalid_argument(std::string(who) + ": index out of range");
    if (in[i]) throw std::invalid_argument(std::string(who) + ": duplicate index");
    in[i] = 1;
  }
  return in;
}

}  // namespace

SelectionOutcome select_top_m(const std::vector<double>& scores, std::size_t m,
                              SplitMix64& rng) {
  const std::size_t n = scores.size();
  if (m == 0 || m >= n)
    throw std::invalid_argument("select_top_m needs 1 <= m < n");
  for (double s : scores)
    if (!std::isfinite(s))
      throw std::invalid_argument("select_top_m: non-finite score");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  const double threshold = scores[order[m - 1]];

  SelectionOutcome out;
  out.scores = scores;
  out.threshold_score = threshold;
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < n; ++i) {
    if (scores[i] > threshold)
      out.selected.push_back(i);
    else if (scores[i] == threshold)
      tied.push_back(i);
  }
  std::size_t need = m - out.selected.size();
  // Fisher-Yates over the tied block, then take a prefix.
  for (std::size_t i = tied.size(); i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(tied[i - 1], tied[j]);
  }
  for (std::size_t i = 0; i < need; ++i) out.selected.push_back(tied[i]);
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

double regret(const std::vector<double>& theta_oracle,
              const std::vector<std::size_t>& j_bayes,
              const std::vector<std::size_t>& j_alt) {
  if (j_bayes.size() != j_alt.size())
    throw std::invalid_argument("regret: choice sets differ in size");
  const std::size_t n = theta_oracle.size();
  const auto in_bayes = membership(j_bayes, n, "regret");
  const auto in_alt = membership(j_alt, n, "regret");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_bayes[i] && !in_alt[i]) acc += theta_oracle[i];
    if (in_alt[i] && !in_bayes[i]) acc -= theta_oracle[i];
  }
  return acc / static_cast<double>(n);
}

RegretReport decompose(const std::vector<double>& theta,
                       const std::vector<double>& theta_hat,
                       const std::vector<std::size_t>& j_bayes,
                       const std::vector<std::size_t>& j_eb) {
  const std::size_t n = theta.size();
  if (theta_hat.size() != n)
    throw std::invalid_argument("decompose: score vectors differ in length");
  if (j_bayes.size() != j_eb.size())
    throw std::invalid_argument("decompose: choice sets differ in size");
  const auto in_bayes = membership(j_bayes, n, "decompose");
  const auto in_eb = membership(j_eb, n, "decompose");

  RegretReport report;
  report.n = n;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool b = in_bayes[i], e = in_eb[i];
    if (b && !e) {
      acc += theta[i];
      ++report.n_mistakes;
    }
    if (e && !b) acc -= theta[i];
    if (b != e)
      report.max_shrinkage_error =
          std::max(report.max_shrinkage_error, std::abs(theta[i] - theta_hat[i]));
  }
  report.regret = acc / static_cast<double>(n);
  report.prop_mistakes =
      static_cast<double>(report.n_mistakes) / static_cast<double>(n);
  report.two_parts_bound =
      2.0 * report.prop_mistakes * report.max_shrinkage_error;
  return report;
}

std::vector<double> score_units(const Prior& prior,
                                const std::vector<Observation>& obs) {
  validate_prior(prior);
  if (is_degenerate(prior))
    throw std::invalid_argument("score_units: degenerate prior");
  validate_observations(obs);
  std::vector<double> scores;
  scores.reserve(obs.size());
  for (const auto& o : obs)
    scores.push_back(posterior_mean(prior, o.sigma, o.x));
  return scores;
}

}  // namespace ebselect
