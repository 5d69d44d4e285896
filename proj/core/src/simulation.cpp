#include "ebselect/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "ebselect/estimation.hpp"
#include "ebselect/math_util.hpp"

namespace ebselect {

namespace {

constexpr std::uint64_t kSaltScalingData = 0x5343414c44415441ull;
constexpr std::uint64_t kSaltScalingTies = 0x5343414c54494553ull;
constexpr std::uint64_t kSaltSharpData = 0x5348415250444154ull;
constexpr std::uint64_t kSaltSharpTies = 0x5348415254494553ull;

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  unsigned want = threads > 0 ? static_cast<unsigned>(threads)
                              : std::thread::hardware_concurrency();
  want = std::max(1u, std::min(want, 64u));
  if (want == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = cursor.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < want; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::EbNormal: return "EB-NN";
    case Method::EbScaleMixture: return "EB-NSM";
    case Method::EbNpmle: return "EB-NPMLE";
    case Method::Unshrunk: return "UN";
  }
  throw std::logic_error("unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "EB-NN") return Method::EbNormal;
  if (name == "EB-NSM") return Method::EbScaleMixture;
  if (name == "EB-NPMLE") return Method::EbNpmle;
  if (name == "UN") return Method::Unshrunk;
  throw std::invalid_argument("unknown method name: " + name);
}

bool method_is_fitted(Method m) { return m != Method::Unshrunk; }

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::Regret: return "regret";
    case Metric::PropMistakes: return "prop_mistakes";
    case Metric::MaxShrinkageError: return "max_shrinkage_error";
    case Metric::W1: return "w1";
  }
  throw std::logic_error("unknown metric");
}

void validate_study_config(const StudyConfig& cfg) {
  if (cfg.n_grid.empty()) throw std::invalid_argument("study: empty n_grid");
  if (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0))
    throw std::invalid_argument("study: alpha must lie in (0, 1)");
  for (int n : cfg.n_grid) {
    const auto m = static_cast<long long>(std::floor(cfg.alpha * n));
    if (n < 2 || m < 1 || m >= n)
      throw std::invalid_argument(
          "study: floor(alpha*n) must be in [1, n) for every n");
  }
  if (cfg.iterations < 1)
    throw std::invalid_argument("study: iterations must be >= 1");
  if (cfg.noise_multipliers.empty())
    throw std::invalid_argument("study: empty noise multiplier list");
  for (double mult : cfg.noise_multipliers)
    if (!(mult > 0.0) || !std::isfinite(mult))
      throw std::invalid_argument("study: noise multipliers must be positive");
  if (cfg.methods.empty()) throw std::invalid_argument("study: no methods");
  for (std::size_t i = 0; i < cfg.methods.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.methods.size(); ++j)
      if (cfg.methods[i] == cfg.methods[j])
        throw std::invalid_argument("study: duplicate method");
  validate_prior(cfg.g0);
  if (is_degenerate(cfg.g0))
    throw std::invalid_argument("study: g0 must be nondegenerate");
  validate_prior(Prior{cfg.h0});
  for (double atom : cfg.h0.atoms)
    if (!(atom > 0.0))
      throw std::invalid_argument("study: h0 atoms are noise sds, must be > 0");
}

std::vector<MethodOutcome> run_iteration(const StudyConfig& cfg, int n,
                                         double multiplier,
                                         std::uint64_t iteration) {
  const auto un = static_cast<std::uint64_t>(n);
  // The data stream ignores the multiplier, so noise levels are compared on
  // identical (mu, sigma, z) draws; the multiplier only scales sigma.
  SplitMix64 data_rng(derive_seed(cfg.master_seed, kSaltScalingData, un,
                                  iteration));
  SplitMix64 tie_rng(derive_seed(cfg.master_seed, kSaltScalingTies, un,
                                 double_bits(multiplier), iteration));

  const std::size_t count = static_cast<std::size_t>(n);
  const std::vector<double> mu = sample_prior(cfg.g0, count, data_rng);
  const std::vector<double> sigma_base =
      sample_prior(Prior{cfg.h0}, count, data_rng);
  std::vector<Observation> obs(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double s = sigma_base[i] * multiplier;
    obs[i] = Observation{mu[i] + s * data_rng.next_normal(), s};
  }

  const std::vector<double> theta = score_units(cfg.g0, obs);
  const auto m = static_cast<std::size_t>(std::floor(cfg.alpha * n));
  const SelectionOutcome bayes = select_top_m(theta, m, tie_rng);

  std::vector<MethodOutcome> outcomes;
  outcomes.reserve(cfg.methods.size());
  for (Method method : cfg.methods) {
    MethodOutcome out;
    std::optional<Prior> fitted;
    switch (method) {
      case Method::EbNormal: {
        auto [prior, diag] = fit_normal(obs);
        out.em_violations = count_trace_violations(diag);
        fitted = Prior{prior};
        break;
      }
      case Method::EbScaleMixture: {
        auto [prior, diag] = fit_scale_mixture(obs, default_scale_grid(obs));
        out.em_violations = count_trace_violations(diag);
        fitted = Prior{prior};
        break;
      }
      case Method::EbNpmle: {
        auto [prior, diag] = fit_npmle(obs, default_atom_grid(obs));
        out.em_violations = count_trace_violations(diag);
        fitted = Prior{prior};
        break;
      }
      case Method::Unshrunk:
        break;
    }

    if (fitted && is_degenerate(*fitted)) {
      out.flagged = true;
      outcomes.push_back(std::move(out));
      continue;
    }

    std::vector<double> scores;
    if (fitted) {
      scores = score_units(*fitted, obs);
      out.w1 = wasserstein1(*fitted, cfg.g0);
    } else {
      scores.reserve(count);
      for (const auto& o : obs) scores.push_back(o.x);
    }
    const SelectionOutcome chosen = select_top_m(scores, m, tie_rng);
    out.report = decompose(theta, scores, bayes.selected, chosen.selected);
    out.bound_violation = out.report.n_mistakes > 0 &&
                          out.report.regret > out.report.two_parts_bound;
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

const IterationRecord& StudyGrid::at(std::size_t n_idx, std::size_t mult_idx,
                                     std::size_t iter) const {
  const std::size_t mults = config.noise_multipliers.size();
  const std::size_t iters = static_cast<std::size_t>(config.iterations);
  return records[(n_idx * mults + mult_idx) * iters + iter];
}

StudyGrid run_study_grid(const StudyConfig& cfg, int threads) {
  validate_study_config(cfg);
  StudyGrid grid;
  grid.config = cfg;
  const std::size_t n_count = cfg.n_grid.size();
  const std::size_t mult_count = cfg.noise_multipliers.size();
  const std::size_t iters = static_cast<std::size_t>(cfg.iterations);
  grid.records.resize(n_count * mult_count * iters);

  parallel_for(grid.records.size(), threads, [&](std::size_t flat) {
    const std::size_t iter = flat % iters;
    const std::size_t mult_idx = (flat / iters) % mult_count;
    const std::size_t n_idx = flat / (iters * mult_count);
    grid.records[flat].outcomes =
        run_iteration(cfg, cfg.n_grid[n_idx], cfg.noise_multipliers[mult_idx],
                      static_cast<std::uint64_t>(iter));
  });
  return grid;
}

ScalingSummary summarize(const StudyGrid& grid) {
  const StudyConfig& cfg = grid.config;
  ScalingSummary summary;

  const auto metrics_for = [](Method method) {
    std::vector<Metric> metrics{Metric::Regret, Metric::PropMistakes,
                                Metric::MaxShrinkageError};
    if (method_is_fitted(method)) metrics.push_back(Metric::W1);
    return metrics;
  };

  for (std::size_t n_idx = 0; n_idx < cfg.n_grid.size(); ++n_idx) {
    for (std::size_t mult_idx = 0; mult_idx < cfg.noise_multipliers.size();
         ++mult_idx) {
      for (std::size_t method_idx = 0; method_idx < cfg.methods.size();
           ++method_idx) {
        const Method method = cfg.methods[method_idx];
        std::vector<std::vector<double>> values(4);
        for (std::size_t iter = 0;
             iter < static_cast<std::size_t>(cfg.iterations); ++iter) {
          const MethodOutcome& out =
              grid.at(n_idx, mult_idx, iter).outcomes[method_idx];
          summary.total_em_violations +=
              static_cast<long long>(out.em_violations);
          if (out.flagged) {
            ++summary.flagged_outcomes;
            continue;
          }
          ++summary.decompose_calls;
          if (out.bound_violation) ++summary.bound_violations;
          values[0].push_back(out.report.regret);
          values[1].push_back(out.report.prop_mistakes);
          values[2].push_back(out.report.max_shrinkage_error);
          if (out.w1) values[3].push_back(*out.w1);
        }
        for (Metric metric : metrics_for(method)) {
          const auto& v = values[static_cast<std::size_t>(metric)];
          SummaryRow row;
          row.n = cfg.n_grid[n_idx];
          row.multiplier = cfg.noise_multipliers[mult_idx];
          row.method = method;
          row.metric = metric;
          row.iterations = static_cast<int>(v.size());
          if (!v.empty()) {
            row.mean = sample_mean(v);
            row.p99 = percentile_nearest_rank(v, 99.0);
            row.ci_halfwidth =
                v.size() > 1
                    ? 1.96 * sample_sd(v) / std::sqrt(static_cast<double>(v.size()))
                    : 0.0;
          }
          summary.rows.push_back(row);
        }
      }
    }
  }

  // Log-log slopes of the mean against n, per (method, multiplier, metric).
  for (std::size_t mult_idx = 0; mult_idx < cfg.noise_multipliers.size();
       ++mult_idx) {
    for (std::size_t method_idx = 0; method_idx < cfg.methods.size();
         ++method_idx) {
      const Method method = cfg.methods[method_idx];
      for (Metric metric : metrics_for(method)) {
        std::vector<double> ns, means;
        for (const SummaryRow& row : summary.rows) {
          if (row.multiplier != cfg.noise_multipliers[mult_idx] ||
              row.method != method || row.metric != metric)
            continue;
          if (row.iterations == 0 || !(row.mean > 0.0)) continue;
          ns.push_back(static_cast<double>(row.n));
          means.push_back(row.mean);
        }
        if (ns.size() < 2) continue;
        summary.slopes.push_back(SlopeRow{method,
                                          cfg.noise_multipliers[mult_idx],
                                          metric, loglog_slope(ns, means)});
      }
    }
  }
  return summary;
}

ScalingSummary run_scaling_study(const StudyConfig& cfg, int threads) {
  return summarize(run_study_grid(cfg, threads));
}

void validate_sharpness_config(const SharpnessConfig& cfg) {
  if (cfg.n_grid.empty()) throw std::invalid_argument("sharpness: empty n_grid");
  if (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0))
    throw std::invalid_argument("sharpness: alpha must lie in (0, 1)");
  for (int n : cfg.n_grid) {
    const auto m = static_cast<long long>(std::floor(cfg.alpha * n));
    if (n < 2 || m < 1 || m >= n)
      throw std::invalid_argument(
          "sharpness: floor(alpha*n) must be in [1, n) for every n");
  }
  if (cfg.iterations < 1)
    throw std::invalid_argument("sharpness: iterations must be >= 1");
  if (!std::isfinite(cfg.eta0))
    throw std::invalid_argument("sharpness: eta0 must be finite");
}

SharpnessResult run_sharpness_study(const SharpnessConfig& cfg, int threads,
                                    const SharpnessHooks& hooks) {
  validate_sharpness_config(cfg);
  SharpnessResult result;
  result.threshold_c = cfg.threshold_c;
  result.nr_values.assign(cfg.n_grid.size(), {});

  const std::size_t iters = static_cast<std::size_t>(cfg.iterations);
  std::vector<long long> violations(cfg.n_grid.size() * iters, 0);
  std::vector<double> flat_nr(cfg.n_grid.size() * iters, 0.0);

  parallel_for(flat_nr.size(), threads, [&](std::size_t flat) {
    const std::size_t iter = flat % iters;
    const std::size_t n_idx = flat / iters;
    const int n = cfg.n_grid[n_idx];
    const auto un = static_cast<std::uint64_t>(n);
    SplitMix64 data_rng(derive_seed(cfg.master_seed, kSaltSharpData, un,
                                    static_cast<std::uint64_t>(iter)));
    SplitMix64 tie_rng(derive_seed(cfg.master_seed, kSaltSharpTies, un,
                                   static_cast<std::uint64_t>(iter)));

    const std::size_t count = static_cast<std::size_t>(n);
    std::vector<Observation> obs(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double s =
          data_rng.next_double() < 0.5 ? hooks.sigma_low : hooks.sigma_high;
      const double mu = cfg.eta0 + data_rng.next_normal();
      obs[i] = Observation{mu + s * data_rng.next_normal(), s};
    }

    const double eta_hat = hooks.eta_hat_override ? *hooks.eta_hat_override
                                                  : mle_location(obs);
    std::vector<double> theta(count), theta_hat(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double s2 = obs[i].sigma * obs[i].sigma;
      theta[i] = (obs[i].x + s2 * cfg.eta0) / (s2 + 1.0);
      theta_hat[i] = (obs[i].x + s2 * eta_hat) / (s2 + 1.0);
    }

    const auto m = static_cast<std::size_t>(std::floor(cfg.alpha * n));
    const SelectionOutcome bayes = select_top_m(theta, m, tie_rng);
    const SelectionOutcome eb = select_top_m(theta_hat, m, tie_rng);
    flat_nr[flat] = static_cast<double>(n) *
                    regret(theta, bayes.selected, eb.selected);

    if (eta_hat > 0.0 && hooks.sigma_low != hooks.sigma_high) {
      std::vector<char> in_bayes(count, 0), in_eb(count, 0);
      for (std::size_t i : bayes.selected) in_bayes[i] = 1;
      for (std::size_t i : eb.selected) in_eb[i] = 1;
      for (std::size_t i = 0; i < count; ++i) {
        if (in_bayes[i] && !in_eb[i] && obs[i].sigma != hooks.sigma_low)
          ++violations[flat];
        if (in_eb[i] && !in_bayes[i] && obs[i].sigma != hooks.sigma_high)
          ++violations[flat];
      }
    }
  });

  for (std::size_t n_idx = 0; n_idx < cfg.n_grid.size(); ++n_idx) {
    std::vector<double> nr(flat_nr.begin() + n_idx * iters,
                           flat_nr.begin() + (n_idx + 1) * iters);
    SharpnessRow row;
    row.n = cfg.n_grid[n_idx];
    row.iterations = cfg.iterations;
    row.mean_nr = sample_mean(nr);
    row.p10_nr = percentile_nearest_rank(nr, 10.0);
    row.p50_nr = percentile_nearest_rank(nr, 50.0);
    row.p90_nr = percentile_nearest_rank(nr, 90.0);
    std::size_t above = 0;
    for (double v : nr)
      if (v > cfg.threshold_c) ++above;
    row.freq_above_threshold =
        static_cast<double>(above) / static_cast<double>(nr.size());
    result.rows.push_back(row);
    result.nr_values[n_idx] = std::move(nr);
  }
  for (long long v : violations) result.crossing_violations += v;
  return result;
}

}  // namespace ebselect
