#include "ebselect/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ebselect/math_util.hpp"

namespace ebselect {

namespace {

constexpr double kNormalTol = 1e-10;
constexpr std::size_t kNormalMaxIter = 500;
constexpr double kEmTolPerObs = 1e-10;
constexpr std::size_t kEmMaxIter = 2000;
constexpr double kWeightFloor = 1e-10;

void require_obs(const std::vector<Observation>& obs, std::size_t min_count,
                 const char* who) {
  if (obs.size() < min_count)
    throw std::invalid_argument(std::string(who) + ": too few observations");
  validate_observations(obs);
}

double normal_model_ll(const std::vector<Observation>& obs, double mean,
                       double variance) {
  double ll = 0.0;
  for (const auto& o : obs)
    ll += log_normal_pdf(o.x, mean, variance + o.sigma * o.sigma);
  return ll;
}

double precision_weighted_mean(const std::vector<Observation>& obs,
                               double variance) {
  double num = 0.0, den = 0.0;
  for (const auto& o : obs) {
    const double w = 1.0 / (variance + o.sigma * o.sigma);
    num += w * o.x;
    den += w;
  }
  return num / den;
}

struct EmOutput {
  std::vector<double> weights;
  FitDiagnostics diag;
};

// EM for fixed-component mixtures. `loglik` is the n-by-k matrix of
// log component densities at each observation, row-major. Rows are shifted
// by their maximum before exponentiation, which is the log-sum-exp
// stabilization in linear-domain form.
EmOutput run_em(const std::vector<double>& loglik, std::size_t n,
                std::size_t k, double tol, std::size_t max_iter) {
  std::vector<double> scaled(n * k);
  std::vector<double> shift(n);
  for (std::size_t i = 0; i < n; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) m = std::max(m, loglik[i * k + j]);
    shift[i] = m;
    for (std::size_t j = 0; j < k; ++j)
      scaled[i * k + j] = std::exp(loglik[i * k + j] - m);
  }

  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  const auto eval_ll = [&](const std::vector<double>& weights) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double f = 0.0;
      const double* row = &scaled[i * k];
      for (std::size_t j = 0; j < k; ++j) f += weights[j] * row[j];
      ll += std::log(f) + shift[i];
    }
    return ll;
  };

  EmOutput out;
  double ll = eval_ll(w);
  out.diag.ll_trace.push_back(ll);
  std::vector<double> acc(k);

  for (std::size_t it = 1; it <= max_iter; ++it) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = &scaled[i * k];
      double f = 0.0;
      for (std::size_t j = 0; j < k; ++j) f += w[j] * row[j];
      const double inv_f = 1.0 / f;
      for (std::size_t j = 0; j < k; ++j) acc[j] += w[j] * row[j] * inv_f;
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < k; ++j) w[j] = acc[j] * inv_n;

    const double ll_new = eval_ll(w);
    out.diag.ll_trace.push_back(ll_new);
    out.diag.iterations = it;
    if (ll_new - ll < tol) {
      out.diag.converged = true;
      ll = ll_new;
      break;
    }
    ll = ll_new;
  }
  out.diag.final_log_likelihood = ll;
  out.weights = std::move(w);
  return out;
}

}  // namespace

void validate_grid(const GridSpec& grid) {
  if (!std::isfinite(grid.lower) || !std::isfinite(grid.upper) ||
      !(grid.lower < grid.upper))
    throw std::invalid_argument("grid needs finite lower < upper");
  const std::size_t min_size = grid.kind == GridKind::AtomGrid ? 1 : 2;
  if (grid.size < min_size)
    throw std::invalid_argument("grid size below the minimum for its kind");
  if (grid.kind == GridKind::ScaleGrid && grid.lower <= 0.0)
    throw std::invalid_argument("scale grid sds must be positive");
}

std::vector<double> materialize_grid(const GridSpec& grid) {
  validate_grid(grid);
  if (grid.size == 1) return {0.5 * (grid.lower + grid.upper)};
  std::vector<double> values;
  values.reserve(grid.size + 1);
  if (grid.kind == GridKind::ScaleGrid) values.push_back(0.0);
  const double steps = static_cast<double>(grid.size - 1);
  for (std::size_t j = 0; j < grid.size; ++j) {
    double v;
    if (grid.spacing == GridSpacing::Geometric) {
      const double r = std::pow(grid.upper / grid.lower, 1.0 / steps);
      v = grid.lower * std::pow(r, static_cast<double>(j));
    } else {
      v = grid.lower +
          (grid.upper - grid.lower) * static_cast<double>(j) / steps;
    }
    if (j + 1 == grid.size) v = grid.upper;
    values.push_back(grid.kind == GridKind::ScaleGrid ? v * v : v);
  }
  return values;
}

std::size_t count_trace_violations(const FitDiagnostics& diag, double slack) {
  std::size_t bad = 0;
  for (std::size_t i = 1; i < diag.ll_trace.size(); ++i)
    if (diag.ll_trace[i] < diag.ll_trace[i - 1] - slack) ++bad;
  return bad;
}

std::pair<NormalPrior, FitDiagnostics> fit_normal(
    const std::vector<Observation>& obs) {
  require_obs(obs, 2, "fit_normal");
  const std::size_t n = obs.size();

  double x_mean = 0.0;
  for (const auto& o : obs) x_mean += o.x;
  x_mean /= static_cast<double>(n);
  double x_var = 0.0, s2_mean = 0.0, x2_max = 0.0, s2_max = 0.0;
  for (const auto& o : obs) {
    x_var += (o.x - x_mean) * (o.x - x_mean);
    s2_mean += o.sigma * o.sigma;
    x2_max = std::max(x2_max, o.x * o.x);
    s2_max = std::max(s2_max, o.sigma * o.sigma);
  }
  x_var /= static_cast<double>(n);
  s2_mean /= static_cast<double>(n);
  const double v_hi = x2_max + s2_max;

  double v = std::clamp(x_var - s2_mean, 0.0, v_hi);
  double m = precision_weighted_mean(obs, v);
  FitDiagnostics diag;
  double ll = normal_model_ll(obs, m, v);
  diag.ll_trace.push_back(ll);

  for (std::size_t it = 1; it <= kNormalMaxIter; ++it) {
    const double m_fixed = m;
    const auto profile = [&](double vv) {
      return normal_model_ll(obs, m_fixed, vv);
    };
    double v_new = golden_section_max(profile, 0.0, v_hi);
    // The search is local; never move to a worse variance, and resolve ties
    // to the exact v = 0 boundary.
    double best = profile(v_new);
    if (profile(v) > best) {
      best = profile(v);
      v_new = v;
    }
    if (profile(0.0) >= best) v_new = 0.0;
    v = v_new;
    m = precision_weighted_mean(obs, v);

    const double ll_new = normal_model_ll(obs, m, v);
    diag.ll_trace.push_back(ll_new);
    diag.iterations = it;
    if (ll_new - ll < kNormalTol) {
      diag.converged = true;
      ll = ll_new;
      break;
    }
    ll = ll_new;
  }
  diag.final_log_likelihood = ll;
  return {NormalPrior{m, v}, diag};
}

GridSpec default_scale_grid(const std::vector<Observation>& obs) {
  require_obs(obs, 1, "default_scale_grid");
  double sig_min = std::numeric_limits<double>::infinity();
  double excess_max = 0.0;
  for (const auto& o : obs) {
    sig_min = std::min(sig_min, o.sigma);
    excess_max = std::max(excess_max, o.x * o.x - o.sigma * o.sigma);
  }
  const double s_min = sig_min / 10.0;
  const double s_max = 2.0 * std::sqrt(std::max(excess_max, s_min * s_min));
  // Ladder with ratio sqrt(2): s_min * 2^(j/2), ending at or just past s_max.
  const double steps = 2.0 * std::log2(s_max / s_min);
  const std::size_t count =
      static_cast<std::size_t>(std::max(1.0, std::ceil(steps - 1e-9)));
  return GridSpec{GridKind::ScaleGrid, count + 1, s_min,
                  s_min * std::pow(2.0, static_cast<double>(count) / 2.0),
                  GridSpacing::Geometric};
}

GridSpec default_atom_grid(const std::vector<Observation>& obs,
                           std::size_t size_hint) {
  require_obs(obs, 1, "default_atom_grid");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double sig_max = 0.0;
  for (const auto& o : obs) {
    lo = std::min(lo, o.x);
    hi = std::max(hi, o.x);
    sig_max = std::max(sig_max, o.sigma);
  }
  if (!(hi > lo)) {
    lo -= sig_max;
    hi += sig_max;
  }
  std::size_t size = size_hint;
  if (size == 0) {
    const double n = static_cast<double>(obs.size());
    size = static_cast<std::size_t>(
        std::ceil(std::min(std::sqrt(n) * std::log(n), 300.0)));
    size = std::max<std::size_t>(size, 2);
  }
  return GridSpec{GridKind::AtomGrid, size, lo, hi, GridSpacing::Linear};
}

std::pair<ScaleMixturePrior, FitDiagnostics> fit_scale_mixture(
    const std::vector<Observation>& obs, const GridSpec& grid) {
  if (grid.kind != GridKind::ScaleGrid)
    throw std::invalid_argument("fit_scale_mixture needs a scale grid");
  return fit_scale_mixture(obs, materialize_grid(grid));
}

std::pair<ScaleMixturePrior, FitDiagnostics> fit_scale_mixture(
    const std::vector<Observation>& obs,
    const std::vector<double>& variances) {
  require_obs(obs, 1, "fit_scale_mixture");
  if (variances.empty())
    throw std::invalid_argument("fit_scale_mixture: empty variance grid");
  for (std::size_t j = 0; j < variances.size(); ++j) {
    if (!std::isfinite(variances[j]) || variances[j] < 0.0 ||
        (j > 0 && !(variances[j] > variances[j - 1])))
      throw std::invalid_argument(
          "fit_scale_mixture: variances must be nonnegative, ascending");
  }
  const std::size_t n = obs.size();
  const std::size_t k = variances.size();
  std::vector<double> loglik(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double s2 = obs[i].sigma * obs[i].sigma;
    for (std::size_t j = 0; j < k; ++j)
      loglik[i * k + j] = log_normal_pdf(obs[i].x, 0.0, variances[j] + s2);
  }
  auto em = run_em(loglik, n, k, kEmTolPerObs * static_cast<double>(n),
                   kEmMaxIter);

  double total = 0.0;
  for (double& w : em.weights) {
    w = std::max(w, kWeightFloor);
    total += w;
  }
  for (double& w : em.weights) w /= total;

  ScaleMixturePrior fitted{variances, std::move(em.weights)};
  em.diag.final_log_likelihood = log_likelihood(Prior{fitted}, obs);
  validate_prior(Prior{fitted});
  return {std::move(fitted), std::move(em.diag)};
}

std::pair<DiscretePrior, FitDiagnostics> fit_npmle(
    const std::vector<Observation>& obs, const GridSpec& grid) {
  if (grid.kind != GridKind::AtomGrid)
    throw std::invalid_argument("fit_npmle needs an atom grid");
  return fit_npmle(obs, materialize_grid(grid));
}

std::pair<DiscretePrior, FitDiagnostics> fit_npmle(
    const std::vector<Observation>& obs, const std::vector<double>& atoms) {
  require_obs(obs, 1, "fit_npmle");
  if (atoms.empty()) throw std::invalid_argument("fit_npmle: empty atom grid");
  for (std::size_t j = 1; j < atoms.size(); ++j)
    if (!(atoms[j] > atoms[j - 1]))
      throw std::invalid_argument("fit_npmle: atoms must be ascending");
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -std::numeric_limits<double>::infinity();
  for (const auto& o : obs) {
    x_lo = std::min(x_lo, o.x);
    x_hi = std::max(x_hi, o.x);
  }
  if (atoms.front() > x_lo || atoms.back() < x_hi)
    throw std::invalid_argument("fit_npmle: grid does not cover the data range");

  const std::size_t n = obs.size();
  const std::size_t k = atoms.size();
  std::vector<double> loglik(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double s2 = obs[i].sigma * obs[i].sigma;
    for (std::size_t j = 0; j < k; ++j)
      loglik[i * k + j] = log_normal_pdf(obs[i].x, atoms[j], s2);
  }
  auto em = run_em(loglik, n, k, kEmTolPerObs * static_cast<double>(n),
                   kEmMaxIter);

  DiscretePrior fitted;
  double total = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (em.weights[j] < kWeightFloor) continue;
    fitted.atoms.push_back(atoms[j]);
    fitted.weights.push_back(em.weights[j]);
    total += em.weights[j];
  }
  for (double& w : fitted.weights) w /= total;

  em.diag.final_log_likelihood = log_likelihood(Prior{fitted}, obs);
  validate_prior(Prior{fitted});
  return {std::move(fitted), std::move(em.diag)};
}

double log_likelihood(const Prior& prior, const std::vector<Observation>& obs) {
  validate_observations(obs);
  double ll = 0.0;
  for (const auto& o : obs) ll += marginal_log_density(prior, o.sigma, o.x);
  return ll;
}

double mle_location(const std::vector<Observation>& obs) {
  require_obs(obs, 1, "mle_location");
  double num = 0.0, den = 0.0;
  for (const auto& o : obs) {
    const double w = 1.0 / (1.0 + o.sigma * o.sigma);
    num += w * o.x;
    den += w;
  }
  return num / den;
}

}  // namespace ebselect
