#include "ebselect/prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ebselect/math_util.hpp"

namespace ebselect {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_inputs(double sigma, double x) {
  if (!std::isfinite(x) || !std::isfinite(sigma) || sigma <= 0.0)
    throw std::domain_error("posterior evaluation needs finite x and sigma > 0");
}

void check_weights(const std::vector<double>& w, std::size_t n) {
  if (w.size() != n)
    throw std::invalid_argument("weights and support must have equal length");
  if (n == 0) throw std::invalid_argument("empty support");
  double sum = 0.0;
  for (double v : w) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw std::invalid_argument("weights must lie in [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("weights must sum to 1 within 1e-12");
}

void check_ascending(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]))
      throw std::invalid_argument(std::string(what) + " must be finite");
    if (i > 0 && !(v[i] > v[i - 1]))
      throw std::invalid_argument(std::string(what) +
                                  " must be strictly ascending");
  }
}

// Component posterior given x for a mean-zero normal component: shrinkage
// factor v/(v+s2) applied to x, conditional variance v*s2/(v+s2).
struct MixtureComponentPosterior {
  double mean;
  double variance;
};

MixtureComponentPosterior component_posterior(double v, double sigma2,
                                              double x) {
  if (v == 0.0) return {0.0, 0.0};
  const double shrink = v / (v + sigma2);
  return {shrink * x, shrink * sigma2};
}

// Log of the component marginal density N(x; 0, v + sigma^2).
double component_marginal_log(double v, double sigma2, double x) {
  return log_normal_pdf(x, 0.0, v + sigma2);
}

struct PosteriorMoments {
  double mean;
  double variance;
};

PosteriorMoments moments(const NormalPrior& g, double sigma, double x) {
  const double s2 = sigma * sigma;
  if (g.variance == 0.0) return {g.mean, 0.0};
  const double denom = g.variance + s2;
  return {(g.variance * x + s2 * g.mean) / denom, g.variance * s2 / denom};
}

PosteriorMoments moments(const ScaleMixturePrior& g, double sigma, double x) {
  const double s2 = sigma * sigma;
  const std::size_t k = g.variances.size();
  std::vector<double> logw(k, -std::numeric_limits<double>::infinity());
  double lmax = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    if (g.weights[j] <= 0.0) continue;
    logw[j] = std::log(g.weights[j]) +
              component_marginal_log(g.variances[j], s2, x);
    lmax = std::max(lmax, logw[j]);
  }
  double norm = 0.0, mean = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!std::isfinite(logw[j])) continue;
    const double p = std::exp(logw[j] - lmax);
    norm += p;
    mean += p * component_posterior(g.variances[j], s2, x).mean;
  }
  mean /= norm;
  double var = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!std::isfinite(logw[j])) continue;
    const double p = std::exp(logw[j] - lmax);
    const auto cp = component_posterior(g.variances[j], s2, x);
    var += p * (cp.variance + (cp.mean - mean) * (cp.mean - mean));
  }
  return {mean, var / norm};
}

PosteriorMoments moments(const DiscretePrior& g, double sigma, double x) {
  const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);
  const std::size_t k = g.atoms.size();
  std::vector<double> logw(k, -std::numeric_limits<double>::infinity());
  double lmax = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    if (g.weights[j] <= 0.0) continue;
    const double d = x - g.atoms[j];
    logw[j] = std::log(g.weights[j]) - d * d * inv_2s2;
    lmax = std::max(lmax, logw[j]);
  }
  double norm = 0.0, mean = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!std::isfinite(logw[j])) continue;
    const double p = std::exp(logw[j] - lmax);
    norm += p;
    mean += p * g.atoms[j];
  }
  mean /= norm;
  double var = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!std::isfinite(logw[j])) continue;
    const double p = std::exp(logw[j] - lmax);
    var += p * (g.atoms[j] - mean) * (g.atoms[j] - mean);
  }
  return {mean, var / norm};
}

PosteriorMoments posterior_moments(const Prior& prior, double sigma,
                                   double x) {
  return std::visit([&](const auto& g) { return moments(g, sigma, x); },
                    prior);
}

}  // namespace

void validate_observations(const std::vector<Observation>& obs) {
  for (const auto& o : obs) {
    if (!std::isfinite(o.x) || !std::isfinite(o.sigma) || o.sigma <= 0.0)
      throw std::domain_error(
          "observations need finite x and finite sigma > 0");
  }
}

void validate_prior(const Prior& prior) {
  std::visit(
      Overloaded{
          [](const NormalPrior& g) {
            if (!std::isfinite(g.mean) || !std::isfinite(g.variance) ||
                g.variance < 0.0)
              throw std::invalid_argument(
                  "normal prior needs finite mean and variance >= 0");
          },
          [](const ScaleMixturePrior& g) {
            check_ascending(g.variances, "mixture variances");
            if (!g.variances.empty() && g.variances.front() < 0.0)
              throw std::invalid_argument("mixture variances must be >= 0");
            check_weights(g.weights, g.variances.size());
          },
          [](const DiscretePrior& g) {
            check_ascending(g.atoms, "atoms");
            check_weights(g.weights, g.atoms.size());
          }},
      prior);
}

bool is_degenerate(const Prior& prior) {
  return std::visit(
      Overloaded{
          [](const NormalPrior& g) { return g.variance == 0.0; },
          [](const ScaleMixturePrior& g) {
            double spread_mass = 0.0;
            for (std::size_t j = 0; j < g.variances.size(); ++j)
              if (g.variances[j] > 0.0) spread_mass += g.weights[j];
            return spread_mass == 0.0;
          },
          [](const DiscretePrior& g) {
            std::size_t carriers = 0;
            for (double w : g.weights)
              if (w > 0.0) ++carriers;
            return carriers <= 1;
          }},
      prior);
}

double posterior_mean(const Prior& prior, double sigma, double x) {
  check_inputs(sigma, x);
  return posterior_moments(prior, sigma, x).mean;
}

double posterior_variance(const Prior& prior, double sigma, double x) {
  check_inputs(sigma, x);
  return posterior_moments(prior, sigma, x).variance;
}

double marginal_log_density(const Prior& prior, double sigma, double x) {
  check_inputs(sigma, x);
  return std::visit(
      Overloaded{
          [&](const NormalPrior& g) {
            return log_normal_pdf(x, g.mean, g.variance + sigma * sigma);
          },
          [&](const ScaleMixturePrior& g) {
            std::vector<double> terms;
            terms.reserve(g.variances.size());
            for (std::size_t j = 0; j < g.variances.size(); ++j) {
              if (g.weights[j] <= 0.0) continue;
              terms.push_back(std::log(g.weights[j]) +
                              component_marginal_log(g.variances[j],
                                                     sigma * sigma, x));
            }
            return log_sum_exp(terms);
          },
          [&](const DiscretePrior& g) {
            std::vector<double> terms;
            terms.reserve(g.atoms.size());
            for (std::size_t j = 0; j < g.atoms.size(); ++j) {
              if (g.weights[j] <= 0.0) continue;
              terms.push_back(std::log(g.weights[j]) +
                              log_normal_pdf(x, g.atoms[j], sigma * sigma));
            }
            return log_sum_exp(terms);
          }},
      prior);
}

double prior_cdf(const Prior& prior, double t) {
  if (!std::isfinite(t)) throw std::domain_error("prior_cdf needs finite t");
  return std::visit(
      Overloaded{
          [&](const NormalPrior& g) {
            if (g.variance == 0.0) return t >= g.mean ? 1.0 : 0.0;
            return normal_cdf((t - g.mean) / std::sqrt(g.variance));
          },
          [&](const ScaleMixturePrior& g) {
            double c = 0.0;
            for (std::size_t j = 0; j < g.variances.size(); ++j) {
              if (g.variances[j] == 0.0)
                c += t >= 0.0 ? g.weights[j] : 0.0;
              else
                c += g.weights[j] * normal_cdf(t / std::sqrt(g.variances[j]));
            }
            return c;
          },
          [&](const DiscretePrior& g) {
            double c = 0.0;
            for (std::size_t j = 0; j < g.atoms.size() && g.atoms[j] <= t; ++j)
              c += g.weights[j];
            return c;
          }},
      prior);
}

std::pair<double, double> support_hull(const Prior& prior) {
  return std::visit(
      Overloaded{
          [](const NormalPrior& g) {
            const double w = 40.0 * std::sqrt(g.variance) + 1.0;
            return std::pair<double, double>{g.mean - w, g.mean + w};
          },
          [](const ScaleMixturePrior& g) {
            const double w =
                40.0 * std::sqrt(g.variances.empty() ? 0.0
                                                     : g.variances.back()) +
                1.0;
            return std::pair<double, double>{-w, w};
          },
          [](const DiscretePrior& g) {
            return std::pair<double, double>{g.atoms.front() - 1.0,
                                             g.atoms.back() + 1.0};
          }},
      prior);
}

double prior_quantile(const Prior& prior, double q) {
  if (!(q > 0.0) || !(q < 1.0))
    throw std::domain_error("quantile level must lie in (0, 1)");
  auto [lo, hi] = support_hull(prior);
  // Expand until the bracket straddles q; the hull bounds make this rare.
  double width = hi - lo;
  while (prior_cdf(prior, lo) >= q) {
    lo -= width;
    width *= 2.0;
  }
  while (prior_cdf(prior, hi) < q) {
    hi += width;
    width *= 2.0;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (prior_cdf(prior, mid) >= q)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double sample_prior_once(const Prior& prior, SplitMix64& rng) {
  return std::visit(
      Overloaded{
          [&](const NormalPrior& g) {
            return g.mean + std::sqrt(g.variance) * rng.next_normal();
          },
          [&](const ScaleMixturePrior& g) {
            const double u = rng.next_double();
            double acc = 0.0;
            std::size_t pick = g.variances.size() - 1;
            for (std::size_t j = 0; j < g.variances.size(); ++j) {
              acc += g.weights[j];
              if (u < acc) {
                pick = j;
                break;
              }
            }
            return std::sqrt(g.variances[pick]) * rng.next_normal();
          },
          [&](const DiscretePrior& g) {
            const double u = rng.next_double();
            double acc = 0.0;
            std::size_t pick = g.atoms.size() - 1;
            for (std::size_t j = 0; j < g.atoms.size(); ++j) {
              acc += g.weights[j];
              if (u < acc) {
                pick = j;
                break;
              }
            }
            return g.atoms[pick];
          }},
      prior);
}

std::vector<double> sample_prior(const Prior& prior, std::size_t count,
                                 SplitMix64& rng) {
  if (count == 0) throw std::invalid_argument("sample count must be >= 1");
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(sample_prior_once(prior, rng));
  return out;
}

namespace {

double wasserstein1_discrete(const DiscretePrior& p, const DiscretePrior& q) {
  std::vector<double> grid;
  grid.reserve(p.atoms.size() + q.atoms.size());
  grid.insert(grid.end(), p.atoms.begin(), p.atoms.end());
  grid.insert(grid.end(), q.atoms.begin(), q.atoms.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  double total = 0.0, fp = 0.0, fq = 0.0;
  std::size_t ip = 0, iq = 0;
  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    while (ip < p.atoms.size() && p.atoms[ip] <= grid[g]) fp += p.weights[ip++];
    while (iq < q.atoms.size() && q.atoms[iq] <= grid[g]) fq += q.weights[iq++];
    total += std::abs(fp - fq) * (grid[g + 1] - grid[g]);
  }
  return total;
}

}  // namespace

double wasserstein1(const Prior& p, const Prior& q) {
  validate_prior(p);
  validate_prior(q);
  if (std::holds_alternative<DiscretePrior>(p) &&
      std::holds_alternative<DiscretePrior>(q)) {
    return wasserstein1_discrete(std::get<DiscretePrior>(p),
                                 std::get<DiscretePrior>(q));
  }

  const double a =
      std::min(prior_quantile(p, 1e-4), prior_quantile(q, 1e-4));
  const double b =
      std::max(prior_quantile(p, 1.0 - 1e-4), prior_quantile(q, 1.0 - 1e-4));
  if (!(b > a)) return 0.0;

  const auto gap = [&](double t) {
    return std::abs(prior_cdf(p, t) - prior_cdf(q, t));
  };

  // Trapezoid with dyadic refinement; node counts are powers of two plus one.
  std::size_t intervals = 1024;
  const double width = b - a;
  double sum_interior = 0.0;
  {
    const double h = width / static_cast<double>(intervals);
    for (std::size_t i = 1; i < intervals; ++i)
      sum_interior += gap(a + h * static_cast<double>(i));
  }
  const double ends = 0.5 * (gap(a) + gap(b));
  double estimate = (ends + sum_interior) * width / static_cast<double>(intervals);

  while (intervals < (1u << 20)) {
    const std::size_t doubled = intervals * 2;
    const double h = width / static_cast<double>(doubled);
    for (std::size_t i = 1; i < doubled; i += 2)
      sum_interior += gap(a + h * static_cast<double>(i));
    const double refined = (ends + sum_interior) * h;
    const bool close = std::abs(refined - estimate) <= 1e-6 * std::abs(refined);
    estimate = refined;
    intervals = doubled;
    if (close) break;
  }
  if (!std::isfinite(estimate))
    throw NumericalError("wasserstein1: non-finite integral");
  return estimate;
}

namespace {

// Quadrature of the ratio of integrals defining the posterior mean, one
// normal component at a time. Point-mass components enter as exact terms.
struct ComponentIntegrals {
  double den = 0.0;
  double num = 0.0;
};

ComponentIntegrals integrate_component(double comp_mean, double comp_var,
                                       double weight, double sigma, double x) {
  const double s2 = sigma * sigma;
  ComponentIntegrals out;
  if (comp_var == 0.0) {
    const double like = std::exp(log_normal_pdf(x, comp_mean, s2));
    out.den = weight * like;
    out.num = weight * comp_mean * like;
    return out;
  }
  // The integrand is the product of the prior component density and the
  // noise likelihood; each factor is negligible 16 sds from its own center,
  // so the mass lives in the window intersection. Prior and noise windows
  // only fail to overlap when the product is negligible at machine
  // precision; the hull between the centers covers that case.
  const double s_prior = std::sqrt(comp_var);
  double lo = std::max(comp_mean - 16.0 * s_prior, x - 16.0 * sigma);
  double hi = std::min(comp_mean + 16.0 * s_prior, x + 16.0 * sigma);
  if (!(lo < hi)) {
    lo = std::min(comp_mean, x);
    hi = std::max(comp_mean, x);
  }
  const auto joint = [&](double mu) {
    return std::exp(log_normal_pdf(mu, comp_mean, comp_var) +
                    log_normal_pdf(x, mu, s2));
  };
  // Coarse pass to scale the absolute tolerance of the adaptive pass.
  double coarse = 0.0;
  const int panels = 512;
  const double h = (hi - lo) / panels;
  {
    double acc = 0.5 * (joint(lo) + joint(hi));
    for (int i = 1; i < panels; ++i) acc += joint(lo + h * i);
    coarse = acc * h;
  }
  const double tol_den = std::max(coarse * 1e-13, 1e-300);
  const double scale = 1.0 + std::abs(x) + std::abs(comp_mean) + s_prior;
  // Pre-split into panels so a posterior spike much narrower than the
  // window cannot slip between the sample points of one adaptive pass.
  const int chunks = 64;
  const double step = (hi - lo) / chunks;
  for (int c = 0; c < chunks; ++c) {
    const double a = lo + step * c;
    const double b = c + 1 == chunks ? hi : a + step;
    out.den += weight * adaptive_simpson(joint, a, b, tol_den / chunks);
    out.num += weight * adaptive_simpson(
                            [&](double mu) { return mu * joint(mu); }, a, b,
                            tol_den * scale / chunks);
  }
  return out;
}

}  // namespace

double posterior_mean_quadrature(const Prior& prior, double sigma, double x) {
  check_inputs(sigma, x);
  return std::visit(
      Overloaded{
          [&](const NormalPrior& g) {
            if (g.variance == 0.0) return g.mean;
            const auto c = integrate_component(g.mean, g.variance, 1.0, sigma, x);
            return c.num / c.den;
          },
          [&](const ScaleMixturePrior& g) {
            double den = 0.0, num = 0.0;
            for (std::size_t j = 0; j < g.variances.size(); ++j) {
              if (g.weights[j] <= 0.0) continue;
              const auto c = integrate_component(0.0, g.variances[j],
                                                 g.weights[j], sigma, x);
              den += c.den;
              num += c.num;
            }
            return num / den;
          },
          [&](const DiscretePrior& g) {
            // Exact summation with a shared exponent shift; long double
            // accumulation keeps the ratio stable on fine grids.
            const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);
            double lmax = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < g.atoms.size(); ++j) {
              if (g.weights[j] <= 0.0) continue;
              const double d = x - g.atoms[j];
              lmax = std::max(lmax, std::log(g.weights[j]) - d * d * inv_2s2);
            }
            long double den = 0.0L, num = 0.0L;
            for (std::size_t j = 0; j < g.atoms.size(); ++j) {
              if (g.weights[j] <= 0.0) continue;
              const double d = x - g.atoms[j];
              const long double t = std::exp(
                  std::log(g.weights[j]) - d * d * inv_2s2 - lmax);
              den += t;
              num += t * static_cast<long double>(g.atoms[j]);
            }
            return static_cast<double>(num / den);
          }},
      prior);
}

}  // namespace ebselect
