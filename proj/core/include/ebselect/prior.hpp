#pragma once

#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

#include "ebselect/observation.hpp"
#include "ebselect/rng.hpp"

namespace ebselect {

/// N(mean, variance). variance == 0 is a point mass; fitters may return it
/// as a boundary solution but selection pipelines reject degenerate priors.
struct NormalPrior {
  double mean = 0.0;
  double variance = 1.0;
};

/// Mixture of mean-zero normals over a fixed, strictly ascending variance
/// grid; only the weights vary. variances[0] == 0 is allowed and acts as a
/// point mass at zero.
struct ScaleMixturePrior {
  std::vector<double> variances;
  std::vector<double> weights;
};

/// Finitely supported distribution with strictly ascending atoms. Doubles as
/// the empirical sigma law and as the NPMLE prior family.
struct DiscretePrior {
  std::vector<double> atoms;
  std::vector<double> weights;
};

using Prior = std::variant<NormalPrior, ScaleMixturePrior, DiscretePrior>;

/// Throws std::invalid_argument when a hyperparameter invariant fails:
/// weights must be in [0,1] and sum to 1 within 1e-12, grids must be finite
/// and strictly ascending, variances nonnegative.
void validate_prior(const Prior& prior);

/// True when the prior is a point mass (normal with zero variance, mixture
/// with all weight on the zero-variance component, single effective atom).
bool is_degenerate(const Prior& prior);

/// Posterior mean of the effect given one observation with noise sd sigma.
/// Weight-by-density sums run in the log domain, so far-tail x is safe.
double posterior_mean(const Prior& prior, double sigma, double x);

/// Posterior variance of the effect given one observation.
double posterior_variance(const Prior& prior, double sigma, double x);

/// Log density at x of the prior convolved with N(0, sigma^2).
double marginal_log_density(const Prior& prior, double sigma, double x);

/// Right-continuous CDF of the prior itself.
double prior_cdf(const Prior& prior, double t);

/// Generalized inverse CDF (smallest t with CDF(t) >= q), by bisection.
double prior_quantile(const Prior& prior, double q);

/// i.i.d. draws; deterministic given the generator state.
std::vector<double> sample_prior(const Prior& prior, std::size_t count,
                                 SplitMix64& rng);
double sample_prior_once(const Prior& prior, SplitMix64& rng);

/// 1-Wasserstein distance: the integral of |CDF difference|. Exact for a
/// pair of discrete priors; otherwise a trapezoid rule between the pooled
/// 1e-4 and 1-1e-4 quantiles, dyadically refined to 1e-6 relative or 2^20
/// nodes.
double wasserstein1(const Prior& p, const Prior& q);

/// Independent evaluation of the posterior mean by adaptive quadrature of
/// the defining ratio of integrals (exact summation for discrete priors).
/// Shares no code with the closed forms used by posterior_mean; intended as
/// a test oracle. Throws NumericalError if refinement fails to converge.
double posterior_mean_quadrature(const Prior& prior, double sigma, double x);

/// [min, max] of the support; normal components report mean +- 40 sd.
std::pair<double, double> support_hull(const Prior& prior);

}  // namespace ebselect
