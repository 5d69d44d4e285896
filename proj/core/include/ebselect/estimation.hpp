#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ebselect/observation.hpp"
#include "ebselect/prior.hpp"

namespace ebselect {

enum class GridKind { ScaleGrid, AtomGrid };
enum class GridSpacing { Geometric, Linear };

/// Description of a fixed component grid. Scale grids describe the nonzero
/// component standard deviations; materializing one prepends the zero
/// (point-mass) component and squares the sds into variances.
struct GridSpec {
  GridKind kind = GridKind::AtomGrid;
  std::size_t size = 2;
  double lower = 0.0;
  double upper = 1.0;
  GridSpacing spacing = GridSpacing::Linear;
};

void validate_grid(const GridSpec& grid);

/// Grid values: variances (including the leading 0) for a scale grid, atom
/// locations for an atom grid.
std::vector<double> materialize_grid(const GridSpec& grid);

struct FitDiagnostics {
  double final_log_likelihood = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> ll_trace;

  /// Log-likelihood gain of the last step, 0 for an empty trace.
  double last_delta() const {
    return ll_trace.size() < 2
               ? 0.0
               : ll_trace.back() - ll_trace[ll_trace.size() - 2];
  }
};

/// Steps where the trace decreases by more than `slack`; monotone ascent
/// routines should report zero.
std::size_t count_trace_violations(const FitDiagnostics& diag,
                                   double slack = 1e-9);

/// Marginal maximum likelihood for the normal prior by coordinate ascent:
/// closed-form precision-weighted mean given the variance, golden-section
/// search for the variance given the mean. The boundary solution v = 0 is
/// returned as-is (a degenerate prior, rejected by selection pipelines).
std::pair<NormalPrior, FitDiagnostics> fit_normal(
    const std::vector<Observation>& obs);

/// {0} followed by a geometric sd ladder with ratio sqrt(2), from
/// min sigma / 10 up to twice the largest rough effect sd in the data.
GridSpec default_scale_grid(const std::vector<Observation>& obs);

/// Linear atom grid over [min x, max x] with ceil(min(sqrt(n) log n, 300))
/// points (a size hint overrides the count).
GridSpec default_atom_grid(const std::vector<Observation>& obs,
                           std::size_t size_hint = 0);

/// EM over mixture weights with component variances fixed by the grid.
std::pair<ScaleMixturePrior, FitDiagnostics> fit_scale_mixture(
    const std::vector<Observation>& obs, const GridSpec& grid);
std::pair<ScaleMixturePrior, FitDiagnostics> fit_scale_mixture(
    const std::vector<Observation>& obs, const std::vector<double>& variances);

/// EM over atom weights with atoms fixed on a grid covering the data range;
/// atoms whose final weight falls below 1e-10 are dropped.
std::pair<DiscretePrior, FitDiagnostics> fit_npmle(
    const std::vector<Observation>& obs, const GridSpec& grid);
std::pair<DiscretePrior, FitDiagnostics> fit_npmle(
    const std::vector<Observation>& obs, const std::vector<double>& atoms);

/// Sum of marginal log densities; 0 for an empty sample.
double log_likelihood(const Prior& prior, const std::vector<Observation>& obs);

/// Closed-form MLE of eta for the location family N(eta, 1):
/// sum x_i/(1+sigma_i^2) / sum 1/(1+sigma_i^2).
double mle_location(const std::vector<Observation>& obs);

}  // namespace ebselect
