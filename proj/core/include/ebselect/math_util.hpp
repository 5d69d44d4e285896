#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace ebselect {

/// Raised when an iterative numeric routine exhausts its refinement budget.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double log_normal_pdf(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance) + d * d / variance);
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z * 0.70710678118654752440084436210485);
}

inline double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double t : v) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double t : v) s += std::exp(t - m);
  return m + std::log(s);
}

/// Golden-section maximization on [lo, hi]. Returns the abscissa of the best
/// point seen, which includes both endpoints.
template <class F>
double golden_section_max(F&& f, double lo, double hi, int iterations = 120) {
  const double inv_phi = 0.6180339887498948482045868343656;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iterations && b - a > 0.0; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  double best_x = 0.5 * (a + b);
  double best_f = f(best_x);
  for (double cand : {lo, hi, x1, x2}) {
    double fc = f(cand);
    if (fc > best_f) {
      best_f = fc;
      best_x = cand;
    }
  }
  return best_x;
}

namespace detail {

template <class F>
double simpson_recurse(const F& f, double a, double m, double b, double fa,
                       double fm, double fb, double whole, double tol,
                       int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0)
    throw NumericalError("adaptive quadrature: refinement cap exceeded");
  return simpson_recurse(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature with an absolute error target.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol_abs,
                        int max_depth = 48) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_recurse(f, a, m, b, fa, fm, fb, whole, tol_abs,
                                 max_depth);
}

/// Nearest-rank percentile: the ceil(p/100 * N)-th smallest value.
inline double percentile_nearest_rank(std::vector<double> values, double pct) {
  if (values.empty())
    throw std::invalid_argument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(pct / 100.0 * static_cast<double>(values.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(
      rank, 1.0, static_cast<double>(values.size())));
  return values[idx - 1];
}

inline double sample_mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean of an empty sample");
  double s = 0.0;
  for (double t : v) s += t;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double s = 0.0;
  for (double t : v) s += (t - m) * (t - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope needs >= 2 paired points");
  std::vector<double> lx, ly;
  lx.reserve(x.size());
  ly.reserve(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("loglog_slope needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = sample_mean(lx), my = sample_mean(ly);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  return sxy / sxx;
}

}  // namespace ebselect
