#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ebselect/estimation.hpp"
#include "ebselect/math_util.hpp"
#include "ebselect/prior.hpp"
#include "ebselect/rng.hpp"

using namespace ebselect;

namespace {

std::vector<Observation> draw_normal_data(std::size_t n, double mean,
                                          double prior_var, double sigma,
                                          SplitMix64& rng) {
  std::vector<Observation> obs;
  obs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = mean + std::sqrt(prior_var) * rng.next_normal();
    obs.push_back({mu + sigma * rng.next_normal(), sigma});
  }
  return obs;
}

}  // namespace

TEST_CASE("fit_normal recovers a normal prior") {
  SplitMix64 rng(101);
  const auto obs = draw_normal_data(100000, 0.0, 1.0, 1.0, rng);
  const auto [prior, diag] = fit_normal(obs);
  CHECK(std::abs(prior.mean) < 0.02);
  CHECK(std::abs(prior.variance - 1.0) < 0.05);
  CHECK(diag.converged);
  CHECK(count_trace_violations(diag) == 0);
}

TEST_CASE("fit_normal on constant data hits the v = 0 boundary") {
  std::vector<Observation> obs(40, Observation{2.5, 1.0});
  const auto [prior, diag] = fit_normal(obs);
  CHECK(prior.mean == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(prior.variance == 0.0);
  CHECK(is_degenerate(Prior{prior}));
}

TEST_CASE("fit_normal output is a local maximum") {
  SplitMix64 rng(202);
  const auto obs = draw_normal_data(3000, 0.4, 0.8, 1.2, rng);
  const auto [prior, diag] = fit_normal(obs);
  const double best = log_likelihood(Prior{NormalPrior{prior.mean, prior.variance}}, obs);
  for (int trial = 0; trial < 100; ++trial) {
    const double m = prior.mean + 0.05 * rng.next_normal();
    const double v = std::max(0.0, prior.variance * (1.0 + 0.05 * rng.next_normal()));
    CHECK(log_likelihood(Prior{NormalPrior{m, v}}, obs) <= best + 1e-9);
  }
}

TEST_CASE("fit_normal rejects tiny samples") {
  CHECK_THROWS_AS(fit_normal({{1.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("default scale grid") {
  {
    const auto grid = default_scale_grid({{0.0, 1.0}});
    const auto vars = materialize_grid(grid);
    CHECK(vars.front() == 0.0);
    CHECK(std::sqrt(vars[1]) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(std::sqrt(vars.back()) == doctest::Approx(0.2).epsilon(1e-12));
  }
  {
    SplitMix64 rng(42);
    std::vector<Observation> obs;
    for (int i = 0; i < 50; ++i)
      obs.push_back({3.0 * rng.next_normal(), 0.5 + rng.next_double()});
    const auto vars = materialize_grid(default_scale_grid(obs));
    for (std::size_t j = 2; j < vars.size(); ++j) {
      const double ratio = std::sqrt(vars[j]) / std::sqrt(vars[j - 1]);
      CHECK(ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    }
  }
  {
    std::vector<Observation> obs{{10.0, 1.0}, {-1.0, 1.0}};
    const auto grid = default_scale_grid(obs);
    const double s_max = 2.0 * std::sqrt(99.0);
    CHECK(grid.upper >= s_max * (1.0 - 1e-12));
    CHECK(grid.upper < s_max * std::sqrt(2.0));
  }
}

TEST_CASE("fit_scale_mixture recovers mixture weights on its own grid") {
  SplitMix64 rng(303);
  const std::vector<double> variances{0.25, 4.0};
  const std::vector<double> truth{0.7, 0.3};
  std::vector<Observation> obs;
  obs.reserve(100000);
  const Prior g{ScaleMixturePrior{variances, truth}};
  for (int i = 0; i < 100000; ++i) {
    const double mu = sample_prior_once(g, rng);
    obs.push_back({mu + rng.next_normal(), 1.0});
  }
  const auto [fitted, diag] = fit_scale_mixture(obs, variances);
  CHECK(count_trace_violations(diag) == 0);
  for (std::size_t j = 0; j < truth.size(); ++j)
    CHECK(std::abs(fitted.weights[j] - truth[j]) < 0.02);
}

TEST_CASE("single component mixture converges immediately") {
  std::vector<Observation> obs{{0.3, 1.0}, {-0.2, 1.0}, {1.0, 1.0}};
  const auto [fitted, diag] = fit_scale_mixture(obs, std::vector<double>{1.0});
  CHECK(fitted.weights == std::vector<double>{1.0});
  CHECK(diag.iterations == 1);
  CHECK(diag.converged);
}

TEST_CASE("fit_scale_mixture validates the grid") {
  std::vector<Observation> obs{{0.3, 1.0}, {-0.2, 1.0}};
  GridSpec atom_grid{GridKind::AtomGrid, 5, -1.0, 1.0, GridSpacing::Linear};
  CHECK_THROWS_AS(fit_scale_mixture(obs, atom_grid), std::invalid_argument);
  CHECK_THROWS_AS(fit_scale_mixture(obs, std::vector<double>{2.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("fit_npmle on symmetric data is symmetric") {
  std::vector<Observation> obs(60, Observation{0.0, 1.0});
  GridSpec grid{GridKind::AtomGrid, 21, -1.0, 1.0, GridSpacing::Linear};
  const auto [fitted, diag] = fit_npmle(obs, grid);
  CHECK(count_trace_violations(diag) == 0);
  double mean = 0.0;
  for (std::size_t j = 0; j < fitted.atoms.size(); ++j)
    mean += fitted.atoms[j] * fitted.weights[j];
  CHECK(std::abs(mean) < 1e-6);
}

TEST_CASE("fit_npmle requires a covering grid") {
  std::vector<Observation> obs{{-2.0, 1.0}, {2.0, 1.0}};
  GridSpec grid{GridKind::AtomGrid, 11, -1.0, 1.0, GridSpacing::Linear};
  CHECK_THROWS_AS(fit_npmle(obs, grid), std::invalid_argument);
}

TEST_CASE("fit_npmle dominates fit_normal on a fixed dataset") {
  SplitMix64 rng(404);
  std::vector<Observation> obs;
  for (int i = 0; i < 400; ++i) {
    const double mu = rng.next_double() < 0.5 ? -1.5 : 1.5;
    obs.push_back({mu + 0.8 * rng.next_normal(), 0.8});
  }
  const auto [normal_fit, normal_diag] = fit_normal(obs);
  const auto [npmle_fit, npmle_diag] =
      fit_npmle(obs, default_atom_grid(obs, 150));
  CHECK(npmle_diag.final_log_likelihood >=
        normal_diag.final_log_likelihood - 1e-6);
}

TEST_CASE("npmle default grid size follows sqrt(n) log n capped at 300") {
  SplitMix64 rng(55);
  std::vector<Observation> obs;
  for (int i = 0; i < 100; ++i) obs.push_back({rng.next_normal(), 1.0});
  CHECK(default_atom_grid(obs).size ==
        static_cast<std::size_t>(std::ceil(10.0 * std::log(100.0))));
  std::vector<Observation> big;
  for (int i = 0; i < 10000; ++i) big.push_back({rng.next_normal(), 1.0});
  CHECK(default_atom_grid(big).size == 300);
}

TEST_CASE("log likelihood") {
  CHECK(log_likelihood(Prior{NormalPrior{0.0, 1.0}}, {}) == 0.0);
  CHECK(log_likelihood(Prior{NormalPrior{0.0, 1.0}}, {{0.0, 1.0}}) ==
        doctest::Approx(-0.5 * std::log(4.0 * M_PI)).epsilon(1e-14));

  SplitMix64 rng(66);
  std::vector<Observation> a, b, all;
  for (int i = 0; i < 20; ++i) {
    const Observation o{rng.next_normal(), 0.5 + rng.next_double()};
    (i % 2 == 0 ? a : b).push_back(o);
    all.push_back(o);
  }
  const Prior p{ScaleMixturePrior{{0.5, 2.0}, {0.4, 0.6}}};
  CHECK(log_likelihood(p, all) ==
        doctest::Approx(log_likelihood(p, a) + log_likelihood(p, b))
            .epsilon(1e-12));
}

TEST_CASE("mle_location closed form") {
  CHECK(mle_location({{1.0, 1.0}, {-1.0, 1.0}}) == doctest::Approx(0.0));
  CHECK(mle_location({{3.7, 2.2}}) == doctest::Approx(3.7));
  CHECK(mle_location({{1.0, 2.0}, {2.0, 2.0}, {6.0, 2.0}}) ==
        doctest::Approx(3.0));
  CHECK_THROWS_AS(mle_location({}), std::invalid_argument);
}

TEST_CASE("mle_location maximizes the location-family likelihood") {
  SplitMix64 rng(77);
  std::vector<Observation> obs;
  for (int i = 0; i < 200; ++i) {
    const double sigma = rng.next_double() < 0.5 ? 1.0 : 2.0;
    obs.push_back({0.3 + rng.next_normal() + sigma * rng.next_normal(), sigma});
  }
  const double eta_hat = mle_location(obs);
  const double step = 1e-4;
  double best_eta = -2.0, best_ll = -1e300;
  for (double eta = -2.0; eta <= 2.0; eta += step) {
    const double ll = log_likelihood(Prior{NormalPrior{eta, 1.0}}, obs);
    if (ll > best_ll) {
      best_ll = ll;
      best_eta = eta;
    }
  }
  CHECK(std::abs(eta_hat - best_eta) <= step);
}

TEST_CASE("larger samples estimate the prior better") {
  const std::vector<double> variances{0.25, 1.0, 4.0};
  const std::vector<double> truth{0.5, 0.3, 0.2};
  const Prior g{ScaleMixturePrior{variances, truth}};
  const auto fit_w1 = [&](std::size_t n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<Observation> obs;
    obs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = sample_prior_once(g, rng);
      obs.push_back({mu + rng.next_normal(), 1.0});
    }
    const auto [fitted, diag] = fit_scale_mixture(obs, variances);
    return wasserstein1(Prior{fitted}, g);
  };
  CHECK(fit_w1(100000, 909) < fit_w1(1000, 909));
}

TEST_CASE("enlarging the scale grid never hurts the fit") {
  SplitMix64 rng(111);
  std::vector<Observation> obs;
  const Prior g{ScaleMixturePrior{{0.25, 2.25}, {0.6, 0.4}}};
  for (int i = 0; i < 2000; ++i) {
    const double mu = sample_prior_once(g, rng);
    obs.push_back({mu + rng.next_normal(), 1.0});
  }
  const std::vector<double> small{0.25, 1.0, 4.0};
  const std::vector<double> large{0.0, 0.0625, 0.25, 1.0, 4.0, 16.0};
  const auto [fit_small, diag_small] = fit_scale_mixture(obs, small);
  const auto [fit_large, diag_large] = fit_scale_mixture(obs, large);
  CHECK(diag_large.final_log_likelihood >=
        diag_small.final_log_likelihood - 1e-6);
}

TEST_CASE("materialize_grid shapes") {
  GridSpec atoms{GridKind::AtomGrid, 5, -2.0, 2.0, GridSpacing::Linear};
  CHECK(materialize_grid(atoms) ==
        std::vector<double>{-2.0, -1.0, 0.0, 1.0, 2.0});
  GridSpec single{GridKind::AtomGrid, 1, -1.0, 1.0, GridSpacing::Linear};
  CHECK(materialize_grid(single) == std::vector<double>{0.0});
  GridSpec bad{GridKind::ScaleGrid, 1, 0.1, 1.0, GridSpacing::Geometric};
  CHECK_THROWS_AS(materialize_grid(bad), std::invalid_argument);
  GridSpec inverted{GridKind::AtomGrid, 5, 2.0, -2.0, GridSpacing::Linear};
  CHECK_THROWS_AS(materialize_grid(inverted), std::invalid_argument);
}
