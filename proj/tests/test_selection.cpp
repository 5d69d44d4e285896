#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "ebselect/json_io.hpp"
#include "ebselect/rng.hpp"
#include "ebselect/selection.hpp"

using namespace ebselect;

namespace {

// All m-subsets of {0..n-1}, for brute-force oracles at tiny n.
void all_subsets(std::size_t n, std::size_t m,
                 std::vector<std::vector<std::size_t>>& out) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    out.push_back(idx);
    std::size_t i = m;
    while (i > 0 && idx[i - 1] == n - m + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

TEST_CASE("select_top_m basics") {
  SplitMix64 rng(1);
  const auto out = select_top_m({3.0, 1.0, 2.0, 0.0}, 2, rng);
  CHECK(out.selected == std::vector<std::size_t>{0, 2});
  CHECK(out.threshold_score == 2.0);

  const auto nearly_all = select_top_m({5.0, -1.0, 2.0, 7.0}, 3, rng);
  CHECK(nearly_all.selected == std::vector<std::size_t>{0, 2, 3});
}

TEST_CASE("select_top_m input validation") {
  SplitMix64 rng(2);
  CHECK_THROWS_AS(select_top_m({1.0, 2.0}, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(select_top_m({1.0, 2.0}, 2, rng), std::invalid_argument);
  CHECK_THROWS_AS(select_top_m({1.0, std::nan("")}, 1, rng),
                  std::invalid_argument);
}

TEST_CASE("ties are broken uniformly") {
  {
    SplitMix64 a(5), b(5);
    const auto first = select_top_m({1.0, 1.0, 1.0, 1.0}, 2, a);
    const auto second = select_top_m({1.0, 1.0, 1.0, 1.0}, 2, b);
    CHECK(first.selected == second.selected);
  }
  std::map<std::size_t, int> hits;
  SplitMix64 rng(6);
  const int reps = 10000;
  for (int rep = 0; rep < reps; ++rep) {
    const auto out = select_top_m({1.0, 1.0, 1.0, 1.0}, 2, rng);
    for (std::size_t i : out.selected) ++hits[i];
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double freq = static_cast<double>(hits[i]) / reps;
    CHECK(std::abs(freq - 0.5) < 0.02);
  }
}

TEST_CASE("regret formula") {
  const std::vector<double> theta{3.0, 1.0, 2.0, 0.0};
  CHECK(regret(theta, {0, 2}, {0, 1}) == doctest::Approx(0.25));
  CHECK(regret(theta, {0, 2}, {0, 2}) == 0.0);
  CHECK_THROWS_AS(regret(theta, {0, 2}, {0}), std::invalid_argument);
  CHECK_THROWS_AS(regret(theta, {0, 9}, {0, 1}), std::invalid_argument);
}

TEST_CASE("oracle selection is optimal, exhaustively") {
  SplitMix64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 4 + rng.next_below(5);  // up to 8
    const std::size_t m = 1 + rng.next_below(n - 1);
    std::vector<double> theta(n);
    for (double& t : theta) t = rng.next_normal();
    const auto bayes = select_top_m(theta, m, rng);
    std::vector<std::vector<std::size_t>> subsets;
    all_subsets(n, m, subsets);
    for (const auto& alt : subsets)
      CHECK(regret(theta, bayes.selected, alt) >= -1e-15);
  }
}

TEST_CASE("worst alternative matches the sorted closed form") {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> theta(6);
    for (double& t : theta) t = rng.next_normal();
    const auto bayes = select_top_m(theta, 2, rng);
    std::vector<std::vector<std::size_t>> subsets;
    all_subsets(6, 2, subsets);
    double worst = -1e300;
    for (const auto& alt : subsets)
      worst = std::max(worst, regret(theta, bayes.selected, alt));
    // Exhaustive worst case = oracle top minus the two smallest scores.
    std::vector<double> sorted = theta;
    std::sort(sorted.begin(), sorted.end());
    const double closed_form =
        (sorted[5] + sorted[4] - sorted[0] - sorted[1]) / 6.0;
    CHECK(worst == doctest::Approx(closed_form).epsilon(1e-12));
  }
}

TEST_CASE("decompose hand example") {
  const std::vector<double> theta{3.0, 1.0, 2.0, 0.0};
  const std::vector<double> theta_hat{3.0, 2.5, 2.0, 0.0};
  SplitMix64 rng(9);
  const auto jb = select_top_m(theta, 2, rng).selected;
  const auto je = select_top_m(theta_hat, 2, rng).selected;
  CHECK(jb == std::vector<std::size_t>{0, 2});
  CHECK(je == std::vector<std::size_t>{0, 1});
  const auto report = decompose(theta, theta_hat, jb, je);
  CHECK(report.n == 4);
  CHECK(report.n_mistakes == 1);
  CHECK(report.prop_mistakes == doctest::Approx(0.25));
  CHECK(report.max_shrinkage_error == doctest::Approx(1.5));
  CHECK(report.two_parts_bound == doctest::Approx(0.75));
  CHECK(report.regret == doctest::Approx(0.25));
  CHECK(report.regret <= report.two_parts_bound);
}

TEST_CASE("regret report JSON carries the declared field names") {
  const std::vector<double> theta{3.0, 1.0, 2.0, 0.0};
  const std::vector<double> theta_hat{3.0, 2.5, 2.0, 0.0};
  const auto report = decompose(theta, theta_hat, {0, 2}, {0, 1});
  const std::string json = regret_report_to_json(report);
  for (const char* key :
       {"\"regret\"", "\"n_mistakes\"", "\"prop_mistakes\"",
        "\"max_shrinkage_error\"", "\"two_parts_bound\""})
    CHECK(json.find(key) != std::string::npos);
  CHECK(json.find("0.25") != std::string::npos);
}

TEST_CASE("decompose with identical sets is all zero") {
  const std::vector<double> theta{1.0, 2.0, 3.0};
  const std::vector<std::size_t> j{1, 2};
  const auto report = decompose(theta, theta, j, j);
  CHECK(report.n == 3);
  CHECK(report.regret == 0.0);
  CHECK(report.n_mistakes == 0);
  CHECK(report.max_shrinkage_error == 0.0);
  CHECK(report.two_parts_bound == 0.0);
}

TEST_CASE("two-parts bound over random instances") {
  SplitMix64 rng(10);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 5 + rng.next_below(40);
    const std::size_t m = 1 + rng.next_below(n - 1);
    std::vector<double> theta(n), theta_hat(n);
    for (std::size_t i = 0; i < n; ++i) {
      theta[i] = rng.next_normal();
      theta_hat[i] = theta[i] + 0.3 * rng.next_normal();
    }
    const auto jb = select_top_m(theta, m, rng).selected;
    const auto je = select_top_m(theta_hat, m, rng).selected;
    const auto report = decompose(theta, theta_hat, jb, je);
    CHECK(report.regret >= -1e-15);
    if (report.n_mistakes > 0) CHECK(report.regret <= report.two_parts_bound);
  }
}

TEST_CASE("permutation equivariance") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 10;
    std::vector<double> theta(n), theta_hat(n);
    for (std::size_t i = 0; i < n; ++i) {
      theta[i] = rng.next_normal();
      theta_hat[i] = theta[i] + 0.2 * rng.next_normal();
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i)
      std::swap(perm[i - 1], perm[rng.next_below(i)]);

    std::vector<double> theta_p(n), theta_hat_p(n);
    for (std::size_t i = 0; i < n; ++i) {
      theta_p[perm[i]] = theta[i];
      theta_hat_p[perm[i]] = theta_hat[i];
    }
    SplitMix64 tie_a(0), tie_b(0);
    const auto jb = select_top_m(theta, 3, tie_a).selected;
    const auto je = select_top_m(theta_hat, 3, tie_a).selected;
    const auto jb_p = select_top_m(theta_p, 3, tie_b).selected;
    const auto je_p = select_top_m(theta_hat_p, 3, tie_b).selected;

    std::vector<std::size_t> jb_mapped, je_mapped;
    for (std::size_t i : jb) jb_mapped.push_back(perm[i]);
    for (std::size_t i : je) je_mapped.push_back(perm[i]);
    std::sort(jb_mapped.begin(), jb_mapped.end());
    std::sort(je_mapped.begin(), je_mapped.end());
    CHECK(jb_mapped == jb_p);
    CHECK(je_mapped == je_p);
    CHECK(regret(theta, jb, je) ==
          doctest::Approx(regret(theta_p, jb_p, je_p)).epsilon(1e-12));
  }
}

TEST_CASE("score_units") {
  const Prior unit{NormalPrior{0.0, 1.0}};
  const auto scores = score_units(unit, {{2.0, 1.0}, {-2.0, 1.0}});
  CHECK(scores == std::vector<double>{1.0, -1.0});

  // Elementwise consistency with posterior_mean under varying sigma.
  const Prior mix{ScaleMixturePrior{{0.5, 2.0}, {0.5, 0.5}}};
  const std::vector<Observation> obs{{1.0, 0.5}, {1.0, 1.0}, {1.0, 2.0}};
  const auto s = score_units(mix, obs);
  for (std::size_t i = 0; i < obs.size(); ++i)
    CHECK(s[i] == posterior_mean(mix, obs[i].sigma, obs[i].x));

  CHECK_THROWS_AS(score_units(Prior{NormalPrior{0.0, 0.0}}, obs),
                  std::invalid_argument);
}

TEST_CASE("homoskedastic scoring preserves the ranking of x") {
  SplitMix64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 20;
    const double sigma = 0.5 + 2.0 * rng.next_double();
    std::vector<Observation> obs;
    std::vector<double> raw;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = 3.0 * rng.next_normal();
      obs.push_back({x, sigma});
      raw.push_back(x);
    }
    const Prior prior =
        trial % 2 == 0
            ? Prior{ScaleMixturePrior{{0.25, 1.0, 4.0}, {0.3, 0.4, 0.3}}}
            : Prior{NormalPrior{0.3, 1.5}};
    const auto scores = score_units(prior, obs);
    SplitMix64 tie_a(99), tie_b(99);
    const std::size_t m = 1 + rng.next_below(n - 1);
    CHECK(select_top_m(scores, m, tie_a).selected ==
          select_top_m(raw, m, tie_b).selected);
  }
}
