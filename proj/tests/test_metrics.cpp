#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mmcrl/assignment.hpp"
#include "mmcrl/metrics.hpp"
#include "mmcrl/pattern.hpp"

using namespace mmcrl;

TEST_CASE("mcc of identical data is one with the identity assignment") {
  std::mt19937_64 rng(1);
  const Tensor z = Tensor::randn(50, 4, rng);
  const MccResult r = mcc(z, z);
  CHECK(r.mcc == doctest::Approx(1.0));
  for (int i = 0; i < 4; ++i) CHECK(r.assignment[i] == i);
  CHECK_FALSE(r.zero_variance_flag);
}

TEST_CASE("mcc absorbs sign, scale and slot permutation") {
  std::mt19937_64 rng(2);
  const Tensor z = Tensor::randn(60, 2, rng);
  Tensor est(60, 2);
  for (std::size_t i = 0; i < 60; ++i) {
    est(i, 0) = -z(i, 1);       // negated column 1
    est(i, 1) = 3.0 * z(i, 0);  // scaled column 0
  }
  const MccResult r = mcc(z, est);
  CHECK(r.mcc == doctest::Approx(1.0));
  CHECK(r.assignment[0] == 1);
  CHECK(r.assignment[1] == 0);
}

TEST_CASE("mcc of independent noise is small") {
  std::mt19937_64 rng(3);
  const Tensor z = Tensor::randn(10000, 4, rng);
  const Tensor noise = Tensor::randn(10000, 4, rng);
  CHECK(mcc(z, noise).mcc < 0.1);
}

TEST_CASE("mcc assignment matches exhaustive search for L <= 6") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t L = 3 + trial % 4;
    const Tensor zt = Tensor::randn(40, L, rng);
    const Tensor ze = Tensor::randn(40, L, rng);
    const MccResult r = mcc(zt, ze);
    // exhaustive: maximize the sum of matched |corr|
    auto corr_of = [&](std::size_t i, std::size_t j) {
      double mt = 0, me = 0;
      for (std::size_t n = 0; n < 40; ++n) {
        mt += zt(n, i);
        me += ze(n, j);
      }
      mt /= 40;
      me /= 40;
      double dot = 0, nt = 0, ne = 0;
      for (std::size_t n = 0; n < 40; ++n) {
        dot += (zt(n, i) - mt) * (ze(n, j) - me);
        nt += (zt(n, i) - mt) * (zt(n, i) - mt);
        ne += (ze(n, j) - me) * (ze(n, j) - me);
      }
      return std::fabs(dot) / std::sqrt(nt * ne);
    };
    std::vector<int> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1;
    do {
      double acc = 0;
      for (std::size_t i = 0; i < L; ++i) acc += corr_of(i, perm[i]);
      best = std::max(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    double got = 0;
    for (std::size_t i = 0; i < L; ++i) got += corr_of(i, r.assignment[i]);
    CHECK(got == doctest::Approx(best).epsilon(1e-10));
  }
}

TEST_CASE("zero-variance columns are flagged and contribute zero") {
  std::mt19937_64 rng(5);
  Tensor z = Tensor::randn(20, 2, rng);
  Tensor est = z;
  for (std::size_t i = 0; i < 20; ++i) est(i, 1) = 7.0;  // constant
  const MccResult r = mcc(z, est);
  CHECK(r.zero_variance_flag);
  CHECK(r.mcc == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("spearman option is invariant to monotone distortion") {
  std::mt19937_64 rng(6);
  const Tensor z = Tensor::randn(200, 2, rng);
  Tensor est(200, 2);
  for (std::size_t i = 0; i < 200; ++i) {
    est(i, 0) = std::exp(z(i, 0));        // monotone nonlinear
    est(i, 1) = std::pow(z(i, 1), 3.0);
  }
  CHECK(mcc(z, est, /*spearman=*/true).mcc == doctest::Approx(1.0));
}

TEST_CASE("r2 closed forms") {
  std::mt19937_64 rng(7);
  const Tensor z = Tensor::randn(100, 3, rng);
  // invertible affine estimate: exact recovery
  Tensor est(100, 3);
  for (std::size_t i = 0; i < 100; ++i) {
    est(i, 0) = 2 * z(i, 0) + z(i, 1) + 0.5;
    est(i, 1) = z(i, 1) - z(i, 2);
    est(i, 2) = 3 * z(i, 2) - 1.0;
  }
  CHECK(std::fabs(r2_score(z, est) - 1.0) < 1e-8);

  // constant estimate: no explanatory power
  CHECK(r2_score(z, Tensor::full(100, 3, 2.0)) ==
        doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("r2 with one slot replaced by noise") {
  std::mt19937_64 rng(8);
  const std::size_t n = 5000, L = 4;
  const Tensor z = Tensor::randn(n, L, rng);
  Tensor est = z;
  const Tensor noise = Tensor::randn(n, 1, rng);
  for (std::size_t i = 0; i < n; ++i) est(i, 2) = noise(i, 0);
  // slots 0,1,3 predicted exactly; slot 2 only by chance
  CHECK(r2_score(z, est) == doctest::Approx((L - 1.0) / L).epsilon(0.02));
}

TEST_CASE("collapse_slots carries the reference 7-slot layout to 5x5") {
  SharingPattern pattern = example4_pattern();
  const Tensor p_star = ground_truth_permutation(pattern);
  std::mt19937_64 rng(9);
  Tensor m = Tensor::randn(7, 7, rng);
  // make duplicated shared rows/cols identical so collapse is exact carry-over
  for (std::size_t j = 0; j < 7; ++j) {
    m(4, j) = m(2, j);
    m(5, j) = m(3, j);
  }
  for (std::size_t i = 0; i < 7; ++i) {
    m(i, 4) = m(i, 2);
    m(i, 5) = m(i, 3);
  }
  const Tensor c = collapse_slots(m, p_star, pattern);
  REQUIRE(c.rows() == 5);
  // latent ids: slot0 -> 0, slot1 -> 1, slot2 -> 3, slot3 -> 4, slot6 -> 2
  CHECK(c(0, 0) == doctest::Approx(m(0, 0)));
  CHECK(c(0, 3) == doctest::Approx(m(0, 2)));
  CHECK(c(3, 2) == doctest::Approx(m(2, 6)));
  CHECK(c(2, 2) == doctest::Approx(m(6, 6)));
}

TEST_CASE("collapse averages duplicate rows") {
  SharingPattern pattern = SharingPattern::make(2, {{0, 1}, {1}}, 1.0);
  const Tensor p_star = ground_truth_permutation(pattern);
  Tensor m = Tensor::zeros(3, 3);
  m(1, 0) = 2.0;  // duplicate slots of latent 1: slots 1 and 2
  m(2, 0) = 4.0;
  const Tensor c = collapse_slots(m, p_star, pattern);
  CHECK(c(1, 0) == doctest::Approx(3.0));
}

TEST_CASE("collapse rejects a permutation whose cycles disagree") {
  SharingPattern pattern = example4_pattern();
  // identity P claims no duplicates, but the pattern has shared latents
  CHECK_THROWS_AS(
      collapse_slots(Tensor::zeros(7, 7), Tensor::identity(7), pattern),
      std::invalid_argument);
}

TEST_CASE("enshd zero on aligned identical graphs") {
  SharingPattern pattern = example4_pattern();
  const Tensor p_star = ground_truth_permutation(pattern);
  // true 5x5 DAG
  Tensor truth = Tensor::zeros(5, 5);
  truth(3, 2) = 1.0;  // shared z7 -> specific z3
  truth(0, 1) = 1.0;
  // estimated LxL: duplicate the true edges into slots with weight 1
  Tensor est = Tensor::zeros(7, 7);
  // slots: 0:z0 1:z1 2:z7 3:z8 4:z7 5:z8 6:z3(latent 2)
  est(2, 6) = est(4, 6) = 1.0;  // z7 -> z3 from both duplicates
  est(0, 1) = 1.0;
  std::vector<int> sigma(7);
  std::iota(sigma.begin(), sigma.end(), 0);
  CHECK(enshd(truth, est, sigma, p_star, pattern, 0.3) == 0);

  // one spurious edge
  est(1, 0) = 1.0;
  CHECK(enshd(truth, est, sigma, p_star, pattern, 0.3) == 1);
}

TEST_CASE("enshd respects the threshold") {
  SharingPattern pattern = SharingPattern::make(2, {{0, 1}}, 0.0);
  const Tensor p_star = ground_truth_permutation(pattern);
  Tensor truth = Tensor::zeros(2, 2);
  Tensor est = Tensor::zeros(2, 2);
  est(0, 1) = 0.29;  // below tau = 0.3: not an edge
  std::vector<int> sigma = {0, 1};
  CHECK(enshd(truth, est, sigma, p_star, pattern, 0.3) == 0);
  est(0, 1) = 0.31;
  CHECK(enshd(truth, est, sigma, p_star, pattern, 0.3) == 1);
}

TEST_CASE("assignment solver agrees with brute force") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const Tensor score = Tensor::randn(n, n, rng);
    const auto col = max_assignment(score);
    double got = 0;
    for (std::size_t i = 0; i < n; ++i) got += score(i, col[i]);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1e300;
    do {
      double acc = 0;
      for (std::size_t i = 0; i < n; ++i) acc += score(i, perm[i]);
      best = std::max(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got == doctest::Approx(best).epsilon(1e-10));
  }
}

TEST_CASE("report text round trip") {
  EvalReport r;
  r.mcc = 0.87;
  r.r2 = 0.91;
  r.enshd = 3;
  r.max_possible_edges = 42;
  r.tau = 0.3;
  r.benchmark = "mod2";
  r.seed = 17;
  r.assignment = {2, 0, 1};
  r.per_slot_correlations = {0.9, 0.8, 0.91};
  r.zero_variance_flag = false;
  const EvalReport back = parse_report_text(r.to_text());
  CHECK(back.mcc == doctest::Approx(r.mcc));
  CHECK(back.r2 == doctest::Approx(r.r2));
  CHECK(back.enshd == r.enshd);
  CHECK(back.max_possible_edges == r.max_possible_edges);
  CHECK(back.benchmark == r.benchmark);
  CHECK(back.seed == r.seed);
  CHECK(back.assignment == r.assignment);
  REQUIRE(back.per_slot_correlations.size() == 3);
  CHECK(back.per_slot_correlations[2] == doctest::Approx(0.91));

  // csv row has the same column count as the header
  const std::string header = r.csv_header();
  const std::string row = r.csv_row();
  CHECK(std::count(header.begin(), header.end(), ',') ==
        std::count(row.begin(), row.end(), ','));
}

TEST_CASE("metric bounds") {
  std::mt19937_64 rng(11);
  const Tensor a = Tensor::randn(50, 3, rng);
  const Tensor b = Tensor::randn(50, 3, rng);
  const double m = mcc(a, b).mcc;
  CHECK(m >= 0.0);
  CHECK(m <= 1.0);
  CHECK(r2_score(a, b) <= 1.0);
}
