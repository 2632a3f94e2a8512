#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mmcrl/otalign.hpp"
#include "mmcrl/pattern.hpp"

using namespace mmcrl;

namespace {

// Exhaustive ILP oracle: best feasible hard permutation under the block
// budgets, minimizing tr((D + eps I) P^T).
std::pair<double, std::vector<int>> brute_force_ilp(
    const CostMatrix& cost, const SharingPattern& pattern, double k) {
  const std::size_t L = cost.distances.rows();
  std::vector<int> perm(L);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  std::vector<int> best_perm;
  do {
    // block budget: mass of rows A_m x cols A_k <= k for each ordered pair
    bool feasible = true;
    for (int m = 0; m < pattern.num_modalities() && feasible; ++m)
      for (int q = 0; q < pattern.num_modalities() && feasible; ++q) {
        if (m == q) continue;
        int mass = 0;
        const auto [mf, ml] = pattern.slot_range(m);
        const auto [qf, ql] = pattern.slot_range(q);
        for (int i = mf; i < ml; ++i)
          if (perm[i] >= qf && perm[i] < ql) ++mass;
        if (mass > k + 1e-9) feasible = false;
      }
    if (!feasible) continue;
    double obj = 0.0;
    for (std::size_t i = 0; i < L; ++i) obj += cost.at(i, perm[i]);
    if (obj < best - 1e-12) {
      best = obj;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, best_perm};
}

double frob_diff(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("cost matrix basics") {
  // identical feature columns have zero distance
  Tensor z(3, 2, {1, 1, 2, 2, 3, 3});
  const CostMatrix cost = cost_matrix(z, 0.7);
  CHECK(cost.distances(0, 1) == doctest::Approx(0.0));
  CHECK(cost.at(0, 0) == doctest::Approx(0.7));
  CHECK(cost.at(1, 1) == doctest::Approx(0.7));

  // symmetry and nonnegativity on random input
  std::mt19937_64 rng(1);
  const Tensor r = Tensor::randn(16, 5, rng);
  const CostMatrix c2 = cost_matrix(r, 0.1);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(c2.distances(i, j) == doctest::Approx(c2.distances(j, i)));
      CHECK(c2.distances(i, j) >= 0.0);
    }
  for (std::size_t i = 0; i < 5; ++i) CHECK(c2.distances(i, i) == 0.0);
}

TEST_CASE("unstandardized single-sample distance") {
  // columns (1, 0): D_01 = 1
  Tensor z(1, 2, {1.0, 0.0});
  const CostMatrix cost = cost_matrix(z, 0.0, /*standardize=*/false);
  CHECK(cost.distances(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("standardization requires two samples; zero variance is floored") {
  Tensor z(1, 2, {1.0, 0.0});
  CHECK_THROWS_AS(cost_matrix(z, 0.0, true), std::invalid_argument);
  Tensor flat(4, 2, {1, 5, 1, 5, 1, 5, 1, 5});  // zero-variance columns
  const CostMatrix cost = cost_matrix(flat, 0.0);
  CHECK(std::isfinite(cost.distances(0, 1)));
}

TEST_CASE("transport objective traces") {
  std::mt19937_64 rng(2);
  const Tensor z = Tensor::randn(32, 7, rng);
  const CostMatrix cost = cost_matrix(z, 0.3);
  CHECK(transport_objective(cost, Tensor::identity(7)) ==
        doctest::Approx(7 * 0.3));

  // ground-truth swap with eps = 0: sum of D at the swapped positions
  const SharingPattern pattern = example4_pattern();
  const Tensor p_star = ground_truth_permutation(pattern);
  const CostMatrix c0 = cost_matrix(z, 0.0);
  const double expected = c0.distances(2, 4) + c0.distances(3, 5) +
                          c0.distances(4, 2) + c0.distances(5, 3);
  CHECK(transport_objective(c0, p_star) == doctest::Approx(expected));

  CostMatrix zero;
  zero.distances = Tensor::zeros(7, 7);
  zero.epsilon = 0.0;
  CHECK(transport_objective(zero, p_star) == doctest::Approx(0.0));
}

TEST_CASE("projection fixed points") {
  SharingPattern pattern = example4_pattern();
  const Tensor id = Tensor::identity(7);
  const ProjectionResult r = dykstra_project(id, pattern, 2.0);
  CHECK(r.converged);
  CHECK(frob_diff(r.p, id) < 1e-8);

  // uniform 1/L with budget satisfied stays put
  // cross-block mass of uniform = |A_0| * |A_1| / L = 12/7 < 2
  const Tensor uniform = Tensor::full(7, 7, 1.0 / 7.0);
  const ProjectionResult u = dykstra_project(uniform, pattern, 2.0);
  CHECK(u.converged);
  CHECK(frob_diff(u.p, uniform) < 1e-6);
}

TEST_CASE("closed-form 2x2 Birkhoff projection") {
  SharingPattern single = SharingPattern::make(2, {{0, 1}}, 0.0);
  Tensor raw(2, 2, {2, 0, 0, 0});
  const ProjectionResult r = dykstra_project(raw, single, 0.0);
  REQUIRE(r.converged);
  // Euclidean projection of [[2,0],[0,0]] onto 2x2 doubly stochastic
  // matrices: minimize over [[a,1-a],[1-a,a]] -> a = 1, the identity.
  CHECK(frob_diff(r.p, Tensor::identity(2)) < 1e-5);
}

TEST_CASE("projection feasibility and idempotence on random inputs") {
  std::mt19937_64 rng(3);
  const std::vector<SharingPattern> patterns = {
      example4_pattern(),
      SharingPattern::make(4, {{0, 2}, {1, 2}, {3}}, 1.0),
      SharingPattern::make(6, {{0, 4, 5}, {1, 4}, {2, 3, 5}}, 2.0),
  };
  for (const auto& pattern : patterns) {
    const std::size_t L = pattern.total_slots();
    const double k = pattern.shared_budget();
    for (int trial = 0; trial < 40; ++trial) {
      const Tensor raw = Tensor::randn(L, L, rng, 2.0);
      const ProjectionResult r = dykstra_project(raw, pattern, k);
      CHECK(feasibility_violation(r.p, pattern, k) < 1e-5);
      const ProjectionResult again = dykstra_project(r.p, pattern, k);
      CHECK(frob_diff(again.p, r.p) < 1e-4);
    }
  }
}

TEST_CASE("permutation_step trivial cases") {
  SharingPattern pattern = example4_pattern();
  const Tensor p0 =
      dykstra_project(Tensor::full(7, 7, 1.0 / 7.0), pattern, 2.0).p;

  CostMatrix zero;
  zero.distances = Tensor::zeros(7, 7);
  zero.epsilon = 0.0;
  const ProjectionResult r = permutation_step(p0, zero, 0.5, pattern, 2.0);
  CHECK(frob_diff(r.p, p0) < 1e-5);

  std::mt19937_64 rng(4);
  const CostMatrix cost = cost_matrix(Tensor::randn(16, 7, rng), 0.5);
  const ProjectionResult r0 = permutation_step(p0, cost, 0.0, pattern, 2.0);
  CHECK(frob_diff(r0.p, p0) < 1e-5);
}

TEST_CASE("3x3 toy reaches the brute-force ILP optimum") {
  // modality 0 has slots {0, 1}, modality 1 slot {2}; latent 1 shared
  SharingPattern pattern = SharingPattern::make(2, {{0, 1}, {1}}, 1.0);
  CostMatrix cost;
  cost.distances = Tensor::zeros(3, 3);
  // slot 1 and 2 are near-duplicates; everything else far
  cost.distances(0, 1) = cost.distances(1, 0) = 5.0;
  cost.distances(0, 2) = cost.distances(2, 0) = 6.0;
  cost.distances(1, 2) = cost.distances(2, 1) = 0.05;
  cost.epsilon = 2.0;  // large selection cost: prefer the cross pairing

  Tensor p = dykstra_project(Tensor::full(3, 3, 1.0 / 3.0), pattern, 1.0).p;
  for (int step = 0; step < 200; ++step)
    p = permutation_step(p, cost, 0.05, pattern, 1.0).p;
  const Tensor rounded = round_to_permutation(p);

  const auto [best, best_perm] = brute_force_ilp(cost, pattern, 1.0);
  REQUIRE(best_perm.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(rounded(i, best_perm[i]) == 1.0);
}

TEST_CASE("relaxed descent matches exhaustive ILP on random instances") {
  std::mt19937_64 rng(7);
  SharingPattern pattern = SharingPattern::make(4, {{0, 2, 3}, {1, 3}}, 1.0);
  const std::size_t L = pattern.total_slots();  // 5
  int matches = 0;
  const int instances = 20;
  for (int inst = 0; inst < instances; ++inst) {
    const CostMatrix cost = cost_matrix(Tensor::randn(64, L, rng), 0.8);
    Tensor p =
        dykstra_project(Tensor::full(L, L, 1.0 / L), pattern, 1.0).p;
    for (int step = 0; step < 500; ++step)
      p = permutation_step(p, cost, 0.05, pattern, 1.0).p;
    const Tensor rounded = round_to_permutation(p);
    double relaxed_obj = 0.0;
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < L; ++j)
        if (rounded(i, j) > 0.5) relaxed_obj += cost.at(i, j);
    const auto [best, best_perm] = brute_force_ilp(cost, pattern, 1.0);
    if (relaxed_obj < best + 1e-6) ++matches;
  }
  CHECK(matches >= instances * 80 / 100);
}

TEST_CASE("monotone selection: smaller eps never adds off-diagonal matches") {
  std::mt19937_64 rng(8);
  SharingPattern pattern = SharingPattern::make(3, {{0, 2}, {1, 2}}, 1.0);
  for (int inst = 0; inst < 10; ++inst) {
    CostMatrix cost = cost_matrix(Tensor::randn(64, 4, rng), 0.0);
    int prev_off = 1000;
    for (double eps : {2.0, 1.0, 0.5, 0.1, 0.0}) {
      cost.epsilon = eps;
      const auto [best, perm] = brute_force_ilp(cost, pattern, 1.0);
      int off = 0;
      for (std::size_t i = 0; i < perm.size(); ++i)
        if (perm[i] != static_cast<int>(i)) ++off;
      CHECK(off <= prev_off);
      prev_off = off;
    }
  }
}

TEST_CASE("rounding") {
  const Tensor p_star = ground_truth_permutation(example4_pattern());
  const Tensor r = round_to_permutation(p_star);
  CHECK(frob_diff(r, p_star) == 0.0);

  Tensor soft(2, 2, {0.6, 0.4, 0.4, 0.6});
  const Tensor id = round_to_permutation(soft);
  CHECK(id(0, 0) == 1.0);
  CHECK(id(1, 1) == 1.0);
}

TEST_CASE("alignment loss values") {
  std::mt19937_64 rng(9);
  const Tensor z = Tensor::randn(8, 7, rng);
  CHECK(alignment_loss(z, Tensor::identity(7)) == doctest::Approx(0.0));

  // duplicated shared slots identical -> zero under P*
  SharingPattern pattern = example4_pattern();
  const Tensor p_star = ground_truth_permutation(pattern);
  Tensor dup = z;
  for (std::size_t i = 0; i < 8; ++i) {
    dup(i, 4) = dup(i, 2);
    dup(i, 5) = dup(i, 3);
  }
  CHECK(alignment_loss(dup, p_star) == doctest::Approx(0.0).epsilon(1e-12));

  // one-sample transposition differing by delta -> sqrt(2) * |delta|
  Tensor pair(1, 2, {1.0, 1.0 + 0.3});
  Tensor swap(2, 2, {0, 1, 1, 0});
  CHECK(alignment_loss(pair, swap) ==
        doctest::Approx(std::sqrt(2.0) * 0.3));
}

TEST_CASE("tape alignment loss matches pure value and finite differences") {
  std::mt19937_64 rng(10);
  const Tensor z0 = Tensor::randn(6, 7, rng);
  const Tensor p_star = ground_truth_permutation(example4_pattern());

  Tape tape;
  Value z = tape.leaf(z0);
  Value loss = alignment_loss(tape, z, p_star);
  CHECK(tape.value(loss).item() ==
        doctest::Approx(alignment_loss(z0, p_star)).epsilon(1e-12));
  tape.backward(loss);
  const Tensor& grad = tape.grad(z);
  const double h = 1e-6;
  Tensor work = z0;
  for (std::size_t e = 0; e < 10; ++e) {
    const std::size_t idx = (e * 7) % z0.size();
    const double orig = work.data()[idx];
    work.data()[idx] = orig + h;
    const double up = alignment_loss(work, p_star);
    work.data()[idx] = orig - h;
    const double down = alignment_loss(work, p_star);
    work.data()[idx] = orig;
    const double fd = (up - down) / (2 * h);
    CHECK(std::fabs(fd - grad.data()[idx]) /
              std::max(1.0, std::fabs(fd)) < 1e-4);
  }
}

TEST_CASE("epsilon schedule") {
  EpsilonSchedule s{1.0, 0.5, 0.0};
  CHECK(s.at(0) == doctest::Approx(1.0));
  CHECK(s.at(2) == doctest::Approx(0.25));
  EpsilonSchedule flat{0.7, 1.0, 0.0};
  CHECK(flat.at(50) == doctest::Approx(0.7));
  EpsilonSchedule floored{1.0, 0.5, 0.3};
  CHECK(floored.at(10) == doctest::Approx(0.3));
  CHECK_THROWS_AS(s.at(-1), std::invalid_argument);
}

TEST_CASE("modality relabeling conjugates the recovered permutation") {
  // pattern and its modality-swapped twin
  SharingPattern a = SharingPattern::make(3, {{0, 2}, {1, 2}}, 1.0);
  SharingPattern b = SharingPattern::make(3, {{1, 2}, {0, 2}}, 1.0);
  const Tensor pa = ground_truth_permutation(a);
  const Tensor pb = ground_truth_permutation(b);
  // slot relabeling: a-slots (0:z0, 1:z2 | 2:z1, 3:z2) map to
  // b-slots (2:z0, 3:z2 | 0:z1, 1:z2) -> sigma = (2, 3, 0, 1)
  const int sigma[4] = {2, 3, 0, 1};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(pa(i, j) == pb(sigma[i], sigma[j]));
}
