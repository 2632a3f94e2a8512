#include "mmcrl/otalign.hpp"

#include <cmath>
#include <stdexcept>

#include "mmcrl/assignment.hpp"

namespace mmcrl {

namespace {

void project_orthant(Tensor& p) {
  for (double& x : p.data()) x = std::max(0.0, x);
}

void project_row_sums(Tensor& p) {
  const std::size_t L = p.rows();
  for (std::size_t i = 0; i < L; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < L; ++j) s += p(i, j);
    const double corr = (s - 1.0) / static_cast<double>(L);
    for (std::size_t j = 0; j < L; ++j) p(i, j) -= corr;
  }
}

void project_col_sums(Tensor& p) {
  const std::size_t L = p.cols();
  for (std::size_t j = 0; j < L; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < L; ++i) s += p(i, j);
    const double corr = (s - 1.0) / static_cast<double>(L);
    for (std::size_t i = 0; i < L; ++i) p(i, j) -= corr;
  }
}

double block_mass(const Tensor& p, std::pair<int, int> rows,
                  std::pair<int, int> cols) {
  double s = 0.0;
  for (int i = rows.first; i < rows.second; ++i)
    for (int j = cols.first; j < cols.second; ++j) s += p(i, j);
  return s;
}

/// Half-space projection of the (rows A_i, cols A_j) block onto mass <= k.
void project_block_budget(Tensor& p, std::pair<int, int> rows,
                          std::pair<int, int> cols, double k) {
  const double s = block_mass(p, rows, cols);
  if (s <= k) return;
  const double corr = (s - k) / (static_cast<double>(rows.second - rows.first) *
                                 static_cast<double>(cols.second - cols.first));
  for (int i = rows.first; i < rows.second; ++i)
    for (int j = cols.first; j < cols.second; ++j) p(i, j) -= corr;
}

}  // namespace

CostMatrix cost_matrix(const Tensor& z_cat, double eps_epoch,
                       bool standardize) {
  const std::size_t n = z_cat.rows();
  const std::size_t L = z_cat.cols();
  if (standardize && n < 2)
    throw std::invalid_argument("cost_matrix: standardization needs n >= 2");

  Tensor z = z_cat;
  if (standardize) {
    for (std::size_t j = 0; j < L; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += z(i, j);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = z(i, j) - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      const double denom = std::max(std::sqrt(var), 1e-8);
      for (std::size_t i = 0; i < n; ++i) z(i, j) = (z(i, j) - mean) / denom;
    }
  }

  CostMatrix cost;
  cost.epsilon = eps_epoch;
  cost.distances = Tensor::zeros(L, L);
  for (std::size_t a = 0; a < L; ++a)
    for (std::size_t b = a + 1; b < L; ++b) {
      double q = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = z(i, a) - z(i, b);
        q += d * d;
      }
      const double dist = std::sqrt(q);
      cost.distances(a, b) = dist;
      cost.distances(b, a) = dist;
    }
  return cost;
}

double transport_objective(const CostMatrix& cost, const Tensor& p) {
  const std::size_t L = cost.distances.rows();
  if (p.rows() != L || p.cols() != L)
    throw std::invalid_argument("transport_objective: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) s += cost.at(i, j) * p(i, j);
  return s;
}

double feasibility_violation(const Tensor& p, const SharingPattern& pattern,
                             double k) {
  const std::size_t L = p.rows();
  double worst = 0.0;
  for (double x : p.data()) worst = std::max(worst, -x);
  for (std::size_t i = 0; i < L; ++i) {
    double rs = 0.0, cs = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      rs += p(i, j);
      cs += p(j, i);
    }
    worst = std::max(worst, std::fabs(rs - 1.0));
    worst = std::max(worst, std::fabs(cs - 1.0));
  }
  const int M = pattern.num_modalities();
  for (int a = 0; a < M; ++a)
    for (int b = 0; b < M; ++b) {
      if (a == b) continue;
      const double mass =
          block_mass(p, pattern.slot_range(a), pattern.slot_range(b));
      worst = std::max(worst, mass - k);
    }
  return worst;
}

ProjectionResult dykstra_project(const Tensor& p_raw,
                                 const SharingPattern& pattern, double k,
                                 const DykstraOptions& options) {
  const std::size_t L = static_cast<std::size_t>(pattern.total_slots());
  if (p_raw.rows() != L || p_raw.cols() != L)
    throw std::invalid_argument("dykstra_project: P must be LxL");
  const int M = pattern.num_modalities();

  Tensor x = p_raw;
  Tensor orthant_corr = Tensor::zeros(L, L);
  std::vector<Tensor> budget_corr(static_cast<std::size_t>(M) * M,
                                  Tensor::zeros(L, L));

  ProjectionResult result;
  for (int cycle = 0; cycle < options.max_cycles; ++cycle) {
    // psi1 with Dykstra correction memory.
    for (std::size_t i = 0; i < x.size(); ++i)
      x.data()[i] += orthant_corr.data()[i];
    Tensor before = x;
    project_orthant(x);
    for (std::size_t i = 0; i < x.size(); ++i)
      orthant_corr.data()[i] = before.data()[i] - x.data()[i];

    // psi2 / psi3 are affine; their corrections vanish.
    project_row_sums(x);
    project_col_sums(x);

    // psi4 half-spaces, one per ordered modality pair, with corrections.
    for (int a = 0; a < M; ++a)
      for (int b = 0; b < M; ++b) {
        if (a == b) continue;
        Tensor& corr = budget_corr[static_cast<std::size_t>(a) * M + b];
        for (std::size_t i = 0; i < x.size(); ++i)
          x.data()[i] += corr.data()[i];
        before = x;
        project_block_budget(x, pattern.slot_range(a), pattern.slot_range(b),
                             k);
        for (std::size_t i = 0; i < x.size(); ++i)
          corr.data()[i] = before.data()[i] - x.data()[i];
      }

    result.cycles_used = cycle + 1;
    result.max_violation = feasibility_violation(x, pattern, k);
    if (result.max_violation < options.tol) {
      result.converged = true;
      break;
    }
  }
  result.p = std::move(x);
  return result;
}

ProjectionResult permutation_step(const Tensor& p, const CostMatrix& cost,
                                  double lr, const SharingPattern& pattern,
                                  double k, const DykstraOptions& options) {
  const std::size_t L = p.rows();
  if (cost.distances.rows() != L)
    throw std::invalid_argument("permutation_step: shape mismatch");
  Tensor stepped = p;
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) stepped(i, j) -= lr * cost.at(i, j);
  return dykstra_project(stepped, pattern, k, options);
}

Tensor round_to_permutation(const Tensor& p) {
  const std::size_t L = p.rows();
  if (p.cols() != L)
    throw std::invalid_argument("round_to_permutation: P must be square");
  const auto assignment = max_assignment(p);
  Tensor hard(L, L);
  for (std::size_t i = 0; i < L; ++i) hard(i, assignment[i]) = 1.0;
  return hard;
}

double alignment_loss(const Tensor& z_cat, const Tensor& p) {
  const std::size_t n = z_cat.rows();
  const std::size_t L = z_cat.cols();
  if (p.rows() != L || p.cols() != L)
    throw std::invalid_argument("alignment_loss: P must be LxL");
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < L; ++j) {
      double mapped = 0.0;
      for (std::size_t s = 0; s < L; ++s) mapped += z_cat(i, s) * p(s, j);
      const double d = z_cat(i, j) - mapped;
      q += d * d;
    }
    acc += std::sqrt(q);
  }
  return acc / static_cast<double>(n);
}

Value alignment_loss(Tape& tape, Value z_cat, const Tensor& p) {
  Value pc = tape.constant(p);
  return tape.batch_l2(tape.sub(z_cat, tape.matmul(z_cat, pc)));
}

double EpsilonSchedule::at(int epoch) const {
  if (epoch < 0) throw std::invalid_argument("epsilon schedule: epoch < 0");
  return std::max(floor, initial * std::pow(decay, epoch));
}

}  // namespace mmcrl
