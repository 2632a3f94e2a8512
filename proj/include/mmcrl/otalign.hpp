#pragma once

#include "mmcrl/pattern.hpp"
#include "mmcrl/tape.hpp"
#include "mmcrl/tensor.hpp"

namespace mmcrl {

/// Pairwise feature-distance matrix over the columns of z_cat, with the
/// diagonal replaced by the epoch's selection cost.
struct CostMatrix {
  Tensor distances;  // L x L, zero diagonal, symmetric
  double epsilon = 0.0;

  /// D + epsilon * I at (i, j).
  double at(std::size_t i, std::size_t j) const {
    return i == j ? epsilon : distances(i, j);
  }
};

/// D_ij = ||col_i(z~) - col_j(z~)||_2 over the batch, where z~ is z_cat
/// standardized per feature (std floor 1e-8). Requires n >= 2 when
/// standardizing.
CostMatrix cost_matrix(const Tensor& z_cat, double eps_epoch,
                       bool standardize = true);

/// tr((D + eps I) P^T); its gradient in P is D + eps I.
double transport_objective(const CostMatrix& cost, const Tensor& p);

struct DykstraOptions {
  int max_cycles = 5000;
  double tol = 1e-8;
};

struct ProjectionResult {
  Tensor p;
  double max_violation = 0.0;
  int cycles_used = 0;
  bool converged = false;
};

/// Cyclic Dykstra projection onto the intersection of the four Eq-style
/// constraint families: nonnegativity, row sums 1, column sums 1 and, for
/// every ordered modality pair, cross-block mass at most k. Correction
/// memory is kept for the non-affine sets (the orthant and the block
/// half-spaces); the affine row/column corrections vanish and are skipped.
/// Non-convergence within the cycle cap is reported, not thrown.
ProjectionResult dykstra_project(const Tensor& p_raw,
                                 const SharingPattern& pattern, double k,
                                 const DykstraOptions& options = {});

/// One relaxed-ILP descent step: project(P - lr * (D + eps I)).
ProjectionResult permutation_step(const Tensor& p, const CostMatrix& cost,
                                  double lr, const SharingPattern& pattern,
                                  double k, const DykstraOptions& options = {});

/// Hardens a relaxed P by solving the assignment maximizing sum_i P_{i,s(i)}.
Tensor round_to_permutation(const Tensor& p);

/// Batch-mean row-wise Euclidean norm of z_cat - z_cat * P.
double alignment_loss(const Tensor& z_cat, const Tensor& p);
/// Tape version; P enters as a constant, so gradients flow to z_cat only.
Value alignment_loss(Tape& tape, Value z_cat, const Tensor& p);

/// Worst violation of the relaxed-permutation feasibility set.
double feasibility_violation(const Tensor& p, const SharingPattern& pattern,
                             double k);

struct EpsilonSchedule {
  double initial = 1.0;
  double decay = 0.95;  // per epoch, in (0, 1]
  double floor = 0.0;

  double at(int epoch) const;
};

}  // namespace mmcrl
