#pragma once

#include <utility>
#include <vector>

#include "mmcrl/nn.hpp"
#include "mmcrl/tape.hpp"
#include "mmcrl/tensor.hpp"

namespace mmcrl {

/// Masked autoregressive flow over the L z_cat slots. Each slot has a
/// conditioner MLP (L -> hidden -> 2) producing shift and log-scale from the
/// gated inputs: slot j reads slot i only when i precedes j in the ordering,
/// scaled by |adjacency(i, j)|. The adjacency is the learnable matrix the
/// sparsity and acyclicity penalties act on; its diagonal stays zero.
struct CausalFlow {
  std::vector<MlpParams> conditioners;
  Tensor adjacency;           // L x L
  std::vector<int> ordering;  // ordering[pos] = slot evaluated at pos
  double log_scale_min = -7.0;
  double log_scale_max = 7.0;

  std::size_t dim() const { return adjacency.rows(); }
  void collect(std::vector<Tensor*>& out);
  /// Keeps the diagonal pinned to zero after optimizer updates.
  void zero_diagonal();
};

CausalFlow make_flow(std::size_t dim, std::size_t hidden, double slope,
                     std::mt19937_64& rng);

/// Returns (exogenous-noise estimate eps [n x L], log_det [n x 1]) where
/// eps_j = (z_j - shift_j) * exp(-logscale_j) and log_det = -sum_j logscale_j.
std::pair<Tensor, Tensor> flow_forward(const CausalFlow& flow, const Tensor& z);

/// Sequential inversion in the flow ordering.
Tensor flow_inverse(const CausalFlow& flow, const Tensor& eps);

/// Batch mean of 0.5 ||eps||^2 + (L/2) log 2pi - log_det (standard Gaussian
/// base density).
double nll_loss(const Tensor& eps, const Tensor& log_det);

/// ||A||_1, entrywise.
double sparsity_loss(const Tensor& adjacency);

/// tr((I + cst * (A o A))^L) - L via repeated multiplication.
double acyclicity_loss(const Tensor& adjacency, double cst);

/// Entry 1 iff |a_ij| > tau.
Tensor binarize_adjacency(const Tensor& adjacency, double tau);

/// Tape-bound flow for training.
struct BoundFlow {
  std::vector<MlpIds> conditioners;
  Value adjacency;
  const CausalFlow* flow = nullptr;
};

BoundFlow bind_flow(Tape& tape, const CausalFlow& flow);

struct FlowOutputs {
  Value eps;        // n x L
  Value log_scales; // n x L (clamped)
};

FlowOutputs flow_forward(Tape& tape, const BoundFlow& bound, Value z);
Value nll_loss(Tape& tape, const FlowOutputs& outputs);
Value sparsity_loss(Tape& tape, const BoundFlow& bound);
Value acyclicity_loss(Tape& tape, const BoundFlow& bound, double cst);

}  // namespace mmcrl
