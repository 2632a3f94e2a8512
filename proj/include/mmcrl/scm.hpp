#pragma once

#include <cstdint>
#include <vector>

#include "mmcrl/nn.hpp"
#include "mmcrl/pattern.hpp"
#include "mmcrl/tensor.hpp"

namespace mmcrl {

enum class NoiseLaw { Gaussian, Uniform, Laplace };

/// Ground-truth latent SCM over the J unique latents. adjacency(i, j) != 0
/// means i is a parent of j. Mechanisms are additive: the location term is a
/// per-node MLP over the parents (or a linear form taken directly from the
/// adjacency weights) plus exogenous noise.
struct LatentScm {
  Tensor adjacency;                   // J x J
  std::vector<MlpParams> mechanisms;  // per node; empty for root or linear
  bool linear = false;
  NoiseLaw noise = NoiseLaw::Gaussian;
  double noise_scale = 1.0;
  std::vector<int> topo_order;
};

struct ScmConfig {
  double edge_density = 0.3;
  bool enforce_non_overlap = true;  // B1
  bool linear_mechanisms = false;
  double linear_weight_low = 0.5;   // |weight| range for linear mechanisms
  double linear_weight_high = 1.5;
  std::size_t mechanism_hidden = 8;
  double mechanism_slope = 0.2;
  NoiseLaw noise = NoiseLaw::Gaussian;
  double noise_scale = 1.0;
};

/// Samples a DAG respecting the structural surrogate of assumption A3:
/// no edge from a specific latent into a shared one, and no edge between
/// specific latents of different modalities. Acyclicity comes from drawing a
/// random topological order first and keeping only order-consistent edges.
/// Throws std::invalid_argument when enforce_non_overlap is set but the
/// pattern cannot satisfy B1.
LatentScm sample_scm(const SharingPattern& pattern, const ScmConfig& config,
                     std::uint64_t seed);

/// True when an edge i -> j is compatible with the A3 surrogate.
bool edge_admissible(const SharingPattern& pattern, int from, int to);

/// Kahn topological sort; empty result means the graph has a cycle.
std::vector<int> topological_order(const Tensor& adjacency,
                                   double threshold = 1e-12);
bool is_acyclic(const Tensor& adjacency, double threshold = 1e-12);

/// Draws n rows of latent samples in topological order:
/// z_j = location_j(parents) + noise. Throws on a cyclic adjacency.
Tensor ancestral_sample(const LatentScm& scm, std::size_t n,
                        std::uint64_t seed);

/// Sum over non-sharing ordered modality pairs (m, k) of the number of
/// entries with |a_ij| > threshold in block rows A_m x cols A_k. Accepts a
/// J x J matrix (latent index blocks) or an L x L matrix (slot-range blocks).
int count_cross_block_nonzeros(const Tensor& adjacency,
                               const SharingPattern& pattern,
                               double threshold = 1e-8);

struct MixingDensityReport {
  int trials = 0;
  int strict_increases = 0;
  double fraction = 0.0;
  int base_nonzeros = 0;
};

/// Randomized heuristic for assumption B2: samples block-diagonal invertible
/// T with at least one non-permutation block and reports how often the
/// conjugated cross blocks get denser than the originals. Not a proof.
MixingDensityReport probe_mixing_density(const LatentScm& scm,
                                         const SharingPattern& pattern,
                                         int trials, std::uint64_t seed);

/// Structural A3 audit of an adjacency against the pattern roles.
bool check_a3_surrogate(const Tensor& adjacency, const SharingPattern& pattern,
                        double threshold = 1e-12);

}  // namespace mmcrl
