#pragma once

#include <cstdint>
#include <vector>

#include "mmcrl/nn.hpp"
#include "mmcrl/tensor.hpp"

namespace mmcrl {

/// Injective, undercomplete mixing map for one modality: a leaky-rectifier
/// MLP with non-decreasing widths whose weight matrices all have full column
/// rank (the standard sufficient recipe for injectivity).
struct Mixer {
  int modality = 0;
  MlpParams mlp;
  std::uint64_t seed = 0;

  std::size_t in_dim() const { return mlp.in_dim(); }
  std::size_t out_dim() const { return mlp.out_dim(); }
};

/// Builds the mixer with widths interpolated from in_dim up to out_dim over
/// `depth` layers; resamples any layer whose weight drops below full column
/// rank. Throws std::invalid_argument when out_dim < in_dim or depth < 1.
Mixer init_mixer(int modality, std::size_t in_dim, std::size_t out_dim,
                 int depth, double slope, std::uint64_t seed);

/// x^(m) = f_m(z_block), batch-wise.
Tensor mix(const Mixer& mixer, const Tensor& z_block);

struct RankProbeReport {
  bool pass = false;
  double min_ratio = 0.0;  // min over samples of sigma_min / sigma_max
  int kink_retries = 0;
  std::vector<double> ratios;
};

/// A1 audit: Jacobian full-column-rank check at each sample. Samples landing
/// on an activation kink are perturbed by 1e-9 and retried (counted).
RankProbeReport jacobian_rank_probe(const MlpParams& mlp,
                                    const Tensor& samples,
                                    double ratio_tol = 1e-6);

struct PropernessReport {
  bool pass = false;
  int directions = 0;
  int failing_directions = 0;
  double min_growth = 0.0;  // smallest consecutive norm increase observed
};

/// A2 heuristic: for random unit directions u and increasing radii r, the
/// norm sequence ||f(r u)|| must be strictly increasing past the first
/// radius.
PropernessReport properness_probe(const MlpParams& mlp,
                                  const std::vector<double>& radii,
                                  int directions, std::uint64_t seed);

/// Singular values (descending) of an arbitrary matrix.
std::vector<double> singular_values(const Tensor& a);

}  // namespace mmcrl
