#include "mmcrl/scm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mmcrl {

namespace {

double unit_variance_noise(NoiseLaw law, std::mt19937_64& rng) {
  switch (law) {
    case NoiseLaw::Gaussian: {
      std::normal_distribution<double> d(0.0, 1.0);
      return d(rng);
    }
    case NoiseLaw::Uniform: {
      const double half = std::sqrt(3.0);
      std::uniform_real_distribution<double> d(-half, half);
      return d(rng);
    }
    case NoiseLaw::Laplace: {
      std::uniform_real_distribution<double> d(-0.5, 0.5);
      const double u = d(rng);
      const double b = 1.0 / std::sqrt(2.0);
      return -b * std::copysign(std::log(1.0 - 2.0 * std::fabs(u)), u);
    }
  }
  throw std::logic_error("unknown noise law");
}

std::vector<int> parents_of(const Tensor& adjacency, int j, double threshold) {
  std::vector<int> parents;
  for (std::size_t i = 0; i < adjacency.rows(); ++i)
    if (std::fabs(adjacency(i, j)) > threshold)
      parents.push_back(static_cast<int>(i));
  return parents;
}

/// Gauss-Jordan inverse for the small probe blocks. Returns false on a
/// numerically singular matrix.
bool invert_small(const Tensor& a, Tensor& out) {
  const std::size_t n = a.rows();
  Tensor work = a;
  out = Tensor::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(work(r, col)) > std::fabs(work(pivot, col))) pivot = r;
    if (std::fabs(work(pivot, col)) < 1e-10) return false;
    if (pivot != col)
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(work(pivot, c), work(col, c));
        std::swap(out(pivot, c), out(col, c));
      }
    const double inv = 1.0 / work(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      work(col, c) *= inv;
      out(col, c) *= inv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = work(r, col);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        work(r, c) -= f * work(col, c);
        out(r, c) -= f * out(col, c);
      }
    }
  }
  return true;
}

bool is_generalized_permutation(const Tensor& a, double threshold) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    int nz = 0;
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (std::fabs(a(i, j)) > threshold) ++nz;
    if (nz != 1) return false;
  }
  for (std::size_t j = 0; j < a.cols(); ++j) {
    int nz = 0;
    for (std::size_t i = 0; i < a.rows(); ++i)
      if (std::fabs(a(i, j)) > threshold) ++nz;
    if (nz != 1) return false;
  }
  return true;
}

int block_nonzeros(const Tensor& a, const std::vector<int>& rows,
                   const std::vector<int>& cols, double threshold) {
  int count = 0;
  for (int i : rows)
    for (int j : cols)
      if (std::fabs(a(i, j)) > threshold) ++count;
  return count;
}

}  // namespace

bool edge_admissible(const SharingPattern& pattern, int from, int to) {
  if (from == to) return false;
  const bool from_shared = pattern.is_shared(from);
  const bool to_shared = pattern.is_shared(to);
  if (from_shared) return true;
  if (to_shared) return false;  // specific -> shared is banned
  // Both specific: only within the same modality.
  return pattern.owners(from)[0] == pattern.owners(to)[0];
}

std::vector<int> topological_order(const Tensor& adjacency, double threshold) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n)
    throw std::invalid_argument("topological_order: matrix must be square");
  std::vector<int> indegree(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (std::fabs(adjacency(i, j)) > threshold) ++indegree[j];
  std::vector<int> ready, order;
  for (std::size_t j = 0; j < n; ++j)
    if (indegree[j] == 0) ready.push_back(static_cast<int>(j));
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (std::size_t j = 0; j < n; ++j)
      if (std::fabs(adjacency(v, j)) > threshold && --indegree[j] == 0)
        ready.push_back(static_cast<int>(j));
  }
  if (order.size() != n) order.clear();
  return order;
}

bool is_acyclic(const Tensor& adjacency, double threshold) {
  return !topological_order(adjacency, threshold).empty() ||
         adjacency.rows() == 0;
}

LatentScm sample_scm(const SharingPattern& pattern, const ScmConfig& config,
                     std::uint64_t seed) {
  if (config.enforce_non_overlap && !pattern.satisfies_non_overlap())
    throw std::invalid_argument(
        "sample_scm: pattern cannot satisfy the non-overlap assumption; "
        "disable enforce_non_overlap or change the sharing pattern");

  std::mt19937_64 rng(seed);
  const int J = pattern.num_latents();
  std::vector<int> order(J);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> position(J);
  for (int p = 0; p < J; ++p) position[order[p]] = p;

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> mag(config.linear_weight_low,
                                             config.linear_weight_high);

  LatentScm scm;
  scm.adjacency = Tensor::zeros(J, J);
  scm.linear = config.linear_mechanisms;
  scm.noise = config.noise;
  scm.noise_scale = config.noise_scale;
  for (int i = 0; i < J; ++i)
    for (int j = 0; j < J; ++j) {
      if (position[i] >= position[j]) continue;
      if (!edge_admissible(pattern, i, j)) continue;
      if (coin(rng) >= config.edge_density) continue;
      const double sign = coin(rng) < 0.5 ? -1.0 : 1.0;
      scm.adjacency(i, j) = sign * mag(rng);
    }
  scm.topo_order = topological_order(scm.adjacency);
  if (scm.topo_order.empty() && J > 0)
    throw std::logic_error("sample_scm: generated adjacency is cyclic");

  if (!scm.linear) {
    scm.mechanisms.resize(J);
    for (int j = 0; j < J; ++j) {
      const auto parents = parents_of(scm.adjacency, j, 1e-12);
      if (parents.empty()) continue;
      scm.mechanisms[j] =
          random_mlp({parents.size(), config.mechanism_hidden, 1},
                     config.mechanism_slope, rng);
    }
  }
  return scm;
}

Tensor ancestral_sample(const LatentScm& scm, std::size_t n,
                        std::uint64_t seed) {
  const std::size_t J = scm.adjacency.rows();
  auto order = scm.topo_order;
  if (order.empty()) order = topological_order(scm.adjacency);
  if (order.size() != J)
    throw std::invalid_argument("ancestral_sample: adjacency has a cycle");

  if (n == 0)
    throw std::invalid_argument("ancestral_sample: n must be positive");
  std::mt19937_64 rng(seed);
  Tensor noise(n, J);
  // Noise is drawn column-by-column in latent order so that editing one
  // mechanism leaves every other node's noise stream untouched.
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t i = 0; i < n; ++i)
      noise(i, j) = scm.noise_scale * unit_variance_noise(scm.noise, rng);

  Tensor z(n, J);
  for (int j : order) {
    const auto parents = parents_of(scm.adjacency, j, 1e-12);
    if (parents.empty()) {
      for (std::size_t i = 0; i < n; ++i) z(i, j) = noise(i, j);
      continue;
    }
    if (scm.linear) {
      for (std::size_t i = 0; i < n; ++i) {
        double loc = 0.0;
        for (int p : parents) loc += scm.adjacency(p, j) * z(i, p);
        z(i, j) = loc + noise(i, j);
      }
    } else {
      Tensor pa(n, parents.size());
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < parents.size(); ++t)
          pa(i, t) = z(i, parents[t]);
      const Tensor loc = mlp_forward(scm.mechanisms[j], pa);
      for (std::size_t i = 0; i < n; ++i) z(i, j) = loc(i, 0) + noise(i, j);
    }
  }
  return z;
}

int count_cross_block_nonzeros(const Tensor& adjacency,
                               const SharingPattern& pattern,
                               double threshold) {
  const std::size_t n = adjacency.rows();
  if (adjacency.cols() != n)
    throw std::invalid_argument("count_cross_block_nonzeros: non-square");
  const bool latent_space = n == static_cast<std::size_t>(pattern.num_latents());
  const bool slot_space = n == static_cast<std::size_t>(pattern.total_slots());
  if (!latent_space && !slot_space)
    throw std::invalid_argument(
        "count_cross_block_nonzeros: matrix size matches neither J nor L");

  auto indices = [&](int m) {
    if (latent_space) return pattern.modality_set(m);
    auto [first, last] = pattern.slot_range(m);
    std::vector<int> out(last - first);
    std::iota(out.begin(), out.end(), first);
    return out;
  };

  int count = 0;
  for (auto [m, k] : pattern.non_sharing_pairs())
    count += block_nonzeros(adjacency, indices(m), indices(k), threshold);
  return count;
}

MixingDensityReport probe_mixing_density(const LatentScm& scm,
                                         const SharingPattern& pattern,
                                         int trials, std::uint64_t seed) {
  MixingDensityReport report;
  const auto pairs = pattern.non_sharing_pairs();
  const double threshold = 1e-8;
  for (auto [m, k] : pairs)
    report.base_nonzeros += block_nonzeros(
        scm.adjacency, pattern.modality_set(m), pattern.modality_set(k),
        threshold);

  std::mt19937_64 rng(seed);
  const int M = pattern.num_modalities();
  for (int t = 0; t < trials; ++t) {
    std::vector<Tensor> blocks(M), inverses(M);
    bool ok = true;
    for (int m = 0; m < M && ok; ++m) {
      const std::size_t dim = pattern.modality_set(m).size();
      bool inverted = false;
      for (int attempt = 0; attempt < 20 && !inverted; ++attempt) {
        blocks[m] = Tensor::randn(dim, dim, rng);
        inverted = invert_small(blocks[m], inverses[m]);
      }
      if (!inverted) ok = false;
    }
    if (!ok) throw std::runtime_error("probe_mixing_density: singular blocks");
    bool any_non_permutation = false;
    for (int m = 0; m < M; ++m)
      if (!is_generalized_permutation(blocks[m], threshold))
        any_non_permutation = true;
    if (!any_non_permutation) continue;  // resample would a.s. never hit this

    int conjugated = 0;
    for (auto [m, k] : pairs) {
      const auto& rows = pattern.modality_set(m);
      const auto& cols = pattern.modality_set(k);
      Tensor block(rows.size(), cols.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
          block(i, j) = scm.adjacency(rows[i], cols[j]);
      // T_m * block * T_k^{-1}
      Tensor tmp(rows.size(), cols.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
          for (std::size_t q = 0; q < rows.size(); ++q)
            tmp(i, j) += blocks[m](i, q) * block(q, j);
      Tensor conj(rows.size(), cols.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
          for (std::size_t q = 0; q < cols.size(); ++q)
            conj(i, j) += tmp(i, q) * inverses[k](q, j);
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
          if (std::fabs(conj(i, j)) > threshold) ++conjugated;
    }
    ++report.trials;
    if (conjugated > report.base_nonzeros) ++report.strict_increases;
  }
  if (report.trials > 0)
    report.fraction =
        static_cast<double>(report.strict_increases) / report.trials;
  return report;
}

bool check_a3_surrogate(const Tensor& adjacency, const SharingPattern& pattern,
                        double threshold) {
  const int J = pattern.num_latents();
  for (int i = 0; i < J; ++i)
    for (int j = 0; j < J; ++j) {
      if (i == j || std::fabs(adjacency(i, j)) <= threshold) continue;
      if (!edge_admissible(pattern, i, j)) return false;
    }
  return true;
}

}  // namespace mmcrl
