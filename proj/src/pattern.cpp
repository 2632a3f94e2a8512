#include "mmcrl/pattern.hpp"

#include <algorithm>
#include <stdexcept>

namespace mmcrl {

SharingPattern SharingPattern::make(int num_latents,
                                    std::vector<std::vector<int>> modality_sets,
                                    double shared_budget) {
  if (num_latents <= 0)
    throw std::invalid_argument("pattern: need at least one latent");
  if (modality_sets.empty())
    throw std::invalid_argument("pattern: need at least one modality");
  if (shared_budget < 0.0)
    throw std::invalid_argument("pattern: shared budget k must be >= 0");

  SharingPattern p;
  p.num_latents_ = num_latents;
  p.shared_budget_ = shared_budget;
  p.owners_.resize(num_latents);

  const int M = static_cast<int>(modality_sets.size());
  for (int m = 0; m < M; ++m) {
    const auto& set = modality_sets[m];
    if (set.empty())
      throw std::invalid_argument("pattern: modality " + std::to_string(m) +
                                  " has an empty latent set");
    std::vector<int> seen;
    const int first = static_cast<int>(p.slot_map_.size());
    for (int j : set) {
      if (j < 0 || j >= num_latents)
        throw std::invalid_argument("pattern: latent index out of range");
      if (std::find(seen.begin(), seen.end(), j) != seen.end())
        throw std::invalid_argument("pattern: duplicate latent in one set");
      seen.push_back(j);
      p.owners_[j].push_back(m);
      p.slot_map_.push_back({m, j});
    }
    p.slot_ranges_.emplace_back(first, static_cast<int>(p.slot_map_.size()));
  }
  p.modality_sets_ = std::move(modality_sets);

  for (int j = 0; j < num_latents; ++j)
    if (p.owners_[j].empty())
      throw std::invalid_argument("pattern: latent " + std::to_string(j) +
                                  " appears in no modality");

  p.sharing_partners_.resize(M);
  for (int m = 0; m < M; ++m)
    for (int n = 0; n < M; ++n) {
      bool shares = false;
      for (int j : p.modality_sets_[m])
        if (std::find(p.modality_sets_[n].begin(), p.modality_sets_[n].end(),
                      j) != p.modality_sets_[n].end()) {
          shares = true;
          break;
        }
      if (shares) p.sharing_partners_[m].push_back(n);
    }

  p.groups_.resize(num_latents);
  for (int s = 0; s < p.total_slots(); ++s)
    p.groups_[p.slot_map_[s].latent].push_back(s);
  return p;
}

std::vector<std::pair<int, int>> SharingPattern::non_sharing_pairs() const {
  std::vector<std::pair<int, int>> pairs;
  const int M = num_modalities();
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < M; ++k) {
      if (m == k) continue;
      bool disjoint = true;
      for (int a : sharing_partners_[m])
        if (std::find(sharing_partners_[k].begin(), sharing_partners_[k].end(),
                      a) != sharing_partners_[k].end()) {
          disjoint = false;
          break;
        }
      if (disjoint) pairs.emplace_back(m, k);
    }
  return pairs;
}

bool SharingPattern::satisfies_non_overlap() const {
  std::vector<bool> has(num_modalities(), false);
  for (auto [m, k] : non_sharing_pairs()) has[m] = true;
  return std::all_of(has.begin(), has.end(), [](bool b) { return b; });
}

Tensor ground_truth_permutation(const SharingPattern& pattern) {
  const int L = pattern.total_slots();
  Tensor P(L, L);
  std::vector<int> target(L);
  for (int s = 0; s < L; ++s) target[s] = s;
  for (const auto& group : pattern.duplicate_groups()) {
    if (group.size() < 2) continue;
    for (std::size_t t = 0; t < group.size(); ++t)
      target[group[t]] = group[(t + 1) % group.size()];
  }
  for (int s = 0; s < L; ++s) P(s, target[s]) = 1.0;
  return P;
}

SharingPattern example4_pattern(double shared_budget) {
  // Latents: 0=z1, 1=z2, 2=z3, 3=z7, 4=z8.
  return SharingPattern::make(5, {{0, 1, 3, 4}, {3, 4, 2}}, shared_budget);
}

}  // namespace mmcrl
