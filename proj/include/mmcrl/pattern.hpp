#pragma once

#include <vector>

#include "mmcrl/tensor.hpp"

namespace mmcrl {

/// Which unique latents feed which modality, plus the duplicated slot layout
/// of z_cat. Slot order is modality-major: all slots of modality 0 first, in
/// the order the latents are listed in its set, then modality 1, and so on.
class SharingPattern {
public:
  struct Slot {
    int modality;
    int latent;
  };

  /// Validates and derives the slot layout. Throws std::invalid_argument on
  /// an unused latent, an out-of-range index, or an empty modality set.
  static SharingPattern make(int num_latents,
                             std::vector<std::vector<int>> modality_sets,
                             double shared_budget);

  int num_latents() const { return num_latents_; }                    // J
  int num_modalities() const { return (int)modality_sets_.size(); }   // M
  int total_slots() const { return (int)slot_map_.size(); }           // L
  double shared_budget() const { return shared_budget_; }             // k

  const std::vector<int>& modality_set(int m) const {
    return modality_sets_[m];
  }
  const std::vector<Slot>& slot_map() const { return slot_map_; }
  /// Half-open slot range [first, last) of modality m.
  std::pair<int, int> slot_range(int m) const { return slot_ranges_[m]; }

  /// Modalities whose latent set contains j.
  const std::vector<int>& owners(int latent) const { return owners_[latent]; }
  bool is_shared(int latent) const { return owners_[latent].size() > 1; }
  /// True when latent j belongs to modality m and no other.
  bool is_specific_to(int latent, int m) const {
    return owners_[latent].size() == 1 && owners_[latent][0] == m;
  }

  /// Sh(m): modalities sharing at least one latent with m (m included).
  const std::vector<int>& sharing_partners(int m) const {
    return sharing_partners_[m];
  }
  /// Ordered modality pairs (m, k), m != k, with Sh(m) and Sh(k) disjoint.
  std::vector<std::pair<int, int>> non_sharing_pairs() const;
  /// B1: every modality has at least one non-sharing partner.
  bool satisfies_non_overlap() const;

  /// Slots of each unique latent, indexed by latent id. Shared latents have
  /// one slot per owning modality.
  const std::vector<std::vector<int>>& duplicate_groups() const {
    return groups_;
  }

private:
  int num_latents_ = 0;
  double shared_budget_ = 0.0;
  std::vector<std::vector<int>> modality_sets_;
  std::vector<Slot> slot_map_;
  std::vector<std::pair<int, int>> slot_ranges_;
  std::vector<std::vector<int>> owners_;
  std::vector<std::vector<int>> sharing_partners_;
  std::vector<std::vector<int>> groups_;
};

/// Ground-truth permutation P* over the L slots: specific slots map to
/// themselves; the duplicate slots of a shared latent are cycled (a plain
/// swap when the latent is owned by exactly two modalities).
Tensor ground_truth_permutation(const SharingPattern& pattern);

/// Example-4 layout from the reference construction: latents (z1, z2, z3,
/// z7, z8) with z7 and z8 shared between two modalities, giving
/// z_cat = (z1, z2, z7, z8 | z7, z8, z3).
SharingPattern example4_pattern(double shared_budget = 2.0);

}  // namespace mmcrl
