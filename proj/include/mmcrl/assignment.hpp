#pragma once

#include <vector>

#include "mmcrl/tensor.hpp"

namespace mmcrl {

/// Solves the linear assignment problem maximizing sum_i score(i, col[i])
/// over permutations, by the O(n^3) potentials method. Returns col[i] for
/// each row i.
std::vector<int> max_assignment(const Tensor& score);

}  // namespace mmcrl
