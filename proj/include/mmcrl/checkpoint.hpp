#pragma once

#include <map>
#include <string>

#include "mmcrl/tensor.hpp"

namespace mmcrl {

/// Versioned binary container of named tensors: magic "MMCK", u32 version,
/// u32 count, then per entry a length-prefixed name, u32 rows, u32 cols and
/// row-major little-endian f64 payload.
void save_tensors(const std::string& path,
                  const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> load_tensors(const std::string& path);

}  // namespace mmcrl
