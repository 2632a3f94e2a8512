#pragma once

#include <string>
#include <vector>

#include "mmcrl/pattern.hpp"
#include "mmcrl/tensor.hpp"

namespace mmcrl {

struct MccResult {
  double mcc = 0.0;
  /// assignment[i] = estimated slot matched to true slot i.
  std::vector<int> assignment;
  std::vector<double> matched_correlations;
  bool zero_variance_flag = false;
};

/// Mean matched absolute Pearson correlation under the optimal assignment.
/// With spearman set, columns are rank-transformed first.
MccResult mcc(const Tensor& z_true, const Tensor& z_est,
              bool spearman = false);

/// Mean over true slots of 1 - SSE/SST for OLS (with intercept) predicting
/// each true slot from all estimated slots. Falls back to a 1e-8 ridge when
/// the design is rank deficient.
double r2_score(const Tensor& z_true, const Tensor& z_est);

/// Collapses an L x L slot matrix to J x J by averaging rows and columns
/// over the duplicate groups implied by the rounded P's off-diagonal cycles.
/// Throws std::invalid_argument when those cycles are inconsistent with the
/// pattern's slot groups.
Tensor collapse_slots(const Tensor& matrix, const Tensor& rounded_p,
                      const SharingPattern& pattern);

/// Structural Hamming distance between the true J x J graph and the
/// estimated L x L weighted adjacency after tau-binarization, sigma
/// alignment (sigma from mcc) and slot collapse.
int enshd(const Tensor& true_adjacency, const Tensor& est_adjacency,
          const std::vector<int>& sigma, const Tensor& rounded_p,
          const SharingPattern& pattern, double tau);

struct EvalReport {
  double mcc = 0.0;
  double r2 = 0.0;
  int enshd = 0;
  int max_possible_edges = 0;
  double tau = 0.0;
  std::string benchmark;
  std::uint64_t seed = 0;
  std::vector<int> assignment;
  std::vector<double> per_slot_correlations;
  bool zero_variance_flag = false;

  /// Flat key = value document.
  std::string to_text() const;
  std::string csv_header() const;
  std::string csv_row() const;
};

EvalReport parse_report_text(const std::string& text);

}  // namespace mmcrl
