#pragma once

#include <optional>
#include <string>

#include "mmcrl/autoencoder.hpp"
#include "mmcrl/bundle.hpp"
#include "mmcrl/flow.hpp"
#include "mmcrl/metrics.hpp"
#include "mmcrl/otalign.hpp"

namespace mmcrl {

struct TrainConfig {
  double alpha_alg = 1.0;
  double alpha_rec = 1.0;
  double alpha_spr = 0.2;
  double alpha_acy = 1.0;
  double alpha_nll = 1.0;  // 0 restores the four-term objective verbatim
  int epochs = 60;
  std::size_t batch = 256;
  double lr = 1e-3;
  double lr_permutation = 0.05;
  EpsilonSchedule epsilon{-1.0, 0.95, 0.0};  // initial < 0 = auto from D
  DykstraOptions projection;
  double tau = 0.3;
  double acyclicity_cst = -1.0;  // < 0 = 1/L
  std::uint64_t seed = 0;
  AutoencoderConfig autoencoder;
  std::size_t flow_hidden = 16;
  double flow_slope = 0.2;
  double shared_budget_override = -1.0;  // < 0 = pattern's k
};

struct LossComponents {
  double alg = 0.0, rec = 0.0, spr = 0.0, acy = 0.0, nll = 0.0;
};

/// alpha-weighted sum of the loss components.
double total_loss(const LossComponents& c, const TrainConfig& config);

struct EpochLog {
  int epoch = 0;
  LossComponents components;
  double total = 0.0;
  double epsilon = 0.0;
  double projection_violation = 0.0;
};

struct TrainState {
  MultimodalAutoencoder model;
  CausalFlow flow;
  Tensor permutation;  // relaxed P
  Adam optimizer;
  double shared_budget = 0.0;
  double acyclicity_cst = 0.0;
  double epsilon_initial = -1.0;  // resolved on the first batch
  std::vector<EpochLog> history;
};

TrainState init_state(const TrainConfig& config,
                      const GroundTruthBundle& bundle);

/// One pass over the dataset: per batch a network update on the full
/// objective (P held constant) followed by a projected descent step on P.
EpochLog train_epoch(TrainState& state, const GroundTruthBundle& bundle,
                     int epoch, const TrainConfig& config);

struct FitResult {
  EvalReport report;
  Tensor rounded_permutation;
  double permutation_accuracy = 0.0;  // entry agreement with P*
};

/// Full training run plus evaluation against the bundle ground truth. When
/// run_dir is non-empty, writes config snapshot, per-epoch loss CSV, final
/// checkpoint, report, recovered P and adjacency exports into it.
FitResult fit(const TrainConfig& config, const GroundTruthBundle& bundle,
              TrainState& state, const std::string& run_dir = "");
FitResult fit(const TrainConfig& config, const GroundTruthBundle& bundle,
              const std::string& run_dir = "");

/// Evaluates the current state against ground truth without training.
FitResult evaluate(const TrainConfig& config, const GroundTruthBundle& bundle,
                   TrainState& state);

void save_state(const TrainState& state, const std::string& path);
void load_state(TrainState& state, const std::string& path);

}  // namespace mmcrl
