#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mmcrl/tape.hpp"
#include "mmcrl/tensor.hpp"

namespace mmcrl {

/// Fully-connected network with leaky-rectifier hidden activations.
/// W is stored input-major ([in x out]); b is a 1xout row.
struct MlpParams {
  struct Layer {
    Tensor weight;
    Tensor bias;
  };
  std::vector<Layer> layers;
  double slope = 0.2;
  bool final_linear = true;

  std::size_t in_dim() const { return layers.front().weight.rows(); }
  std::size_t out_dim() const { return layers.back().weight.cols(); }
  void collect(std::vector<Tensor*>& out);
};

/// Random MLP over the given widths (widths.size() >= 2), weights drawn
/// N(0, weight_scale / sqrt(fan_in)), biases zero.
MlpParams random_mlp(const std::vector<std::size_t>& widths, double slope,
                     std::mt19937_64& rng, double weight_scale = 1.0);

/// Batch forward pass without any tape.
Tensor mlp_forward(const MlpParams& params, const Tensor& input);

/// Tape-bound parameter handles for one MLP.
struct MlpIds {
  struct Layer {
    Value weight;
    Value bias;
  };
  std::vector<Layer> layers;
  double slope = 0.2;
  bool final_linear = true;
};

MlpIds bind_mlp(Tape& tape, const MlpParams& params);
Value mlp_forward(Tape& tape, const MlpIds& ids, Value input);

/// Collects gradients of bound parameters in the same order as collect().
void collect_mlp_grads(const Tape& tape, const MlpIds& ids,
                       std::vector<Tensor>& out);

/// Exact Jacobian of the MLP at one point (out_dim x in_dim), by forward
/// propagation of the layer Jacobians. Exact away from activation kinks.
Tensor mlp_jacobian(const MlpParams& params, const Tensor& point_row);

/// Adaptive-moment optimizer. Slots are keyed by parameter order, which must
/// stay stable across steps.
class Adam {
public:
  struct Config {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  explicit Adam(Config cfg) : cfg_(cfg) {}

  void step(const std::vector<Tensor*>& params,
            const std::vector<const Tensor*>& grads);
  long steps_taken() const { return step_; }
  Config& config() { return cfg_; }

private:
  struct Slot {
    Tensor m, v;
  };
  Config cfg_;
  std::vector<Slot> slots_;
  long step_ = 0;
};

}  // namespace mmcrl
