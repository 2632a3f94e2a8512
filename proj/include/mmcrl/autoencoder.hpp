#pragma once

#include <vector>

#include "mmcrl/nn.hpp"
#include "mmcrl/pattern.hpp"
#include "mmcrl/tape.hpp"

namespace mmcrl {

/// Per-modality encoder (d_m -> |A_m|) and decoder (|A_m| -> d_m) pair.
struct MultimodalAutoencoder {
  std::vector<MlpParams> encoders;
  std::vector<MlpParams> decoders;

  void collect(std::vector<Tensor*>& out);
};

struct AutoencoderConfig {
  int depth = 3;
  double hidden_multiplier = 4.0;
  double slope = 0.2;
};

MultimodalAutoencoder make_autoencoder(const SharingPattern& pattern,
                                       const std::vector<std::size_t>& obs_dims,
                                       const AutoencoderConfig& config,
                                       std::mt19937_64& rng);

/// Concatenates the per-modality latent estimates in slot order.
Tensor encode_all(const MultimodalAutoencoder& model,
                  const std::vector<Tensor>& x, const SharingPattern& pattern);
/// Splits z_cat by slot ranges and decodes each modality block.
std::vector<Tensor> decode_all(const MultimodalAutoencoder& model,
                               const Tensor& z_cat,
                               const SharingPattern& pattern);
/// Sum over modalities of the batch-mean Euclidean norm of the residual.
double reconstruction_loss(const std::vector<Tensor>& x,
                           const std::vector<Tensor>& x_hat);

/// Tape-bound counterpart used during training.
struct BoundAutoencoder {
  std::vector<MlpIds> encoders;
  std::vector<MlpIds> decoders;
};

BoundAutoencoder bind_autoencoder(Tape& tape,
                                  const MultimodalAutoencoder& model);
Value encode_all(Tape& tape, const BoundAutoencoder& bound,
                 const std::vector<Value>& x);
std::vector<Value> decode_all(Tape& tape, const BoundAutoencoder& bound,
                              Value z_cat, const SharingPattern& pattern);
Value reconstruction_loss(Tape& tape, const std::vector<Value>& x,
                          const std::vector<Value>& x_hat);

}  // namespace mmcrl
