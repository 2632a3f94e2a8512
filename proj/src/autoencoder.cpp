#include "mmcrl/autoencoder.hpp"

#include <cmath>
#include <stdexcept>

namespace mmcrl {

void MultimodalAutoencoder::collect(std::vector<Tensor*>& out) {
  for (auto& e : encoders) e.collect(out);
  for (auto& d : decoders) d.collect(out);
}

MultimodalAutoencoder make_autoencoder(const SharingPattern& pattern,
                                       const std::vector<std::size_t>& obs_dims,
                                       const AutoencoderConfig& config,
                                       std::mt19937_64& rng) {
  const int M = pattern.num_modalities();
  if (static_cast<int>(obs_dims.size()) != M)
    throw std::invalid_argument("make_autoencoder: one obs dim per modality");
  MultimodalAutoencoder model;
  for (int m = 0; m < M; ++m) {
    const std::size_t latent = pattern.modality_set(m).size();
    const std::size_t hidden = std::max<std::size_t>(
        2, static_cast<std::size_t>(config.hidden_multiplier * latent));
    std::vector<std::size_t> enc{obs_dims[m]};
    std::vector<std::size_t> dec{latent};
    for (int d = 1; d < config.depth; ++d) {
      enc.push_back(hidden);
      dec.push_back(hidden);
    }
    enc.push_back(latent);
    dec.push_back(obs_dims[m]);
    model.encoders.push_back(random_mlp(enc, config.slope, rng));
    model.decoders.push_back(random_mlp(dec, config.slope, rng));
  }
  return model;
}

Tensor encode_all(const MultimodalAutoencoder& model,
                  const std::vector<Tensor>& x, const SharingPattern& pattern) {
  const int M = pattern.num_modalities();
  if (static_cast<int>(x.size()) != M)
    throw std::invalid_argument("encode_all: one tensor per modality");
  const std::size_t n = x[0].rows();
  Tensor z_cat(n, pattern.total_slots());
  for (int m = 0; m < M; ++m) {
    const Tensor z = mlp_forward(model.encoders[m], x[m]);
    auto [first, last] = pattern.slot_range(m);
    if (z.cols() != static_cast<std::size_t>(last - first))
      throw std::invalid_argument("encode_all: encoder width mismatch");
    for (std::size_t i = 0; i < n; ++i)
      for (int j = first; j < last; ++j) z_cat(i, j) = z(i, j - first);
  }
  return z_cat;
}

std::vector<Tensor> decode_all(const MultimodalAutoencoder& model,
                               const Tensor& z_cat,
                               const SharingPattern& pattern) {
  if (z_cat.cols() != static_cast<std::size_t>(pattern.total_slots()))
    throw std::invalid_argument("decode_all: z_cat width must be L");
  std::vector<Tensor> x_hat;
  for (int m = 0; m < pattern.num_modalities(); ++m) {
    auto [first, last] = pattern.slot_range(m);
    Tensor block(z_cat.rows(), last - first);
    for (std::size_t i = 0; i < z_cat.rows(); ++i)
      for (int j = first; j < last; ++j) block(i, j - first) = z_cat(i, j);
    x_hat.push_back(mlp_forward(model.decoders[m], block));
  }
  return x_hat;
}

double reconstruction_loss(const std::vector<Tensor>& x,
                           const std::vector<Tensor>& x_hat) {
  if (x.size() != x_hat.size())
    throw std::invalid_argument("reconstruction_loss: modality count mismatch");
  double loss = 0.0;
  for (std::size_t m = 0; m < x.size(); ++m) {
    require_same_shape(x[m], x_hat[m], "reconstruction_loss");
    double acc = 0.0;
    for (std::size_t i = 0; i < x[m].rows(); ++i) {
      double q = 0.0;
      for (std::size_t j = 0; j < x[m].cols(); ++j) {
        const double d = x[m](i, j) - x_hat[m](i, j);
        q += d * d;
      }
      acc += std::sqrt(q);
    }
    loss += acc / static_cast<double>(x[m].rows());
  }
  return loss;
}

BoundAutoencoder bind_autoencoder(Tape& tape,
                                  const MultimodalAutoencoder& model) {
  BoundAutoencoder bound;
  for (const auto& e : model.encoders) bound.encoders.push_back(bind_mlp(tape, e));
  for (const auto& d : model.decoders) bound.decoders.push_back(bind_mlp(tape, d));
  return bound;
}

Value encode_all(Tape& tape, const BoundAutoencoder& bound,
                 const std::vector<Value>& x) {
  if (x.size() != bound.encoders.size())
    throw std::invalid_argument("encode_all: one value per modality");
  std::vector<Value> blocks;
  for (std::size_t m = 0; m < x.size(); ++m)
    blocks.push_back(mlp_forward(tape, bound.encoders[m], x[m]));
  return tape.concat_cols(blocks);
}

std::vector<Value> decode_all(Tape& tape, const BoundAutoencoder& bound,
                              Value z_cat, const SharingPattern& pattern) {
  std::vector<Value> x_hat;
  for (int m = 0; m < pattern.num_modalities(); ++m) {
    auto [first, last] = pattern.slot_range(m);
    Value block = tape.cols(z_cat, first, last - first);
    x_hat.push_back(mlp_forward(tape, bound.decoders[m], block));
  }
  return x_hat;
}

Value reconstruction_loss(Tape& tape, const std::vector<Value>& x,
                          const std::vector<Value>& x_hat) {
  if (x.size() != x_hat.size() || x.empty())
    throw std::invalid_argument("reconstruction_loss: modality count mismatch");
  Value loss = tape.batch_l2(tape.sub(x[0], x_hat[0]));
  for (std::size_t m = 1; m < x.size(); ++m)
    loss = tape.add(loss, tape.batch_l2(tape.sub(x[m], x_hat[m])));
  return loss;
}

}  // namespace mmcrl
