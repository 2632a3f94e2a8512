#include "mmcrl/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace mmcrl {

void MlpParams::collect(std::vector<Tensor*>& out) {
  for (Layer& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
}

MlpParams random_mlp(const std::vector<std::size_t>& widths, double slope,
                     std::mt19937_64& rng, double weight_scale) {
  if (widths.size() < 2)
    throw std::invalid_argument("random_mlp: need at least in/out widths");
  MlpParams p;
  p.slope = slope;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const double sd = weight_scale / std::sqrt(static_cast<double>(widths[i]));
    p.layers.push_back(
        {Tensor::randn(widths[i], widths[i + 1], rng, sd),
         Tensor::zeros(1, widths[i + 1])});
  }
  return p;
}

Tensor mlp_forward(const MlpParams& params, const Tensor& input) {
  if (input.cols() != params.in_dim())
    throw std::invalid_argument("mlp_forward: input width " +
                                std::to_string(input.cols()) + " != " +
                                std::to_string(params.in_dim()));
  Tensor h = input;
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& l = params.layers[li];
    Tensor next(h.rows(), l.weight.cols());
    for (std::size_t i = 0; i < h.rows(); ++i)
      for (std::size_t k = 0; k < h.cols(); ++k) {
        const double hik = h(i, k);
        if (hik == 0.0) continue;
        for (std::size_t j = 0; j < l.weight.cols(); ++j)
          next(i, j) += hik * l.weight(k, j);
      }
    for (std::size_t i = 0; i < next.rows(); ++i)
      for (std::size_t j = 0; j < next.cols(); ++j) next(i, j) += l.bias(0, j);
    const bool last = li + 1 == params.layers.size();
    if (!(last && params.final_linear))
      for (double& x : next.data())
        if (x < 0.0) x *= params.slope;
    h = std::move(next);
  }
  return h;
}

MlpIds bind_mlp(Tape& tape, const MlpParams& params) {
  MlpIds ids;
  ids.slope = params.slope;
  ids.final_linear = params.final_linear;
  for (const auto& l : params.layers)
    ids.layers.push_back({tape.leaf(l.weight), tape.leaf(l.bias)});
  return ids;
}

Value mlp_forward(Tape& tape, const MlpIds& ids, Value input) {
  Value h = input;
  for (std::size_t li = 0; li < ids.layers.size(); ++li) {
    h = tape.add_row(tape.matmul(h, ids.layers[li].weight),
                     ids.layers[li].bias);
    const bool last = li + 1 == ids.layers.size();
    if (!(last && ids.final_linear)) h = tape.leaky_relu(h, ids.slope);
  }
  return h;
}

void collect_mlp_grads(const Tape& tape, const MlpIds& ids,
                       std::vector<Tensor>& out) {
  for (const auto& l : ids.layers) {
    out.push_back(tape.grad(l.weight));
    out.push_back(tape.grad(l.bias));
  }
}

Tensor mlp_jacobian(const MlpParams& params, const Tensor& point_row) {
  if (point_row.rows() != 1 || point_row.cols() != params.in_dim())
    throw std::invalid_argument("mlp_jacobian: expected a single input row");
  // J starts as identity over the inputs; each layer multiplies by
  // diag(act'(pre)) * W^T.
  Tensor h = point_row;
  Tensor jac = Tensor::identity(params.in_dim());
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& l = params.layers[li];
    Tensor pre(1, l.weight.cols());
    for (std::size_t k = 0; k < h.cols(); ++k)
      for (std::size_t j = 0; j < l.weight.cols(); ++j)
        pre(0, j) += h(0, k) * l.weight(k, j);
    for (std::size_t j = 0; j < pre.cols(); ++j) pre(0, j) += l.bias(0, j);

    // jac_next = W^T (jac applied from the right): [out x in]
    Tensor jac_next(l.weight.cols(), jac.cols());
    for (std::size_t o = 0; o < l.weight.cols(); ++o)
      for (std::size_t k = 0; k < l.weight.rows(); ++k) {
        const double w = l.weight(k, o);
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < jac.cols(); ++j)
          jac_next(o, j) += w * jac(k, j);
      }
    const bool last = li + 1 == params.layers.size();
    Tensor act = pre;
    if (!(last && params.final_linear)) {
      for (std::size_t o = 0; o < pre.cols(); ++o) {
        const double d = pre(0, o) >= 0.0 ? 1.0 : params.slope;
        for (std::size_t j = 0; j < jac_next.cols(); ++j) jac_next(o, j) *= d;
        if (act(0, o) < 0.0) act(0, o) *= params.slope;
      }
    }
    jac = std::move(jac_next);
    h = std::move(act);
  }
  return jac;
}

void Adam::step(const std::vector<Tensor*>& params,
                const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("Adam::step: params/grads count mismatch");
  if (slots_.empty())
    for (const Tensor* p : params)
      slots_.push_back({Tensor::zeros(p->rows(), p->cols()),
                        Tensor::zeros(p->rows(), p->cols())});
  if (slots_.size() != params.size())
    throw std::invalid_argument("Adam::step: parameter count changed");
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = *params[pi];
    const Tensor& g = *grads[pi];
    require_same_shape(p, g, "Adam::step");
    Slot& s = slots_[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double& m = s.m.data()[i];
      double& v = s.v.data()[i];
      const double gi = g.data()[i];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * gi;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p.data()[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace mmcrl
