#include "mmcrl/flow.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace mmcrl {

namespace {

/// Gate row for slot j: |A(i, j)| for ordering-predecessors i, else 0.
Tensor gate_row(const CausalFlow& flow, const std::vector<int>& position,
                int slot) {
  const std::size_t L = flow.dim();
  Tensor g(1, L);
  for (std::size_t i = 0; i < L; ++i)
    if (position[i] < position[slot])
      g(0, i) = std::fabs(flow.adjacency(i, slot));
  return g;
}

std::vector<int> positions(const CausalFlow& flow) {
  std::vector<int> pos(flow.dim());
  for (std::size_t p = 0; p < flow.ordering.size(); ++p)
    pos[flow.ordering[p]] = static_cast<int>(p);
  return pos;
}

}  // namespace

void CausalFlow::collect(std::vector<Tensor*>& out) {
  for (auto& c : conditioners) c.collect(out);
  out.push_back(&adjacency);
}

void CausalFlow::zero_diagonal() {
  for (std::size_t i = 0; i < adjacency.rows(); ++i) adjacency(i, i) = 0.0;
}

CausalFlow make_flow(std::size_t dim, std::size_t hidden, double slope,
                     std::mt19937_64& rng) {
  CausalFlow flow;
  flow.adjacency = Tensor::randn(dim, dim, rng, 0.1);
  flow.zero_diagonal();
  flow.ordering.resize(dim);
  std::iota(flow.ordering.begin(), flow.ordering.end(), 0);
  for (std::size_t j = 0; j < dim; ++j)
    flow.conditioners.push_back(random_mlp({dim, hidden, 2}, slope, rng));
  return flow;
}

std::pair<Tensor, Tensor> flow_forward(const CausalFlow& flow,
                                       const Tensor& z) {
  const std::size_t L = flow.dim();
  if (z.cols() != L)
    throw std::invalid_argument("flow_forward: width mismatch");
  const std::size_t n = z.rows();
  const auto pos = positions(flow);

  Tensor eps(n, L);
  Tensor log_det = Tensor::zeros(n, 1);
  for (std::size_t j = 0; j < L; ++j) {
    const Tensor g = gate_row(flow, pos, static_cast<int>(j));
    Tensor gated = z;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < L; ++c) gated(i, c) *= g(0, c);
    const Tensor out = mlp_forward(flow.conditioners[j], gated);
    for (std::size_t i = 0; i < n; ++i) {
      const double shift = out(i, 0);
      const double ls = std::min(flow.log_scale_max,
                                 std::max(flow.log_scale_min, out(i, 1)));
      eps(i, j) = (z(i, j) - shift) * std::exp(-ls);
      log_det(i, 0) -= ls;
    }
  }
  return {std::move(eps), std::move(log_det)};
}

Tensor flow_inverse(const CausalFlow& flow, const Tensor& eps) {
  const std::size_t L = flow.dim();
  if (eps.cols() != L)
    throw std::invalid_argument("flow_inverse: width mismatch");
  const std::size_t n = eps.rows();
  const auto pos = positions(flow);

  Tensor z = Tensor::zeros(n, L);
  for (int slot : flow.ordering) {
    const Tensor g = gate_row(flow, pos, slot);
    // Gates null every slot not yet filled, so using z as-is is safe.
    Tensor gated = z;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < L; ++c) gated(i, c) *= g(0, c);
    const Tensor out = mlp_forward(flow.conditioners[slot], gated);
    for (std::size_t i = 0; i < n; ++i) {
      const double shift = out(i, 0);
      const double ls = std::min(flow.log_scale_max,
                                 std::max(flow.log_scale_min, out(i, 1)));
      z(i, slot) = eps(i, slot) * std::exp(ls) + shift;
    }
  }
  return z;
}

double nll_loss(const Tensor& eps, const Tensor& log_det) {
  if (log_det.rows() != eps.rows() || log_det.cols() != 1)
    throw std::invalid_argument("nll_loss: log_det must be n x 1");
  const double n = static_cast<double>(eps.rows());
  const double L = static_cast<double>(eps.cols());
  double acc = 0.0;
  for (std::size_t i = 0; i < eps.rows(); ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < eps.cols(); ++j) q += eps(i, j) * eps(i, j);
    acc += 0.5 * q - log_det(i, 0);
  }
  return acc / n + 0.5 * L * std::log(2.0 * std::numbers::pi);
}

double sparsity_loss(const Tensor& adjacency) {
  double s = 0.0;
  for (double x : adjacency.data()) s += std::fabs(x);
  return s;
}

double acyclicity_loss(const Tensor& adjacency, double cst) {
  const std::size_t L = adjacency.rows();
  if (adjacency.cols() != L)
    throw std::invalid_argument("acyclicity_loss: matrix must be square");
  if (cst <= 0.0) throw std::invalid_argument("acyclicity_loss: cst must be > 0");
  Tensor base = Tensor::identity(L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j)
      base(i, j) += cst * adjacency(i, j) * adjacency(i, j);
  Tensor power = base;
  for (std::size_t e = 1; e < L; ++e) {
    Tensor next(L, L);
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t k = 0; k < L; ++k) {
        const double pik = power(i, k);
        if (pik == 0.0) continue;
        for (std::size_t j = 0; j < L; ++j) next(i, j) += pik * base(k, j);
      }
    power = std::move(next);
  }
  double tr = 0.0;
  for (std::size_t i = 0; i < L; ++i) tr += power(i, i);
  if (!std::isfinite(tr))
    throw std::runtime_error("acyclicity_loss: overflow, adjacency too large");
  return tr - static_cast<double>(L);
}

Tensor binarize_adjacency(const Tensor& adjacency, double tau) {
  if (tau <= 0.0)
    throw std::invalid_argument("binarize_adjacency: tau must be > 0");
  Tensor out(adjacency.rows(), adjacency.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = std::fabs(adjacency.data()[i]) > tau ? 1.0 : 0.0;
  return out;
}

BoundFlow bind_flow(Tape& tape, const CausalFlow& flow) {
  BoundFlow bound;
  bound.flow = &flow;
  for (const auto& c : flow.conditioners)
    bound.conditioners.push_back(bind_mlp(tape, c));
  bound.adjacency = tape.leaf(flow.adjacency);
  return bound;
}

FlowOutputs flow_forward(Tape& tape, const BoundFlow& bound, Value z) {
  const CausalFlow& flow = *bound.flow;
  const std::size_t L = flow.dim();
  const auto pos = positions(flow);

  Tensor mask(L, L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j)
      mask(i, j) = pos[i] < pos[j] ? 1.0 : 0.0;
  Value gates =
      tape.mul(tape.abs(bound.adjacency), tape.constant(std::move(mask)));

  std::vector<Value> eps_cols, ls_cols;
  for (std::size_t j = 0; j < L; ++j) {
    Value gate = tape.transpose(tape.cols(gates, j, 1));
    Value gated = tape.mul_row(z, gate);
    Value out = mlp_forward(tape, bound.conditioners[j], gated);
    Value shift = tape.cols(out, 0, 1);
    Value ls = tape.clamp(tape.cols(out, 1, 1), flow.log_scale_min,
                          flow.log_scale_max);
    Value zj = tape.cols(z, j, 1);
    eps_cols.push_back(tape.mul(tape.sub(zj, shift), tape.exp(tape.neg(ls))));
    ls_cols.push_back(ls);
  }
  FlowOutputs outputs;
  outputs.eps = tape.concat_cols(eps_cols);
  outputs.log_scales = tape.concat_cols(ls_cols);
  return outputs;
}

Value nll_loss(Tape& tape, const FlowOutputs& outputs) {
  const Tensor& eps = tape.value(outputs.eps);
  const double n = static_cast<double>(eps.rows());
  const double L = static_cast<double>(eps.cols());
  Value quad = tape.scale(tape.sum(tape.mul(outputs.eps, outputs.eps)), 0.5);
  Value total = tape.add(quad, tape.sum(outputs.log_scales));
  return tape.add_scalar(tape.scale(total, 1.0 / n),
                         0.5 * L * std::log(2.0 * std::numbers::pi));
}

Value sparsity_loss(Tape& tape, const BoundFlow& bound) {
  return tape.l1(bound.adjacency);
}

Value acyclicity_loss(Tape& tape, const BoundFlow& bound, double cst) {
  const std::size_t L = bound.flow->dim();
  Value squared = tape.mul(bound.adjacency, bound.adjacency);
  Value base = tape.add(tape.scale(squared, cst),
                        tape.constant(Tensor::identity(L)));
  Value power = base;
  for (std::size_t e = 1; e < L; ++e) power = tape.matmul(power, base);
  return tape.add_scalar(tape.trace(power), -static_cast<double>(L));
}

}  // namespace mmcrl
