#include "mmcrl/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace mmcrl {

Value Tape::push(Tensor out, std::function<void()> back) {
  const auto id = static_cast<std::uint32_t>(values_.size());
  grads_.emplace_back(out.rows(), out.cols());
  values_.push_back(std::move(out));
  backs_.push_back(std::move(back));
  return Value{id};
}

Value Tape::leaf(Tensor t) { return push(std::move(t)); }

const Tensor& Tape::value(Value v) const {
  if (!v.valid() || v.id >= values_.size())
    throw std::invalid_argument("invalid tape value id");
  return values_[v.id];
}

const Tensor& Tape::grad(Value v) const {
  if (!v.valid() || v.id >= grads_.size())
    throw std::invalid_argument("invalid tape value id");
  return grads_[v.id];
}

Value Tape::matmul(Value a, Value b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  if (A.cols() != B.rows())
    throw std::invalid_argument("matmul: inner dimensions differ");
  Tensor out(A.rows(), B.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t k = 0; k < A.cols(); ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < B.cols(); ++j) out(i, j) += aik * B(k, j);
    }
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, b, v] {
    const Tensor& G = grads_[v.id];
    const Tensor& A = values_[a.id];
    const Tensor& B = values_[b.id];
    Tensor& dA = grads_[a.id];
    Tensor& dB = grads_[b.id];
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < B.cols(); ++j) {
        const double g = G(i, j);
        if (g == 0.0) continue;
        for (std::size_t k = 0; k < A.cols(); ++k) {
          dA(i, k) += g * B(k, j);
          dB(k, j) += g * A(i, k);
        }
      }
  };
  return v;
}

Value Tape::add(Value a, Value b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_same_shape(A, B, "add");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += B.data()[i];
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, b, v] {
    const Tensor& G = grads_[v.id];
    for (std::size_t i = 0; i < G.size(); ++i) {
      grads_[a.id].data()[i] += G.data()[i];
      grads_[b.id].data()[i] += G.data()[i];
    }
  };
  return v;
}

Value Tape::sub(Value a, Value b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_same_shape(A, B, "sub");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= B.data()[i];
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, b, v] {
    const Tensor& G = grads_[v.id];
    for (std::size_t i = 0; i < G.size(); ++i) {
      grads_[a.id].data()[i] += G.data()[i];
      grads_[b.id].data()[i] -= G.data()[i];
    }
  };
  return v;
}

Value Tape::mul(Value a, Value b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require_same_shape(A, B, "mul");
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= B.data()[i];
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, b, v] {
    const Tensor& G = grads_[v.id];
    const Tensor& A = values_[a.id];
    const Tensor& B = values_[b.id];
    for (std::size_t i = 0; i < G.size(); ++i) {
      grads_[a.id].data()[i] += G.data()[i] * B.data()[i];
      grads_[b.id].data()[i] += G.data()[i] * A.data()[i];
    }
  };
  return v;
}

Value Tape::add_row(Value a, Value r) {
  const Tensor& A = value(a);
  const Tensor& R = value(r);
  if (R.rows() != 1 || R.cols() != A.cols())
    throw std::invalid_argument("add_row: expected 1x" +
                                std::to_string(A.cols()) + " row vector");
  Tensor out = A;
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) out(i, j) += R(0, j);
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, r, v] {
    const Tensor& G = grads_[v.id];
    Tensor& dA = grads_[a.id];
    Tensor& dR = grads_[r.id];
    for (std::size_t i = 0; i < G.rows(); ++i)
      for (std::size_t j = 0; j < G.cols(); ++j) {
        dA(i, j) += G(i, j);
        dR(0, j) += G(i, j);
      }
  };
  return v;
}

Value Tape::mul_row(Value a, Value r) {
  const Tensor& A = value(a);
  const Tensor& R = value(r);
  if (R.rows() != 1 || R.cols() != A.cols())
    throw std::invalid_argument("mul_row: expected 1x" +
                                std::to_string(A.cols()) + " row vector");
  Tensor out = A;
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) out(i, j) *= R(0, j);
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, r, v] {
    const Tensor& G = grads_[v.id];
    const Tensor& A = values_[a.id];
    const Tensor& R = values_[r.id];
    Tensor& dA = grads_[a.id];
    Tensor& dR = grads_[r.id];
    for (std::size_t i = 0; i < G.rows(); ++i)
      for (std::size_t j = 0; j < G.cols(); ++j) {
        dA(i, j) += G(i, j) * R(0, j);
        dR(0, j) += G(i, j) * A(i, j);
      }
  };
  return v;
}

Value Tape::scale(Value a, double s) {
  Tensor out = value(a);
  for (double& x : out.data()) x *= s;
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, s, v] {
    const Tensor& G = grads_[v.id];
    for (std::size_t i = 0; i < G.size(); ++i)
      grads_[a.id].data()[i] += s * G.data()[i];
  };
  return v;
}

Value Tape::add_scalar(Value a, double s) {
  Tensor out = value(a);
  for (double& x : out.data()) x += s;
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, v] {
    const Tensor& G = grads_[v.id];
    for (std::size_t i = 0; i < G.size(); ++i)
      grads_[a.id].data()[i] += G.data()[i];
  };
  return v;
}

Value Tape::leaky_relu(Value a, double slope) {
  Tensor out = value(a);
  for (double& x : out.data())
    if (x < 0.0) x *= slope;
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, slope, v] {
    const Tensor& G = grads_[v.id];
    const Tensor& A = values_[a.id];
    for (std::size_t i = 0; i < G.size(); ++i)
      grads_[a.id].data()[i] +=
          G.data()[i] * (A.data()[i] >= 0.0 ? 1.0 : slope);
  };
  return v;
}

Value Tape::abs(Value a) {
  Tensor out = value(a);
  for (double& x : out.data()) x = std::fabs(x);
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, v] {
    const Tensor& G = grads_[v.id];
    const Tensor& A = values_[a.id];
    for (std::size_t i = 0; i < G.size(); ++i) {
      const double x = A.data()[i];
      const double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
      grads_[a.id].data()[i] += G.data()[i] * s;
    }
  };
  return v;
}

Value Tape::exp(Value a) {
  Tensor out = value(a);
  for (double& x : out.data()) x = std::exp(x);
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, v] {
    const Tensor& G = grads_[v.id];
    const Tensor& O = values_[v.id];
    for (std::size_t i = 0; i < G.size(); ++i)
      grads_[a.id].data()[i] += G.data()[i] * O.data()[i];
  };
  return v;
}

Value Tape::clamp(Value a, double lo, double hi) {
  Tensor out = value(a);
  for (double& x : out.data()) x = std::min(hi, std::max(lo, x));
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, lo, hi, v] {
    const Tensor& G = grads_[v.id];
    const Tensor& A = values_[a.id];
    for (std::size_t i = 0; i < G.size(); ++i) {
      const double x = A.data()[i];
      if (x >= lo && x <= hi) grads_[a.id].data()[i] += G.data()[i];
    }
  };
  return v;
}

Value Tape::transpose(Value a) {
  Value v = push(value(a).transposed());
  backs_[v.id] = [this, a, v] {
    const Tensor G = grads_[v.id].transposed();
    for (std::size_t i = 0; i < G.size(); ++i)
      grads_[a.id].data()[i] += G.data()[i];
  };
  return v;
}

Value Tape::cols(Value a, std::size_t start, std::size_t count) {
  const Tensor& A = value(a);
  if (start + count > A.cols())
    throw std::invalid_argument("cols: slice out of range");
  Tensor out(A.rows(), count);
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = A(i, start + j);
  Value v = push(std::move(out));
  backs_[v.id] = [this, a, start, count, v] {
    const Tensor& G = grads_[v.id];
    Tensor& dA = grads_[a.id];
    for (std::size_t i = 0; i < G.rows(); ++i)
      for (std::size_t j = 0; j < count; ++j) dA(i, start + j) += G(i, j);
  };
  return v;
}

Value Tape::concat_cols(const std::vector<Value>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty input");
  const std::size_t n = value(parts[0]).rows();
  std::size_t total = 0;
  for (Value p : parts) {
    if (value(p).rows() != n)
      throw std::invalid_argument("concat_cols: row counts differ");
    total += value(p).cols();
  }
  Tensor out(n, total);
  std::size_t off = 0;
  for (Value p : parts) {
    const Tensor& P = value(p);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < P.cols(); ++j) out(i, off + j) = P(i, j);
    off += P.cols();
  }
  Value v = push(std::move(out));
  std::vector<Value> captured = parts;
  backs_[v.id] = [this, captured, v] {
    const Tensor& G = grads_[v.id];
    std::size_t off = 0;
    for (Value p : captured) {
      Tensor& dP = grads_[p.id];
      for (std::size_t i = 0; i < dP.rows(); ++i)
        for (std::size_t j = 0; j < dP.cols(); ++j) dP(i, j) += G(i, off + j);
      off += dP.cols();
    }
  };
  return v;
}

Value Tape::sum(Value a) {
  double s = 0.0;
  for (double x : value(a).data()) s += x;
  Value v = push(Tensor::scalar(s));
  backs_[v.id] = [this, a, v] {
    const double g = grads_[v.id].item();
    for (double& x : grads_[a.id].data()) x += g;
  };
  return v;
}

Value Tape::trace(Value a) {
  const Tensor& A = value(a);
  if (A.rows() != A.cols())
    throw std::invalid_argument("trace: matrix must be square");
  double s = 0.0;
  for (std::size_t i = 0; i < A.rows(); ++i) s += A(i, i);
  Value v = push(Tensor::scalar(s));
  backs_[v.id] = [this, a, v] {
    const double g = grads_[v.id].item();
    Tensor& dA = grads_[a.id];
    for (std::size_t i = 0; i < dA.rows(); ++i) dA(i, i) += g;
  };
  return v;
}

Value Tape::l1(Value a) {
  double s = 0.0;
  for (double x : value(a).data()) s += std::fabs(x);
  Value v = push(Tensor::scalar(s));
  backs_[v.id] = [this, a, v] {
    const double g = grads_[v.id].item();
    const Tensor& A = values_[a.id];
    for (std::size_t i = 0; i < A.size(); ++i) {
      const double x = A.data()[i];
      grads_[a.id].data()[i] += g * (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
    }
  };
  return v;
}

Value Tape::batch_l2(Value a) {
  const Tensor& A = value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < A.cols(); ++j) q += A(i, j) * A(i, j);
    s += std::sqrt(q);
  }
  s /= static_cast<double>(A.rows());
  Value v = push(Tensor::scalar(s));
  backs_[v.id] = [this, a, v] {
    const double g = grads_[v.id].item();
    const Tensor& A = values_[a.id];
    Tensor& dA = grads_[a.id];
    const double inv_n = 1.0 / static_cast<double>(A.rows());
    for (std::size_t i = 0; i < A.rows(); ++i) {
      double q = 0.0;
      for (std::size_t j = 0; j < A.cols(); ++j) q += A(i, j) * A(i, j);
      const double norm = std::sqrt(q);
      if (norm < 1e-12) continue;  // subgradient 0 at the kink
      for (std::size_t j = 0; j < A.cols(); ++j)
        dA(i, j) += g * inv_n * A(i, j) / norm;
    }
  };
  return v;
}

void Tape::backward(Value loss) {
  const Tensor& L = value(loss);
  if (!L.is_scalar())
    throw std::invalid_argument("backward: loss must be a scalar");
  for (Tensor& g : grads_)
    for (double& x : g.data()) x = 0.0;
  grads_[loss.id](0, 0) = 1.0;
  for (std::size_t i = backs_.size(); i-- > 0;)
    if (backs_[i]) backs_[i]();
}

}  // namespace mmcrl
