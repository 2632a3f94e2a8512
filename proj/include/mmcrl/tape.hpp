#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mmcrl/tensor.hpp"

namespace mmcrl {

/// Handle to a value recorded on a Tape.
struct Value {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

/// Reverse-mode tape over coarse-grained matrix primitives. Forward values
/// are computed eagerly when an op is recorded; backward() walks the records
/// in reverse and accumulates gradients for every recorded value.
///
/// A tape together with its leaves forms one training context: it must not be
/// mutated from two threads at once, but reading values after the fact is
/// fine.
class Tape {
public:
  Value leaf(Tensor t);
  /// Leaf that participates in the graph but whose gradient the caller will
  /// ignore (constants, detached activations). Identical to leaf() otherwise.
  Value constant(Tensor t) { return leaf(std::move(t)); }

  const Tensor& value(Value v) const;
  const Tensor& grad(Value v) const;
  std::size_t num_values() const { return values_.size(); }

  // -- primitives ----------------------------------------------------------
  Value matmul(Value a, Value b);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);
  /// Adds a 1xC row vector to every row of a.
  Value add_row(Value a, Value r);
  /// Multiplies every row of a elementwise by a 1xC row vector.
  Value mul_row(Value a, Value r);
  Value scale(Value a, double s);
  Value add_scalar(Value a, double s);
  Value neg(Value a) { return scale(a, -1.0); }
  Value leaky_relu(Value a, double slope);
  Value abs(Value a);
  Value exp(Value a);
  Value clamp(Value a, double lo, double hi);
  Value transpose(Value a);
  Value cols(Value a, std::size_t start, std::size_t count);
  Value concat_cols(const std::vector<Value>& parts);
  /// Full reduction to a scalar.
  Value sum(Value a);
  Value trace(Value a);
  /// Sum of absolute values of all entries.
  Value l1(Value a);
  /// Mean over rows of the Euclidean norm of each row.
  Value batch_l2(Value a);

  /// Runs reverse accumulation from a scalar loss. Gradients of every value
  /// (leaves included) become available through grad(); values not on a path
  /// to the loss get a zero gradient.
  void backward(Value loss);

private:
  Value push(Tensor out, std::function<void()> back = nullptr);
  Tensor& grad_mut(std::uint32_t id) { return grads_[id]; }

  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::vector<std::function<void()>> backs_;
};

}  // namespace mmcrl
