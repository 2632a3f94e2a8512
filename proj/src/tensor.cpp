#include "mmcrl/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace mmcrl {

Tensor::Tensor(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("tensor dimensions must be positive");
}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data,
               bool checked)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0)
    throw std::invalid_argument("tensor dimensions must be positive");
  if (data_.size() != rows * cols)
    throw std::invalid_argument("tensor data length does not match shape");
  if (checked) require_finite();
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  return Tensor(rows, cols);
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  Tensor t(rows, cols);
  for (double& x : t.data_) x = value;
  return t;
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::scalar(double v) { return Tensor(1, 1, {v}); }

Tensor Tensor::row(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(1, n, std::move(v));
}

Tensor Tensor::randn(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                     double stddev) {
  Tensor t(rows, cols);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : t.data_) x = dist(rng);
  return t;
}

double Tensor::item() const {
  if (!is_scalar()) throw std::invalid_argument("item() requires a 1x1 tensor");
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

void Tensor::require_finite(const std::string& what) const {
  if (!all_finite())
    throw std::invalid_argument(what + " contains a non-finite entry");
}

Tensor Tensor::transposed() const {
  Tensor t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::fabs(x));
  return m;
}

void require_same_shape(const Tensor& a, const Tensor& b,
                        const std::string& what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(what + ": shape mismatch (" +
                                std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
}

}  // namespace mmcrl
