#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mmcrl {

/// Dense row-major matrix of doubles. Everything in the library (latents,
/// observations, cost matrices, permutations, adjacencies) is one of these;
/// scalars are 1x1, row vectors 1xN.
class Tensor {
public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data,
         bool checked = false);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor identity(std::size_t n);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);
  static Tensor randn(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                      double stddev = 1.0);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
  double item() const;

  /// Throws std::invalid_argument on any NaN/Inf entry.
  void require_finite(const std::string& what = "tensor") const;
  bool all_finite() const;

  Tensor transposed() const;
  double max_abs() const;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b,
                        const std::string& what);

}  // namespace mmcrl
