#include "mmcrl/mixing.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace mmcrl {

namespace {

Eigen::MatrixXd to_eigen(const Tensor& t) {
  Eigen::MatrixXd m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m(i, j) = t(i, j);
  return m;
}

bool full_column_rank(const Tensor& w, double ratio_tol) {
  const auto sv = singular_values(w);
  if (sv.empty() || sv.front() <= 0.0) return false;
  return sv.back() / sv.front() > ratio_tol;
}

bool on_kink(const MlpParams& mlp, const Tensor& point, double tol) {
  Tensor h = point;
  for (std::size_t li = 0; li < mlp.layers.size(); ++li) {
    const auto& l = mlp.layers[li];
    Tensor pre(1, l.weight.cols());
    for (std::size_t k = 0; k < h.cols(); ++k)
      for (std::size_t j = 0; j < l.weight.cols(); ++j)
        pre(0, j) += h(0, k) * l.weight(k, j);
    for (std::size_t j = 0; j < pre.cols(); ++j) pre(0, j) += l.bias(0, j);
    const bool last = li + 1 == mlp.layers.size();
    if (!(last && mlp.final_linear))
      for (double x : pre.data())
        if (std::fabs(x) < tol) return true;
    for (double& x : pre.data())
      if (x < 0.0 && !(last && mlp.final_linear)) x *= mlp.slope;
    h = std::move(pre);
  }
  return false;
}

}  // namespace

std::vector<double> singular_values(const Tensor& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(a));
  const auto& sv = svd.singularValues();
  return {sv.data(), sv.data() + sv.size()};
}

Mixer init_mixer(int modality, std::size_t in_dim, std::size_t out_dim,
                 int depth, double slope, std::uint64_t seed) {
  if (out_dim < in_dim)
    throw std::invalid_argument(
        "init_mixer: undercomplete mixing needs out_dim >= in_dim");
  if (depth < 1) throw std::invalid_argument("init_mixer: depth must be >= 1");

  std::vector<std::size_t> widths(depth + 1);
  for (int i = 0; i <= depth; ++i) {
    // Non-decreasing interpolation from in_dim to out_dim.
    widths[i] = in_dim + ((out_dim - in_dim) * static_cast<std::size_t>(i) +
                          static_cast<std::size_t>(depth) - 1) /
                             static_cast<std::size_t>(depth);
  }
  widths[0] = in_dim;
  widths[depth] = out_dim;

  Mixer mixer;
  mixer.modality = modality;
  mixer.seed = seed;
  std::mt19937_64 rng(seed);
  mixer.mlp.slope = slope;
  mixer.mlp.final_linear = true;
  for (int li = 0; li < depth; ++li) {
    Tensor w(1, 1);
    for (int attempt = 0;; ++attempt) {
      const double sd = 1.0 / std::sqrt(static_cast<double>(widths[li]));
      w = Tensor::randn(widths[li], widths[li + 1], rng, sd);
      if (full_column_rank(w, 1e-6)) break;
      if (attempt >= 100)
        throw std::runtime_error("init_mixer: could not draw full-rank layer");
    }
    std::normal_distribution<double> bias_dist(0.0, 0.1);
    Tensor b(1, widths[li + 1]);
    for (double& x : b.data()) x = bias_dist(rng);
    mixer.mlp.layers.push_back({std::move(w), std::move(b)});
  }
  return mixer;
}

Tensor mix(const Mixer& mixer, const Tensor& z_block) {
  return mlp_forward(mixer.mlp, z_block);
}

RankProbeReport jacobian_rank_probe(const MlpParams& mlp,
                                    const Tensor& samples, double ratio_tol) {
  if (samples.rows() < 1)
    throw std::invalid_argument("jacobian_rank_probe: need at least 1 sample");
  RankProbeReport report;
  report.min_ratio = 1.0;
  for (std::size_t i = 0; i < samples.rows(); ++i) {
    Tensor point(1, samples.cols());
    for (std::size_t j = 0; j < samples.cols(); ++j) point(0, j) = samples(i, j);
    if (on_kink(mlp, point, 1e-12)) {
      ++report.kink_retries;
      for (std::size_t j = 0; j < point.cols(); ++j) point(0, j) += 1e-9;
    }
    const Tensor jac = mlp_jacobian(mlp, point);
    const auto sv = singular_values(jac);
    const double ratio =
        sv.front() > 0.0 ? sv.back() / sv.front() : 0.0;
    report.ratios.push_back(ratio);
    report.min_ratio = std::min(report.min_ratio, ratio);
  }
  report.pass = report.min_ratio > ratio_tol;
  return report;
}

PropernessReport properness_probe(const MlpParams& mlp,
                                  const std::vector<double>& radii,
                                  int directions, std::uint64_t seed) {
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] <= radii[i - 1])
      throw std::invalid_argument(
          "properness_probe: radii must be strictly increasing");
  PropernessReport report;
  report.directions = directions;
  report.min_growth = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);
  const std::size_t in = mlp.in_dim();
  for (int d = 0; d < directions; ++d) {
    Tensor u = Tensor::randn(1, in, rng);
    double norm = 0.0;
    for (double x : u.data()) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      --d;
      continue;
    }
    for (double& x : u.data()) x /= norm;

    double prev = -1.0;
    bool increasing = true;
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      Tensor point = u;
      for (double& x : point.data()) x *= radii[ri];
      const Tensor y = mlp_forward(mlp, point);
      double ynorm = 0.0;
      for (double x : y.data()) ynorm += x * x;
      ynorm = std::sqrt(ynorm);
      if (ri > 0) {
        report.min_growth = std::min(report.min_growth, ynorm - prev);
        if (ynorm <= prev) increasing = false;
      }
      prev = ynorm;
    }
    if (!increasing) ++report.failing_directions;
  }
  report.pass = report.failing_directions == 0;
  return report;
}

}  // namespace mmcrl
