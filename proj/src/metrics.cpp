#include "mmcrl/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mmcrl/assignment.hpp"
#include "mmcrl/flow.hpp"

namespace mmcrl {

namespace {

std::vector<double> average_ranks(const Tensor& z, std::size_t col) {
  const std::size_t n = z.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return z(a, col) < z(b, col);
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && z(order[j + 1], col) == z(order[i], col)) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j));
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

struct ColumnStats {
  std::vector<double> centered;
  double norm = 0.0;
};

ColumnStats center_column(const std::vector<double>& v) {
  ColumnStats s;
  const double mean =
      std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.centered.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    s.centered[i] = v[i] - mean;
    s.norm += s.centered[i] * s.centered[i];
  }
  s.norm = std::sqrt(s.norm);
  return s;
}

std::vector<double> column(const Tensor& z, std::size_t col, bool spearman) {
  if (spearman) return average_ranks(z, col);
  std::vector<double> v(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) v[i] = z(i, col);
  return v;
}

}  // namespace

MccResult mcc(const Tensor& z_true, const Tensor& z_est, bool spearman) {
  if (z_true.rows() != z_est.rows() || z_true.cols() != z_est.cols())
    throw std::invalid_argument("mcc: shape mismatch");
  if (z_true.rows() < 3) throw std::invalid_argument("mcc: need n >= 3");
  const std::size_t L = z_true.cols();

  MccResult result;
  std::vector<ColumnStats> ts(L), es(L);
  for (std::size_t j = 0; j < L; ++j) {
    ts[j] = center_column(column(z_true, j, spearman));
    es[j] = center_column(column(z_est, j, spearman));
    if (ts[j].norm < 1e-12 || es[j].norm < 1e-12)
      result.zero_variance_flag = true;
  }
  Tensor corr(L, L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      if (ts[i].norm < 1e-12 || es[j].norm < 1e-12) continue;
      double dot = 0.0;
      for (std::size_t r = 0; r < z_true.rows(); ++r)
        dot += ts[i].centered[r] * es[j].centered[r];
      corr(i, j) = std::fabs(dot) / (ts[i].norm * es[j].norm);
    }

  result.assignment = max_assignment(corr);
  for (std::size_t i = 0; i < L; ++i)
    result.matched_correlations.push_back(corr(i, result.assignment[i]));
  result.mcc = std::accumulate(result.matched_correlations.begin(),
                               result.matched_correlations.end(), 0.0) /
               static_cast<double>(L);
  return result;
}

double r2_score(const Tensor& z_true, const Tensor& z_est) {
  const std::size_t n = z_true.rows();
  const std::size_t L = z_true.cols();
  if (z_est.rows() != n) throw std::invalid_argument("r2: row count mismatch");
  if (n <= z_est.cols())
    throw std::invalid_argument("r2: need more samples than regressors");

  Eigen::MatrixXd X(n, z_est.cols() + 1);
  for (std::size_t i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (std::size_t j = 0; j < z_est.cols(); ++j) X(i, j + 1) = z_est(i, j);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  const bool deficient = qr.rank() < X.cols();
  Eigen::MatrixXd gram;
  Eigen::LDLT<Eigen::MatrixXd> ridge;
  if (deficient) {
    gram = X.transpose() * X;
    gram.diagonal().array() += 1e-8;
    ridge.compute(gram);
  }

  double total = 0.0;
  for (std::size_t c = 0; c < L; ++c) {
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) y(i) = z_true(i, c);
    Eigen::VectorXd beta =
        deficient ? ridge.solve(X.transpose() * y).eval() : qr.solve(y).eval();
    const Eigen::VectorXd resid = y - X * beta;
    const double sse = resid.squaredNorm();
    const double mean = y.mean();
    const double sst = (y.array() - mean).square().sum();
    total += sst < 1e-12 ? 0.0 : 1.0 - sse / sst;
  }
  return total / static_cast<double>(L);
}

Tensor collapse_slots(const Tensor& matrix, const Tensor& rounded_p,
                      const SharingPattern& pattern) {
  const std::size_t L = static_cast<std::size_t>(pattern.total_slots());
  if (matrix.rows() != L || matrix.cols() != L || rounded_p.rows() != L)
    throw std::invalid_argument("collapse_slots: expected LxL inputs");

  // Cycles of the rounded permutation define the duplicate groups; they must
  // agree with the slot_map groups for the collapse to be meaningful.
  std::vector<int> target(L);
  for (std::size_t i = 0; i < L; ++i) {
    int t = -1;
    for (std::size_t j = 0; j < L; ++j)
      if (rounded_p(i, j) > 0.5) t = static_cast<int>(j);
    if (t < 0)
      throw std::invalid_argument("collapse_slots: P is not a permutation");
    target[i] = t;
  }
  std::vector<char> visited(L, 0);
  for (std::size_t start = 0; start < L; ++start) {
    if (visited[start]) continue;
    std::vector<int> cycle;
    int cur = static_cast<int>(start);
    while (!visited[cur]) {
      visited[cur] = 1;
      cycle.push_back(cur);
      cur = target[cur];
    }
    const int latent = pattern.slot_map()[cycle[0]].latent;
    const auto& group = pattern.duplicate_groups()[latent];
    if (cycle.size() != group.size())
      throw std::invalid_argument(
          "collapse_slots: permutation cycle size disagrees with the slot "
          "groups");
    for (int s : cycle)
      if (pattern.slot_map()[s].latent != latent)
        throw std::invalid_argument(
            "collapse_slots: permutation cycle mixes distinct latents");
  }

  const int J = pattern.num_latents();
  Tensor out(J, J);
  for (int a = 0; a < J; ++a)
    for (int b = 0; b < J; ++b) {
      const auto& ga = pattern.duplicate_groups()[a];
      const auto& gb = pattern.duplicate_groups()[b];
      double acc = 0.0;
      for (int i : ga)
        for (int j : gb) acc += matrix(i, j);
      out(a, b) = acc / static_cast<double>(ga.size() * gb.size());
    }
  return out;
}

int enshd(const Tensor& true_adjacency, const Tensor& est_adjacency,
          const std::vector<int>& sigma, const Tensor& rounded_p,
          const SharingPattern& pattern, double tau) {
  const std::size_t L = static_cast<std::size_t>(pattern.total_slots());
  const int J = pattern.num_latents();
  if (true_adjacency.rows() != static_cast<std::size_t>(J))
    throw std::invalid_argument("enshd: true adjacency must be JxJ");
  if (est_adjacency.rows() != L || sigma.size() != L)
    throw std::invalid_argument("enshd: estimated adjacency must be LxL");

  const Tensor binary = binarize_adjacency(est_adjacency, tau);
  Tensor aligned(L, L);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j)
      aligned(i, j) = binary(sigma[i], sigma[j]);
  const Tensor collapsed = collapse_slots(aligned, rounded_p, pattern);

  int mismatches = 0;
  for (int i = 0; i < J; ++i)
    for (int j = 0; j < J; ++j) {
      if (i == j) continue;
      const bool true_edge = std::fabs(true_adjacency(i, j)) > 1e-8;
      const bool est_edge = collapsed(i, j) >= 0.5;
      if (true_edge != est_edge) ++mismatches;
    }
  return mismatches;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os.precision(12);
  os << "benchmark = " << benchmark << "\n";
  os << "seed = " << seed << "\n";
  os << "mcc = " << mcc << "\n";
  os << "r2 = " << r2 << "\n";
  os << "enshd = " << enshd << "\n";
  os << "max_possible_edges = " << max_possible_edges << "\n";
  os << "tau = " << tau << "\n";
  os << "zero_variance_flag = " << (zero_variance_flag ? 1 : 0) << "\n";
  os << "assignment =";
  for (int a : assignment) os << " " << a;
  os << "\n";
  os << "per_slot_correlations =";
  for (double c : per_slot_correlations) os << " " << c;
  os << "\n";
  return os.str();
}

std::string EvalReport::csv_header() const {
  return "benchmark,seed,mcc,r2,enshd,max_possible_edges,tau";
}

std::string EvalReport::csv_row() const {
  std::ostringstream os;
  os.precision(12);
  os << benchmark << "," << seed << "," << mcc << "," << r2 << "," << enshd
     << "," << max_possible_edges << "," << tau;
  return os.str();
}

EvalReport parse_report_text(const std::string& text) {
  EvalReport report;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
    };
    trim(key);
    trim(value);
    if (key == "benchmark") report.benchmark = value;
    else if (key == "seed") report.seed = std::stoull(value);
    else if (key == "mcc") report.mcc = std::stod(value);
    else if (key == "r2") report.r2 = std::stod(value);
    else if (key == "enshd") report.enshd = std::stoi(value);
    else if (key == "max_possible_edges")
      report.max_possible_edges = std::stoi(value);
    else if (key == "tau") report.tau = std::stod(value);
    else if (key == "zero_variance_flag")
      report.zero_variance_flag = value == "1";
    else if (key == "assignment") {
      std::istringstream vs(value);
      int a;
      while (vs >> a) report.assignment.push_back(a);
    } else if (key == "per_slot_correlations") {
      std::istringstream vs(value);
      double c;
      while (vs >> c) report.per_slot_correlations.push_back(c);
    }
  }
  return report;
}

}  // namespace mmcrl
