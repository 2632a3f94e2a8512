#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "mmcrl/tape.hpp"
#include "mmcrl/tensor.hpp"

using namespace mmcrl;

namespace {

// Central finite differences of a scalar-valued function of one leaf tensor.
Tensor numeric_grad(const Tensor& point,
                    const std::function<double(const Tensor&)>& f,
                    double h = 1e-5) {
  Tensor grad(point.rows(), point.cols());
  Tensor work = point;
  for (std::size_t i = 0; i < point.rows(); ++i)
    for (std::size_t j = 0; j < point.cols(); ++j) {
      const double orig = work(i, j);
      work(i, j) = orig + h;
      const double up = f(work);
      work(i, j) = orig - h;
      const double down = f(work);
      work(i, j) = orig;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  return grad;
}

void check_close(const Tensor& a, const Tensor& b, double rel_tol) {
  REQUIRE(a.same_shape(b));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({1.0, std::fabs(a.data()[i]),
                                   std::fabs(b.data()[i])});
    CHECK(std::fabs(a.data()[i] - b.data()[i]) / denom < rel_tol);
  }
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor t = Tensor::zeros(2, 3);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.max_abs() == 0.0);

  Tensor id = Tensor::identity(3);
  CHECK(id(0, 0) == 1.0);
  CHECK(id(0, 1) == 0.0);

  Tensor s = Tensor::scalar(4.0);
  CHECK(s.item() == 4.0);

  Tensor tr = Tensor(2, 2, {1, 2, 3, 4}).transposed();
  CHECK(tr(0, 1) == 3.0);

  CHECK_THROWS_AS(
      Tensor(1, 1, {std::nan("")}, true).require_finite(),
      std::invalid_argument);
  Tensor bad(1, 1);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(bad.all_finite());
}

TEST_CASE("sum gradient is all ones") {
  Tape tape;
  Value x = tape.leaf(Tensor(2, 2, {1, -2, 3, 4}));
  tape.backward(tape.sum(x));
  for (double g : tape.grad(x).data()) CHECK(g == 1.0);
}

TEST_CASE("x*x scalar gradient is 6 at x=3") {
  Tape tape;
  Value x = tape.leaf(Tensor::scalar(3.0));
  tape.backward(tape.mul(x, x));
  CHECK(tape.grad(x).item() == doctest::Approx(6.0));
}

TEST_CASE("leaky rectifier definition") {
  Tape tape;
  Value x = tape.leaf(Tensor(1, 3, {1.5, 0.0, -2.0}));
  const Tensor& y = tape.value(tape.leaky_relu(x, 0.2));
  CHECK(y(0, 0) == 1.5);
  CHECK(y(0, 1) == 0.0);
  CHECK(y(0, 2) == doctest::Approx(-0.4));
}

TEST_CASE("finite differences across every primitive") {
  std::mt19937_64 rng(11);
  // Each entry: a builder from (tape, a, b) to a scalar loss, plus a pure
  // evaluator for the numeric oracle.
  struct Case {
    const char* name;
    std::function<Value(Tape&, Value, Value)> build;
  };
  const std::vector<Case> cases = {
      {"matmul", [](Tape& t, Value a, Value b) {
         return t.sum(t.matmul(a, t.transpose(b)));
       }},
      {"add", [](Tape& t, Value a, Value b) { return t.sum(t.add(a, b)); }},
      {"sub", [](Tape& t, Value a, Value b) {
         return t.batch_l2(t.sub(a, b));
       }},
      {"mul", [](Tape& t, Value a, Value b) { return t.sum(t.mul(a, b)); }},
      {"scale+abs", [](Tape& t, Value a, Value b) {
         return t.add(t.l1(t.scale(a, -1.7)), t.sum(b));
       }},
      {"exp", [](Tape& t, Value a, Value b) {
         return t.add(t.sum(t.exp(a)), t.sum(b));
       }},
      {"leaky", [](Tape& t, Value a, Value b) {
         return t.add(t.sum(t.leaky_relu(a, 0.2)), t.sum(b));
       }},
      {"clamp", [](Tape& t, Value a, Value b) {
         return t.add(t.sum(t.clamp(a, -0.5, 0.5)), t.sum(b));
       }},
      {"cols+concat", [](Tape& t, Value a, Value b) {
         Value left = t.cols(a, 0, 2);
         Value right = t.cols(a, 2, 1);
         return t.add(t.sum(t.concat_cols({right, left})), t.sum(b));
       }},
      {"add_row", [](Tape& t, Value a, Value b) {
         Value row = t.transpose(t.cols(t.transpose(b), 0, 1));
         return t.sum(t.add_row(a, row));
       }},
      {"mul_row", [](Tape& t, Value a, Value b) {
         Value row = t.transpose(t.cols(t.transpose(b), 0, 1));
         return t.sum(t.mul_row(a, row));
       }},
      {"batch_l2", [](Tape& t, Value a, Value b) {
         return t.add(t.batch_l2(a), t.sum(b));
       }},
  };

  for (const auto& c : cases) {
    CAPTURE(c.name);
    for (int trial = 0; trial < 4; ++trial) {
      Tensor a0 = Tensor::randn(3, 3, rng);
      Tensor b0 = Tensor::randn(3, 3, rng);
      // Keep clamp/abs/leaky away from their kinks.
      for (double& v : a0.data())
        if (std::fabs(std::fabs(v) - 0.5) < 1e-3 || std::fabs(v) < 1e-3)
          v += 0.01;

      Tape tape;
      Value a = tape.leaf(a0);
      Value b = tape.leaf(b0);
      tape.backward(c.build(tape, a, b));

      auto eval_a = [&](const Tensor& pt) {
        Tape t2;
        Value a2 = t2.leaf(pt);
        Value b2 = t2.leaf(b0);
        return t2.value(c.build(t2, a2, b2)).item();
      };
      auto eval_b = [&](const Tensor& pt) {
        Tape t2;
        Value a2 = t2.leaf(a0);
        Value b2 = t2.leaf(pt);
        return t2.value(c.build(t2, a2, b2)).item();
      };
      check_close(tape.grad(a), numeric_grad(a0, eval_a), 1e-4);
      check_close(tape.grad(b), numeric_grad(b0, eval_b), 1e-4);
    }
  }
}

TEST_CASE("trace and l1 forward values") {
  Tape tape;
  Value x = tape.leaf(Tensor(2, 2, {1, -2, 3, 4}));
  CHECK(tape.value(tape.trace(x)).item() == 5.0);
  CHECK(tape.value(tape.l1(x)).item() == 10.0);
}

TEST_CASE("gradients of values off the loss path are zero") {
  Tape tape;
  Value used = tape.leaf(Tensor::scalar(2.0));
  Value unused = tape.leaf(Tensor::scalar(5.0));
  tape.backward(tape.mul(used, used));
  CHECK(tape.grad(unused).item() == 0.0);
}

TEST_CASE("tape determinism: identical runs produce identical bits") {
  auto run = [] {
    std::mt19937_64 rng(99);
    Tape tape;
    Value a = tape.leaf(Tensor::randn(4, 4, rng));
    Value b = tape.leaf(Tensor::randn(4, 4, rng));
    Value loss = tape.batch_l2(tape.leaky_relu(tape.matmul(a, b), 0.2));
    tape.backward(loss);
    std::pair<std::vector<double>, double> out;
    for (double g : tape.grad(a).data()) out.first.push_back(g);
    out.second = tape.value(loss).item();
    return out;
  };
  const auto r1 = run();
  const auto r2 = run();
  CHECK(r1.second == r2.second);
  REQUIRE(r1.first.size() == r2.first.size());
  for (std::size_t i = 0; i < r1.first.size(); ++i)
    CHECK(r1.first[i] == r2.first[i]);
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Value x = tape.leaf(Tensor::zeros(2, 2));
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
}
