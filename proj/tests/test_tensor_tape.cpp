#include <doctest.h>

#include <cmath>
#include <cstring>

#include "core/adam.hpp"
#include "core/common.hpp"
#include "core/tape.hpp"
#include "core/tensor.hpp"
#include "support/oracles.hpp"

using namespace zsle;
using oracles::caught_message;
using oracles::contains;

namespace {

Tensor row_vector(std::initializer_list<float> vals) {
  Tensor t = make_matrix<float>(1, vals.size());
  t.data.assign(vals.begin(), vals.end());
  return t;
}

TensorT<double> from_mat(const oracles::Mat& m) {
  TensorT<double> t = make_matrix<double>(m.size(), m[0].size());
  for (std::size_t r = 0; r < m.size(); ++r)
    for (std::size_t c = 0; c < m[0].size(); ++c) t.at(r, c) = m[r][c];
  return t;
}

}  // namespace

TEST_CASE("matmul identity passes the right factor through") {
  Tape tape;
  Tensor b = make_matrix<float>(2, 2);
  b.data = {3, 4, 5, 6};
  auto v = tape.matmul(tape.input(identity_matrix<float>(2)), tape.input(b));
  const auto& out = tape.value(v);
  CHECK(out == std::vector<float>{3, 4, 5, 6});
}

TEST_CASE("matmul 1x2 by 2x1 gives the dot product") {
  Tape tape;
  Tensor a = row_vector({1, 2});
  Tensor b = make_matrix<float>(2, 1);
  b.data = {3, 4};
  auto v = tape.matmul(tape.input(a), tape.input(b));
  CHECK(tape.value(v).size() == 1);
  CHECK(tape.value(v)[0] == doctest::Approx(11.0).epsilon(1e-9));
}

TEST_CASE("matmul matches the triple-loop oracle on a random 3x4 by 4x2") {
  Rng rng(42);
  oracles::Mat a(3, std::vector<double>(4)), b(4, std::vector<double>(2));
  for (auto& row : a)
    for (double& v : row) v = rng.uniform(-2.0, 2.0);
  for (auto& row : b)
    for (double& v : row) v = rng.uniform(-2.0, 2.0);
  const oracles::Mat want = oracles::matmul(a, b);

  TapeT<double> tape;
  auto v = tape.matmul(tape.input(from_mat(a)), tape.input(from_mat(b)));
  const auto& got = tape.value(v);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(got[r * 2 + c] == doctest::Approx(want[r][c]).epsilon(1e-6));
}

TEST_CASE("matmul rejects mismatched inner dimensions naming both shapes") {
  Tape tape;
  auto a = tape.input(make_matrix<float>(2, 3));
  auto b = tape.input(make_matrix<float>(4, 2));
  const std::string msg =
      caught_message<ShapeError>([&] { tape.matmul(a, b); });
  CHECK(contains(msg, "2x3"));
  CHECK(contains(msg, "4x2"));
}

TEST_CASE("softmax of uniform logits is uniform") {
  Tape tape;
  Tensor t({3});
  auto v = tape.softmax_axis(tape.input(t), 0);
  for (float x : tape.value(v)) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
}

TEST_CASE("softmax survives large logits via max subtraction") {
  Tape tape;
  Tensor t({2});
  t.data = {1000.0f, 1000.0f};
  auto v = tape.softmax_axis(tape.input(t), 0);
  for (float x : tape.value(v)) {
    CHECK(std::isfinite(x));
    CHECK(x == doctest::Approx(0.5).epsilon(1e-7));
  }
}

TEST_CASE("softmax matches the exp-and-normalize oracle") {
  TapeT<double> tape;
  TensorT<double> t({3});
  t.data = {1.0, 2.0, 3.0};
  auto v = tape.softmax_axis(tape.input(t), 0);
  const auto want = oracles::softmax({1.0, 2.0, 3.0});
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(tape.value(v)[i] == doctest::Approx(want[i]).epsilon(1e-6));
}

TEST_CASE("softmax columns sum to 1 and shift along the axis changes nothing") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng.below(6), cols = 1 + rng.below(6);
    Tensor t = make_matrix<float>(rows, cols);
    for (float& v : t.data) v = static_cast<float>(rng.uniform(-3.0, 3.0));
    Tensor shifted = t;
    const float c = static_cast<float>(rng.uniform(-5.0, 5.0));
    for (std::size_t r = 0; r < rows; ++r) shifted.at(r, 0) += c;  // shift one column

    Tape tape;
    auto v = tape.softmax_axis(tape.input(t), 0);
    auto vs = tape.softmax_axis(tape.input(shifted), 0);
    for (std::size_t col = 0; col < cols; ++col) {
      double sum = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const float w = tape.value(v)[r * cols + col];
        CHECK(w > 0.0f);
        CHECK(w < 1.0f + 1e-6f);
        sum += w;
        CHECK(tape.value(vs)[r * cols + col] == doctest::Approx(w).epsilon(1e-6));
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("relu clamps negatives and zero stays zero") {
  Tape tape;
  auto v = tape.relu(tape.input(row_vector({-1, 0, 2})));
  CHECK(tape.value(v) == std::vector<float>{0, 0, 2});

  auto w = tape.relu(tape.input(row_vector({-3, -1, -0.5f})));
  CHECK(tape.value(w) == std::vector<float>{0, 0, 0});
}

TEST_CASE("relu gradient is the indicator of positivity") {
  Tape tape;
  Tensor x = row_vector({-1, 2});
  x.requires_grad = true;
  auto xv = tape.param(x);
  auto r = tape.relu(xv);
  Tensor ones = make_matrix<float>(2, 1);
  ones.data = {1, 1};
  auto loss = tape.matmul(r, tape.input(ones));
  tape.backward(loss);
  CHECK(x.grad == std::vector<float>{0, 1});
}

TEST_CASE("l2_normalize_columns handles the 3-4-5 column") {
  Tape tape;
  Tensor t = make_matrix<float>(2, 1);
  t.data = {3, 4};
  auto v = tape.l2_normalize_columns(tape.input(t), 1e-12);
  CHECK(tape.value(v)[0] == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(tape.value(v)[1] == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("l2_normalize_columns is idempotent on unit columns") {
  Tape tape;
  Tensor t = make_matrix<float>(2, 1);
  t.data = {0.6f, 0.8f};
  auto v = tape.l2_normalize_columns(tape.input(t), 1e-12);
  CHECK(tape.value(v)[0] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(tape.value(v)[1] == doctest::Approx(0.8).epsilon(1e-7));
}

TEST_CASE("l2_normalize_columns leaves a zero column zero") {
  Tape tape;
  Tensor t = make_matrix<float>(3, 2);
  t.data = {1, 0, 2, 0, 3, 0};
  auto v = tape.l2_normalize_columns(tape.input(t), 1e-12);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(tape.value(v)[r * 2 + 1] == 0.0f);
    CHECK(std::isfinite(tape.value(v)[r * 2]));
  }
}

TEST_CASE("cross entropy of uniform two-way logits is ln 2") {
  Tape tape;
  auto v = tape.cross_entropy_logits(tape.input(row_vector({0, 0})), 0);
  CHECK(tape.scalar(v) == doctest::Approx(std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("cross entropy of a confidently correct prediction is near zero") {
  Tape tape;
  auto v = tape.cross_entropy_logits(tape.input(row_vector({10, -10})), 0);
  CHECK(tape.scalar(v) >= 0.0);
  CHECK(tape.scalar(v) < 1e-4);
}

TEST_CASE("cross entropy matches the direct formula oracle on random 5-way logits") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> logits(5);
    for (double& v : logits) v = rng.uniform(-4.0, 4.0);
    const std::size_t target = rng.below(5);

    TapeT<double> tape;
    TensorT<double> t({5});
    t.data = logits;
    auto v = tape.cross_entropy_logits(tape.input(t), target);
    CHECK(tape.scalar(v) == doctest::Approx(oracles::cross_entropy(logits, target)).epsilon(1e-6));
  }
}

TEST_CASE("cross entropy is shift invariant and non-negative") {
  // Double inputs: in float the shifted logits themselves round, and that
  // input quantization would drown the property being tested.
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    TensorT<double> t({4}), shifted({4});
    const double c = rng.uniform(-100.0, 100.0);
    for (std::size_t i = 0; i < 4; ++i) {
      t.data[i] = rng.uniform(-3.0, 3.0);
      shifted.data[i] = t.data[i] + c;
    }
    TapeT<double> tape;
    auto a = tape.cross_entropy_logits(tape.input(t), 1);
    auto b = tape.cross_entropy_logits(tape.input(shifted), 1);
    CHECK(tape.scalar(a) >= 0.0);
    CHECK(std::fabs(tape.scalar(a) - tape.scalar(b)) < 1e-9);
  }
}

TEST_CASE("cross entropy rejects an out-of-range target") {
  Tape tape;
  auto t = tape.input(row_vector({1, 2, 3}));
  CHECK_THROWS_AS(tape.cross_entropy_logits(t, 3), ShapeError);
}

TEST_CASE("frobenius norm spot values") {
  Tape tape;
  CHECK(tape.scalar(tape.frobenius_norm(tape.input(identity_matrix<float>(2)))) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-7));
  CHECK(tape.scalar(tape.frobenius_norm(tape.input(make_matrix<float>(3, 3)))) == 0.0);
  Tensor d = make_matrix<float>(2, 2);
  d.at(0, 0) = 3;
  d.at(1, 1) = 4;
  CHECK(tape.scalar(tape.frobenius_norm(tape.input(d))) == doctest::Approx(5.0).epsilon(1e-7));
}

TEST_CASE("backward of a linear map broadcasts the fixed input") {
  Tape tape;
  Tensor w = make_matrix<float>(2, 2, true);
  w.data = {1, 2, 3, 4};
  Tensor x = make_matrix<float>(2, 1);
  x.data = {5, 7};
  Tensor ones = make_matrix<float>(1, 2);
  ones.data = {1, 1};
  auto y = tape.matmul(tape.param(w), tape.input(x));  // 2 x 1
  auto loss = tape.matmul(tape.input(ones), y);        // 1 x 1
  tape.backward(loss);
  // d/dW[i][j] sum_i (W x)[i] = x[j] for every row i
  CHECK(w.grad == std::vector<float>{5, 7, 5, 7});
}

TEST_CASE("a parameter used twice accumulates both path contributions") {
  Tape tape;
  Tensor w = make_matrix<float>(2, 2, true);
  w.data = {1, 2, 3, 4};
  Tensor x1 = make_matrix<float>(2, 1);
  x1.data = {1, 0};
  Tensor x2 = make_matrix<float>(2, 1);
  x2.data = {0, 2};
  Tensor ones = make_matrix<float>(1, 2);
  ones.data = {1, 1};
  auto wv = tape.param(w);
  auto s = tape.add(tape.matmul(wv, tape.input(x1)), tape.matmul(wv, tape.input(x2)));
  auto loss = tape.matmul(tape.input(ones), s);
  tape.backward(loss);
  CHECK(w.grad == std::vector<float>{1, 2, 1, 2});  // x1 + x2 broadcast over rows
}

TEST_CASE("backward rejects a non-scalar loss") {
  Tape tape;
  Tensor w = make_matrix<float>(2, 2, true);
  auto v = tape.relu(tape.param(w));
  CHECK_THROWS_AS(tape.backward(v), ShapeError);
}

TEST_CASE("composite loss gradient matches central finite differences") {
  Rng rng(101);
  TensorT<double> w = make_matrix<double>(2, 3, true);
  TensorT<double> bias = make_matrix<double>(1, 3, true);
  TensorT<double> x = make_matrix<double>(3, 3);
  auto away_from_kinks = [&](double v) { return std::fabs(v) < 0.2 ? v + (v < 0 ? -0.4 : 0.4) : v; };
  for (double& v : w.data) v = away_from_kinks(rng.uniform(-1.0, 1.0));
  for (double& v : bias.data) v = away_from_kinks(rng.uniform(-1.0, 1.0));
  for (double& v : x.data) v = away_from_kinks(rng.uniform(-1.0, 1.0));

  auto loss_value = [&](bool want_grads) {
    TapeT<double> tape;
    auto wv = want_grads ? tape.param(w) : tape.input(w);
    auto bv = want_grads ? tape.param(bias) : tape.input(bias);
    auto pre = tape.add_row(tape.matmul(wv, tape.input(x)), bv);  // 2 x 3
    auto h = tape.relu(pre);
    auto d = tape.sub(tape.mul(h, h), h);
    auto nz = tape.l2_normalize_columns(tape.transpose(d), 1e-12);  // 3 x 2
    auto sm = tape.softmax_axis(nz, 1);
    auto sr = tape.sum_rows(sm);  // 1 x 2
    auto ce = tape.cross_entropy_logits(sr, 0);
    auto loss = tape.add(ce, tape.scale(tape.frobenius_norm(nz), 0.5));
    if (want_grads) tape.backward(loss);
    return tape.scalar(loss);
  };

  w.clear_grad();
  bias.clear_grad();
  loss_value(true);
  REQUIRE(w.has_grad());
  REQUIRE(bias.has_grad());
  const std::vector<double> analytic_w = w.grad;
  const std::vector<double> analytic_b = bias.grad;

  auto recompute = [&] { return loss_value(false); };
  for (std::size_t i = 0; i < w.data.size(); ++i) {
    const double numeric = oracles::central_diff(recompute, &w.data[i], 1e-3);
    const double rel = std::fabs(analytic_w[i] - numeric) /
                       std::max({1.0, std::fabs(analytic_w[i]), std::fabs(numeric)});
    CHECK(rel < 1e-4);
  }
  for (std::size_t i = 0; i < bias.data.size(); ++i) {
    const double numeric = oracles::central_diff(recompute, &bias.data[i], 1e-3);
    const double rel = std::fabs(analytic_b[i] - numeric) /
                       std::max({1.0, std::fabs(analytic_b[i]), std::fabs(numeric)});
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("two identical backward runs produce bit-identical gradients") {
  auto run = [](std::vector<float>& grads) {
    Rng rng(55);
    Tensor w = make_matrix<float>(4, 4, true);
    Tensor x = make_matrix<float>(4, 2);
    for (float& v : w.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (float& v : x.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    Tape tape;
    auto h = tape.softmax_axis(tape.relu(tape.matmul(tape.param(w), tape.input(x))), 0);
    auto loss = tape.frobenius_norm(h);
    tape.backward(loss);
    grads = w.grad;
  };
  std::vector<float> g1, g2;
  run(g1);
  run(g2);
  REQUIRE(g1.size() == g2.size());
  CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(float)) == 0);
}

TEST_CASE("adam leaves parameters untouched on zero gradient without decay") {
  Tensor w = make_matrix<float>(2, 2, true);
  w.data = {1, 2, 3, 4};
  w.ensure_grad();
  Adam adam({{"w", &w}}, AdamConfig{});
  adam.step();
  CHECK(w.data == std::vector<float>{1, 2, 3, 4});
}

TEST_CASE("adam moves against a constant gradient") {
  Tensor w = make_matrix<float>(1, 1, true);
  w.data = {0.0f};
  Adam adam({{"w", &w}}, AdamConfig{});
  for (int i = 0; i < 20; ++i) {
    w.ensure_grad();
    w.grad[0] = 1.0f;
    adam.step();
  }
  CHECK(w.data[0] < -1e-3f);
}

TEST_CASE("adam first step matches the hand-evaluated bias-corrected formula") {
  Tensor w = make_matrix<float>(1, 2, true);
  w.data = {1.0f, -2.0f};
  w.ensure_grad();
  w.grad = {0.5f, -0.25f};
  AdamConfig cfg;
  cfg.lr = 0.01f;
  Adam adam({{"w", &w}}, cfg);
  adam.step();
  // at t=1 bias correction cancels: theta - lr * g / (|g| + eps)
  CHECK(w.data[0] == doctest::Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-6));
  CHECK(w.data[1] == doctest::Approx(-2.0 - 0.01 * (-0.25) / (0.25 + 1e-8)).epsilon(1e-6));
  CHECK(adam.step_count() == 1);
}

TEST_CASE("adam refuses a step when a gradient is missing, naming the parameter") {
  Tensor w = make_matrix<float>(1, 1, true);
  w.ensure_grad();
  Adam adam({{"w_local", &w}}, AdamConfig{});
  adam.step();  // consumes and clears the gradient
  const std::string msg = caught_message<ValidationError>([&] { adam.step(); });
  CHECK(contains(msg, "w_local"));
}

TEST_CASE("adam weight decay pulls parameters toward zero") {
  Tensor w = make_matrix<float>(1, 1, true);
  w.data = {2.0f};
  AdamConfig cfg;
  cfg.weight_decay = 0.1f;
  Adam adam({{"w", &w}}, cfg);
  w.ensure_grad();
  adam.step();
  CHECK(w.data[0] < 2.0f);
  CHECK(w.data[0] > 0.0f);
}
