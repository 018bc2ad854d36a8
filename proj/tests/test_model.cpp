#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/gradcheck.hpp"
#include "core/model.hpp"
#include "support/oracles.hpp"

using namespace zsle;
using oracles::caught_message;
using oracles::contains;
using oracles::TempDir;

namespace {

HeadConfig small_config(std::size_t d, std::size_t m) {
  HeadConfig cfg;
  cfg.dim = d;
  cfg.attributes = m;
  cfg.hidden1 = 2;
  cfg.hidden2 = 2;
  return cfg;
}

void zero_offset(HeadParams& p) {
  for (Tensor* t : {&p.offset_w1, &p.offset_b1, &p.offset_w2, &p.offset_b2, &p.offset_w3,
                    &p.offset_b3})
    for (float& v : t->data) v = 0.0f;
}

Tensor row(std::initializer_list<float> vals) {
  Tensor t = make_matrix<float>(1, vals.size());
  t.data.assign(vals.begin(), vals.end());
  return t;
}

// Two identical regions force uniform attention, so every attribute feature
// equals that region vector regardless of the predictor weights.
Tensor duplicated_regions(std::initializer_list<float> region) {
  Tensor z = make_matrix<float>(2, region.size());
  std::size_t i = 0;
  for (float v : region) {
    z.at(0, i) = v;
    z.at(1, i) = v;
    ++i;
  }
  return z;
}

}  // namespace

TEST_CASE("attention scores are the region-by-weight product") {
  HeadConfig cfg = small_config(4, 2);
  HeadParams p = HeadParams::init(cfg, 1);
  SUBCASE("one-hot region rows copy predictor rows") {
    Tensor z = make_matrix<float>(2, 4);
    z.at(0, 0) = 1.0f;  // selects row 0 of w_local
    z.at(1, 2) = 1.0f;  // selects row 2
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    HeadForwardT<float> f = head_forward(tape, hv, cfg, z, row({0, 0, 0, 0}));
    const auto& scores = tape.value(f.attn_scores);
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(scores[0 * 2 + j] == doctest::Approx(p.w_local.at(0, j)).epsilon(1e-6));
      CHECK(scores[1 * 2 + j] == doctest::Approx(p.w_local.at(2, j)).epsilon(1e-6));
    }
  }
  SUBCASE("zero regions give zero scores") {
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    HeadForwardT<float> f =
        head_forward(tape, hv, cfg, make_matrix<float>(3, 4), row({0, 0, 0, 0}));
    for (float v : tape.value(f.attn_scores)) CHECK(v == 0.0f);
  }
  SUBCASE("random case matches the triple-loop oracle") {
    Rng rng(21);
    Tensor z = make_matrix<float>(3, 4);
    for (float& v : z.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    oracles::Mat zm(3, std::vector<double>(4)), wm(4, std::vector<double>(2));
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 4; ++c) zm[r][c] = z.at(r, c);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < 2; ++c) wm[r][c] = p.w_local.at(r, c);
    const oracles::Mat want = oracles::matmul(zm, wm);

    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    HeadForwardT<float> f = head_forward(tape, hv, cfg, z, row({0, 0, 0, 0}));
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 2; ++c)
        CHECK(tape.value(f.attn_scores)[r * 2 + c] ==
              doctest::Approx(want[r][c]).epsilon(1e-5));
  }
}

TEST_CASE("attention weights are per-attribute distributions over regions") {
  HeadConfig cfg = small_config(2, 2);
  HeadParams p = HeadParams::init(cfg, 3);
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    Tensor z = make_matrix<float>(4, 2);
    for (float& v : z.data) v = static_cast<float>(rng.uniform(-2.0, 2.0));
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    HeadForwardT<float> f = head_forward(tape, hv, cfg, z, row({0, 0}));
    const auto& w = tape.value(f.attn_weights);
    const auto& zhat = tape.value(f.attr_features);
    for (std::size_t j = 0; j < 2; ++j) {
      double sum = 0.0;
      for (std::size_t r = 0; r < 4; ++r) {
        CHECK(w[r * 2 + j] > 0.0f);
        sum += w[r * 2 + j];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
      // convex-hull containment, coordinate-wise over regions
      for (std::size_t d = 0; d < 2; ++d) {
        float lo = z.at(0, d), hi = z.at(0, d);
        for (std::size_t r = 1; r < 4; ++r) {
          lo = std::min(lo, z.at(r, d));
          hi = std::max(hi, z.at(r, d));
        }
        CHECK(zhat[d * 2 + j] >= lo - 1e-5f);
        CHECK(zhat[d * 2 + j] <= hi + 1e-5f);
      }
    }
  }
}

TEST_CASE("uniform attention averages regions and one-hot weights select one") {
  // The weighted-sum itself, exercised through a tape: Zt (D x N) x W (N x M).
  Tape tape;
  Tensor z = make_matrix<float>(3, 2);  // 3 regions in R^2
  z.data = {1, 2, 3, 4, 5, 6};
  Tensor select = make_matrix<float>(3, 1);
  select.data = {0, 0, 1};  // one-hot on region 2
  auto zt = tape.transpose(tape.input(z));
  auto picked = tape.matmul(zt, tape.input(select));
  CHECK(tape.value(picked) == std::vector<float>{5, 6});

  Tensor uniform = make_matrix<float>(3, 1);
  uniform.data = {1.0f / 3, 1.0f / 3, 1.0f / 3};
  auto mean = tape.matmul(zt, tape.input(uniform));
  CHECK(tape.value(mean)[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(tape.value(mean)[1] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("cosine loss characterization") {
  SUBCASE("orthonormal columns score zero") {
    Tape tape;
    Tensor z = make_matrix<float>(4, 2);
    z.at(0, 0) = 1.0f;
    z.at(1, 1) = 1.0f;
    auto v = cosine_loss(tape, tape.input(z));
    CHECK(tape.scalar(v) < 1e-6);
  }
  SUBCASE("a duplicated column pair scores sqrt(2)") {
    Tape tape;
    Tensor z = make_matrix<float>(3, 2);
    z.data = {1, 1, 2, 2, 3, 3};
    auto v = cosine_loss(tape, tape.input(z));
    CHECK(tape.scalar(v) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  }
  SUBCASE("more columns than dimensions is always penalized") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      Tensor z = make_matrix<float>(2, 3);
      for (float& v : z.data) v = static_cast<float>(rng.uniform(0.5, 2.0));
      Tape tape;
      auto v = cosine_loss(tape, tape.input(z));
      CHECK(tape.scalar(v) > 1e-3);
    }
  }
  SUBCASE("random case matches the pairwise dot/norm oracle") {
    Rng rng(33);
    oracles::Mat zm(5, std::vector<double>(3));
    Tensor z = make_matrix<float>(5, 3);
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t c = 0; c < 3; ++c) {
        zm[r][c] = rng.uniform(-1.0, 1.0);
        z.at(r, c) = static_cast<float>(zm[r][c]);
      }
    Tape tape;
    auto v = cosine_loss(tape, tape.input(z));
    CHECK(tape.scalar(v) == doctest::Approx(oracles::cosine_gram_loss(zm)).epsilon(1e-5));
  }
}

TEST_CASE("offset network layer arithmetic") {
  HeadConfig cfg = small_config(2, 2);
  HeadParams p = HeadParams::init(cfg, 5);

  SUBCASE("zero weights and biases give zero output") {
    zero_offset(p);
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    auto out = offset_forward(tape, hv, tape.input(row({0.7f, -0.3f})));
    for (float v : tape.value(out)) CHECK(v == 0.0f);
  }
  SUBCASE("zero input flows through the composed bias path") {
    p.offset_w1.data = {0, 0, 0, 0};
    p.offset_b1.data = {1, 2};
    p.offset_w2.data = {1, 0, 0, 1};
    p.offset_b2.data = {0.5f, -10};
    p.offset_w3.data = {1, 1, 1, 1};
    p.offset_b3.data = {0.25f, 0};
    // relu(b1) = (1,2) -> relu((1,2)W2+b2) = relu(1.5,-8) = (1.5,0) -> W3+b3 = (1.75,1.5)
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    auto out = offset_forward(tape, hv, tape.input(row({0, 0})));
    CHECK(tape.value(out)[0] == doctest::Approx(1.75).epsilon(1e-6));
    CHECK(tape.value(out)[1] == doctest::Approx(1.5).epsilon(1e-6));
  }
  SUBCASE("random input matches the layer-by-layer oracle") {
    Rng rng(41);
    std::vector<float*> slots;
    for (Tensor* t : {&p.offset_w1, &p.offset_b1, &p.offset_w2, &p.offset_b2, &p.offset_w3,
                      &p.offset_b3})
      for (float& v : t->data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const std::vector<double> v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};

    auto grab = [](const Tensor& t) {
      oracles::Mat m(t.rows(), std::vector<double>(t.cols()));
      for (std::size_t r = 0; r < t.rows(); ++r)
        for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
      return m;
    };
    auto grab_row = [](const Tensor& t) {
      return std::vector<double>(t.data.begin(), t.data.end());
    };
    const std::vector<double> want =
        oracles::mlp(v, grab(p.offset_w1), grab_row(p.offset_b1), grab(p.offset_w2),
                     grab_row(p.offset_b2), grab(p.offset_w3), grab_row(p.offset_b3));

    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    auto out = offset_forward(
        tape, hv, tape.input(row({static_cast<float>(v[0]), static_cast<float>(v[1])})));
    for (std::size_t j = 0; j < want.size(); ++j)
      CHECK(tape.value(out)[j] == doctest::Approx(want[j]).epsilon(1e-5));
  }
}

TEST_CASE("local prediction is the column-wise inner product plus the mean offset") {
  HeadConfig cfg = small_config(2, 2);
  HeadParams p = HeadParams::init(cfg, 7);

  SUBCASE("hand-built inner products with the offset zeroed") {
    zero_offset(p);
    p.w_local.data = {0.6f, -0.2f, 99.0f, 99.0f};
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    HeadForwardT<float> f =
        head_forward(tape, hv, cfg, duplicated_regions({1, 0}), row({0, 0}));
    CHECK(tape.value(f.pred_local)[0] == doctest::Approx(0.6).epsilon(1e-5));
    CHECK(tape.value(f.pred_local)[1] == doctest::Approx(-0.2).epsilon(1e-5));
  }
  SUBCASE("zero predictor leaves only the mean of the offset outputs") {
    for (float& v : p.w_local.data) v = 0.0f;
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    // identical regions make every attribute feature the same vector, so the
    // mean offset is just the offset of that vector
    HeadForwardT<float> f =
        head_forward(tape, hv, cfg, duplicated_regions({1, 0}), row({0, 0}));
    auto phi = offset_forward(tape, hv, tape.input(row({1, 0})));
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(tape.value(f.pred_local)[j] == doctest::Approx(tape.value(phi)[j]).epsilon(1e-5));
  }
  SUBCASE("zero everything gives the zero prediction") {
    zero_offset(p);
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    HeadForwardT<float> f =
        head_forward(tape, hv, cfg, make_matrix<float>(2, 2), row({0, 0}));
    for (float v : tape.value(f.pred_local)) CHECK(v == 0.0f);
  }
}

TEST_CASE("global prediction is the linear map plus the offset of the pooled feature") {
  HeadConfig cfg = small_config(2, 2);
  HeadParams p = HeadParams::init(cfg, 9);

  SUBCASE("with the offset zeroed it is exactly p times W_g") {
    zero_offset(p);
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    HeadForwardT<float> f =
        head_forward(tape, hv, cfg, duplicated_regions({1, 1}), row({2, -1}));
    for (std::size_t j = 0; j < 2; ++j) {
      const double want = 2.0 * p.w_global.at(0, j) - 1.0 * p.w_global.at(1, j);
      CHECK(tape.value(f.pred_global)[j] == doctest::Approx(want).epsilon(1e-5));
    }
  }
  SUBCASE("zero pooled feature leaves only the offset bias path") {
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    HeadForwardT<float> f =
        head_forward(tape, hv, cfg, duplicated_regions({1, 1}), row({0, 0}));
    auto phi = offset_forward(tape, hv, tape.input(row({0, 0})));
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(tape.value(f.pred_global)[j] == doctest::Approx(tape.value(phi)[j]).epsilon(1e-6));
  }
}

TEST_CASE("predictors are independent up to the shared offset network") {
  HeadConfig cfg = small_config(3, 2);
  Rng rng(43);
  Tensor z = make_matrix<float>(4, 3);
  for (float& v : z.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  Tensor g = row({0.5f, -0.5f, 1.0f});

  auto forward = [&](HeadParams& p) {
    Tape tape;
    HeadVarsT<float> hv = bind_params(tape, p, false);
    HeadForwardT<float> f = head_forward(tape, hv, cfg, z, g);
    return std::make_pair(tape.value(f.pred_local), tape.value(f.pred_global));
  };

  HeadParams base = HeadParams::init(cfg, 11);
  auto [local0, global0] = forward(base);

  HeadParams pg = base;
  for (float& v : pg.w_global.data) v += 0.25f;
  auto [local1, global1] = forward(pg);
  CHECK(local1 == local0);        // bit-identical: w_global never touches the local path
  CHECK(global1 != global0);

  HeadParams pl = base;
  for (float& v : pl.w_local.data) v += 0.25f;
  auto [local2, global2] = forward(pl);
  CHECK(global2 == global0);      // bit-identical: w_local never touches the global path
  CHECK(local2 != local0);

  HeadParams po = base;
  po.offset_b3.data[0] += 1.0f;
  auto [local3, global3] = forward(po);
  CHECK(local3 != local0);        // the offset network is shared by both
  CHECK(global3 != global0);
}

TEST_CASE("shared-predictor binding uses one map for both linear terms") {
  HeadConfig cfg = small_config(2, 2);
  cfg.share_predictors = true;
  HeadParams p = HeadParams::init(cfg, 13);
  zero_offset(p);
  for (float& v : p.w_global.data) v = 1234.0f;  // must be ignored when shared

  Tape tape;
  HeadVarsT<float> hv = bind_params(tape, p, false);
  HeadForwardT<float> f =
      head_forward(tape, hv, cfg, duplicated_regions({1, 1}), row({2, -1}));
  for (std::size_t j = 0; j < 2; ++j) {
    const double want = 2.0 * p.w_local.at(0, j) - 1.0 * p.w_local.at(1, j);
    CHECK(tape.value(f.pred_global)[j] == doctest::Approx(want).epsilon(1e-5));
  }
}

TEST_CASE("seen-class cross entropy") {
  HeadConfig cfg = small_config(2, 3);
  SUBCASE("prediction orthogonal to every class row costs ln C_s") {
    Tape tape;
    Tensor seen_t = make_matrix<float>(3, 4);  // M x C_s, all zero -> logits zero
    auto v = seen_class_ce(tape, tape.input(row({1, 2, 3})), tape.input(seen_t), 2);
    CHECK(tape.scalar(v) == doctest::Approx(std::log(4.0)).epsilon(1e-6));
  }
  SUBCASE("a confident aligned prediction costs nearly nothing") {
    Tape tape;
    Tensor seen_t = make_matrix<float>(2, 2);
    seen_t.at(0, 0) = 1.0f;
    seen_t.at(1, 1) = 1.0f;
    auto v = seen_class_ce(tape, tape.input(row({1000, 0})), tape.input(seen_t), 0);
    CHECK(tape.scalar(v) < 1e-4);
  }
  SUBCASE("random four-class instance matches the direct oracle") {
    Rng rng(47);
    Tensor seen_t = make_matrix<float>(3, 4);
    std::vector<double> pred = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                                rng.uniform(-1.0, 1.0)};
    for (float& v : seen_t.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
    std::vector<double> logits(4, 0.0);
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t j = 0; j < 3; ++j) logits[k] += pred[j] * seen_t.at(j, k);

    Tape tape;
    auto v = seen_class_ce(
        tape,
        tape.input(row({static_cast<float>(pred[0]), static_cast<float>(pred[1]),
                        static_cast<float>(pred[2])})),
        tape.input(seen_t), 1);
    CHECK(tape.scalar(v) == doctest::Approx(oracles::cross_entropy(logits, 1)).epsilon(1e-5));
  }
  SUBCASE("a target outside the seen range is rejected") {
    Tape tape;
    Tensor seen_t = make_matrix<float>(3, 4);
    auto pred = tape.input(row({1, 2, 3}));
    auto seen = tape.input(seen_t);
    CHECK_THROWS_AS(seen_class_ce(tape, pred, seen, 4), ShapeError);
  }
}

TEST_CASE("total loss composition is attr + cls + lambda times cos") {
  Tape tape;
  Tensor a({1}), c({1}), k({1});
  a.data = {1.0f};
  c.data = {2.0f};
  k.data = {3.0f};
  auto attr = tape.input(a), cls = tape.input(c), cos = tape.input(k);
  auto with_half = tape.add(tape.add(attr, cls), tape.scale(cos, 0.5));
  CHECK(tape.scalar(with_half) == doctest::Approx(4.5).epsilon(1e-9));
  auto with_zero = tape.add(tape.add(attr, cls), tape.scale(cos, 0.0));
  CHECK(tape.scalar(with_zero) == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("parameter groups honor the structural switches") {
  HeadConfig cfg = small_config(2, 2);
  HeadParams full = HeadParams::init(cfg, 1);
  std::vector<std::string> names;
  for (auto& [name, t] : full.parameters()) names.push_back(name);
  CHECK(names == std::vector<std::string>{"w_local", "w_global", "offset_w1", "offset_b1",
                                          "offset_w2", "offset_b2", "offset_w3", "offset_b3"});

  cfg.share_predictors = true;
  HeadParams shared = HeadParams::init(cfg, 1);
  names.clear();
  for (auto& [name, t] : shared.parameters()) names.push_back(name);
  CHECK(names.front() == "w_shared");
  CHECK(names.size() == 7);

  cfg.share_predictors = false;
  cfg.use_offset_mlp = false;
  HeadParams bare = HeadParams::init(cfg, 1);
  names.clear();
  for (auto& [name, t] : bare.parameters()) names.push_back(name);
  CHECK(names == std::vector<std::string>{"w_local", "w_global"});
}

TEST_CASE("parameter initialization is seeded and deterministic") {
  HeadConfig cfg = small_config(3, 2);
  HeadParams a = HeadParams::init(cfg, 77);
  HeadParams b = HeadParams::init(cfg, 77);
  HeadParams c = HeadParams::init(cfg, 78);
  CHECK(a.w_local.data == b.w_local.data);
  CHECK(a.offset_w2.data == b.offset_w2.data);
  CHECK(a.w_local.data != c.w_local.data);
  // fan-in bound: |v| <= 1/sqrt(D)
  for (float v : a.w_local.data) CHECK(std::fabs(v) <= 1.0f / std::sqrt(3.0f) + 1e-6f);
}

TEST_CASE("checkpoint roundtrip is bit-exact") {
  TempDir dir;
  HeadConfig cfg = small_config(4, 3);
  HeadParams p = HeadParams::init(cfg, 19);
  const std::string path = dir.file("head.ckpt");
  write_checkpoint(p, path);
  HeadParams back = read_checkpoint(path);
  CHECK(back.cfg.dim == 4);
  CHECK(back.cfg.attributes == 3);
  CHECK(back.cfg.hidden1 == 2);
  CHECK(back.cfg.hidden2 == 2);
  CHECK(back.w_local.data == p.w_local.data);
  CHECK(back.w_global.data == p.w_global.data);
  CHECK(back.offset_w1.data == p.offset_w1.data);
  CHECK(back.offset_b1.data == p.offset_b1.data);
  CHECK(back.offset_w2.data == p.offset_w2.data);
  CHECK(back.offset_b2.data == p.offset_b2.data);
  CHECK(back.offset_w3.data == p.offset_w3.data);
  CHECK(back.offset_b3.data == p.offset_b3.data);
}

TEST_CASE("corrupted checkpoints are rejected") {
  TempDir dir;
  HeadConfig cfg = small_config(4, 3);
  HeadParams p = HeadParams::init(cfg, 19);
  const std::string path = dir.file("head.ckpt");
  write_checkpoint(p, path);

  SUBCASE("truncation") {
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    is.close();
    bytes.resize(bytes.size() / 2);
    std::ofstream(path, std::ios::binary) << bytes;
    const std::string msg = caught_message<IoError>([&] { read_checkpoint(path); });
    CHECK(contains(msg, "truncated"));
  }
  SUBCASE("wrong magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
    f.close();
    const std::string msg = caught_message<IoError>([&] { read_checkpoint(path); });
    CHECK(contains(msg, "magic"));
  }
  SUBCASE("trailing bytes") {
    std::ofstream(path, std::ios::binary | std::ios::app) << "junk";
    const std::string msg = caught_message<IoError>([&] { read_checkpoint(path); });
    CHECK(contains(msg, "trailing"));
  }
}

TEST_CASE("gradient check passes for every parameter group") {
  GradCheckConfig cfg;
  GradCheckResult r = run_gradcheck(cfg);
  CHECK(r.pass);
  CHECK(r.rows.size() >= 8);
  for (const auto& row : r.rows) {
    CHECK(row.pass);
    CHECK(row.max_rel_err < 1e-4);
  }
}

TEST_CASE("gradient check with lambda zero still covers every group through the CE paths") {
  GradCheckConfig cfg;
  cfg.lambda = 0.0f;
  GradCheckResult r = run_gradcheck(cfg);
  CHECK(r.pass);
  bool has_local = false, has_offset = false;
  for (const auto& row : r.rows) {
    has_local = has_local || row.group == "w_local";
    has_offset = has_offset || row.group == "offset_w1";
  }
  CHECK(has_local);
  CHECK(has_offset);
}

TEST_CASE("gradient check under the attribute attention axis also passes") {
  GradCheckConfig cfg;
  cfg.attention_axis = AttentionAxis::Attribute;
  GradCheckResult r = run_gradcheck(cfg);
  CHECK(r.pass);
}

TEST_CASE("a corrupted gradient is caught and the group named") {
  GradCheckConfig cfg;
  cfg.corrupt_group = "w_global";
  GradCheckResult r = run_gradcheck(cfg);
  CHECK_FALSE(r.pass);
  for (const auto& row : r.rows) {
    if (row.group == "w_global") {
      CHECK_FALSE(row.pass);
      CHECK(row.max_rel_err >= 1e-4);
    } else {
      CHECK(row.pass);
    }
  }
  CHECK(contains(r.to_table(), "w_global"));
}

TEST_CASE("an unknown corrupt-group name is a config error") {
  GradCheckConfig cfg;
  cfg.corrupt_group = "w_bogus";
  CHECK_THROWS_AS(run_gradcheck(cfg), ConfigError);
}
