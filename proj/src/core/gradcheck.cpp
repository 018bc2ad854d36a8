#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "common.hpp"
#include "tape.hpp"

namespace zsle {

void GradCheckConfig::validate() const {
  if (regions == 0 || dim == 0 || attributes == 0 || seen_classes == 0) {
    throw ConfigError("gradient-check dimensions must be positive");
  }
  if (lambda < 0.0f) throw ConfigError("lambda must be non-negative");
  if (!(step > 0.0)) throw ConfigError("finite-difference step must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
}

namespace {

struct ToyInstance {
  TensorT<double> local;       // N x D
  TensorT<double> global_vec;  // 1 x D
  TensorT<double> seen_t;      // M x C_s
  std::size_t target = 0;
};

ToyInstance make_instance(const GradCheckConfig& cfg, Rng& rng) {
  ToyInstance inst;
  inst.local = make_matrix<double>(cfg.regions, cfg.dim, false);
  for (double& v : inst.local.data) v = rng.normal();
  inst.global_vec = make_matrix<double>(1, cfg.dim, false);
  for (double& v : inst.global_vec.data) v = rng.normal();
  inst.seen_t = make_matrix<double>(cfg.attributes, cfg.seen_classes, false);
  for (double& v : inst.seen_t.data) v = rng.uniform(0.1, 1.0);
  inst.target = rng.below(static_cast<std::uint32_t>(cfg.seen_classes));
  return inst;
}

double total_loss(HeadParamsT<double>& params, const HeadConfig& head_cfg,
                  const ToyInstance& inst, float lambda, bool with_grad) {
  TapeT<double> tape;
  HeadVarsT<double> hv = bind_params(tape, params, with_grad);
  HeadForwardT<double> f = head_forward(tape, hv, head_cfg, inst.local, inst.global_vec);
  auto seen_var = tape.input(inst.seen_t);
  auto loss = tape.add(seen_class_ce(tape, f.pred_local, seen_var, inst.target),
                       seen_class_ce(tape, f.pred_global, seen_var, inst.target));
  if (lambda > 0.0f) {
    loss = tape.add(loss, tape.scale(cosine_loss(tape, f.attr_features),
                                     static_cast<double>(lambda)));
  }
  const double value = tape.scalar(loss);
  if (with_grad) tape.backward(loss);
  return value;
}

}  // namespace

GradCheckResult run_gradcheck(const GradCheckConfig& cfg) {
  cfg.validate();

  HeadConfig head_cfg;
  head_cfg.dim = cfg.dim;
  head_cfg.attributes = cfg.attributes;
  head_cfg.attention_axis = cfg.attention_axis;

  Rng rng(cfg.seed);
  HeadParamsT<double> params = HeadParams::init(head_cfg, cfg.seed).cast<double>();
  ToyInstance inst = make_instance(cfg, rng);

  total_loss(params, head_cfg, inst, cfg.lambda, true);

  auto groups = params.parameters();
  if (!cfg.corrupt_group.empty()) {
    bool found = false;
    for (auto& [name, tensor] : groups) {
      if (name == cfg.corrupt_group) {
        tensor->grad[0] += 1.0;
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown parameter group '" + cfg.corrupt_group + "'");
  }

  GradCheckResult result;
  result.pass = true;
  for (auto& [name, tensor] : groups) {
    GradCheckRow row;
    row.group = name;
    for (std::size_t i = 0; i < tensor->data.size(); ++i) {
      const double saved = tensor->data[i];
      auto central = [&](double h) {
        tensor->data[i] = saved + h;
        const double plus = total_loss(params, head_cfg, inst, cfg.lambda, false);
        tensor->data[i] = saved - h;
        const double minus = total_loss(params, head_cfg, inst, cfg.lambda, false);
        tensor->data[i] = saved;
        return (plus - minus) / (2.0 * h);
      };
      const double analytic = tensor->grad[i];
      auto rel_err = [&](double numeric) {
        const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
        return std::fabs(analytic - numeric) / denom;
      };
      double err = rel_err(central(cfg.step));
      if (err >= cfg.tolerance) {
        // Truncation error from curvature or a ReLU kink inside the step
        // window shrinks with the step; a wrong analytic gradient does not.
        err = rel_err(central(cfg.step / 16.0));
      }
      row.max_rel_err = std::max(row.max_rel_err, err);
    }
    row.pass = row.max_rel_err < cfg.tolerance;
    result.pass = result.pass && row.pass;
    result.rows.push_back(std::move(row));
  }
  return result;
}

std::string GradCheckResult::to_json() const {
  nlohmann::ordered_json j;
  j["pass"] = pass;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const GradCheckRow& row : rows) {
    list.push_back({{"group", row.group}, {"max_rel_err", row.max_rel_err}, {"pass", row.pass}});
  }
  j["groups"] = list;
  return j.dump(2);
}

std::string GradCheckResult::to_table() const {
  std::string out = "group            max_rel_err      status\n";
  char line[128];
  for (const GradCheckRow& row : rows) {
    std::snprintf(line, sizeof(line), "%-16s %-16.3e %s\n", row.group.c_str(), row.max_rel_err,
                  row.pass ? "pass" : "FAIL");
    out += line;
  }
  out += pass ? "all groups pass\n" : "gradient check FAILED\n";
  return out;
}

}  // namespace zsle
