#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "adam.hpp"
#include "common.hpp"
#include "tape.hpp"

namespace zsle {

void RunConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch < 1) throw ConfigError("batch size must be >= 1");
  if (!(lr > 0.0f)) throw ConfigError("learning rate must be positive");
  if (lambda < 0.0f) throw ConfigError("lambda must be non-negative");
  if (wd < 0.0f) throw ConfigError("weight decay must be non-negative");
  if (beta1 < 0.0f || beta2 < 0.0f) throw ConfigError("combination weights must be non-negative");
  if (gamma < 0.0f) throw ConfigError("calibration offset must be non-negative");
}

void apply_beta_preset(RunConfig& cfg, const std::string& preset) {
  if (preset == "fine-grained") {
    cfg.beta1 = 0.5f;
    cfg.beta2 = 0.5f;
  } else if (preset == "coarse-grained") {
    cfg.beta1 = 0.0f;
    cfg.beta2 = 1.0f;
  } else {
    throw ConfigError("unknown beta preset '" + preset +
                      "' (expected 'fine-grained' or 'coarse-grained')");
  }
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  RunConfig cfg;
  try {
    if (j.contains("beta_preset")) apply_beta_preset(cfg, j.at("beta_preset").get<std::string>());
    for (const auto& [key, value] : j.items()) {
      if (key == "features_train") cfg.features_train = value.get<std::string>();
      else if (key == "features_test_seen") cfg.features_test_seen = value.get<std::string>();
      else if (key == "features_test_unseen") cfg.features_test_unseen = value.get<std::string>();
      else if (key == "semantic") cfg.semantic = value.get<std::string>();
      else if (key == "split") cfg.split = value.get<std::string>();
      else if (key == "checkpoint") cfg.checkpoint = value.get<std::string>();
      else if (key == "out") cfg.out = value.get<std::string>();
      else if (key == "lambda") cfg.lambda = value.get<float>();
      else if (key == "beta1") cfg.beta1 = value.get<float>();
      else if (key == "beta2") cfg.beta2 = value.get<float>();
      else if (key == "gamma") cfg.gamma = value.get<float>();
      else if (key == "epochs") cfg.epochs = value.get<std::size_t>();
      else if (key == "batch") cfg.batch = value.get<std::size_t>();
      else if (key == "lr") cfg.lr = value.get<float>();
      else if (key == "wd") cfg.wd = value.get<float>();
      else if (key == "hidden1") cfg.hidden1 = value.get<std::size_t>();
      else if (key == "hidden2") cfg.hidden2 = value.get<std::size_t>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "attention_axis")
        cfg.attention_axis = attention_axis_from_string(value.get<std::string>());
      else if (key == "normalize_input") cfg.normalize_input = value.get<bool>();
      else if (key == "beta_preset") { /* applied above */ }
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string RunConfig::manifest_path() const {
  std::size_t slash = semantic.find_last_of('/');
  std::size_t dot = semantic.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return semantic + ".tsv";
  }
  return semantic.substr(0, dot) + ".tsv";
}

CombineConfig RunConfig::combine() const {
  CombineConfig c;
  c.beta_local = beta1;
  c.beta_global = beta2;
  c.gamma = gamma;
  return c;
}

Session Session::load(const RunConfig& cfg, bool need_train, bool need_test) {
  cfg.validate();
  if (cfg.semantic.empty()) throw ConfigError("semantic matrix path is required");
  if (cfg.split.empty()) throw ConfigError("split path is required");

  Session s;
  s.cfg = cfg;
  s.semantic = load_semantic_matrix(cfg.semantic, cfg.manifest_path());
  s.split = read_split(cfg.split);

  if (need_train) {
    if (cfg.features_train.empty()) throw ConfigError("training feature path is required");
    s.train = read_feature_file(cfg.features_train, DatasetRole::Train);
    if (cfg.normalize_input) l2_normalize_records(s.train);
  }
  validate_split(s.split, s.semantic, s.train);
  s.index = ClassIndex::build(s.semantic, s.split);

  if (need_test) {
    if (cfg.features_test_seen.empty()) throw ConfigError("test-seen feature path is required");
    if (cfg.features_test_unseen.empty()) throw ConfigError("test-unseen feature path is required");
    s.test_seen = read_feature_file(cfg.features_test_seen, DatasetRole::TestSeen);
    s.test_unseen = read_feature_file(cfg.features_test_unseen, DatasetRole::TestUnseen);
    if (cfg.normalize_input) {
      l2_normalize_records(s.test_seen);
      l2_normalize_records(s.test_unseen);
    }
    if (need_train && (s.test_seen.dim != s.train.dim || s.test_unseen.dim != s.train.dim)) {
      throw ValidationError("feature dimension differs between train and test files");
    }
    if (s.test_seen.dim != s.test_unseen.dim) {
      throw ValidationError("feature dimension differs between test files");
    }
  }
  return s;
}

std::string EpochLog::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["steps"] = steps;
  j["attr"] = attr;
  j["cls"] = cls;
  j["cos"] = cos;
  j["total"] = total;
  return j.dump();
}

namespace {

// Only parameters reachable from the enabled loss terms join the optimizer;
// an unreachable parameter would otherwise trip the missing-gradient check.
std::vector<NamedParam> reachable_params(HeadParams& params, const TrainOptions& options,
                                         float lambda_eff) {
  const bool any_ce = options.loss_attr || options.loss_cls;
  std::vector<NamedParam> out;
  for (auto& [name, tensor] : params.parameters()) {
    bool reachable = true;
    if (name == "w_shared") reachable = any_ce || lambda_eff > 0.0f;
    else if (name == "w_local") reachable = options.loss_attr || lambda_eff > 0.0f;
    else if (name == "w_global") reachable = options.loss_cls;
    else reachable = any_ce;  // offset MLP feeds both predictions, not the cosine term
    if (reachable) out.push_back({name, tensor});
  }
  return out;
}

Tensor seen_semantics_transposed(const SemanticMatrix& semantic, const ClassIndex& index) {
  const std::size_t m = semantic.num_attributes();
  Tensor t = make_matrix<float>(m, index.seen_rows.size(), false);
  for (std::size_t si = 0; si < index.seen_rows.size(); ++si) {
    const std::size_t row = index.seen_rows[si];
    for (std::size_t j = 0; j < m; ++j) t.at(j, si) = semantic.values.at(row, j);
  }
  return t;
}

void fisher_yates(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t j = rng.below(static_cast<std::uint32_t>(i));
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace

TrainResult train_head(const Session& session, const TrainOptions& options,
                       const EpochCallback& on_epoch) {
  const RunConfig& cfg = session.cfg;
  if (session.train.records.empty()) throw ValidationError("training set is empty");

  const float lambda_eff = options.lambda_override >= 0.0f ? options.lambda_override : cfg.lambda;
  if (!options.loss_attr && !options.loss_cls && lambda_eff == 0.0f) {
    throw ConfigError("no loss terms enabled");
  }

  HeadConfig head_cfg;
  head_cfg.dim = session.train.dim;
  head_cfg.attributes = session.semantic.num_attributes();
  head_cfg.hidden1 = cfg.hidden1;
  head_cfg.hidden2 = cfg.hidden2;
  head_cfg.attention_axis = cfg.attention_axis;
  head_cfg.share_predictors = options.share_predictors;
  head_cfg.use_offset_mlp = options.use_offset_mlp;

  TrainResult result;
  result.params = HeadParams::init(head_cfg, cfg.seed);
  HeadParams& params = result.params;

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  adam_cfg.weight_decay = cfg.wd;
  Adam adam(reachable_params(params, options, lambda_eff), adam_cfg);

  const Tensor seen_t = seen_semantics_transposed(session.semantic, session.index);
  const std::size_t n = session.train.records.size();

  std::vector<int> seen_pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    seen_pos[i] = session.index.seen_position(session.train.records[i].label);
    if (seen_pos[i] < 0) {
      throw ValidationError("train record labeled with non-seen class " +
                            std::to_string(session.train.records[i].label));
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(cfg.seed + 1);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    fisher_yates(order, shuffle_rng);
    EpochLog log;
    log.epoch = epoch;
    double attr_sum = 0.0, cls_sum = 0.0, cos_sum = 0.0;

    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t stop = std::min(n, start + cfg.batch);
      const double inv = 1.0 / static_cast<double>(stop - start);

      Tape tape;
      HeadVarsT<float> hv = bind_params(tape, params, true);
      Tape::Var seen_var = tape.input(seen_t);

      Tape::Var attr_total{}, cls_total{}, cos_total{};
      for (std::size_t i = start; i < stop; ++i) {
        const FeatureRecord& rec = session.train.records[order[i]];
        Tensor global = make_matrix<float>(1, rec.global_vec.size(), false);
        global.data = rec.global_vec;
        HeadForwardT<float> f = head_forward(tape, hv, head_cfg, rec.local, global);
        const std::size_t target = static_cast<std::size_t>(seen_pos[order[i]]);

        Tape::Var cos_v = cosine_loss(tape, f.attr_features);
        cos_total = cos_total.valid() ? tape.add(cos_total, cos_v) : cos_v;
        cos_sum += tape.scalar(cos_v);
        if (options.loss_attr) {
          Tape::Var v = seen_class_ce(tape, f.pred_local, seen_var, target);
          attr_total = attr_total.valid() ? tape.add(attr_total, v) : v;
          attr_sum += tape.scalar(v);
        }
        if (options.loss_cls) {
          Tape::Var v = seen_class_ce(tape, f.pred_global, seen_var, target);
          cls_total = cls_total.valid() ? tape.add(cls_total, v) : v;
          cls_sum += tape.scalar(v);
        }
      }

      Tape::Var batch_loss{};
      auto accumulate = [&](Tape::Var part, double weight) {
        if (!part.valid() || weight == 0.0) return;
        Tape::Var scaled = tape.scale(part, weight * inv);
        batch_loss = batch_loss.valid() ? tape.add(batch_loss, scaled) : scaled;
      };
      accumulate(attr_total, options.loss_attr ? 1.0 : 0.0);
      accumulate(cls_total, options.loss_cls ? 1.0 : 0.0);
      accumulate(cos_total, static_cast<double>(lambda_eff));

      tape.backward(batch_loss);
      adam.step();
      ++log.steps;
    }

    log.attr = options.loss_attr ? attr_sum / static_cast<double>(n) : 0.0;
    log.cls = options.loss_cls ? cls_sum / static_cast<double>(n) : 0.0;
    log.cos = cos_sum / static_cast<double>(n);
    log.total = log.attr + log.cls + static_cast<double>(lambda_eff) * log.cos;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }

  if (head_cfg.share_predictors) {
    params.w_global = params.w_local;
    params.w_global.clear_grad();
  }
  return result;
}

namespace {

struct VariantSpec {
  TrainOptions opts;
  bool override_beta = false;
  float beta1 = 0.0f, beta2 = 0.0f;
};

VariantSpec variant_spec(const std::string& name) {
  VariantSpec v;
  if (name == "single-predictor") {
    v.opts.share_predictors = true;
    v.opts.use_offset_mlp = false;
    v.opts.lambda_override = 0.0f;
  } else if (name == "two-predictors") {
    v.opts.use_offset_mlp = false;
    v.opts.lambda_override = 0.0f;
  } else if (name == "two-predictors+bias") {
    v.opts.lambda_override = 0.0f;
  } else if (name == "full" || name == "all") {
    // full model, config lambda
  } else if (name == "L_cls") {
    v.opts.loss_attr = false;
    v.opts.lambda_override = 0.0f;
    v.override_beta = true;
    v.beta1 = 0.0f;
    v.beta2 = 1.0f;
  } else if (name == "L_attr") {
    v.opts.loss_cls = false;
    v.opts.lambda_override = 0.0f;
    v.override_beta = true;
    v.beta1 = 1.0f;
    v.beta2 = 0.0f;
  } else if (name == "L_cls+L_attr") {
    v.opts.lambda_override = 0.0f;
  } else {
    throw ConfigError("unknown ablation variant '" + name + "'");
  }
  return v;
}

}  // namespace

std::vector<std::string> default_ablation_plan() {
  return {"single-predictor", "two-predictors", "two-predictors+bias", "full",
          "L_cls", "L_attr", "L_cls+L_attr", "all"};
}

std::vector<AblationRow> run_ablation(const Session& session,
                                      const std::vector<std::string>& plan,
                                      const EpochCallback& on_epoch) {
  if (plan.empty()) throw ConfigError("ablation plan is empty");
  std::vector<VariantSpec> specs;
  specs.reserve(plan.size());
  for (const std::string& name : plan) specs.push_back(variant_spec(name));

  std::vector<AblationRow> rows;
  rows.reserve(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) {
    TrainResult trained = train_head(session, specs[i].opts, on_epoch);
    EvalCache cache = build_eval_cache(trained.params, session.test_seen, session.test_unseen,
                                       session.semantic, session.split);
    CombineConfig combine = session.cfg.combine();
    if (specs[i].override_beta) {
      combine.beta_local = specs[i].beta1;
      combine.beta_global = specs[i].beta2;
    }
    const float lambda_eff = specs[i].opts.lambda_override >= 0.0f ? specs[i].opts.lambda_override
                                                                   : session.cfg.lambda;
    AblationRow row;
    row.variant = plan[i];
    row.report = evaluate_cached(cache, session.semantic, session.index, combine, lambda_eff,
                                 session.cfg.seed);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "variant,U,S,H,acc\n";
  char line[256];
  for (const AblationRow& row : rows) {
    const EvalReport& r = row.report;
    std::snprintf(line, sizeof(line), "%s,%.4f,%.4f,%.4f,%.4f\n", row.variant.c_str(),
                  r.gzsl_u * 100.0, r.gzsl_s * 100.0, r.gzsl_h * 100.0, r.czsl_acc * 100.0);
    out += line;
  }
  return out;
}

}  // namespace zsle
