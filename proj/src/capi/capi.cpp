#include "zsle/zsle.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "../core/common.hpp"
#include "../core/evaluate.hpp"
#include "../core/gradcheck.hpp"
#include "../core/synth.hpp"
#include "../core/trainer.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename F>
zsle_status guarded(F&& fn) {
  try {
    return fn();
  } catch (const zsle::ConfigError& e) {
    g_last_error = e.what();
    return ZSLE_ERR_CONFIG;
  } catch (const zsle::ValidationError& e) {
    g_last_error = e.what();
    return ZSLE_ERR_CONFIG;
  } catch (const zsle::ShapeError& e) {
    g_last_error = e.what();
    return ZSLE_ERR_CONFIG;
  } catch (const zsle::IoError& e) {
    g_last_error = e.what();
    return ZSLE_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ZSLE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return ZSLE_ERR_INTERNAL;
  }
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(start, comma - start);
    while (!item.empty() && (item.front() == ' ' || item.front() == '\t')) item.erase(0, 1);
    while (!item.empty() && (item.back() == ' ' || item.back() == '\t')) item.pop_back();
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

zsle::HeadParams load_configured_checkpoint(const zsle::RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw zsle::ConfigError("checkpoint path is required");
  zsle::HeadParams params = zsle::read_checkpoint(cfg.checkpoint);
  params.cfg.attention_axis = cfg.attention_axis;
  return params;
}

}  // namespace

struct zsle_session {
  zsle::RunConfig cfg;
};

extern "C" {

const char* zsle_version(void) { return "1.0.0"; }

const char* zsle_last_error(void) { return g_last_error.c_str(); }

void zsle_free(char* ptr) { std::free(ptr); }

zsle_status zsle_session_create(const char* config_json, zsle_session** out_session) {
  return guarded([&]() -> zsle_status {
    if (!out_session) throw zsle::ConfigError("out_session is NULL");
    *out_session = nullptr;
    std::string text = config_json ? config_json : "{}";
    auto session = new zsle_session{zsle::RunConfig::from_json_text(text)};
    *out_session = session;
    return ZSLE_OK;
  });
}

void zsle_session_destroy(zsle_session* session) { delete session; }

zsle_status zsle_train(zsle_session* session, zsle_log_fn log, void* user) {
  return guarded([&]() -> zsle_status {
    if (!session) throw zsle::ConfigError("session is NULL");
    zsle::Session data = zsle::Session::load(session->cfg, true, false);
    zsle::TrainOptions options;
    zsle::EpochCallback cb;
    if (log) {
      cb = [log, user](const zsle::EpochLog& entry) { log(entry.to_json().c_str(), user); };
    }
    zsle::TrainResult result = zsle::train_head(data, options, cb);
    if (!session->cfg.checkpoint.empty()) {
      zsle::write_checkpoint(result.params, session->cfg.checkpoint);
    }
    return ZSLE_OK;
  });
}

zsle_status zsle_evaluate(zsle_session* session, char** out_report_json) {
  return guarded([&]() -> zsle_status {
    if (!session) throw zsle::ConfigError("session is NULL");
    if (!out_report_json) throw zsle::ConfigError("out_report_json is NULL");
    *out_report_json = nullptr;
    zsle::Session data = zsle::Session::load(session->cfg, false, true);
    zsle::HeadParams params = load_configured_checkpoint(session->cfg);
    zsle::EvalReport report =
        zsle::evaluate(params, data.test_seen, data.test_unseen, data.semantic, data.split,
                       session->cfg.combine(), session->cfg.lambda, session->cfg.seed);
    *out_report_json = dup_string(report.to_json());
    return ZSLE_OK;
  });
}

zsle_status zsle_ablate(zsle_session* session, const char* plan, char** out_table_csv) {
  return guarded([&]() -> zsle_status {
    if (!session) throw zsle::ConfigError("session is NULL");
    if (!out_table_csv) throw zsle::ConfigError("out_table_csv is NULL");
    *out_table_csv = nullptr;
    std::vector<std::string> names =
        (plan && *plan) ? split_csv(plan) : zsle::default_ablation_plan();
    zsle::Session data = zsle::Session::load(session->cfg, true, true);
    std::vector<zsle::AblationRow> rows = zsle::run_ablation(data, names);
    *out_table_csv = dup_string(zsle::ablation_csv(rows));
    return ZSLE_OK;
  });
}

zsle_status zsle_sweep(zsle_session* session, const char* axis, const char* grid,
                       char** out_table_csv) {
  return guarded([&]() -> zsle_status {
    if (!session) throw zsle::ConfigError("session is NULL");
    if (!out_table_csv) throw zsle::ConfigError("out_table_csv is NULL");
    *out_table_csv = nullptr;
    zsle::SweepAxis sweep_axis = zsle::sweep_axis_from_string(axis ? axis : "");
    std::vector<float> grid_values;
    if (grid && *grid) {
      for (const std::string& item : split_csv(grid)) {
        try {
          grid_values.push_back(std::stof(item));
        } catch (const std::exception&) {
          throw zsle::ConfigError("bad grid value '" + item + "'");
        }
      }
    } else {
      grid_values = zsle::default_sweep_grid(sweep_axis);
    }
    zsle::Session data = zsle::Session::load(session->cfg, false, true);
    zsle::HeadParams params = load_configured_checkpoint(session->cfg);
    zsle::EvalCache cache = zsle::build_eval_cache(params, data.test_seen, data.test_unseen,
                                                   data.semantic, data.split);
    std::vector<zsle::SweepPoint> points =
        zsle::sweep(cache, data.semantic, data.index, sweep_axis, grid_values,
                    session->cfg.combine(), session->cfg.lambda, session->cfg.seed);
    *out_table_csv = dup_string(zsle::sweep_csv(sweep_axis, points));
    return ZSLE_OK;
  });
}

zsle_status zsle_synth(const char* spec_json, char** out_files_json) {
  return guarded([&]() -> zsle_status {
    if (!out_files_json) throw zsle::ConfigError("out_files_json is NULL");
    *out_files_json = nullptr;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(spec_json ? spec_json : "{}");
    } catch (const nlohmann::json::exception& e) {
      throw zsle::ConfigError(std::string("spec is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw zsle::ConfigError("spec must be a JSON object");

    zsle::SynthSpec spec;
    std::string out_dir;
    try {
      for (const auto& [key, value] : j.items()) {
        if (key == "out_dir") out_dir = value.get<std::string>();
        else if (key == "seen") spec.seen_classes = value.get<std::size_t>();
        else if (key == "unseen") spec.unseen_classes = value.get<std::size_t>();
        else if (key == "samples_per_class") spec.samples_per_class = value.get<std::size_t>();
        else if (key == "attributes") spec.attributes = value.get<std::size_t>();
        else if (key == "regions") spec.regions = value.get<std::size_t>();
        else if (key == "dim") spec.dim = value.get<std::size_t>();
        else if (key == "sigma") spec.sigma = value.get<double>();
        else if (key == "seed") spec.seed = value.get<std::uint64_t>();
        else throw zsle::ConfigError("unknown spec key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw zsle::ConfigError(std::string("bad spec value: ") + e.what());
    }
    if (out_dir.empty()) throw zsle::ConfigError("out_dir is required");
    spec.validate();

    zsle::SynthResult result = zsle::generate_synthetic(spec);

    const std::string matrix = out_dir + "/semantic.bin";
    const std::string manifest = out_dir + "/semantic.tsv";
    const std::string split = out_dir + "/split.json";
    const std::string train = out_dir + "/train.dfz";
    const std::string test_seen = out_dir + "/test_seen.dfz";
    const std::string test_unseen = out_dir + "/test_unseen.dfz";
    const std::vector<std::string> paths = {matrix, manifest, split, train, test_seen, test_unseen};

    try {
      zsle::write_semantic_matrix(result.semantic, matrix, manifest);
      zsle::write_split(result.split, split);
      zsle::write_feature_file(result.train, train);
      zsle::write_feature_file(result.test_seen, test_seen);
      zsle::write_feature_file(result.test_unseen, test_unseen);
    } catch (...) {
      for (const std::string& p : paths) std::remove(p.c_str());
      throw;
    }

    nlohmann::ordered_json out;
    out["files"] = paths;
    *out_files_json = dup_string(out.dump(2));
    return ZSLE_OK;
  });
}

zsle_status zsle_gradcheck(const char* config_json, char** out_report_json) {
  return guarded([&]() -> zsle_status {
    if (!out_report_json) throw zsle::ConfigError("out_report_json is NULL");
    *out_report_json = nullptr;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(config_json ? config_json : "{}");
    } catch (const nlohmann::json::exception& e) {
      throw zsle::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw zsle::ConfigError("config must be a JSON object");

    zsle::GradCheckConfig cfg;
    try {
      for (const auto& [key, value] : j.items()) {
        if (key == "regions") cfg.regions = value.get<std::size_t>();
        else if (key == "dim") cfg.dim = value.get<std::size_t>();
        else if (key == "attributes") cfg.attributes = value.get<std::size_t>();
        else if (key == "seen_classes") cfg.seen_classes = value.get<std::size_t>();
        else if (key == "lambda") cfg.lambda = value.get<float>();
        else if (key == "step") cfg.step = value.get<double>();
        else if (key == "tolerance") cfg.tolerance = value.get<double>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "attention_axis")
          cfg.attention_axis = zsle::attention_axis_from_string(value.get<std::string>());
        else if (key == "corrupt_group") cfg.corrupt_group = value.get<std::string>();
        else throw zsle::ConfigError("unknown config key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw zsle::ConfigError(std::string("bad config value: ") + e.what());
    }

    zsle::GradCheckResult result = zsle::run_gradcheck(cfg);
    *out_report_json = dup_string(result.to_json());
    if (!result.pass) {
      g_last_error = "gradient check failed";
      return ZSLE_ERR_CHECK;
    }
    return ZSLE_OK;
  });
}

}  // extern "C"
