#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zsle/zsle.h"

namespace {

int status_to_exit(zsle_status status) {
  switch (status) {
    case ZSLE_OK: return 0;
    case ZSLE_ERR_CHECK: return 1;
    case ZSLE_ERR_CONFIG: return 2;
    case ZSLE_ERR_IO: return 3;
    default: return 1;
  }
}

int fail(zsle_status status) {
  std::fprintf(stderr, "error: %s\n", zsle_last_error());
  return status_to_exit(status);
}

// Writes to stdout when path is empty, to the file otherwise. Returns the
// process exit code.
int emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return 0;
  }
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f || std::fwrite(text.data(), 1, text.size(), f) != text.size() || std::fclose(f) != 0) {
    if (f) std::fclose(f);
    std::fprintf(stderr, "error: cannot write '%s'\n", path.c_str());
    return 3;
  }
  return 0;
}

// Registers flags on a subcommand and records which were provided, so the
// merged config contains file values overridden only by explicit flags.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App* cmd) : cmd_(cmd) {}

  template <typename T>
  void add(const char* flag, const char* key, const char* desc) {
    auto storage = std::make_shared<T>();
    CLI::Option* opt = cmd_->add_option(flag, *storage, desc);
    appliers_.push_back([opt, storage, key](nlohmann::json& j) {
      if (opt->count() > 0) j[key] = *storage;
    });
  }

  void add_flag(const char* flag, const char* key, const char* desc) {
    auto storage = std::make_shared<bool>(false);
    CLI::Option* opt = cmd_->add_flag(flag, *storage, desc);
    appliers_.push_back([opt, storage, key](nlohmann::json& j) {
      if (opt->count() > 0) j[key] = *storage;
    });
  }

  void apply(nlohmann::json& j) const {
    for (const auto& apply_one : appliers_) apply_one(j);
  }

 private:
  CLI::App* cmd_;
  std::vector<std::function<void(nlohmann::json&)>> appliers_;
};

struct ConfigBuilder {
  std::string config_path;
  ConfigFlags flags;

  explicit ConfigBuilder(CLI::App* cmd) : flags(cmd) {
    cmd->add_option("--config", config_path, "JSON config file; explicit flags override it");
  }

  // 0 on success with json filled; otherwise the exit code.
  int build(std::string& json_out) const {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
      std::FILE* f = std::fopen(config_path.c_str(), "rb");
      if (!f) {
        std::fprintf(stderr, "error: cannot open config '%s'\n", config_path.c_str());
        return 3;
      }
      std::string text;
      char buf[4096];
      std::size_t got;
      while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, got);
      std::fclose(f);
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: config '%s' is not valid JSON: %s\n", config_path.c_str(),
                     e.what());
        return 2;
      }
      if (!j.is_object()) {
        std::fprintf(stderr, "error: config '%s' must hold a JSON object\n", config_path.c_str());
        return 2;
      }
    }
    flags.apply(j);
    json_out = j.dump();
    return 0;
  }
};

void add_data_flags(ConfigFlags& flags) {
  flags.add<std::string>("--features-train", "features_train", "training feature file");
  flags.add<std::string>("--features-test-seen", "features_test_seen", "seen-class test features");
  flags.add<std::string>("--features-test-unseen", "features_test_unseen",
                         "unseen-class test features");
  flags.add<std::string>("--semantic", "semantic", "semantic matrix file (manifest beside as .tsv)");
  flags.add<std::string>("--split", "split", "seen/unseen split JSON");
  flags.add<std::string>("--checkpoint", "checkpoint", "model checkpoint path");
}

void add_hyper_flags(ConfigFlags& flags) {
  flags.add<double>("--lambda", "lambda", "cosine-loss weight");
  flags.add<double>("--beta1", "beta1", "weight on the local prediction");
  flags.add<double>("--beta2", "beta2", "weight on the global prediction");
  flags.add<std::string>("--beta-preset", "beta_preset",
                         "beta preset: fine-grained (0.5,0.5) or coarse-grained (0,1)");
  flags.add<double>("--gamma", "gamma", "calibration offset on seen-class scores");
  flags.add<std::uint64_t>("--epochs", "epochs", "training epochs");
  flags.add<std::uint64_t>("--batch", "batch", "minibatch size");
  flags.add<double>("--lr", "lr", "learning rate");
  flags.add<double>("--wd", "wd", "weight decay");
  flags.add<std::uint64_t>("--hidden1", "hidden1", "offset-MLP first hidden width (0 = auto)");
  flags.add<std::uint64_t>("--hidden2", "hidden2", "offset-MLP second hidden width (0 = auto)");
  flags.add<std::uint64_t>("--seed", "seed", "run seed");
  flags.add<std::string>("--attention-axis", "attention_axis",
                         "softmax axis for attention: region or attribute");
  flags.add_flag("--normalize-input", "normalize_input", "L2-normalize feature rows at load");
}

struct SessionHandle {
  zsle_session* ptr = nullptr;
  ~SessionHandle() { zsle_session_destroy(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { zsle_free(ptr); }
};

int run_train(const ConfigBuilder& builder) {
  std::string config;
  if (int rc = builder.build(config); rc != 0) return rc;
  SessionHandle session;
  if (zsle_status st = zsle_session_create(config.c_str(), &session.ptr); st != ZSLE_OK) {
    return fail(st);
  }
  auto print_line = [](const char* line, void*) { std::printf("%s\n", line); };
  if (zsle_status st = zsle_train(session.ptr, print_line, nullptr); st != ZSLE_OK) {
    return fail(st);
  }
  return 0;
}

int run_eval(const ConfigBuilder& builder, const std::string& out_path) {
  std::string config;
  if (int rc = builder.build(config); rc != 0) return rc;
  SessionHandle session;
  if (zsle_status st = zsle_session_create(config.c_str(), &session.ptr); st != ZSLE_OK) {
    return fail(st);
  }
  OwnedString report;
  if (zsle_status st = zsle_evaluate(session.ptr, &report.ptr); st != ZSLE_OK) return fail(st);
  return emit(std::string(report.ptr) + "\n", out_path);
}

int run_ablate(const ConfigBuilder& builder, const std::string& variants,
               const std::string& out_path) {
  std::string config;
  if (int rc = builder.build(config); rc != 0) return rc;
  SessionHandle session;
  if (zsle_status st = zsle_session_create(config.c_str(), &session.ptr); st != ZSLE_OK) {
    return fail(st);
  }
  OwnedString table;
  if (zsle_status st = zsle_ablate(session.ptr, variants.empty() ? nullptr : variants.c_str(),
                                   &table.ptr);
      st != ZSLE_OK) {
    return fail(st);
  }
  return emit(table.ptr, out_path);
}

int run_sweep(const ConfigBuilder& builder, const std::string& axis, const std::string& grid,
              const std::string& out_path) {
  std::string config;
  if (int rc = builder.build(config); rc != 0) return rc;
  SessionHandle session;
  if (zsle_status st = zsle_session_create(config.c_str(), &session.ptr); st != ZSLE_OK) {
    return fail(st);
  }
  OwnedString table;
  if (zsle_status st = zsle_sweep(session.ptr, axis.c_str(), grid.empty() ? nullptr : grid.c_str(),
                                  &table.ptr);
      st != ZSLE_OK) {
    return fail(st);
  }
  return emit(table.ptr, out_path);
}

int run_synth(const nlohmann::json& spec) {
  OwnedString files;
  if (zsle_status st = zsle_synth(spec.dump().c_str(), &files.ptr); st != ZSLE_OK) return fail(st);
  auto parsed = nlohmann::json::parse(files.ptr);
  for (const auto& path : parsed.at("files")) {
    std::printf("%s\n", path.get<std::string>().c_str());
  }
  return 0;
}

int run_gradcheck(const nlohmann::json& cfg, const std::string& out_path) {
  OwnedString report;
  zsle_status st = zsle_gradcheck(cfg.dump().c_str(), &report.ptr);
  if (st != ZSLE_OK && st != ZSLE_ERR_CHECK) return fail(st);
  if (!report.ptr) return fail(st);

  auto parsed = nlohmann::json::parse(report.ptr);
  std::string text = "group            max_rel_err   status\n";
  char line[128];
  for (const auto& row : parsed.at("groups")) {
    std::snprintf(line, sizeof(line), "%-16s %-13.3e %s\n",
                  row.at("group").get<std::string>().c_str(), row.at("max_rel_err").get<double>(),
                  row.at("pass").get<bool>() ? "pass" : "FAIL");
    text += line;
  }
  text += parsed.at("pass").get<bool>() ? "all groups pass\n" : "gradient check FAILED\n";
  if (int rc = emit(text, out_path); rc != 0) return rc;
  return status_to_exit(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot-learning head over precomputed visual features"};
  app.require_subcommand(1);
  int exit_code = 0;

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the head and write a checkpoint");
  auto train_builder = std::make_shared<ConfigBuilder>(train_cmd);
  add_data_flags(train_builder->flags);
  add_hyper_flags(train_builder->flags);
  train_cmd->callback([&exit_code, train_builder]() { exit_code = run_train(*train_builder); });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint (CZSL + GZSL report)");
  auto eval_builder = std::make_shared<ConfigBuilder>(eval_cmd);
  add_data_flags(eval_builder->flags);
  add_hyper_flags(eval_builder->flags);
  auto eval_out = std::make_shared<std::string>();
  eval_cmd->add_option("--out", *eval_out, "write the report here instead of stdout");
  eval_cmd->callback(
      [&exit_code, eval_builder, eval_out]() { exit_code = run_eval(*eval_builder, *eval_out); });

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Retrain and evaluate model/loss variants");
  auto ablate_builder = std::make_shared<ConfigBuilder>(ablate_cmd);
  add_data_flags(ablate_builder->flags);
  add_hyper_flags(ablate_builder->flags);
  auto ablate_variants = std::make_shared<std::string>();
  auto ablate_out = std::make_shared<std::string>();
  ablate_cmd->add_option("--variants", *ablate_variants,
                         "comma-separated variant names (default: all eight)");
  ablate_cmd->add_option("--out", *ablate_out, "write the CSV here instead of stdout");
  ablate_cmd->callback([&exit_code, ablate_builder, ablate_variants, ablate_out]() {
    exit_code = run_ablate(*ablate_builder, *ablate_variants, *ablate_out);
  });

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep beta or gamma over a grid");
  auto sweep_builder = std::make_shared<ConfigBuilder>(sweep_cmd);
  add_data_flags(sweep_builder->flags);
  add_hyper_flags(sweep_builder->flags);
  auto sweep_axis = std::make_shared<std::string>();
  auto sweep_grid = std::make_shared<std::string>();
  auto sweep_out = std::make_shared<std::string>();
  sweep_cmd->add_option("--axis", *sweep_axis, "sweep axis: beta or gamma")->required();
  sweep_cmd->add_option("--grid", *sweep_grid, "comma-separated grid values (default grid if omitted)");
  sweep_cmd->add_option("--out", *sweep_out, "write the CSV here instead of stdout");
  sweep_cmd->callback([&exit_code, sweep_builder, sweep_axis, sweep_grid, sweep_out]() {
    exit_code = run_sweep(*sweep_builder, *sweep_axis, *sweep_grid, *sweep_out);
  });

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  auto synth_flags = std::make_shared<ConfigFlags>(synth_cmd);
  auto synth_dir = std::make_shared<std::string>();
  synth_cmd->add_option("--out-dir", *synth_dir, "output directory")->required();
  synth_flags->add<std::uint64_t>("--seen", "seen", "seen class count");
  synth_flags->add<std::uint64_t>("--unseen", "unseen", "unseen class count");
  synth_flags->add<std::uint64_t>("--samples-per-class", "samples_per_class",
                                  "samples per class per role");
  synth_flags->add<std::uint64_t>("--attributes", "attributes", "attribute count M");
  synth_flags->add<std::uint64_t>("--regions", "regions", "region count N");
  synth_flags->add<std::uint64_t>("--dim", "dim", "feature dimension D");
  synth_flags->add<double>("--sigma", "sigma", "feature noise level");
  synth_flags->add<std::uint64_t>("--seed", "seed", "generator seed");
  synth_cmd->callback([&exit_code, synth_flags, synth_dir]() {
    nlohmann::json spec = nlohmann::json::object();
    synth_flags->apply(spec);
    spec["out_dir"] = *synth_dir;
    exit_code = run_synth(spec);
  });

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck",
                                      "Compare analytic gradients with finite differences");
  auto grad_flags = std::make_shared<ConfigFlags>(grad_cmd);
  auto grad_out = std::make_shared<std::string>();
  grad_flags->add<std::uint64_t>("--regions", "regions", "region count N");
  grad_flags->add<std::uint64_t>("--dim", "dim", "feature dimension D");
  grad_flags->add<std::uint64_t>("--attributes", "attributes", "attribute count M");
  grad_flags->add<std::uint64_t>("--seen-classes", "seen_classes", "seen class count");
  grad_flags->add<double>("--lambda", "lambda", "cosine-loss weight");
  grad_flags->add<double>("--step", "step", "central-difference step");
  grad_flags->add<double>("--tol", "tolerance", "max relative error to pass");
  grad_flags->add<std::uint64_t>("--seed", "seed", "instance seed");
  grad_flags->add<std::string>("--attention-axis", "attention_axis",
                               "softmax axis: region or attribute");
  grad_flags->add<std::string>("--corrupt-group", "corrupt_group",
                               "test hook: corrupt this group's analytic gradient");
  grad_cmd->add_option("--out", *grad_out, "write the table here instead of stdout");
  grad_cmd->callback([&exit_code, grad_flags, grad_out]() {
    nlohmann::json cfg = nlohmann::json::object();
    grad_flags->apply(cfg);
    exit_code = run_gradcheck(cfg, *grad_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return exit_code;
}
