#ifndef ZSLE_TRAINER_HPP
#define ZSLE_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "data.hpp"
#include "evaluate.hpp"
#include "model.hpp"

namespace zsle {

struct RunConfig {
  std::string features_train;
  std::string features_test_seen;
  std::string features_test_unseen;
  std::string semantic;  // matrix path; manifest sits next to it as .tsv
  std::string split;
  std::string checkpoint;
  std::string out;

  float lambda = 0.1f;
  float beta1 = 0.5f;
  float beta2 = 0.5f;
  float gamma = 0.0f;
  std::size_t epochs = 80;
  std::size_t batch = 16;
  float lr = 0.001f;
  float wd = 0.00001f;
  std::size_t hidden1 = 0;  // 0 -> derived from D
  std::size_t hidden2 = 0;
  std::uint64_t seed = 1;
  AttentionAxis attention_axis = AttentionAxis::Region;
  bool normalize_input = false;

  void validate() const;

  // Parses a JSON object whose keys mirror the CLI flags. Unknown keys are
  // config errors. "beta_preset" ("fine-grained" | "coarse-grained") applies
  // before explicit beta1/beta2 keys.
  static RunConfig from_json_text(const std::string& text);

  std::string manifest_path() const;
  CombineConfig combine() const;
};

// Named beta presets: fine-grained (0.5, 0.5), coarse-grained (0.0, 1.0).
void apply_beta_preset(RunConfig& cfg, const std::string& preset);

// Loaded inputs for one command. Datasets are loaded only when requested.
struct Session {
  RunConfig cfg;
  SemanticMatrix semantic;
  ClassSplit split;
  ClassIndex index;
  FeatureDataset train;
  FeatureDataset test_seen;
  FeatureDataset test_unseen;

  static Session load(const RunConfig& cfg, bool need_train, bool need_test);
};

// Structural switches the ablation harness varies; defaults are the full
// model trained on all loss terms.
struct TrainOptions {
  bool share_predictors = false;
  bool use_offset_mlp = true;
  bool loss_attr = true;
  bool loss_cls = true;
  float lambda_override = -1.0f;  // < 0: use the run config's lambda
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  std::size_t steps = 0;  // optimizer steps this epoch
  double attr = 0.0, cls = 0.0, cos = 0.0, total = 0.0;  // epoch means

  std::string to_json() const;
};

using EpochCallback = std::function<void(const EpochLog&)>;

struct TrainResult {
  HeadParams params;
  std::vector<EpochLog> log;
};

TrainResult train_head(const Session& session, const TrainOptions& options,
                       const EpochCallback& on_epoch);

struct AblationRow {
  std::string variant;
  EvalReport report;
};

// Module variants: single-predictor, two-predictors, two-predictors+bias,
// full. Loss variants: L_cls, L_attr, L_cls+L_attr, all. Each row retrains
// from the same seed on the same data.
std::vector<std::string> default_ablation_plan();

std::vector<AblationRow> run_ablation(const Session& session,
                                      const std::vector<std::string>& plan,
                                      const EpochCallback& on_epoch = nullptr);

std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace zsle

#endif
