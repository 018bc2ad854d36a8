#include "inference.hpp"

#include <cmath>

#include "common.hpp"
#include "tape.hpp"

namespace zsle {

void CombineConfig::validate() const {
  if (beta_local < 0.0f || beta_global < 0.0f) {
    throw ConfigError("combination weights must be non-negative");
  }
  if (beta_local == 0.0f && beta_global == 0.0f) {
    throw ConfigError("at least one combination weight must be positive");
  }
  if (gamma < 0.0f) {
    throw ConfigError("calibration offset must be non-negative");
  }
}

std::vector<SamplePrediction> predict_all(HeadParams& params, const FeatureDataset& data) {
  std::vector<SamplePrediction> out;
  out.reserve(data.records.size());
  for (const FeatureRecord& rec : data.records) {
    TapeT<float> tape;
    HeadVarsT<float> hv = bind_params(tape, params, false);
    Tensor global = make_matrix<float>(1, rec.global_vec.size(), false);
    global.data = rec.global_vec;
    HeadForwardT<float> f = head_forward(tape, hv, params.cfg, rec.local, global);
    SamplePrediction pred;
    pred.pred_local = tape.value(f.pred_local);
    pred.pred_global = tape.value(f.pred_global);
    pred.label = rec.label;
    out.push_back(std::move(pred));
  }
  return out;
}

std::vector<float> class_scores(const SamplePrediction& pred, const SemanticMatrix& semantic,
                                const CombineConfig& combine) {
  const std::size_t c = semantic.values.rows();
  const std::size_t m = semantic.values.cols();
  if (pred.pred_local.size() != m || pred.pred_global.size() != m) {
    throw ShapeError("prediction length does not match the semantic matrix");
  }
  std::vector<float> scores(c);
  for (std::size_t i = 0; i < c; ++i) {
    double local = 0.0, global = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double a = semantic.values.at(i, j);
      local += static_cast<double>(pred.pred_local[j]) * a;
      global += static_cast<double>(pred.pred_global[j]) * a;
    }
    scores[i] = static_cast<float>(combine.beta_local * local + combine.beta_global * global);
  }
  return scores;
}

std::size_t czsl_predict(const SamplePrediction& pred, const SemanticMatrix& semantic,
                         const ClassIndex& index, const CombineConfig& combine) {
  combine.validate();
  if (index.unseen_rows.empty()) {
    throw ValidationError("no unseen classes available for prediction");
  }
  std::vector<float> scores = class_scores(pred, semantic, combine);
  std::size_t best = index.unseen_rows.front();
  for (std::size_t row : index.unseen_rows) {
    if (scores[row] > scores[best]) best = row;
  }
  return best;
}

std::size_t gzsl_predict(const SamplePrediction& pred, const SemanticMatrix& semantic,
                         const ClassIndex& index, const CombineConfig& combine) {
  combine.validate();
  std::vector<float> scores = class_scores(pred, semantic, combine);
  if (scores.empty()) {
    throw ValidationError("semantic matrix has no classes");
  }
  for (std::size_t row = 0; row < scores.size(); ++row) {
    if (index.is_seen[row]) scores[row] -= combine.gamma;
  }
  std::size_t best = 0;
  for (std::size_t row = 1; row < scores.size(); ++row) {
    if (scores[row] > scores[best]) best = row;
  }
  return best;
}

}  // namespace zsle
