#include "evaluate.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "common.hpp"

namespace zsle {

namespace {

struct Tally {
  long correct = 0;
  long total = 0;
};

std::map<std::size_t, Tally> tally_rows(const std::vector<std::size_t>& predictions,
                                        const std::vector<std::size_t>& labels) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("predictions and labels differ in length");
  }
  std::map<std::size_t, Tally> tallies;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Tally& t = tallies[labels[i]];
    ++t.total;
    if (predictions[i] == labels[i]) ++t.correct;
  }
  return tallies;
}

double macro_over(const std::map<std::size_t, Tally>& tallies,
                  const std::vector<std::size_t>& class_rows, const SemanticMatrix* semantic) {
  if (class_rows.empty()) throw ValidationError("class set for macro accuracy is empty");
  double sum = 0.0;
  for (std::size_t row : class_rows) {
    auto it = tallies.find(row);
    if (it == tallies.end() || it->second.total == 0) {
      std::string name = semantic ? std::to_string(semantic->class_ids[row]) : std::to_string(row);
      throw ValidationError("class " + name + " has no samples");
    }
    sum += static_cast<double>(it->second.correct) / static_cast<double>(it->second.total);
  }
  return sum / static_cast<double>(class_rows.size());
}

std::size_t row_or_throw(const SemanticMatrix& semantic, std::int64_t label) {
  int row = semantic.row_of(label);
  if (row < 0) {
    throw ValidationError("class " + std::to_string(label) + " is not in the semantic matrix");
  }
  return static_cast<std::size_t>(row);
}

void check_labels_within(const std::vector<SamplePrediction>& preds, const SemanticMatrix& semantic,
                         const ClassIndex& index, bool expect_seen, const char* role) {
  for (const SamplePrediction& p : preds) {
    std::size_t row = row_or_throw(semantic, p.label);
    if (static_cast<bool>(index.is_seen[row]) != expect_seen) {
      throw ValidationError(std::string(role) + " contains class " + std::to_string(p.label) +
                            " outside its split partition");
    }
  }
}

}  // namespace

double per_class_top1(const std::vector<std::size_t>& predictions,
                      const std::vector<std::size_t>& labels,
                      const std::vector<std::size_t>& class_rows) {
  return macro_over(tally_rows(predictions, labels), class_rows, nullptr);
}

double harmonic_mean(double s, double u) {
  if (s < 0.0 || u < 0.0) throw ValidationError("harmonic mean requires non-negative inputs");
  if (s + u == 0.0) return 0.0;
  return 2.0 * s * u / (s + u);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["czsl_acc"] = czsl_acc * 100.0;
  j["gzsl_u"] = gzsl_u * 100.0;
  j["gzsl_s"] = gzsl_s * 100.0;
  j["gzsl_h"] = gzsl_h * 100.0;
  nlohmann::ordered_json pc = nlohmann::ordered_json::object();
  for (const auto& [cls, acc] : per_class) pc[std::to_string(cls)] = acc * 100.0;
  j["per_class"] = pc;
  j["config"] = {{"beta1", beta1}, {"beta2", beta2}, {"gamma", gamma}, {"lambda", lambda},
                 {"seed", seed}};
  return j.dump(2);
}

EvalCache build_eval_cache(HeadParams& params, const FeatureDataset& test_seen,
                           const FeatureDataset& test_unseen, const SemanticMatrix& semantic,
                           const ClassSplit& split) {
  if (test_seen.role != DatasetRole::TestSeen) {
    throw ValidationError("expected a test-seen dataset, got role " +
                          std::string(role_name(test_seen.role)));
  }
  if (test_unseen.role != DatasetRole::TestUnseen) {
    throw ValidationError("expected a test-unseen dataset, got role " +
                          std::string(role_name(test_unseen.role)));
  }
  ClassIndex index = ClassIndex::build(semantic, split);
  EvalCache cache;
  cache.test_seen = predict_all(params, test_seen);
  cache.test_unseen = predict_all(params, test_unseen);
  check_labels_within(cache.test_seen, semantic, index, true, "test-seen set");
  check_labels_within(cache.test_unseen, semantic, index, false, "test-unseen set");
  return cache;
}

EvalReport evaluate_cached(const EvalCache& cache, const SemanticMatrix& semantic,
                           const ClassIndex& index, const CombineConfig& combine, float lambda,
                           std::uint64_t seed) {
  combine.validate();
  EvalReport report;
  report.beta1 = combine.beta_local;
  report.beta2 = combine.beta_global;
  report.gamma = combine.gamma;
  report.lambda = lambda;
  report.seed = seed;

  std::vector<std::size_t> czsl_pred, czsl_label;
  std::vector<std::size_t> gz_unseen_pred, gz_unseen_label;
  for (const SamplePrediction& p : cache.test_unseen) {
    std::size_t label_row = row_or_throw(semantic, p.label);
    czsl_pred.push_back(czsl_predict(p, semantic, index, combine));
    czsl_label.push_back(label_row);
    gz_unseen_pred.push_back(gzsl_predict(p, semantic, index, combine));
    gz_unseen_label.push_back(label_row);
  }
  std::vector<std::size_t> gz_seen_pred, gz_seen_label;
  for (const SamplePrediction& p : cache.test_seen) {
    gz_seen_pred.push_back(gzsl_predict(p, semantic, index, combine));
    gz_seen_label.push_back(row_or_throw(semantic, p.label));
  }

  report.czsl_acc = per_class_top1(czsl_pred, czsl_label, index.unseen_rows);

  auto unseen_tallies = tally_rows(gz_unseen_pred, gz_unseen_label);
  auto seen_tallies = tally_rows(gz_seen_pred, gz_seen_label);
  report.gzsl_u = macro_over(unseen_tallies, index.unseen_rows, &semantic);
  report.gzsl_s = macro_over(seen_tallies, index.seen_rows, &semantic);
  report.gzsl_h = harmonic_mean(report.gzsl_s, report.gzsl_u);

  for (std::size_t row : index.unseen_rows) {
    const Tally& t = unseen_tallies.at(row);
    report.per_class[semantic.class_ids[row]] =
        static_cast<double>(t.correct) / static_cast<double>(t.total);
  }
  for (std::size_t row : index.seen_rows) {
    const Tally& t = seen_tallies.at(row);
    report.per_class[semantic.class_ids[row]] =
        static_cast<double>(t.correct) / static_cast<double>(t.total);
  }
  return report;
}

EvalReport evaluate(HeadParams& params, const FeatureDataset& test_seen,
                    const FeatureDataset& test_unseen, const SemanticMatrix& semantic,
                    const ClassSplit& split, const CombineConfig& combine, float lambda,
                    std::uint64_t seed) {
  EvalCache cache = build_eval_cache(params, test_seen, test_unseen, semantic, split);
  ClassIndex index = ClassIndex::build(semantic, split);
  return evaluate_cached(cache, semantic, index, combine, lambda, seed);
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "beta") return SweepAxis::Beta;
  if (s == "gamma") return SweepAxis::Gamma;
  throw ConfigError("sweep axis must be 'beta' or 'gamma', got '" + s + "'");
}

std::vector<SweepPoint> sweep(const EvalCache& cache, const SemanticMatrix& semantic,
                              const ClassIndex& index, SweepAxis axis,
                              const std::vector<float>& grid, const CombineConfig& fixed,
                              float lambda, std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  std::vector<SweepPoint> points;
  points.reserve(grid.size());
  for (float v : grid) {
    CombineConfig combine = fixed;
    if (axis == SweepAxis::Beta) {
      combine.beta_local = v;
      combine.beta_global = 1.0f - v;
    } else {
      combine.gamma = v;
    }
    SweepPoint pt;
    pt.beta1 = combine.beta_local;
    pt.beta2 = combine.beta_global;
    pt.gamma = combine.gamma;
    pt.report = evaluate_cached(cache, semantic, index, combine, lambda, seed);
    points.push_back(std::move(pt));
  }
  return points;
}

std::vector<float> default_sweep_grid(SweepAxis axis) {
  std::vector<float> grid;
  if (axis == SweepAxis::Beta) {
    for (int i = 0; i <= 10; ++i) grid.push_back(static_cast<float>(i) / 10.0f);
  } else {
    for (int i = 0; i <= 10; ++i) grid.push_back(static_cast<float>(i) / 10.0f);
    grid.push_back(2.0f);
    grid.push_back(5.0f);
  }
  return grid;
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepPoint>& points) {
  std::string out = axis == SweepAxis::Beta ? "beta1,beta2,U,S,H,acc\n" : "gamma,U,S,H,acc\n";
  char line[256];
  for (const SweepPoint& pt : points) {
    const EvalReport& r = pt.report;
    if (axis == SweepAxis::Beta) {
      std::snprintf(line, sizeof(line), "%.4g,%.4g,%.4f,%.4f,%.4f,%.4f\n", pt.beta1, pt.beta2,
                    r.gzsl_u * 100.0, r.gzsl_s * 100.0, r.gzsl_h * 100.0, r.czsl_acc * 100.0);
    } else {
      std::snprintf(line, sizeof(line), "%.4g,%.4f,%.4f,%.4f,%.4f\n", pt.gamma, r.gzsl_u * 100.0,
                    r.gzsl_s * 100.0, r.gzsl_h * 100.0, r.czsl_acc * 100.0);
    }
    out += line;
  }
  return out;
}

}  // namespace zsle
