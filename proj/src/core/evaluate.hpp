#ifndef ZSLE_EVALUATE_HPP
#define ZSLE_EVALUATE_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "data.hpp"
#include "inference.hpp"
#include "model.hpp"

namespace zsle {

// Macro average: mean over the given classes of per-class accuracy.
// predictions/labels are semantic-matrix row indices, element-aligned.
// Every class row listed must have at least one sample.
double per_class_top1(const std::vector<std::size_t>& predictions,
                      const std::vector<std::size_t>& labels,
                      const std::vector<std::size_t>& class_rows);

// 2SU/(S+U); 0 when both are 0. Works on fractions or percentages alike.
double harmonic_mean(double s, double u);

// All accuracies are fractions in [0,1]; serialization multiplies by 100.
struct EvalReport {
  double czsl_acc = 0.0;
  double gzsl_u = 0.0;
  double gzsl_s = 0.0;
  double gzsl_h = 0.0;
  std::map<std::int64_t, double> per_class;  // GZSL accuracy per test class
  float beta1 = 0.5f, beta2 = 0.5f, gamma = 0.0f, lambda = 0.1f;
  std::uint64_t seed = 0;

  std::string to_json() const;
};

// Cached forward passes over both test sets, reusable across beta/gamma
// settings so sweeps pay for inference once.
struct EvalCache {
  std::vector<SamplePrediction> test_seen;
  std::vector<SamplePrediction> test_unseen;
};

EvalCache build_eval_cache(HeadParams& params, const FeatureDataset& test_seen,
                           const FeatureDataset& test_unseen, const SemanticMatrix& semantic,
                           const ClassSplit& split);

EvalReport evaluate_cached(const EvalCache& cache, const SemanticMatrix& semantic,
                           const ClassIndex& index, const CombineConfig& combine, float lambda,
                           std::uint64_t seed);

EvalReport evaluate(HeadParams& params, const FeatureDataset& test_seen,
                    const FeatureDataset& test_unseen, const SemanticMatrix& semantic,
                    const ClassSplit& split, const CombineConfig& combine, float lambda,
                    std::uint64_t seed);

enum class SweepAxis { Beta, Gamma };

SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepPoint {
  float beta1 = 0.0f, beta2 = 0.0f, gamma = 0.0f;
  EvalReport report;
};

// Beta axis: grid values are beta1, beta2 = 1 - beta1, gamma fixed.
// Gamma axis: grid values are gamma, betas fixed.
std::vector<SweepPoint> sweep(const EvalCache& cache, const SemanticMatrix& semantic,
                              const ClassIndex& index, SweepAxis axis,
                              const std::vector<float>& grid, const CombineConfig& fixed,
                              float lambda, std::uint64_t seed);

std::vector<float> default_sweep_grid(SweepAxis axis);

std::string sweep_csv(SweepAxis axis, const std::vector<SweepPoint>& points);

}  // namespace zsle

#endif
