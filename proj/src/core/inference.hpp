#ifndef ZSLE_INFERENCE_HPP
#define ZSLE_INFERENCE_HPP

#include <cstddef>
#include <vector>

#include "data.hpp"
#include "model.hpp"
#include "tensor.hpp"

namespace zsle {

struct CombineConfig {
  float beta_local = 0.5f;
  float beta_global = 0.5f;
  float gamma = 0.0f;  // subtracted from seen-class scores at GZSL time

  void validate() const;
};

// Attribute predictions for one sample, cached so score combination and
// calibration sweeps can reuse a single forward pass.
struct SamplePrediction {
  std::vector<float> pred_local;   // M
  std::vector<float> pred_global;  // M
  std::int64_t label = 0;
};

// Runs the head forward (no gradients) over every record.
std::vector<SamplePrediction> predict_all(HeadParams& params, const FeatureDataset& data);

// score[c] = beta_local * <pred_local, a_c> + beta_global * <pred_global, a_c>
std::vector<float> class_scores(const SamplePrediction& pred, const SemanticMatrix& semantic,
                                const CombineConfig& combine);

// Argmax over the unseen rows only. Ties resolve to the lowest row index.
std::size_t czsl_predict(const SamplePrediction& pred, const SemanticMatrix& semantic,
                         const ClassIndex& index, const CombineConfig& combine);

// Argmax over all rows with gamma subtracted from seen-class scores.
std::size_t gzsl_predict(const SamplePrediction& pred, const SemanticMatrix& semantic,
                         const ClassIndex& index, const CombineConfig& combine);

}  // namespace zsle

#endif
