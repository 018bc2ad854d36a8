#ifndef ZSLE_SYNTH_HPP
#define ZSLE_SYNTH_HPP

#include <cstdint>

#include "data.hpp"

namespace zsle {

struct SynthSpec {
  std::size_t seen_classes = 10;
  std::size_t unseen_classes = 5;
  std::size_t samples_per_class = 30;
  std::size_t attributes = 20;  // M
  std::size_t regions = 9;      // N
  std::size_t dim = 32;         // D
  double sigma = 0.05;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthResult {
  SemanticMatrix semantic;
  ClassSplit split;
  FeatureDataset train;
  FeatureDataset test_seen;
  FeatureDataset test_unseen;
};

// Deterministic synthetic benchmark. M orthonormal attribute prototypes are
// drawn in R^D; each class activates a random attribute subset with
// likelihoods in (0,1); each sample's region features are noisy mixtures of
// the active prototypes with one emphasized attribute per region; the global
// feature is the mean of the regions. At sigma=0 the prototype coefficients
// are linearly recoverable, so a least-squares decoder separates the train
// classes exactly.
SynthResult generate_synthetic(const SynthSpec& spec);

}  // namespace zsle

#endif
