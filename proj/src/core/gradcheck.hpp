#ifndef ZSLE_GRADCHECK_HPP
#define ZSLE_GRADCHECK_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"

namespace zsle {

struct GradCheckConfig {
  std::size_t regions = 6;       // N
  std::size_t dim = 8;           // D
  std::size_t attributes = 4;    // M
  std::size_t seen_classes = 3;  // C_s
  float lambda = 0.1f;
  double step = 1e-3;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
  AttentionAxis attention_axis = AttentionAxis::Region;
  std::string corrupt_group;  // test hook: perturb this group's analytic grad

  void validate() const;
};

struct GradCheckRow {
  std::string group;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckResult {
  std::vector<GradCheckRow> rows;
  bool pass = false;

  std::string to_json() const;
  std::string to_table() const;
};

// Rebuilds the full training loss on a toy instance in double precision and
// compares analytic gradients against central finite differences, group by
// group. Relative error uses max(1, |analytic|, |numeric|) as denominator.
// A coordinate that misses the tolerance is re-measured at a finer step, so
// step-sized truncation error cannot masquerade as a failing gradient.
GradCheckResult run_gradcheck(const GradCheckConfig& cfg);

}  // namespace zsle

#endif
