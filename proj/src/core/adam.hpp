#ifndef ZSLE_ADAM_HPP
#define ZSLE_ADAM_HPP

#include <string>
#include <vector>

#include "tensor.hpp"

namespace zsle {

// A named parameter group: the slot every optimizer update and gradient
// check addresses tensors through.
struct NamedParam {
  std::string name;
  Tensor* tensor = nullptr;
};

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  float weight_decay = 0.0f;  // classic L2: added to the gradient as wd * theta
};

// Adam with bias correction. step() consumes the gradients populated by a
// backward pass and clears them; calling step() again without a fresh
// backward raises an error naming the parameter whose gradient is missing.
class Adam {
 public:
  Adam(std::vector<NamedParam> params, AdamConfig cfg);

  void step();
  std::uint64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Slot {
    NamedParam param;
    std::vector<float> m;
    std::vector<float> v;
  };
  std::vector<Slot> slots_;
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
};

}  // namespace zsle

#endif
