#include "adam.hpp"

#include <cmath>

namespace zsle {

Adam::Adam(std::vector<NamedParam> params, AdamConfig cfg) : cfg_(cfg) {
  for (NamedParam& p : params) {
    Slot s;
    s.param = p;
    s.m.assign(p.tensor->numel(), 0.0f);
    s.v.assign(p.tensor->numel(), 0.0f);
    slots_.push_back(std::move(s));
  }
}

void Adam::step() {
  for (const Slot& s : slots_) {
    if (!s.param.tensor->has_grad())
      throw ValidationError("adam: missing gradient for parameter '" + s.param.name + "'");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(t_));

  for (Slot& s : slots_) {
    Tensor& p = *s.param.tensor;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double g = static_cast<double>(p.grad[i]) +
                       static_cast<double>(cfg_.weight_decay) * static_cast<double>(p.data[i]);
      s.m[i] = static_cast<float>(cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g);
      s.v[i] = static_cast<float>(cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g);
      const double m_hat = s.m[i] / bc1;
      const double v_hat = s.v[i] / bc2;
      p.data[i] = static_cast<float>(p.data[i] - cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps));
    }
    p.clear_grad();
  }
}

}  // namespace zsle
