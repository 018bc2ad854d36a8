#ifndef ZSLE_TENSOR_HPP
#define ZSLE_TENSOR_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "common.hpp"

namespace zsle {

// Dense row-major tensor. Values are stored at scalar precision S (float in
// production paths, double in the gradient-check harness). The grad buffer is
// empty unless a backward pass has populated it; when present it always has
// the same element count as data.
template <typename S>
struct TensorT {
  std::vector<std::size_t> shape;
  std::vector<S> data;
  bool requires_grad = false;
  std::vector<S> grad;

  TensorT() = default;
  TensorT(std::vector<std::size_t> sh, bool track = false)
      : shape(std::move(sh)), requires_grad(track) {
    data.assign(numel_of(shape), S(0));
  }

  static std::size_t numel_of(const std::vector<std::size_t>& sh) {
    std::size_t n = 1;
    for (std::size_t d : sh) n *= d;
    return n;
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  S& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  S at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool has_grad() const { return !grad.empty(); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), S(0));
  }
  void clear_grad() { grad.clear(); }

  template <typename T>
  TensorT<T> cast() const {
    TensorT<T> out;
    out.shape = shape;
    out.requires_grad = requires_grad;
    out.data.reserve(data.size());
    for (S v : data) out.data.push_back(static_cast<T>(v));
    return out;
  }
};

using Tensor = TensorT<float>;

template <typename S>
std::string shape_str(const TensorT<S>& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(t.shape[i]);
  }
  return s + ")";
}

// 2-D constructors used throughout the model code.
template <typename S>
TensorT<S> make_matrix(std::size_t r, std::size_t c, bool track = false) {
  return TensorT<S>({r, c}, track);
}

template <typename S>
TensorT<S> identity_matrix(std::size_t n) {
  TensorT<S> t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = S(1);
  return t;
}

// Fan-in-scaled uniform init, U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
template <typename S>
void init_fan_in(TensorT<S>& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (S& v : t.data) v = static_cast<S>(rng.uniform(-bound, bound));
}

}  // namespace zsle

#endif
