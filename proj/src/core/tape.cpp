#include "tape.hpp"

#include <algorithm>
#include <cmath>

namespace zsle {

namespace {

template <typename S>
std::string dims(const std::vector<std::size_t>& sh) {
  std::string s = "(";
  for (std::size_t i = 0; i < sh.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(sh[i]);
  }
  return s + ")";
}

}  // namespace

template <typename S>
typename TapeT<S>::Var TapeT<S>::push(Node n) {
  if (n.requires_grad) n.grad.assign(n.value.size(), S(0));
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::input(const TensorT<S>& t) {
  Node n;
  n.shape = t.shape;
  n.value = t.data;
  n.requires_grad = false;
  return push(std::move(n));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::param(TensorT<S>& t) {
  Node n;
  n.shape = t.shape;
  n.value = t.data;
  n.requires_grad = true;
  n.bound = &t;
  n.back = [](TapeT&, Node& self) {
    self.bound->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) self.bound->grad[i] += self.grad[i];
  };
  return push(std::move(n));
}

template <typename S>
double TapeT<S>::scalar(Var v) const {
  const Node& n = nodes_[v.idx];
  if (n.value.size() != 1)
    throw ShapeError("scalar() on tensor of shape " + dims<S>(n.shape));
  return static_cast<double>(n.value[0]);
}

template <typename S>
void TapeT<S>::require_same_shape(Var a, Var b, const char* op) const {
  if (nodes_[a.idx].shape != nodes_[b.idx].shape)
    throw ShapeError(std::string(op) + ": shape mismatch " + dims<S>(nodes_[a.idx].shape) +
                     " vs " + dims<S>(nodes_[b.idx].shape));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::matmul(Var av, Var bv) {
  const Node& a = nodes_[av.idx];
  const Node& b = nodes_[bv.idx];
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0])
    throw ShapeError("matmul: incompatible shapes " + dims<S>(a.shape) + " vs " + dims<S>(b.shape));
  const std::size_t R = a.shape[0], K = a.shape[1], C = b.shape[1];

  Node out;
  out.shape = {R, C};
  out.value.resize(R * C);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k)
        acc += static_cast<double>(a.value[r * K + k]) * static_cast<double>(b.value[k * C + c]);
      out.value[r * C + c] = static_cast<S>(acc);
    }
  }
  out.requires_grad = a.requires_grad || b.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx, bi = bv.idx;
    out.back = [ai, bi, R, K, C](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      Node& b = t.nodes_[bi];
      if (a.requires_grad) {
        for (std::size_t r = 0; r < R; ++r)
          for (std::size_t k = 0; k < K; ++k) {
            double acc = 0.0;
            for (std::size_t c = 0; c < C; ++c)
              acc += static_cast<double>(self.grad[r * C + c]) * static_cast<double>(b.value[k * C + c]);
            a.grad[r * K + k] += static_cast<S>(acc);
          }
      }
      if (b.requires_grad) {
        for (std::size_t k = 0; k < K; ++k)
          for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < R; ++r)
              acc += static_cast<double>(a.value[r * K + k]) * static_cast<double>(self.grad[r * C + c]);
            b.grad[k * C + c] += static_cast<S>(acc);
          }
      }
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::transpose(Var av) {
  const Node& a = nodes_[av.idx];
  if (a.shape.size() != 2) throw ShapeError("transpose: expected rank-2, got " + dims<S>(a.shape));
  const std::size_t R = a.shape[0], C = a.shape[1];

  Node out;
  out.shape = {C, R};
  out.value.resize(R * C);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out.value[c * R + r] = a.value[r * C + c];
  out.requires_grad = a.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx;
    out.back = [ai, R, C](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) a.grad[r * C + c] += self.grad[c * R + r];
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::add(Var av, Var bv) {
  require_same_shape(av, bv, "add");
  const Node& a = nodes_[av.idx];
  const Node& b = nodes_[bv.idx];
  Node out;
  out.shape = a.shape;
  out.value.resize(a.value.size());
  for (std::size_t i = 0; i < out.value.size(); ++i) out.value[i] = a.value[i] + b.value[i];
  out.requires_grad = a.requires_grad || b.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx, bi = bv.idx;
    out.back = [ai, bi](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      Node& b = t.nodes_[bi];
      if (a.requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) a.grad[i] += self.grad[i];
      if (b.requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) b.grad[i] += self.grad[i];
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::sub(Var av, Var bv) {
  require_same_shape(av, bv, "sub");
  const Node& a = nodes_[av.idx];
  const Node& b = nodes_[bv.idx];
  Node out;
  out.shape = a.shape;
  out.value.resize(a.value.size());
  for (std::size_t i = 0; i < out.value.size(); ++i) out.value[i] = a.value[i] - b.value[i];
  out.requires_grad = a.requires_grad || b.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx, bi = bv.idx;
    out.back = [ai, bi](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      Node& b = t.nodes_[bi];
      if (a.requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) a.grad[i] += self.grad[i];
      if (b.requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) b.grad[i] -= self.grad[i];
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::mul(Var av, Var bv) {
  require_same_shape(av, bv, "mul");
  const Node& a = nodes_[av.idx];
  const Node& b = nodes_[bv.idx];
  Node out;
  out.shape = a.shape;
  out.value.resize(a.value.size());
  for (std::size_t i = 0; i < out.value.size(); ++i) out.value[i] = a.value[i] * b.value[i];
  out.requires_grad = a.requires_grad || b.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx, bi = bv.idx;
    out.back = [ai, bi](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      Node& b = t.nodes_[bi];
      if (a.requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) a.grad[i] += self.grad[i] * b.value[i];
      if (b.requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) b.grad[i] += self.grad[i] * a.value[i];
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::scale(Var av, double c) {
  const Node& a = nodes_[av.idx];
  Node out;
  out.shape = a.shape;
  out.value.resize(a.value.size());
  const S cs = static_cast<S>(c);
  for (std::size_t i = 0; i < out.value.size(); ++i) out.value[i] = a.value[i] * cs;
  out.requires_grad = a.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx;
    out.back = [ai, cs](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      for (std::size_t i = 0; i < self.grad.size(); ++i) a.grad[i] += self.grad[i] * cs;
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::add_row(Var av, Var bv) {
  const Node& a = nodes_[av.idx];
  const Node& b = nodes_[bv.idx];
  if (a.shape.size() != 2 || b.shape.size() != 2 || b.shape[0] != 1 || b.shape[1] != a.shape[1])
    throw ShapeError("add_row: shapes " + dims<S>(a.shape) + " vs " + dims<S>(b.shape));
  const std::size_t R = a.shape[0], C = a.shape[1];
  Node out;
  out.shape = a.shape;
  out.value.resize(a.value.size());
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c) out.value[r * C + c] = a.value[r * C + c] + b.value[c];
  out.requires_grad = a.requires_grad || b.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx, bi = bv.idx;
    out.back = [ai, bi, R, C](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      Node& b = t.nodes_[bi];
      if (a.requires_grad)
        for (std::size_t i = 0; i < self.grad.size(); ++i) a.grad[i] += self.grad[i];
      if (b.requires_grad)
        for (std::size_t c = 0; c < C; ++c) {
          double acc = 0.0;
          for (std::size_t r = 0; r < R; ++r) acc += static_cast<double>(self.grad[r * C + c]);
          b.grad[c] += static_cast<S>(acc);
        }
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::sum_rows(Var av) {
  const Node& a = nodes_[av.idx];
  if (a.shape.size() != 2) throw ShapeError("sum_rows: expected rank-2, got " + dims<S>(a.shape));
  const std::size_t R = a.shape[0], C = a.shape[1];
  Node out;
  out.shape = {1, C};
  out.value.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < R; ++r) acc += static_cast<double>(a.value[r * C + c]);
    out.value[c] = static_cast<S>(acc);
  }
  out.requires_grad = a.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx;
    out.back = [ai, R, C](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c) a.grad[r * C + c] += self.grad[c];
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::relu(Var av) {
  const Node& a = nodes_[av.idx];
  Node out;
  out.shape = a.shape;
  out.value.resize(a.value.size());
  for (std::size_t i = 0; i < out.value.size(); ++i)
    out.value[i] = a.value[i] > S(0) ? a.value[i] : S(0);
  out.requires_grad = a.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx;
    // subgradient at 0 is 0
    out.back = [ai](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (a.value[i] > S(0)) a.grad[i] += self.grad[i];
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::softmax_axis(Var av, std::size_t axis) {
  const Node& a = nodes_[av.idx];
  if (a.shape.size() == 1) {
    if (axis != 0) throw ShapeError("softmax_axis: axis out of range for rank-1");
  } else if (a.shape.size() == 2) {
    if (axis > 1) throw ShapeError("softmax_axis: axis out of range for rank-2");
  } else {
    throw ShapeError("softmax_axis: expected rank-1 or rank-2, got " + dims<S>(a.shape));
  }
  const bool rank1 = a.shape.size() == 1;
  const std::size_t R = rank1 ? a.shape[0] : a.shape[0];
  const std::size_t C = rank1 ? 1 : a.shape[1];
  const std::size_t n_slices = (rank1 || axis == 0) ? C : R;   // independent softmaxes
  const std::size_t len = (rank1 || axis == 0) ? R : C;        // entries per softmax
  if (len == 0) throw ShapeError("softmax_axis: empty axis");
  // element index of slice s, position k
  auto at = [&](std::size_t s, std::size_t k) {
    return (rank1 || axis == 0) ? k * C + s : s * C + k;
  };

  Node out;
  out.shape = a.shape;
  out.value.resize(a.value.size());
  for (std::size_t s = 0; s < n_slices; ++s) {
    double mx = static_cast<double>(a.value[at(s, 0)]);
    for (std::size_t k = 1; k < len; ++k)
      mx = std::max(mx, static_cast<double>(a.value[at(s, k)]));
    double denom = 0.0;
    for (std::size_t k = 0; k < len; ++k)
      denom += std::exp(static_cast<double>(a.value[at(s, k)]) - mx);
    for (std::size_t k = 0; k < len; ++k)
      out.value[at(s, k)] =
          static_cast<S>(std::exp(static_cast<double>(a.value[at(s, k)]) - mx) / denom);
  }
  out.requires_grad = a.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx;
    const bool along_rows = rank1 || axis == 0;
    out.back = [ai, n_slices, len, C, along_rows](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      auto at = [C, along_rows](std::size_t s, std::size_t k) {
        return along_rows ? k * C + s : s * C + k;
      };
      for (std::size_t s = 0; s < n_slices; ++s) {
        double dot = 0.0;
        for (std::size_t k = 0; k < len; ++k)
          dot += static_cast<double>(self.grad[at(s, k)]) * static_cast<double>(self.value[at(s, k)]);
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t i = at(s, k);
          a.grad[i] += static_cast<S>(static_cast<double>(self.value[i]) *
                                      (static_cast<double>(self.grad[i]) - dot));
        }
      }
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::l2_normalize_columns(Var av, double eps) {
  const Node& a = nodes_[av.idx];
  if (a.shape.size() != 2)
    throw ShapeError("l2_normalize_columns: expected rank-2, got " + dims<S>(a.shape));
  if (eps <= 0.0) throw ConfigError("l2_normalize_columns: eps must be positive");
  const std::size_t R = a.shape[0], C = a.shape[1];

  Node out;
  out.shape = a.shape;
  out.value.resize(a.value.size());
  std::vector<double> norms(C);
  for (std::size_t c = 0; c < C; ++c) {
    double sq = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      const double v = static_cast<double>(a.value[r * C + c]);
      sq += v * v;
    }
    norms[c] = std::sqrt(sq);
    const double denom = std::max(norms[c], eps);
    for (std::size_t r = 0; r < R; ++r)
      out.value[r * C + c] = static_cast<S>(static_cast<double>(a.value[r * C + c]) / denom);
  }
  out.requires_grad = a.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx;
    out.back = [ai, R, C, eps, norms](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      for (std::size_t c = 0; c < C; ++c) {
        if (norms[c] > eps) {
          // y = x / n, dx = (g - y <y,g>) / n
          double dot = 0.0;
          for (std::size_t r = 0; r < R; ++r)
            dot += static_cast<double>(self.value[r * C + c]) *
                   static_cast<double>(self.grad[r * C + c]);
          for (std::size_t r = 0; r < R; ++r)
            a.grad[r * C + c] += static_cast<S>(
                (static_cast<double>(self.grad[r * C + c]) -
                 static_cast<double>(self.value[r * C + c]) * dot) /
                norms[c]);
        } else {
          // guard branch: y = x / eps
          for (std::size_t r = 0; r < R; ++r)
            a.grad[r * C + c] += static_cast<S>(static_cast<double>(self.grad[r * C + c]) / eps);
        }
      }
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::frobenius_norm(Var av) {
  const Node& a = nodes_[av.idx];
  double sq = 0.0;
  for (S v : a.value) sq += static_cast<double>(v) * static_cast<double>(v);
  const double norm = std::sqrt(sq);

  Node out;
  out.shape = {1};
  out.value = {static_cast<S>(norm)};
  out.requires_grad = a.requires_grad;
  if (out.requires_grad) {
    const int ai = av.idx;
    out.back = [ai, norm](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      const double denom = std::max(norm, 1e-12);  // flat subgradient at the zero matrix
      for (std::size_t i = 0; i < a.grad.size(); ++i)
        a.grad[i] += static_cast<S>(static_cast<double>(self.grad[0]) *
                                    static_cast<double>(a.value[i]) / denom);
    };
  }
  return push(std::move(out));
}

template <typename S>
typename TapeT<S>::Var TapeT<S>::cross_entropy_logits(Var lv, std::size_t target) {
  const Node& a = nodes_[lv.idx];
  const std::size_t n = a.value.size();
  if (a.shape.size() > 2 || (a.shape.size() == 2 && a.shape[0] != 1))
    throw ShapeError("cross_entropy_logits: expected a logit vector, got " + dims<S>(a.shape));
  if (n == 0) throw ShapeError("cross_entropy_logits: empty logits");
  if (target >= n)
    throw ShapeError("cross_entropy_logits: target " + std::to_string(target) +
                     " out of range for " + std::to_string(n) + " logits");

  // -log softmax(logits)[target] via max-subtracted log-sum-exp
  double mx = static_cast<double>(a.value[0]);
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, static_cast<double>(a.value[i]));
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) denom += std::exp(static_cast<double>(a.value[i]) - mx);
  const double loss = std::log(denom) - (static_cast<double>(a.value[target]) - mx);

  Node out;
  out.shape = {1};
  out.value = {static_cast<S>(loss)};
  out.requires_grad = a.requires_grad;
  if (out.requires_grad) {
    const int ai = lv.idx;
    std::vector<double> probs(n);
    for (std::size_t i = 0; i < n; ++i)
      probs[i] = std::exp(static_cast<double>(a.value[i]) - mx) / denom;
    out.back = [ai, target, probs](TapeT& t, Node& self) {
      Node& a = t.nodes_[ai];
      const double g = static_cast<double>(self.grad[0]);
      for (std::size_t i = 0; i < a.grad.size(); ++i)
        a.grad[i] += static_cast<S>(g * (probs[i] - (i == target ? 1.0 : 0.0)));
    };
  }
  return push(std::move(out));
}

template <typename S>
void TapeT<S>::backward(Var loss) {
  if (!loss.valid() || static_cast<std::size_t>(loss.idx) >= nodes_.size())
    throw ShapeError("backward: invalid loss variable");
  Node& l = nodes_[loss.idx];
  if (l.value.size() != 1)
    throw ShapeError("backward: loss must be scalar, got " + dims<S>(l.shape));
  if (!l.requires_grad) return;  // nothing tracked upstream

  l.grad[0] = S(1);
  for (int i = loss.idx; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.requires_grad && n.back) n.back(*this, n);
  }
}

template class TapeT<float>;
template class TapeT<double>;

}  // namespace zsle
