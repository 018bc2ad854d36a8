#ifndef ZSLE_TAPE_HPP
#define ZSLE_TAPE_HPP

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "tensor.hpp"

namespace zsle {

// Reverse-mode gradient tape over dense tensors. Every operation appends one
// node holding the forward value; backward() walks the nodes in exact reverse
// execution order and accumulates into parent grad buffers. Leaves created
// with param() are bound to an external tensor and flush their accumulated
// gradient into tensor.grad at the end of the pass.
//
// Tapes are independent: two tapes share no state and may run on different
// threads. All reductions accumulate in double regardless of S.
template <typename S>
class TapeT {
 public:
  struct Var {
    int idx = -1;
    bool valid() const { return idx >= 0; }
  };

  TapeT() = default;
  TapeT(const TapeT&) = delete;
  TapeT& operator=(const TapeT&) = delete;

  // -- leaves -----------------------------------------------------------

  // Untracked constant input (copied onto the tape).
  Var input(const TensorT<S>& t);

  // Tracked leaf bound to an external parameter tensor; backward() adds the
  // accumulated gradient into t.grad (allocating it if missing).
  Var param(TensorT<S>& t);

  // -- operations -------------------------------------------------------

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);        // same shape
  Var sub(Var a, Var b);        // same shape
  Var mul(Var a, Var b);        // Hadamard, same shape
  Var scale(Var a, double c);
  Var add_row(Var a, Var b);    // a: R x C, b: 1 x C broadcast over rows
  Var sum_rows(Var a);          // R x C -> 1 x C
  Var relu(Var a);
  Var softmax_axis(Var a, std::size_t axis);  // rank-2, axis 0 or 1
  Var l2_normalize_columns(Var a, double eps);
  Var frobenius_norm(Var a);    // -> scalar (shape {1})
  Var cross_entropy_logits(Var logits, std::size_t target);  // -> scalar

  // -- access -----------------------------------------------------------

  const std::vector<S>& value(Var v) const { return nodes_[v.idx].value; }
  const std::vector<std::size_t>& shape(Var v) const { return nodes_[v.idx].shape; }
  double scalar(Var v) const;
  bool tracked(Var v) const { return nodes_[v.idx].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be scalar.
  void backward(Var loss);

 private:
  struct Node {
    std::vector<std::size_t> shape;
    std::vector<S> value;
    std::vector<S> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    TensorT<S>* bound = nullptr;
    std::function<void(TapeT&, Node&)> back;

    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  };

  Node& node(Var v) { return nodes_[v.idx]; }
  Var push(Node n);
  Var unary(Var a, std::vector<std::size_t> shape,
            std::function<void(TapeT&, Node&)> back_if_tracked);
  void require_same_shape(Var a, Var b, const char* op) const;

  std::deque<Node> nodes_;
};

using Tape = TapeT<float>;

extern template class TapeT<float>;
extern template class TapeT<double>;

}  // namespace zsle

#endif
