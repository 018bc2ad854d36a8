#ifndef ZSLE_MODEL_HPP
#define ZSLE_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "adam.hpp"
#include "data.hpp"
#include "tape.hpp"
#include "tensor.hpp"

namespace zsle {

enum class AttentionAxis { Region, Attribute };

AttentionAxis attention_axis_from_string(const std::string& s);
const char* attention_axis_name(AttentionAxis axis);

struct HeadConfig {
  std::size_t dim = 0;         // D
  std::size_t attributes = 0;  // M
  std::size_t hidden1 = 0;     // 0 -> max(D/2, 16)
  std::size_t hidden2 = 0;     // 0 -> max(D/4, 16)
  AttentionAxis attention_axis = AttentionAxis::Region;
  bool share_predictors = false;  // one linear map serves both predictors
  bool use_offset_mlp = true;     // train the shared offset MLP

  std::size_t h1() const { return hidden1 ? hidden1 : std::max<std::size_t>(dim / 2, 16); }
  std::size_t h2() const { return hidden2 ? hidden2 : std::max<std::size_t>(dim / 4, 16); }
};

// Trainable state: two bias-free D x M predictor weights plus a 3-layer MLP
// (D -> h1 -> h2 -> M, ReLU after the first two layers) that produces a
// per-sample attribute offset shared by both predictors.
template <typename S>
struct HeadParamsT {
  HeadConfig cfg;
  TensorT<S> w_local;   // D x M
  TensorT<S> w_global;  // D x M
  TensorT<S> offset_w1, offset_b1;  // D x h1, 1 x h1
  TensorT<S> offset_w2, offset_b2;  // h1 x h2, 1 x h2
  TensorT<S> offset_w3, offset_b3;  // h2 x M, 1 x M

  static HeadParamsT init(const HeadConfig& cfg, std::uint64_t seed);

  // Trainable groups honoring share_predictors / use_offset_mlp.
  std::vector<std::pair<std::string, TensorT<S>*>> parameters();

  template <typename T>
  HeadParamsT<T> cast() const {
    HeadParamsT<T> out;
    out.cfg = cfg;
    out.w_local = w_local.template cast<T>();
    out.w_global = w_global.template cast<T>();
    out.offset_w1 = offset_w1.template cast<T>();
    out.offset_b1 = offset_b1.template cast<T>();
    out.offset_w2 = offset_w2.template cast<T>();
    out.offset_b2 = offset_b2.template cast<T>();
    out.offset_w3 = offset_w3.template cast<T>();
    out.offset_b3 = offset_b3.template cast<T>();
    return out;
  }
};

using HeadParams = HeadParamsT<float>;

// Parameter leaves on a tape. With share_predictors the global slot aliases
// the local one; with use_offset_mlp off the MLP enters as frozen constants.
template <typename S>
struct HeadVarsT {
  typename TapeT<S>::Var w_local, w_global;
  typename TapeT<S>::Var w1, b1, w2, b2, w3, b3;
};

template <typename S>
HeadVarsT<S> bind_params(TapeT<S>& tape, HeadParamsT<S>& params, bool trainable);

// Forward pass for one sample, built on the caller's tape.
template <typename S>
struct HeadForwardT {
  typename TapeT<S>::Var attn_scores;    // N x M, Z . W_l
  typename TapeT<S>::Var attn_weights;   // N x M, softmax over the configured axis
  typename TapeT<S>::Var attr_features;  // D x M, weighted region sums per attribute
  typename TapeT<S>::Var pred_local;     // 1 x M
  typename TapeT<S>::Var pred_global;    // 1 x M
};

template <typename S>
HeadForwardT<S> head_forward(TapeT<S>& tape, const HeadVarsT<S>& hv, const HeadConfig& cfg,
                             const TensorT<S>& local, const TensorT<S>& global_vec);

// Offset MLP applied row-wise: rows x D -> rows x M.
template <typename S>
typename TapeT<S>::Var offset_forward(TapeT<S>& tape, const HeadVarsT<S>& hv,
                                      typename TapeT<S>::Var rows);

// Cosine disentanglement: Frobenius distance between the column-normalized
// Gram matrix of the attribute features and the identity.
template <typename S>
typename TapeT<S>::Var cosine_loss(TapeT<S>& tape, typename TapeT<S>::Var attr_features);

// Cross-entropy of <prediction, a_k> logits over the seen classes only.
// seen_semantics_t is M x C_s (seen rows transposed, manifest order);
// target_seen_pos indexes that ordering.
template <typename S>
typename TapeT<S>::Var seen_class_ce(TapeT<S>& tape, typename TapeT<S>::Var prediction,
                                     typename TapeT<S>::Var seen_semantics_t,
                                     std::size_t target_seen_pos);

struct LossValues {
  double attr = 0.0;
  double cls = 0.0;
  double cos = 0.0;
  double total = 0.0;
};

// Checkpoint layout (little-endian):
//   "DFC1" | u32 D | u32 M | u32 h1 | u32 h2
//   then f32 tensors in declaration order:
//   w_local, w_global, offset_w1, offset_b1, offset_w2, offset_b2, offset_w3, offset_b3
void write_checkpoint(const HeadParams& params, const std::string& path);
HeadParams read_checkpoint(const std::string& path);

extern template struct HeadParamsT<float>;
extern template struct HeadParamsT<double>;

}  // namespace zsle

#endif
