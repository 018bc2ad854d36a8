#include "model.hpp"

#include <cstdio>
#include <cstring>

#include "common.hpp"

namespace zsle {

AttentionAxis attention_axis_from_string(const std::string& s) {
  if (s == "region") return AttentionAxis::Region;
  if (s == "attribute") return AttentionAxis::Attribute;
  throw ConfigError("attention axis must be 'region' or 'attribute', got '" + s + "'");
}

const char* attention_axis_name(AttentionAxis axis) {
  return axis == AttentionAxis::Region ? "region" : "attribute";
}

template <typename S>
HeadParamsT<S> HeadParamsT<S>::init(const HeadConfig& cfg, std::uint64_t seed) {
  if (cfg.dim == 0 || cfg.attributes == 0) {
    throw ConfigError("head dimensions must be positive");
  }
  const std::size_t d = cfg.dim, m = cfg.attributes, h1 = cfg.h1(), h2 = cfg.h2();
  Rng rng(seed);
  HeadParamsT<S> p;
  p.cfg = cfg;
  p.w_local = make_matrix<S>(d, m, true);
  p.w_global = make_matrix<S>(d, m, true);
  p.offset_w1 = make_matrix<S>(d, h1, true);
  p.offset_b1 = make_matrix<S>(1, h1, true);
  p.offset_w2 = make_matrix<S>(h1, h2, true);
  p.offset_b2 = make_matrix<S>(1, h2, true);
  p.offset_w3 = make_matrix<S>(h2, m, true);
  p.offset_b3 = make_matrix<S>(1, m, true);
  init_fan_in(p.w_local, d, rng);
  init_fan_in(p.w_global, d, rng);
  init_fan_in(p.offset_w1, d, rng);
  init_fan_in(p.offset_b1, d, rng);
  init_fan_in(p.offset_w2, h1, rng);
  init_fan_in(p.offset_b2, h1, rng);
  init_fan_in(p.offset_w3, h2, rng);
  init_fan_in(p.offset_b3, h2, rng);
  if (cfg.share_predictors) p.w_global = p.w_local;
  return p;
}

template <typename S>
std::vector<std::pair<std::string, TensorT<S>*>> HeadParamsT<S>::parameters() {
  std::vector<std::pair<std::string, TensorT<S>*>> out;
  if (cfg.share_predictors) {
    out.emplace_back("w_shared", &w_local);
  } else {
    out.emplace_back("w_local", &w_local);
    out.emplace_back("w_global", &w_global);
  }
  if (cfg.use_offset_mlp) {
    out.emplace_back("offset_w1", &offset_w1);
    out.emplace_back("offset_b1", &offset_b1);
    out.emplace_back("offset_w2", &offset_w2);
    out.emplace_back("offset_b2", &offset_b2);
    out.emplace_back("offset_w3", &offset_w3);
    out.emplace_back("offset_b3", &offset_b3);
  }
  return out;
}

template <typename S>
HeadVarsT<S> bind_params(TapeT<S>& tape, HeadParamsT<S>& params, bool trainable) {
  HeadVarsT<S> hv;
  const bool train_mlp = trainable && params.cfg.use_offset_mlp;
  if (trainable) {
    hv.w_local = tape.param(params.w_local);
    hv.w_global = params.cfg.share_predictors ? hv.w_local : tape.param(params.w_global);
  } else {
    hv.w_local = tape.input(params.w_local);
    hv.w_global = params.cfg.share_predictors ? hv.w_local : tape.input(params.w_global);
  }
  hv.w1 = train_mlp ? tape.param(params.offset_w1) : tape.input(params.offset_w1);
  hv.b1 = train_mlp ? tape.param(params.offset_b1) : tape.input(params.offset_b1);
  hv.w2 = train_mlp ? tape.param(params.offset_w2) : tape.input(params.offset_w2);
  hv.b2 = train_mlp ? tape.param(params.offset_b2) : tape.input(params.offset_b2);
  hv.w3 = train_mlp ? tape.param(params.offset_w3) : tape.input(params.offset_w3);
  hv.b3 = train_mlp ? tape.param(params.offset_b3) : tape.input(params.offset_b3);
  return hv;
}

template <typename S>
typename TapeT<S>::Var offset_forward(TapeT<S>& tape, const HeadVarsT<S>& hv,
                                      typename TapeT<S>::Var rows) {
  auto h1 = tape.relu(tape.add_row(tape.matmul(rows, hv.w1), hv.b1));
  auto h2 = tape.relu(tape.add_row(tape.matmul(h1, hv.w2), hv.b2));
  return tape.add_row(tape.matmul(h2, hv.w3), hv.b3);
}

template <typename S>
HeadForwardT<S> head_forward(TapeT<S>& tape, const HeadVarsT<S>& hv, const HeadConfig& cfg,
                             const TensorT<S>& local, const TensorT<S>& global_vec) {
  if (local.cols() != cfg.dim) {
    throw ShapeError("local features have dim " + std::to_string(local.cols()) + ", head expects " +
                     std::to_string(cfg.dim));
  }
  if (global_vec.cols() != cfg.dim) {
    throw ShapeError("global feature has dim " + std::to_string(global_vec.cols()) +
                     ", head expects " + std::to_string(cfg.dim));
  }
  HeadForwardT<S> f;
  auto z = tape.input(local);       // N x D
  auto p = tape.input(global_vec);  // 1 x D

  f.attn_scores = tape.matmul(z, hv.w_local);  // N x M
  const std::size_t softmax_axis = cfg.attention_axis == AttentionAxis::Region ? 0 : 1;
  f.attn_weights = tape.softmax_axis(f.attn_scores, softmax_axis);
  f.attr_features = tape.matmul(tape.transpose(z), f.attn_weights);  // D x M

  // Local prediction: diagonal of W_l^T Zhat plus the mean offset over the
  // attribute features (columns of Zhat fed through the MLP row-wise).
  auto direct_local = tape.sum_rows(tape.mul(hv.w_local, f.attr_features));  // 1 x M
  auto offsets = offset_forward(tape, hv, tape.transpose(f.attr_features));  // M x M
  auto mean_offset = tape.scale(tape.sum_rows(offsets), S(1) / S(cfg.attributes));
  f.pred_local = tape.add(direct_local, mean_offset);

  f.pred_global = tape.add(tape.matmul(p, hv.w_global), offset_forward(tape, hv, p));
  return f;
}

template <typename S>
typename TapeT<S>::Var cosine_loss(TapeT<S>& tape, typename TapeT<S>::Var attr_features) {
  auto unit = tape.l2_normalize_columns(attr_features, S(1e-12));
  auto gram = tape.matmul(tape.transpose(unit), unit);
  const std::size_t m = tape.shape(gram)[0];
  auto eye = tape.input(identity_matrix<S>(m));
  return tape.frobenius_norm(tape.sub(gram, eye));
}

template <typename S>
typename TapeT<S>::Var seen_class_ce(TapeT<S>& tape, typename TapeT<S>::Var prediction,
                                     typename TapeT<S>::Var seen_semantics_t,
                                     std::size_t target_seen_pos) {
  auto logits = tape.matmul(prediction, seen_semantics_t);  // 1 x C_s
  return tape.cross_entropy_logits(logits, target_seen_pos);
}

namespace {

void write_tensor_f32(std::FILE* f, const Tensor& t, const std::string& path) {
  if (std::fwrite(t.data.data(), sizeof(float), t.data.size(), f) != t.data.size()) {
    throw IoError("short write to '" + path + "'");
  }
}

void read_tensor_f32(std::FILE* f, Tensor& t, const std::string& path) {
  if (std::fread(t.data.data(), sizeof(float), t.data.size(), f) != t.data.size()) {
    throw IoError("checkpoint '" + path + "' is truncated");
  }
}

}  // namespace

void write_checkpoint(const HeadParams& params, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  try {
    const char magic[4] = {'D', 'F', 'C', '1'};
    std::uint32_t dims[4] = {
        static_cast<std::uint32_t>(params.cfg.dim), static_cast<std::uint32_t>(params.cfg.attributes),
        static_cast<std::uint32_t>(params.cfg.h1()), static_cast<std::uint32_t>(params.cfg.h2())};
    if (std::fwrite(magic, 1, 4, f) != 4 || std::fwrite(dims, sizeof(std::uint32_t), 4, f) != 4) {
      throw IoError("short write to '" + path + "'");
    }
    write_tensor_f32(f, params.w_local, path);
    write_tensor_f32(f, params.w_global, path);
    write_tensor_f32(f, params.offset_w1, path);
    write_tensor_f32(f, params.offset_b1, path);
    write_tensor_f32(f, params.offset_w2, path);
    write_tensor_f32(f, params.offset_b2, path);
    write_tensor_f32(f, params.offset_w3, path);
    write_tensor_f32(f, params.offset_b3, path);
  } catch (...) {
    std::fclose(f);
    std::remove(path.c_str());
    throw;
  }
  if (std::fclose(f) != 0) {
    std::remove(path.c_str());
    throw IoError("failed to flush '" + path + "'");
  }
}

HeadParams read_checkpoint(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open checkpoint '" + path + "'");
  HeadParams params;
  try {
    char magic[4];
    std::uint32_t dims[4];
    if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, "DFC1", 4) != 0) {
      throw IoError("'" + path + "' is not a checkpoint file (bad magic)");
    }
    if (std::fread(dims, sizeof(std::uint32_t), 4, f) != 4) {
      throw IoError("checkpoint '" + path + "' is truncated");
    }
    HeadConfig cfg;
    cfg.dim = dims[0];
    cfg.attributes = dims[1];
    cfg.hidden1 = dims[2];
    cfg.hidden2 = dims[3];
    if (cfg.dim == 0 || cfg.attributes == 0 || cfg.hidden1 == 0 || cfg.hidden2 == 0) {
      throw IoError("checkpoint '" + path + "' has invalid dimensions");
    }
    params.cfg = cfg;
    params.w_local = make_matrix<float>(cfg.dim, cfg.attributes, true);
    params.w_global = make_matrix<float>(cfg.dim, cfg.attributes, true);
    params.offset_w1 = make_matrix<float>(cfg.dim, cfg.hidden1, true);
    params.offset_b1 = make_matrix<float>(1, cfg.hidden1, true);
    params.offset_w2 = make_matrix<float>(cfg.hidden1, cfg.hidden2, true);
    params.offset_b2 = make_matrix<float>(1, cfg.hidden2, true);
    params.offset_w3 = make_matrix<float>(cfg.hidden2, cfg.attributes, true);
    params.offset_b3 = make_matrix<float>(1, cfg.attributes, true);
    read_tensor_f32(f, params.w_local, path);
    read_tensor_f32(f, params.w_global, path);
    read_tensor_f32(f, params.offset_w1, path);
    read_tensor_f32(f, params.offset_b1, path);
    read_tensor_f32(f, params.offset_w2, path);
    read_tensor_f32(f, params.offset_b2, path);
    read_tensor_f32(f, params.offset_w3, path);
    read_tensor_f32(f, params.offset_b3, path);
    char extra;
    if (std::fread(&extra, 1, 1, f) == 1) {
      throw IoError("checkpoint '" + path + "' has trailing bytes");
    }
    for (float v : params.w_local.data) {
      if (!std::isfinite(v)) throw IoError("checkpoint '" + path + "' contains non-finite values");
    }
  } catch (...) {
    std::fclose(f);
    throw;
  }
  std::fclose(f);
  return params;
}

template struct HeadParamsT<float>;
template struct HeadParamsT<double>;

template HeadVarsT<float> bind_params(TapeT<float>&, HeadParamsT<float>&, bool);
template HeadVarsT<double> bind_params(TapeT<double>&, HeadParamsT<double>&, bool);
template HeadForwardT<float> head_forward(TapeT<float>&, const HeadVarsT<float>&, const HeadConfig&,
                                          const TensorT<float>&, const TensorT<float>&);
template HeadForwardT<double> head_forward(TapeT<double>&, const HeadVarsT<double>&,
                                           const HeadConfig&, const TensorT<double>&,
                                           const TensorT<double>&);
template TapeT<float>::Var offset_forward(TapeT<float>&, const HeadVarsT<float>&, TapeT<float>::Var);
template TapeT<double>::Var offset_forward(TapeT<double>&, const HeadVarsT<double>&,
                                           TapeT<double>::Var);
template TapeT<float>::Var cosine_loss(TapeT<float>&, TapeT<float>::Var);
template TapeT<double>::Var cosine_loss(TapeT<double>&, TapeT<double>::Var);
template TapeT<float>::Var seen_class_ce(TapeT<float>&, TapeT<float>::Var, TapeT<float>::Var,
                                         std::size_t);
template TapeT<double>::Var seen_class_ce(TapeT<double>&, TapeT<double>::Var, TapeT<double>::Var,
                                          std::size_t);

}  // namespace zsle
