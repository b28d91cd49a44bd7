#pragma once

// Deep & Cross model over FeatureBundles.
//
//   deep part   : hierarchical additive attention over criteria. Words are
//                 encoded h = tanh(W_e^T x + b_e), scored
//                 e = u_w^T tanh(W_w^T h + b_w), softmax-pooled into sentence
//                 vectors; sentences are pooled the same way with shared
//                 (W_s, b_s) and one context vector per criteria group.
//   cross part  : x^(l+1) = x^(0) (x^(l) . w^(l)) + b^(l) + x^(l).
//   head        : z = w_p^T [u_inc; u_exc; x^(L)] + b_p, y_hat = sigmoid(z).
//
// Parameters live in one flat buffer so the optimizer, finite differences and
// serialization all walk the same layout. Matrices are row-major with rows
// indexing the input dimension.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trialenroll/common.hpp"
#include "trialenroll/features.hpp"

namespace trialenroll {

struct ModelDims {
  std::size_t word_dim = 768;     // d
  std::size_t hidden = 64;        // h
  std::size_t attention = 32;     // a
  std::size_t cross_width = 0;    // d_c
  std::size_t cross_layers = 2;   // L
  bool use_criteria = true;       // false: deep part contributes zeros

  std::size_t head_width() const { return 2 * hidden + cross_width; }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

enum class Block {
  WordEncoderWeight,
  WordEncoderBias,
  WordAttentionWeight,
  WordAttentionBias,
  WordContext,
  SentenceAttentionWeight,
  SentenceAttentionBias,
  SentenceContextInclusion,
  SentenceContextExclusion,
  CrossWeight,
  CrossBias,
  HeadWeight,
  HeadBias,
};
inline constexpr std::size_t kBlockCount = 13;

struct BlockInfo {
  std::string_view name;
  std::size_t rows;
  std::size_t cols;  // 1 for vectors
  std::size_t fan_in;
  bool bias;
  std::size_t size() const { return rows * cols; }
};

inline std::array<BlockInfo, kBlockCount> block_table(const ModelDims& m) {
  const std::size_t d = m.word_dim, h = m.hidden, a = m.attention, dc = m.cross_width;
  const std::size_t L = m.cross_layers;
  return {{
      {"word_encoder.weight", d, h, d, false},
      {"word_encoder.bias", h, 1, 0, true},
      {"word_attention.weight", h, a, h, false},
      {"word_attention.bias", a, 1, 0, true},
      {"word_attention.context", a, 1, a, false},
      {"sentence_attention.weight", h, a, h, false},
      {"sentence_attention.bias", a, 1, 0, true},
      {"sentence_attention.context_inclusion", a, 1, a, false},
      {"sentence_attention.context_exclusion", a, 1, a, false},
      {"cross.weight", L, dc, dc, false},
      {"cross.bias", L, dc, 0, true},
      {"head.weight", m.head_width(), 1, m.head_width(), false},
      {"head.bias", 1, 1, 0, true},
  }};
}

class ModelParams {
 public:
  ModelParams() = default;

  // All zeros.
  explicit ModelParams(const ModelDims& dims) : dims_(dims) {
    if (dims.word_dim == 0 || dims.hidden == 0 || dims.attention == 0 || dims.cross_width == 0) {
      throw Error(ErrorKind::InvalidConfig, "model dimensions must be positive");
    }
    std::size_t cursor = 0;
    const auto table = block_table(dims);
    for (std::size_t i = 0; i < kBlockCount; ++i) {
      offsets_[i] = cursor;
      cursor += table[i].size();
    }
    values_.assign(cursor, 0.0);
  }

  // Weights uniform in +-1/sqrt(fan_in), biases zero, blocks drawn in order.
  static ModelParams initialize(const ModelDims& dims, std::uint64_t seed) {
    ModelParams p(dims);
    Rng rng(seed);
    const auto table = block_table(dims);
    for (std::size_t i = 0; i < kBlockCount; ++i) {
      if (table[i].bias) continue;
      const double bound = 1.0 / std::sqrt(static_cast<double>(table[i].fan_in));
      for (double& x : p.block(static_cast<Block>(i))) x = rng.uniform(-bound, bound);
    }
    return p;
  }

  const ModelDims& dims() const { return dims_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> block(Block b) {
    const auto i = static_cast<std::size_t>(b);
    return std::span<double>(values_).subspan(offsets_[i], block_table(dims_)[i].size());
  }
  std::span<const double> block(Block b) const {
    const auto i = static_cast<std::size_t>(b);
    return std::span<const double>(values_).subspan(offsets_[i], block_table(dims_)[i].size());
  }

  // Row `layer` of the cross weight / bias blocks.
  std::span<const double> cross_weight(std::size_t layer) const {
    return block(Block::CrossWeight).subspan(layer * dims_.cross_width, dims_.cross_width);
  }
  std::span<const double> cross_bias(std::size_t layer) const {
    return block(Block::CrossBias).subspan(layer * dims_.cross_width, dims_.cross_width);
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ModelDims dims_;
  std::array<std::size_t, kBlockCount> offsets_{};
  std::vector<double> values_;
};

// Same layout as the parameters.
using Gradients = ModelParams;

// ---------------------------------------------------------------------------
// Small numeric kernels

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// out = tanh(W^T x + b), W is rows(x) x cols(out) row-major.
inline Vector affine_tanh(std::span<const double> W, std::span<const double> b,
                          std::span<const double> x) {
  const std::size_t cols = b.size();
  Vector out(b.begin(), b.end());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    const double* row = W.data() + k * cols;
    for (std::size_t j = 0; j < cols; ++j) out[j] += row[j] * xk;
  }
  for (double& v : out) v = std::tanh(v);
  return out;
}

inline Vector softmax(std::span<const double> logits) {
  Vector out(logits.size());
  if (logits.empty()) return out;
  double mx = -std::numeric_limits<double>::infinity();
  for (double z : logits) mx = std::max(mx, z);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace detail

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -y log(sigmoid(z)) - (1-y) log(1 - sigmoid(z)) without forming sigmoid(z).
inline double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

// Mean binary cross-entropy of probabilities, clipped to [1e-15, 1 - 1e-15].
inline double bce_loss(std::span<const double> probabilities, std::span<const int> labels) {
  if (probabilities.size() != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, "bce_loss: probabilities and labels differ in length");
  }
  if (probabilities.empty()) return 0.0;
  constexpr double kEps = 1e-15;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[i], kEps, 1.0 - kEps);
    total += labels[i] == 1 ? -std::log(p) : -std::log1p(-p);
  }
  return total / static_cast<double>(labels.size());
}

inline double bce_loss_from_logits(std::span<const double> logits, std::span<const int> labels) {
  if (logits.size() != labels.size()) {
    throw Error(ErrorKind::LengthMismatch, "bce_loss: logits and labels differ in length");
  }
  if (logits.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) total += bce_with_logit(logits[i], labels[i]);
  return total / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------
// Layers

// x0 * (xl . w) + b + xl
inline Vector cross_layer(std::span<const double> x0, std::span<const double> xl,
                          std::span<const double> w, std::span<const double> b) {
  if (xl.size() != x0.size() || w.size() != x0.size() || b.size() != x0.size()) {
    throw Error(ErrorKind::LengthMismatch, "cross_layer operands differ in length");
  }
  const double s = detail::dot(xl, w);
  Vector out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = x0[i] * s + b[i] + xl[i];
  return out;
}

struct WordAttentionTrace {
  std::vector<Vector> hidden;       // h_t
  std::vector<Vector> projected;    // tanh(W_w^T h_t + b_w)
  Vector logits;
  Vector alpha;
  Vector summary;                   // u_i
};

struct SentenceAttentionTrace {
  std::vector<WordAttentionTrace> sentences;
  std::vector<Vector> projected;    // tanh(W_s^T u_i + b_s)
  Vector logits;
  Vector beta;
  Vector summary;                   // u (zeros for an empty group)
};

inline WordAttentionTrace word_attention(const SentenceWords& words, const ModelParams& p) {
  if (words.empty()) throw Error(ErrorKind::EmptySentence, "word_attention needs at least one word");
  const auto& dims = p.dims();
  WordAttentionTrace t;
  const auto W_e = p.block(Block::WordEncoderWeight);
  const auto b_e = p.block(Block::WordEncoderBias);
  const auto W_w = p.block(Block::WordAttentionWeight);
  const auto b_w = p.block(Block::WordAttentionBias);
  const auto u_w = p.block(Block::WordContext);
  for (const auto& x : words) {
    if (x.size() != dims.word_dim) {
      throw Error(ErrorKind::DimensionMismatch, "word vector length " + std::to_string(x.size()) +
                                                    " != " + std::to_string(dims.word_dim));
    }
    t.hidden.push_back(detail::affine_tanh(W_e, b_e, x));
    t.projected.push_back(detail::affine_tanh(W_w, b_w, t.hidden.back()));
    t.logits.push_back(detail::dot(u_w, t.projected.back()));
  }
  t.alpha = detail::softmax(t.logits);
  t.summary.assign(dims.hidden, 0.0);
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t j = 0; j < dims.hidden; ++j) t.summary[j] += t.alpha[i] * t.hidden[i][j];
  }
  return t;
}

// Pools already-computed sentence traces with the given group context.
inline SentenceAttentionTrace sentence_attention(std::vector<WordAttentionTrace> sentences,
                                                 std::span<const double> context,
                                                 const ModelParams& p) {
  const std::size_t h = p.dims().hidden;
  SentenceAttentionTrace t;
  t.summary.assign(h, 0.0);
  t.sentences = std::move(sentences);
  if (t.sentences.empty()) return t;
  const auto W_s = p.block(Block::SentenceAttentionWeight);
  const auto b_s = p.block(Block::SentenceAttentionBias);
  for (const auto& s : t.sentences) {
    t.projected.push_back(detail::affine_tanh(W_s, b_s, s.summary));
    t.logits.push_back(detail::dot(context, t.projected.back()));
  }
  t.beta = detail::softmax(t.logits);
  for (std::size_t i = 0; i < t.sentences.size(); ++i) {
    for (std::size_t j = 0; j < h; ++j) t.summary[j] += t.beta[i] * t.sentences[i].summary[j];
  }
  return t;
}

inline SentenceAttentionTrace encode_group(const CriteriaGroup& group,
                                           std::span<const double> context, const ModelParams& p) {
  std::vector<WordAttentionTrace> sentences;
  sentences.reserve(group.size());
  for (const auto& words : group) sentences.push_back(word_attention(words, p));
  return sentence_attention(std::move(sentences), context, p);
}

struct ForwardTrace {
  SentenceAttentionTrace inclusion;
  SentenceAttentionTrace exclusion;
  std::vector<Vector> cross;        // x^(0) .. x^(L)
  Vector cross_dots;                // x^(l) . w^(l)
  double logit = 0.0;
  double probability = 0.5;
};

inline ForwardTrace forward(const FeatureBundle& bundle, const ModelParams& p) {
  const auto& dims = p.dims();
  if (bundle.cross_input.size() != dims.cross_width) {
    throw Error(ErrorKind::DimensionMismatch,
                bundle.nct_id + ": cross input length " + std::to_string(bundle.cross_input.size()) +
                    " != " + std::to_string(dims.cross_width));
  }
  ForwardTrace t;
  static const CriteriaGroup kEmpty;
  const auto& inc = dims.use_criteria ? bundle.inclusion_words : kEmpty;
  const auto& exc = dims.use_criteria ? bundle.exclusion_words : kEmpty;
  t.inclusion = encode_group(inc, p.block(Block::SentenceContextInclusion), p);
  t.exclusion = encode_group(exc, p.block(Block::SentenceContextExclusion), p);

  t.cross.push_back(bundle.cross_input);
  for (std::size_t l = 0; l < dims.cross_layers; ++l) {
    t.cross_dots.push_back(detail::dot(t.cross.back(), p.cross_weight(l)));
    t.cross.push_back(cross_layer(t.cross.front(), t.cross.back(), p.cross_weight(l), p.cross_bias(l)));
  }

  const auto w_p = p.block(Block::HeadWeight);
  const std::size_t h = dims.hidden;
  double z = p.block(Block::HeadBias)[0];
  z += detail::dot(w_p.subspan(0, h), t.inclusion.summary);
  z += detail::dot(w_p.subspan(h, h), t.exclusion.summary);
  z += detail::dot(w_p.subspan(2 * h), t.cross.back());
  t.logit = z;
  t.probability = sigmoid(z);
  return t;
}

// ---------------------------------------------------------------------------
// Backward

namespace detail {

// Backprop through out = tanh(W^T x + b) given d(out); accumulates into dW,
// db and dx.
inline void affine_tanh_backward(std::span<const double> W, std::span<const double> x,
                                 std::span<const double> out, std::span<const double> dout,
                                 std::span<double> dW, std::span<double> db,
                                 std::span<double> dx) {
  const std::size_t cols = out.size();
  Vector dpre(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    dpre[j] = dout[j] * (1.0 - out[j] * out[j]);
    db[j] += dpre[j];
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double* row = W.data() + k * cols;
    double* grow = dW.data() + k * cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      grow[j] += x[k] * dpre[j];
      acc += row[j] * dpre[j];
    }
    if (!dx.empty()) dx[k] += acc;
  }
}

inline void word_attention_backward(const WordAttentionTrace& t, const SentenceWords& words,
                                    std::span<const double> dsummary, const ModelParams& p,
                                    Gradients& g) {
  const std::size_t h = p.dims().hidden;
  const std::size_t n = words.size();
  const auto W_e = p.block(Block::WordEncoderWeight);
  const auto W_w = p.block(Block::WordAttentionWeight);
  const auto u_w = p.block(Block::WordContext);
  Vector dalpha(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dalpha[i] = dot(dsummary, t.hidden[i]);
    mean += t.alpha[i] * dalpha[i];
  }
  auto du_w = g.block(Block::WordContext);
  for (std::size_t i = 0; i < n; ++i) {
    const double dlogit = t.alpha[i] * (dalpha[i] - mean);
    Vector dproj(u_w.size());
    for (std::size_t j = 0; j < u_w.size(); ++j) {
      du_w[j] += dlogit * t.projected[i][j];
      dproj[j] = dlogit * u_w[j];
    }
    Vector dhidden(h);
    for (std::size_t j = 0; j < h; ++j) dhidden[j] = t.alpha[i] * dsummary[j];
    affine_tanh_backward(W_w, t.hidden[i], t.projected[i], dproj,
                         g.block(Block::WordAttentionWeight), g.block(Block::WordAttentionBias),
                         dhidden);
    affine_tanh_backward(W_e, words[i], t.hidden[i], dhidden, g.block(Block::WordEncoderWeight),
                         g.block(Block::WordEncoderBias), {});
  }
}

inline void group_backward(const SentenceAttentionTrace& t, const CriteriaGroup& group,
                           std::span<const double> dsummary, Block context_block,
                           const ModelParams& p, Gradients& g) {
  const std::size_t n = t.sentences.size();
  if (n == 0) return;
  const std::size_t h = p.dims().hidden;
  const auto W_s = p.block(Block::SentenceAttentionWeight);
  const auto context = p.block(context_block);
  auto dcontext = g.block(context_block);
  Vector dbeta(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dbeta[i] = dot(dsummary, t.sentences[i].summary);
    mean += t.beta[i] * dbeta[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double dlogit = t.beta[i] * (dbeta[i] - mean);
    Vector dproj(context.size());
    for (std::size_t j = 0; j < context.size(); ++j) {
      dcontext[j] += dlogit * t.projected[i][j];
      dproj[j] = dlogit * context[j];
    }
    Vector dsentence(h);
    for (std::size_t j = 0; j < h; ++j) dsentence[j] = t.beta[i] * dsummary[j];
    affine_tanh_backward(W_s, t.sentences[i].summary, t.projected[i], dproj,
                         g.block(Block::SentenceAttentionWeight),
                         g.block(Block::SentenceAttentionBias), dsentence);
    word_attention_backward(t.sentences[i], group[i], dsentence, p, g);
  }
}

}  // namespace detail

// Adds weight * dLoss/dtheta for one example (Loss = BCE of the trace's logit
// against y) into `grads`. When `input_grad` is non-null it receives
// weight * dLoss/dcross_input (overwritten).
inline void backward(const ForwardTrace& t, const FeatureBundle& bundle, const ModelParams& p,
                     int y, Gradients& grads, double weight = 1.0, Vector* input_grad = nullptr) {
  const auto& dims = p.dims();
  if (!(grads.dims() == dims)) throw Error(ErrorKind::DimensionMismatch, "gradient buffer dims");
  const double dz = weight * (t.probability - static_cast<double>(y));
  const std::size_t h = dims.hidden, dc = dims.cross_width;
  const auto w_p = p.block(Block::HeadWeight);
  auto gw_p = grads.block(Block::HeadWeight);
  grads.block(Block::HeadBias)[0] += dz;
  for (std::size_t j = 0; j < h; ++j) {
    gw_p[j] += dz * t.inclusion.summary[j];
    gw_p[h + j] += dz * t.exclusion.summary[j];
  }
  const auto& xL = t.cross.back();
  for (std::size_t j = 0; j < dc; ++j) gw_p[2 * h + j] += dz * xL[j];

  // Cross network, last layer first.
  const auto& x0 = t.cross.front();
  Vector dx(dc), dx0(dc, 0.0);
  for (std::size_t j = 0; j < dc; ++j) dx[j] = dz * w_p[2 * h + j];
  auto gw = grads.block(Block::CrossWeight);
  auto gb = grads.block(Block::CrossBias);
  for (std::size_t l = dims.cross_layers; l-- > 0;) {
    const auto w = p.cross_weight(l);
    const auto& xl = t.cross[l];
    const double s = t.cross_dots[l];
    const double ds = detail::dot(dx, x0);
    for (std::size_t j = 0; j < dc; ++j) {
      gb[l * dc + j] += dx[j];
      gw[l * dc + j] += ds * xl[j];
      dx0[j] += dx[j] * s;
      dx[j] += ds * w[j];  // dx becomes dLoss/dx^(l)
    }
  }
  if (input_grad) {
    input_grad->assign(dc, 0.0);
    for (std::size_t j = 0; j < dc; ++j) (*input_grad)[j] = dx0[j] + dx[j];
  }

  if (!dims.use_criteria) return;
  Vector du(h);
  for (std::size_t j = 0; j < h; ++j) du[j] = dz * w_p[j];
  detail::group_backward(t.inclusion, bundle.inclusion_words, du, Block::SentenceContextInclusion,
                         p, grads);
  for (std::size_t j = 0; j < h; ++j) du[j] = dz * w_p[h + j];
  detail::group_backward(t.exclusion, bundle.exclusion_words, du, Block::SentenceContextExclusion,
                         p, grads);
}

struct BatchResult {
  double loss = 0.0;  // mean BCE
  Gradients grads;
};

// Mean loss and its gradient over a batch, summed in batch order.
inline BatchResult batch_gradients(std::span<const FeatureBundle* const> batch,
                                   const ModelParams& p) {
  BatchResult out{0.0, Gradients(p.dims())};
  if (batch.empty()) return out;
  const double weight = 1.0 / static_cast<double>(batch.size());
  for (const FeatureBundle* b : batch) {
    if (!b->label) throw Error(ErrorKind::InvalidRecord, b->nct_id + ": unlabeled example in batch");
    const auto trace = forward(*b, p);
    out.loss += bce_with_logit(trace.logit, *b->label);
    backward(trace, *b, p, *b->label, out.grads, weight);
  }
  out.loss *= weight;
  return out;
}

// Central differences of the single-example loss for every parameter.
inline Gradients finite_diff(const ModelParams& params, const FeatureBundle& bundle, int y,
                             double step) {
  if (!(step > 0)) throw Error(ErrorKind::InvalidConfig, "finite_diff step must be positive");
  ModelParams probe = params;
  Gradients out(params.dims());
  auto values = probe.values();
  auto grads = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double orig = values[i];
    values[i] = orig + step;
    const double up = bce_with_logit(forward(bundle, probe).logit, y);
    values[i] = orig - step;
    const double down = bce_with_logit(forward(bundle, probe).logit, y);
    values[i] = orig;
    grads[i] = (up - down) / (2.0 * step);
  }
  return out;
}

// ---------------------------------------------------------------------------
// AdamW with decoupled weight decay and bias correction.

struct AdamWHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  Vector m, v;
  long step = 0;
  friend bool operator==(const AdamWState&, const AdamWState&) = default;
};

inline void adamw_step(std::span<double> params, std::span<const double> grads, AdamWState& state,
                       const AdamWHyper& hp) {
  if (grads.size() != params.size()) throw Error(ErrorKind::LengthMismatch, "adamw: grads length");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(state.step));
  const double decay = 1.0 - hp.lr * hp.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * grads[i];
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] = params[i] * decay - hp.lr * m_hat / (std::sqrt(v_hat) + hp.eps);
  }
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const ModelDims& d) {
  return {{"word_dim", d.word_dim},       {"hidden", d.hidden},
          {"attention", d.attention},     {"cross_width", d.cross_width},
          {"cross_layers", d.cross_layers}, {"use_criteria", d.use_criteria}};
}

inline ModelDims dims_from_json(const nlohmann::json& j) {
  ModelDims d;
  d.word_dim = j.at("word_dim").get<std::size_t>();
  d.hidden = j.at("hidden").get<std::size_t>();
  d.attention = j.at("attention").get<std::size_t>();
  d.cross_width = j.at("cross_width").get<std::size_t>();
  d.cross_layers = j.at("cross_layers").get<std::size_t>();
  d.use_criteria = j.value("use_criteria", true);
  return d;
}

// Named blocks: matrices as arrays of rows, vectors as flat arrays.
inline nlohmann::json params_to_json(const ModelParams& p) {
  nlohmann::json out = nlohmann::json::object();
  const auto table = block_table(p.dims());
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    const auto values = p.block(static_cast<Block>(i));
    const auto& info = table[i];
    if (info.cols == 1) {
      out[std::string(info.name)] = Vector(values.begin(), values.end());
    } else {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t r = 0; r < info.rows; ++r) {
        auto row = values.subspan(r * info.cols, info.cols);
        rows.push_back(Vector(row.begin(), row.end()));
      }
      out[std::string(info.name)] = std::move(rows);
    }
  }
  return out;
}

inline ModelParams params_from_json(const nlohmann::json& j, const ModelDims& dims) {
  ModelParams p(dims);
  const auto table = block_table(dims);
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    const auto& info = table[i];
    const std::string name(info.name);
    if (!j.contains(name)) throw Error(ErrorKind::DimensionMismatch, "missing parameter " + name);
    auto dst = p.block(static_cast<Block>(i));
    Vector flat;
    if (info.cols == 1) {
      flat = j[name].get<Vector>();
    } else {
      const auto& rows = j[name];
      if (!rows.is_array() || rows.size() != info.rows) {
        throw Error(ErrorKind::DimensionMismatch, name + ": wrong row count");
      }
      for (const auto& row : rows) {
        auto r = row.get<Vector>();
        if (r.size() != info.cols) throw Error(ErrorKind::DimensionMismatch, name + ": wrong row width");
        flat.insert(flat.end(), r.begin(), r.end());
      }
    }
    if (flat.size() != dst.size()) {
      throw Error(ErrorKind::DimensionMismatch, name + ": expected " + std::to_string(dst.size()) +
                                                    " values, got " + std::to_string(flat.size()));
    }
    std::copy(flat.begin(), flat.end(), dst.begin());
  }
  return p;
}

}  // namespace trialenroll
