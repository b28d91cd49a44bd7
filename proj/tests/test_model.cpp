#include <gtest/gtest.h>

#include <cmath>

#include "trialenroll/model.hpp"

using namespace trialenroll;

namespace {

ModelDims tiny_dims(std::size_t d = 1, std::size_t h = 1, std::size_t a = 1, std::size_t dc = 2,
                    std::size_t L = 1) {
  ModelDims m;
  m.word_dim = d;
  m.hidden = h;
  m.attention = a;
  m.cross_width = dc;
  m.cross_layers = L;
  return m;
}

void set(ModelParams& p, Block b, const Vector& v) {
  auto dst = p.block(b);
  ASSERT_EQ(dst.size(), v.size());
  std::copy(v.begin(), v.end(), dst.begin());
}

FeatureBundle random_bundle(Rng& rng, std::size_t d, std::size_t dc, std::size_t n_inc,
                            std::size_t n_exc) {
  FeatureBundle b;
  b.nct_id = "NCT00000001";
  b.cross_input.resize(dc);
  for (auto& x : b.cross_input) x = rng.uniform(-1, 1);
  auto group = [&](std::size_t n) {
    CriteriaGroup g(n);
    for (auto& s : g) {
      s.resize(1 + rng.below(4), Vector(d));
      for (auto& w : s) {
        for (auto& x : w) x = rng.uniform(-1, 1);
      }
    }
    return g;
  };
  b.inclusion_words = group(n_inc);
  b.exclusion_words = group(n_exc);
  return b;
}

}  // namespace

TEST(CrossLayer, IdentityWhenWeightAndBiasZero) {
  const Vector x0{1.5, -2, 3}, xl{0.25, 7, -1};
  EXPECT_EQ(cross_layer(x0, xl, Vector(3, 0.0), Vector(3, 0.0)), xl);
}

TEST(CrossLayer, HandExamples) {
  EXPECT_EQ(cross_layer(Vector{1, 2}, Vector{1, 2}, Vector{1, 0}, Vector{0, 0}), (Vector{2, 4}));
  EXPECT_EQ(cross_layer(Vector{1, 0}, Vector{0, 1}, Vector{0, 1}, Vector{1, 1}), (Vector{2, 2}));
  EXPECT_THROW(cross_layer(Vector{1, 0}, Vector{0, 1, 2}, Vector{0, 1}, Vector{1, 1}), Error);
}

TEST(WordAttention, SingleAndIdenticalWords) {
  Rng rng(1);
  auto p = ModelParams::initialize(tiny_dims(3, 2, 2), 9);
  const Vector w{0.3, -0.2, 0.9};
  const auto one = word_attention({w}, p);
  EXPECT_EQ(one.alpha, Vector{1.0});
  EXPECT_EQ(one.summary, one.hidden[0]);
  const auto two = word_attention({w, w}, p);
  EXPECT_EQ(two.alpha, (Vector{0.5, 0.5}));
  for (std::size_t j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(two.summary[j], one.hidden[0][j]);
  EXPECT_THROW(word_attention({}, p), Error);
  EXPECT_THROW(word_attention({Vector{1, 2}}, p), Error);
}

TEST(WordAttention, EngineeredLogits) {
  // d = h = a = 1, W_e = W_w = 1: logit(x) = u * tanh(tanh(x)).
  ModelParams p(tiny_dims());
  set(p, Block::WordEncoderWeight, {1.0});
  set(p, Block::WordAttentionWeight, {1.0});
  const double u = std::log(3.0) / std::tanh(std::tanh(1.0));
  set(p, Block::WordContext, {u});
  const auto t = word_attention({Vector{0.0}, Vector{1.0}}, p);
  EXPECT_DOUBLE_EQ(t.logits[0], 0.0);
  EXPECT_NEAR(t.logits[1], std::log(3.0), 1e-15);
  EXPECT_NEAR(t.alpha[0], 0.25, 1e-15);
  EXPECT_NEAR(t.alpha[1], 0.75, 1e-15);
  EXPECT_NEAR(t.summary[0], 0.75 * std::tanh(1.0), 1e-15);
}

TEST(SentenceAttention, DegenerateGroups) {
  auto p = ModelParams::initialize(tiny_dims(2, 3, 2), 4);
  const auto ctx = p.block(Block::SentenceContextInclusion);
  const auto empty = encode_group({}, ctx, p);
  EXPECT_EQ(empty.summary, Vector(3, 0.0));
  EXPECT_TRUE(empty.beta.empty());
  const SentenceWords s{{0.1, 0.2}, {-0.4, 0.3}};
  const auto one = encode_group({s}, ctx, p);
  EXPECT_EQ(one.beta, Vector{1.0});
  EXPECT_EQ(one.summary, one.sentences[0].summary);
  const auto twice = encode_group({s, s}, ctx, p);
  EXPECT_EQ(twice.beta, (Vector{0.5, 0.5}));
}

TEST(Forward, ZeroParametersGiveHalf) {
  ModelParams p(tiny_dims(2, 2, 2, 3, 2));
  Rng rng(2);
  const auto b = random_bundle(rng, 2, 3, 2, 1);
  const auto t = forward(b, p);
  EXPECT_EQ(t.logit, 0.0);
  EXPECT_EQ(t.probability, 0.5);
}

TEST(Forward, EmptyCriteriaLeavesCrossPathOnly) {
  Rng rng(3);
  auto p = ModelParams::initialize(tiny_dims(2, 2, 2, 3, 2), 5);
  auto b = random_bundle(rng, 2, 3, 0, 0);
  const auto t = forward(b, p);
  EXPECT_EQ(t.inclusion.summary, Vector(2, 0.0));
  EXPECT_EQ(t.exclusion.summary, Vector(2, 0.0));
  // Changing the deep parameters has no effect.
  auto q = p;
  for (double& x : q.block(Block::WordEncoderWeight)) x += 1.0;
  for (double& x : q.block(Block::HeadWeight).subspan(0, 4)) x += 1.0;
  EXPECT_EQ(forward(b, q).logit, t.logit);
}

TEST(Forward, UseCriteriaFalseIgnoresText) {
  Rng rng(4);
  auto dims = tiny_dims(2, 2, 2, 3, 1);
  dims.use_criteria = false;
  auto p = ModelParams::initialize(dims, 6);
  auto b = random_bundle(rng, 2, 3, 2, 2);
  auto stripped = b;
  stripped.inclusion_words.clear();
  stripped.exclusion_words.clear();
  EXPECT_EQ(forward(b, p).logit, forward(stripped, p).logit);
}

TEST(Forward, MatchesHandComposition) {
  // d = 1, h = 1, a = 1, d_c = 2, L = 1, one inclusion sentence of two words.
  ModelParams p(tiny_dims());
  set(p, Block::WordEncoderWeight, {0.8});
  set(p, Block::WordEncoderBias, {0.1});
  set(p, Block::WordAttentionWeight, {-0.6});
  set(p, Block::WordAttentionBias, {0.2});
  set(p, Block::WordContext, {1.3});
  set(p, Block::SentenceAttentionWeight, {0.5});
  set(p, Block::SentenceAttentionBias, {-0.1});
  set(p, Block::SentenceContextInclusion, {0.7});
  set(p, Block::SentenceContextExclusion, {-0.9});
  set(p, Block::CrossWeight, {1.0, 0.0});
  set(p, Block::CrossBias, {0.0, 0.0});
  set(p, Block::HeadWeight, {0.4, -0.3, 0.25, -0.5});
  set(p, Block::HeadBias, {0.05});
  FeatureBundle b;
  b.nct_id = "NCT00000001";
  b.cross_input = {1, 2};
  b.inclusion_words = {{{0.5}, {-1.5}}};

  const double h1 = std::tanh(0.8 * 0.5 + 0.1), h2 = std::tanh(0.8 * -1.5 + 0.1);
  const double e1 = 1.3 * std::tanh(-0.6 * h1 + 0.2), e2 = 1.3 * std::tanh(-0.6 * h2 + 0.2);
  const double a1 = std::exp(e1) / (std::exp(e1) + std::exp(e2));
  const double u_sentence = a1 * h1 + (1 - a1) * h2;
  const double u_inc = u_sentence;  // single sentence: beta = 1
  // Cross: x0 = xl = [1,2], w = [1,0], b = 0 -> [2,4].
  const double z = 0.4 * u_inc + -0.3 * 0.0 + 0.25 * 2 + -0.5 * 4 + 0.05;

  const auto t = forward(b, p);
  EXPECT_EQ(t.cross.back(), (Vector{2, 4}));
  EXPECT_NEAR(t.inclusion.sentences[0].alpha[0], a1, 1e-15);
  EXPECT_EQ(t.inclusion.beta, Vector{1.0});
  EXPECT_NEAR(t.logit, z, 1e-14);
  EXPECT_NEAR(t.probability, 1.0 / (1.0 + std::exp(-z)), 1e-15);
}

TEST(Loss, KnownValues) {
  EXPECT_NEAR(bce_loss(Vector{1.0}, std::vector<int>{1}), 0.0, 1e-14);
  EXPECT_NEAR(bce_loss(Vector{0.5}, std::vector<int>{1}), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(Vector{0.5, 0.5}, std::vector<int>{1, 0}), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(Vector{0.0}, std::vector<int>{1}), -std::log(1e-15), 1e-9);
  EXPECT_THROW(bce_loss(Vector{0.5}, std::vector<int>{1, 0}), Error);
  EXPECT_NEAR(bce_loss_from_logits(Vector{0.0, 0.0}, std::vector<int>{1, 0}), std::log(2.0), 1e-15);
}

TEST(Loss, LogitFormMatchesProbabilityForm) {
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const double z = rng.uniform(-15, 15);
    const int y = static_cast<int>(rng.below(2));
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double direct = y ? -std::log(p) : -std::log(1 - p);
    EXPECT_NEAR(bce_with_logit(z, y), direct, 1e-9 * std::max(1.0, direct));
  }
  EXPECT_TRUE(std::isfinite(bce_with_logit(800, 0)));
  EXPECT_NEAR(bce_with_logit(800, 0), 800.0, 1e-9);
}

TEST(Backward, HeadBiasGradientVanishesAtExactFit) {
  ModelParams p(tiny_dims(1, 1, 1, 2, 1));
  FeatureBundle b;
  b.nct_id = "NCT00000001";
  b.cross_input = {0, 0};
  auto t = forward(b, p);
  t.probability = 1.0;  // y_hat == y
  Gradients g(p.dims());
  backward(t, b, p, 1, g);
  EXPECT_EQ(g.block(Block::HeadBias)[0], 0.0);
}

TEST(Backward, MatchesFiniteDifferences) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dims = tiny_dims(3, 2 + rng.below(3), 2, 4, 1 + rng.below(3));
    const auto p = ModelParams::initialize(dims, 100 + trial);
    const auto b = random_bundle(rng, 3, 4, 1 + rng.below(3), rng.below(3));
    const int y = static_cast<int>(rng.below(2));
    Gradients g(dims);
    backward(forward(b, p), b, p, y, g);
    const auto fd = finite_diff(p, b, y, 1e-5);
    for (std::size_t i = 0; i < g.values().size(); ++i) {
      const double a = g.values()[i], n = fd.values()[i];
      EXPECT_NEAR(a, n, 1e-7 + 1e-5 * std::abs(n)) << "param " << i;
    }
  }
}

TEST(Backward, InputGradientMatchesFiniteDifferences) {
  Rng rng(7);
  const auto dims = tiny_dims(2, 2, 2, 5, 3);
  const auto p = ModelParams::initialize(dims, 8);
  auto b = random_bundle(rng, 2, 5, 1, 1);
  Gradients g(dims);
  Vector dx;
  backward(forward(b, p), b, p, 1, g, 1.0, &dx);
  for (std::size_t j = 0; j < 5; ++j) {
    auto up = b, down = b;
    up.cross_input[j] += 1e-6;
    down.cross_input[j] -= 1e-6;
    const double n = (bce_with_logit(forward(up, p).logit, 1) - bce_with_logit(forward(down, p).logit, 1)) / 2e-6;
    EXPECT_NEAR(dx[j], n, 1e-7);
  }
}

TEST(Backward, BatchIsMeanOfExamples) {
  Rng rng(8);
  const auto dims = tiny_dims(2, 2, 2, 3, 2);
  const auto p = ModelParams::initialize(dims, 9);
  std::vector<FeatureBundle> data;
  for (int i = 0; i < 4; ++i) {
    data.push_back(random_bundle(rng, 2, 3, 1, 1));
    data.back().label = i % 2;
  }
  std::vector<const FeatureBundle*> ptrs;
  for (const auto& b : data) ptrs.push_back(&b);
  const auto batch = batch_gradients(ptrs, p);
  Gradients sum(dims);
  double loss = 0;
  for (const auto& b : data) {
    const auto t = forward(b, p);
    loss += bce_with_logit(t.logit, *b.label) / 4.0;
    backward(t, b, p, *b.label, sum, 0.25);
  }
  EXPECT_NEAR(batch.loss, loss, 1e-15);
  for (std::size_t i = 0; i < sum.values().size(); ++i) {
    EXPECT_NEAR(batch.grads.values()[i], sum.values()[i], 1e-15);
  }
}

TEST(AdamW, FirstStepAlgebra) {
  Vector theta{1.0};
  AdamWState state;
  adamw_step(theta, Vector{0.5}, state, {0.001, 0.9, 0.999, 1e-8, 0.0});
  // m_hat = 0.5, v_hat = 0.25, step = lr * 0.5 / (0.5 + eps).
  EXPECT_NEAR(state.m[0] / (1 - 0.9), 0.5, 1e-15);
  EXPECT_NEAR(state.v[0] / (1 - 0.999), 0.25, 1e-15);
  EXPECT_NEAR(theta[0], 1.0 - 0.001 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(theta[0], 0.999, 1e-10);
}

TEST(AdamW, ZeroGradient) {
  Vector theta{1.0, -2.0, 0.5};
  AdamWState state;
  adamw_step(theta, Vector(3, 0.0), state, {0.01, 0.9, 0.999, 1e-8, 0.0});
  EXPECT_EQ(theta, (Vector{1.0, -2.0, 0.5}));
  adamw_step(theta, Vector(3, 0.0), state, {0.01, 0.9, 0.999, 1e-8, 0.1});
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(theta[i], (Vector{1.0, -2.0, 0.5})[i] * (1.0 - 0.01 * 0.1));
  }
}

TEST(AdamW, MatchesLonghandOverSteps) {
  Rng rng(9);
  Vector theta(4), m(4, 0.0), v(4, 0.0);
  for (auto& x : theta) x = rng.uniform(-1, 1);
  Vector reference = theta;
  AdamWState state;
  const AdamWHyper hp{0.01, 0.8, 0.95, 1e-8, 0.05};
  for (int t = 1; t <= 10; ++t) {
    Vector g(4);
    for (auto& x : g) x = rng.uniform(-1, 1);
    adamw_step(theta, g, state, hp);
    for (std::size_t i = 0; i < 4; ++i) {
      reference[i] -= hp.lr * hp.weight_decay * reference[i];
      m[i] = 0.8 * m[i] + 0.2 * g[i];
      v[i] = 0.95 * v[i] + 0.05 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.8, t)), vh = v[i] / (1 - std::pow(0.95, t));
      reference[i] -= hp.lr * mh / (std::sqrt(vh) + hp.eps);
    }
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(theta[i], reference[i], 1e-14);
}

TEST(Params, InitializationIsSeededAndBounded) {
  const auto dims = tiny_dims(8, 4, 3, 6, 2);
  const auto a = ModelParams::initialize(dims, 1);
  EXPECT_EQ(a, ModelParams::initialize(dims, 1));
  EXPECT_NE(a, ModelParams::initialize(dims, 2));
  const auto table = block_table(dims);
  for (std::size_t i = 0; i < kBlockCount; ++i) {
    const auto values = a.block(static_cast<Block>(i));
    for (double x : values) {
      if (table[i].bias) {
        EXPECT_EQ(x, 0.0);
      } else {
        EXPECT_LE(std::abs(x), 1.0 / std::sqrt(static_cast<double>(table[i].fan_in)));
      }
    }
  }
}

TEST(Params, JsonRoundTripIsExact) {
  const auto dims = tiny_dims(3, 2, 2, 5, 3);
  const auto p = ModelParams::initialize(dims, 11);
  const auto j = nlohmann::json::parse(params_to_json(p).dump());
  EXPECT_EQ(params_from_json(j, dims_from_json(to_json(dims))), p);
  auto broken = j;
  broken["cross.weight"].erase(0);
  EXPECT_THROW(params_from_json(broken, dims), Error);
  EXPECT_THROW(params_from_json(j, tiny_dims(3, 2, 2, 5, 2)), Error);
}
