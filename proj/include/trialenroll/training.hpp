#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "trialenroll/common.hpp"
#include "trialenroll/features.hpp"
#include "trialenroll/model.hpp"

namespace trialenroll {

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 42;
  double validation_fraction = 0.10;
  // Model shape.
  std::size_t hidden = 64;
  std::size_t attention = 32;
  std::size_t cross_layers = 2;
  bool use_criteria = true;
  // Validation loss must drop by at least this much to count as improvement.
  double min_improvement = 1e-6;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidConfig, m); };
    if (batch_size < 1) fail("batch_size must be >= 1");
    if (patience < 1) fail("patience must be >= 1");
    if (max_epochs < 1) fail("max_epochs must be >= 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
      fail("validation_fraction must be in (0, 0.5)");
    }
    if (!(lr > 0.0)) fail("lr must be positive");
    if (weight_decay < 0.0) fail("weight_decay must be >= 0");
    if (hidden < 1 || attention < 1) fail("hidden and attention must be >= 1");
  }

  ModelDims model_dims(std::size_t word_dim, std::size_t cross_width) const {
    return {word_dim, hidden, attention, cross_width, cross_layers, use_criteria};
  }

  AdamWHyper optimizer() const { return {lr, 0.9, 0.999, 1e-8, weight_decay}; }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size}, {"max_epochs", c.max_epochs},
          {"patience", c.patience},     {"lr", c.lr},
          {"weight_decay", c.weight_decay}, {"seed", c.seed},
          {"validation_fraction", c.validation_fraction},
          {"hidden", c.hidden},         {"attention", c.attention},
          {"cross_layers", c.cross_layers}, {"use_criteria", c.use_criteria},
          {"min_improvement", c.min_improvement}};
}

// Missing keys keep their defaults.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.lr = j.value("lr", c.lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.seed = j.value("seed", c.seed);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.hidden = j.value("hidden", c.hidden);
    c.attention = j.value("attention", c.attention);
    c.cross_layers = j.value("cross_layers", c.cross_layers);
    c.use_criteria = j.value("use_criteria", c.use_criteria);
    c.min_improvement = j.value("min_improvement", c.min_improvement);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  c.validate();
  return c;
}

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double wall_time_s = 0.0;
};

inline nlohmann::json to_json(const EpochLog& e) {
  return {{"epoch", e.epoch},
          {"train_loss", e.train_loss},
          {"val_loss", e.val_loss},
          {"wall_time_s", e.wall_time_s}};
}

// Appends seeded draws (with replacement) of the minority class until both
// classes have the same count. Originals keep their order at the front.
inline std::vector<FeatureBundle> oversample_minority(std::vector<FeatureBundle> train,
                                                      std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!train[i].label) throw Error(ErrorKind::InvalidRecord, train[i].nct_id + ": unlabeled");
    (*train[i].label == 1 ? pos : neg).push_back(i);
  }
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorKind::SingleClassDataset, "oversampling needs both classes");
  }
  const auto& minority = pos.size() < neg.size() ? pos : neg;
  const std::size_t deficit = std::max(pos.size(), neg.size()) - minority.size();
  Rng rng(seed);
  train.reserve(train.size() + deficit);
  for (std::size_t k = 0; k < deficit; ++k) {
    train.push_back(train[minority[rng.below(minority.size())]]);
  }
  return train;
}

struct ValidationSplit {
  std::vector<FeatureBundle> fit;
  std::vector<FeatureBundle> val;
};

// The latest `fraction` of records by completion date (ties by nct_id;
// undated records sort first) become the validation set.
inline ValidationSplit make_validation_split(std::vector<FeatureBundle> train, double fraction) {
  if (train.size() < 10) {
    throw Error(ErrorKind::TooFewRecords, "validation split needs >= 10 records, got " +
                                              std::to_string(train.size()));
  }
  if (!(fraction > 0.0 && fraction < 0.5)) {
    throw Error(ErrorKind::InvalidConfig, "validation fraction must be in (0, 0.5)");
  }
  std::stable_sort(train.begin(), train.end(), [](const FeatureBundle& a, const FeatureBundle& b) {
    const int da = a.completion_date ? a.completion_date->ordinal() : -1;
    const int db = b.completion_date ? b.completion_date->ordinal() : -1;
    if (da != db) return da < db;
    return a.nct_id < b.nct_id;
  });
  const auto n = train.size();
  auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  ValidationSplit out;
  out.fit.assign(std::make_move_iterator(train.begin()),
                 std::make_move_iterator(train.end() - static_cast<std::ptrdiff_t>(n_val)));
  out.val.assign(std::make_move_iterator(train.end() - static_cast<std::ptrdiff_t>(n_val)),
                 std::make_move_iterator(train.end()));
  return out;
}

// Patience-based stopping on validation loss.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_improvement)
      : patience_(patience), min_improvement_(min_improvement) {}

  // Records the loss of the next epoch; returns true when it is a new best.
  bool observe(double val_loss) {
    ++epoch_;
    if (val_loss < best_loss_ - min_improvement_) {
      best_loss_ = val_loss;
      best_epoch_ = epoch_;
      return true;
    }
    return false;
  }

  bool should_stop() const { return epoch_ - best_epoch_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  double min_improvement_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

inline double mean_loss(const std::vector<FeatureBundle>& data, const ModelParams& p) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const auto& b : data) {
    if (!b.label) throw Error(ErrorKind::InvalidRecord, b.nct_id + ": unlabeled");
    total += bce_with_logit(forward(b, p).logit, *b.label);
  }
  return total / static_cast<double>(data.size());
}

struct TrainHooks {
  // Replaces the computed validation loss (scripted schedules in tests).
  std::function<double(const ModelParams&, std::size_t epoch)> validation_loss;
  std::function<void(const EpochLog&, const ModelParams&)> on_epoch_end;
};

struct TrainResult {
  ModelParams best;
  std::size_t best_epoch = 0;
  std::vector<EpochLog> logs;
};

inline std::size_t infer_word_dim(const std::vector<FeatureBundle>& data) {
  for (const auto& b : data) {
    for (const auto* g : {&b.inclusion_words, &b.exclusion_words}) {
      for (const auto& s : *g) {
        if (!s.empty()) return s.front().size();
      }
    }
  }
  return 0;
}

// Seeded shuffled mini-batches with AdamW; returns the parameters of the
// epoch with the lowest validation loss.
inline TrainResult train(const std::vector<FeatureBundle>& fit, const std::vector<FeatureBundle>& val,
                         const TrainConfig& cfg, std::size_t word_dim, const TrainHooks& hooks = {}) {
  cfg.validate();
  if (fit.empty() || val.empty()) throw Error(ErrorKind::EmptyDataset, "train needs fit and val sets");
  if (word_dim == 0) throw Error(ErrorKind::ZeroDimension, "word dimension unknown");
  const ModelDims dims = cfg.model_dims(word_dim, fit.front().cross_input.size());
  ModelParams params = ModelParams::initialize(dims, cfg.seed);
  AdamWState state;
  const AdamWHyper hp = cfg.optimizer();
  Rng order_rng(cfg.seed ^ 0xA5A5A5A5A5A5A5A5ULL);

  TrainResult result;
  result.best = params;
  EarlyStopping stopper(cfg.patience, cfg.min_improvement);
  std::vector<std::size_t> order(fit.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const FeatureBundle*> batch;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&fit[order[i]]);
      auto step = batch_gradients(batch, params);
      if (!std::isfinite(step.loss)) {
        throw Error(ErrorKind::DivergedLoss, "non-finite batch loss at epoch " +
                                                 std::to_string(epoch) + ", batch offset " +
                                                 std::to_string(start));
      }
      loss_sum += step.loss * static_cast<double>(batch.size());
      adamw_step(params.values(), step.grads.values(), state, hp);
    }
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(fit.size());
    log.val_loss = hooks.validation_loss ? hooks.validation_loss(params, epoch) : mean_loss(val, params);
    if (!std::isfinite(log.val_loss)) {
      throw Error(ErrorKind::DivergedLoss, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    log.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.logs.push_back(log);
    if (hooks.on_epoch_end) hooks.on_epoch_end(log, params);
    if (stopper.observe(log.val_loss)) {
      result.best = params;
      result.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }
  return result;
}

// Temporal validation carve-out, oversampling of the fit part only, then
// train().
inline TrainResult fit_model(const std::vector<FeatureBundle>& train_set, const TrainConfig& cfg,
                             std::size_t word_dim, const TrainHooks& hooks = {}) {
  auto split = make_validation_split(train_set, cfg.validation_fraction);
  auto balanced = oversample_minority(std::move(split.fit), cfg.seed);
  return train(balanced, split.val, cfg, word_dim, hooks);
}

}  // namespace trialenroll
