#pragma once

// Attention export: which criteria sentences and words drive a prediction.

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "trialenroll/features.hpp"
#include "trialenroll/model.hpp"

namespace trialenroll {

namespace detail {

inline std::vector<std::size_t> order_by_weight_desc(const Vector& weights) {
  std::vector<std::size_t> idx(weights.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
  return idx;
}

inline nlohmann::json explain_group(const SentenceAttentionTrace& trace,
                                    const std::vector<std::string>& sentences,
                                    const std::vector<std::vector<std::string>>& tokens) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i : order_by_weight_desc(trace.beta)) {
    const auto& words = trace.sentences[i];
    nlohmann::json word_list = nlohmann::json::array();
    for (std::size_t t : order_by_weight_desc(words.alpha)) {
      word_list.push_back({{"word", tokens[i][t]}, {"position", t}, {"alpha", words.alpha[t]}});
    }
    out.push_back({{"sentence", sentences[i]},
                   {"position", i},
                   {"beta", trace.beta[i]},
                   {"words", std::move(word_list)}});
  }
  return out;
}

}  // namespace detail

// Sentences sorted by descending beta, each with its words sorted by
// descending alpha, plus the predicted probability.
inline nlohmann::json explain_export(const ModelParams& params, const AnnotatedBundle& annotated) {
  const auto trace = forward(annotated.bundle, params);
  const auto& c = annotated.criteria;
  nlohmann::json doc;
  doc["nct_id"] = annotated.bundle.nct_id;
  doc["probability"] = trace.probability;
  doc["logit"] = trace.logit;
  doc["inclusion"] = detail::explain_group(trace.inclusion, c.inclusion_sentences, c.inclusion_tokens);
  doc["exclusion"] = detail::explain_group(trace.exclusion, c.exclusion_sentences, c.exclusion_tokens);
  return doc;
}

}  // namespace trialenroll
