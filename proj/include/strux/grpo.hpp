#pragma once

// Group-relative advantages and the clipped-surrogate objective with a KL
// penalty, evaluated from supplied log-probabilities. Nothing here updates
// parameters; the per-sample terms are exported for an external trainer.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strux/error.hpp"

namespace strux::grpo {

struct ObjectiveConfig {
  double epsilon = 0.2;
  double beta = 0.001;
  // Ratio denominator: sampling-time policy by default, reference model if set.
  bool ratio_against_reference = false;

  void check() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
      throw Error(ErrorCode::ConfigError, "epsilon must lie in (0, 1)");
    }
    if (!(beta >= 0.0)) throw Error(ErrorCode::ConfigError, "beta must be non-negative");
  }
};

/// Per-token log-probabilities of one sampled trajectory pair.
struct TokenLogProbs {
  std::vector<double> policy;
  std::vector<double> reference;
  std::vector<double> behavior;

  std::size_t size() const { return policy.size(); }

  void check() const {
    if (reference.size() != policy.size() || behavior.size() != policy.size()) {
      throw Error(ErrorCode::LengthMismatch,
                  "log-prob sequences differ in length (policy " + std::to_string(policy.size()) +
                      ", reference " + std::to_string(reference.size()) + ", behavior " +
                      std::to_string(behavior.size()) + ")");
    }
  }
};

/// A_i = R_i - mean(R). Summation runs left to right.
inline std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.empty()) throw Error(ErrorCode::EmptyGroup, "reward group is empty");
  double sum = 0.0;
  for (double r : rewards) sum += r;
  const double mean = sum / static_cast<double>(rewards.size());
  std::vector<double> adv;
  adv.reserve(rewards.size());
  for (double r : rewards) adv.push_back(r - mean);
  return adv;
}

inline double clipped_term(double ratio, double advantage, double epsilon) {
  if (!(ratio > 0.0)) throw Error(ErrorCode::NonPositiveRatio, "ratio must be positive");
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

/// Mean over tokens of exp(r) - r - 1 with r = reference - policy. Zero for
/// an empty sequence.
inline double kl_term(const TokenLogProbs& t) {
  t.check();
  if (t.size() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = t.reference[i] - t.policy[i];
    sum += std::expm1(r) - r;
  }
  return sum / static_cast<double>(t.size());
}

/// exp(mean per-token log-ratio); 1 for an empty sequence.
inline double sequence_ratio(const TokenLogProbs& t, const ObjectiveConfig& cfg = {}) {
  t.check();
  if (t.size() == 0) return 1.0;
  const std::vector<double>& denom = cfg.ratio_against_reference ? t.reference : t.behavior;
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) sum += t.policy[i] - denom[i];
  return std::exp(sum / static_cast<double>(t.size()));
}

struct GroupInput {
  std::vector<double> rewards;
  std::vector<TokenLogProbs> logprobs;  // one per reward
};

struct SampleTerms {
  double reward = 0.0;
  double advantage = 0.0;
  double ratio = 1.0;
  double clipped_term = 0.0;
  double kl_term = 0.0;

  double contribution(double beta) const { return clipped_term - beta * kl_term; }
};

struct ObjectiveResult {
  double value = 0.0;
  std::vector<std::vector<SampleTerms>> groups;
};

inline std::vector<SampleTerms> group_terms(const GroupInput& g, const ObjectiveConfig& cfg) {
  if (g.logprobs.size() != g.rewards.size()) {
    throw Error(ErrorCode::LengthMismatch, "one log-prob record per reward is required");
  }
  const auto adv = group_advantages(g.rewards);
  std::vector<SampleTerms> out(g.rewards.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    SampleTerms& s = out[i];
    s.reward = g.rewards[i];
    s.advantage = adv[i];
    s.ratio = sequence_ratio(g.logprobs[i], cfg);
    s.clipped_term = clipped_term(s.ratio, s.advantage, cfg.epsilon);
    s.kl_term = kl_term(g.logprobs[i]);
  }
  return out;
}

/// J = mean over every sample of [clipped_term - beta * kl_term].
inline ObjectiveResult objective(std::span<const GroupInput> groups, const ObjectiveConfig& cfg) {
  cfg.check();
  if (groups.empty()) throw Error(ErrorCode::EmptyGroup, "objective needs at least one group");
  ObjectiveResult res;
  double sum = 0.0;
  std::size_t n = 0;
  for (const GroupInput& g : groups) {
    res.groups.push_back(group_terms(g, cfg));
    for (const SampleTerms& s : res.groups.back()) {
      sum += s.contribution(cfg.beta);
      ++n;
    }
  }
  res.value = sum / static_cast<double>(n);
  return res;
}

/// One line of the trainer-facing export.
inline nlohmann::json export_record(const std::string& query_id, std::size_t sample_index,
                                    const SampleTerms& s) {
  return {{"query_id", query_id},   {"sample_index", sample_index}, {"reward", s.reward},
          {"advantage", s.advantage}, {"ratio", s.ratio},           {"clipped_term", s.clipped_term},
          {"kl_term", s.kl_term}};
}

inline nlohmann::json to_json(const TokenLogProbs& t) {
  return {{"policy", t.policy}, {"reference", t.reference}, {"behavior", t.behavior}};
}

inline TokenLogProbs logprobs_from_json(const nlohmann::json& j) {
  TokenLogProbs t;
  t.policy = j.at("policy").get<std::vector<double>>();
  t.reference = j.at("reference").get<std::vector<double>>();
  t.behavior = j.at("behavior").get<std::vector<double>>();
  t.check();
  return t;
}

}  // namespace strux::grpo
