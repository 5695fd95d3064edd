#pragma once

// Two-stage rollout: for each of K samples, generate a primary trajectory
// from the main prompt; when it contains format blocks, generate a second
// trajectory from the format bodies alone; score both and centre the totals
// within the group.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "strux/backend.hpp"
#include "strux/dataset.hpp"
#include "strux/grpo.hpp"
#include "strux/prompting.hpp"
#include "strux/random.hpp"
#include "strux/reward.hpp"
#include "strux/trajectory.hpp"

namespace strux {

struct RolloutConfig {
  std::size_t k = 8;
  LambdaSchedule lambda = LambdaSchedule::constant(0.2);
  std::uint64_t seed = 0;
  std::size_t parallel = 1;  // in-flight backend calls
  int max_retries = 2;
  SamplingParams sampling{};
  ValidationPolicy validation{};
  RewardPolicy reward{};
};

struct TrajectoryPair {
  std::size_t sample_index = 0;
  std::uint64_t seed = 0;
  Trajectory primary;
  ValidationReport primary_report;
  std::optional<Trajectory> reinferred;
  std::optional<ValidationReport> reinferred_report;
  std::string reinference_prompt;  // empty when no re-inference ran; not serialized
  RewardBreakdown breakdown;
  std::optional<grpo::TokenLogProbs> logprobs;  // primary tokens then re-inferred tokens
  bool failed = false;
  std::string error;
};

struct RolloutGroup {
  QueryInstance query;
  std::size_t query_index = 0;
  double lambda = 0.0;
  std::vector<TrajectoryPair> pairs;
  std::vector<double> advantages;
};

namespace detail {

inline GenerationResult generate_with_retry(GenerationBackend& backend, const std::string& prompt,
                                            const SamplingParams& params, int max_retries) {
  for (int attempt = 0;; ++attempt) {
    try {
      return backend.generate(prompt, params);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BackendError || attempt >= max_retries) throw;
    }
  }
}

inline void append_logprobs(std::optional<grpo::TokenLogProbs>& acc,
                            const std::optional<grpo::TokenLogProbs>& more) {
  if (!more) return;
  if (!acc) {
    acc = more;
    return;
  }
  acc->policy.insert(acc->policy.end(), more->policy.begin(), more->policy.end());
  acc->reference.insert(acc->reference.end(), more->reference.begin(), more->reference.end());
  acc->behavior.insert(acc->behavior.end(), more->behavior.begin(), more->behavior.end());
}

}  // namespace detail

/// Scores a pair from its trajectories. Used by the rollout and by re-scoring.
inline RewardBreakdown score_pair(const TrajectoryPair& p, const std::vector<std::string>& golds,
                                  double lambda, const RewardPolicy& policy = {}) {
  if (p.failed) return combined_reward(0.0, 0.0, lambda);
  const double direct = direct_reward(p.primary, golds, policy, &p.primary_report);
  const double reinf = reinference_reward(p.reinferred, p.primary.has_format(), golds);
  return combined_reward(direct, reinf, lambda);
}

inline TrajectoryPair sample_pair(const QueryInstance& query, std::size_t index, double lambda,
                                  GenerationBackend& backend, const RolloutConfig& cfg) {
  TrajectoryPair pair;
  pair.sample_index = index;
  pair.seed = rng::derive_seed(query.id, index, cfg.seed);
  SamplingParams params = cfg.sampling;
  params.seed = pair.seed;
  try {
    const std::string prompt = build_main_prompt(query.question, query.docs);
    GenerationResult first = detail::generate_with_retry(backend, prompt, params, cfg.max_retries);
    pair.primary = parse_trajectory(std::move(first.text));
    pair.primary_report = validate(pair.primary, query.docs, cfg.validation);
    detail::append_logprobs(pair.logprobs, first.logprobs);

    const auto formats = extract_formats(pair.primary);
    if (!formats.empty()) {
      pair.reinference_prompt = build_reinference_prompt(query.question, formats);
      GenerationResult second =
          detail::generate_with_retry(backend, pair.reinference_prompt, params, cfg.max_retries);
      pair.reinferred = parse_trajectory(std::move(second.text));
      pair.reinferred_report = validate(*pair.reinferred, {}, cfg.validation);
      detail::append_logprobs(pair.logprobs, second.logprobs);
    }
  } catch (const Error& e) {
    pair.failed = true;
    pair.error = e.what();
    pair.reinferred.reset();
    pair.reinferred_report.reset();
    pair.logprobs.reset();
  }
  pair.breakdown = score_pair(pair, query.golds, lambda, cfg.reward);
  return pair;
}

inline void finalize_group(RolloutGroup& g) {
  std::vector<double> totals;
  totals.reserve(g.pairs.size());
  for (const auto& p : g.pairs) totals.push_back(p.breakdown.total);
  g.advantages = grpo::group_advantages(totals);
}

inline RolloutGroup rollout_one(const QueryInstance& query, std::size_t k, double lambda,
                                GenerationBackend& backend, const RolloutConfig& cfg = {},
                                std::size_t query_index = 0) {
  if (k == 0) throw Error(ErrorCode::EmptyGroup, "K must be at least 1");
  RolloutGroup g;
  g.query = query;
  g.query_index = query_index;
  g.lambda = lambda;
  for (std::size_t i = 0; i < k; ++i) g.pairs.push_back(sample_pair(query, i, lambda, backend, cfg));
  finalize_group(g);
  return g;
}

/// Runs every query and hands groups to `emit` in dataset order. Samples run
/// on up to `cfg.parallel` threads; output does not depend on that number.
inline void run_rollouts(const std::vector<QueryInstance>& dataset, const RolloutConfig& cfg,
                         GenerationBackend& backend,
                         const std::function<void(const RolloutGroup&)>& emit) {
  if (cfg.k == 0) throw Error(ErrorCode::EmptyGroup, "K must be at least 1");
  if (dataset.empty()) return;

  std::vector<RolloutGroup> groups(dataset.size());
  std::vector<std::size_t> remaining(dataset.size(), cfg.k);
  for (std::size_t q = 0; q < dataset.size(); ++q) {
    groups[q].query = dataset[q];
    groups[q].query_index = q;
    groups[q].lambda = lambda_at(cfg.lambda, q);
    groups[q].pairs.resize(cfg.k);
  }

  const std::size_t total = dataset.size() * cfg.k;
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::condition_variable cv;
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      const std::size_t t = next.fetch_add(1);
      if (t >= total) return;
      const std::size_t q = t / cfg.k;
      const std::size_t i = t % cfg.k;
      try {
        TrajectoryPair p = sample_pair(dataset[q], i, groups[q].lambda, backend, cfg);
        std::lock_guard lock(mu);
        groups[q].pairs[i] = std::move(p);
        --remaining[q];
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next.store(total);
      }
      cv.notify_all();
    }
  };

  const std::size_t n_threads = std::max<std::size_t>(1, std::min(cfg.parallel, total));
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);

  std::size_t emitted = 0;
  while (emitted < dataset.size()) {
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return failure || remaining[emitted] == 0; });
      if (failure) break;
    }
    try {
      finalize_group(groups[emitted]);
      emit(groups[emitted]);
    } catch (...) {
      std::lock_guard lock(mu);
      failure = std::current_exception();
      next.store(total);
      break;
    }
    groups[emitted].pairs.clear();
    ++emitted;
  }
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const TrajectoryPair& p) {
  nlohmann::json j;
  j["sample_index"] = p.sample_index;
  j["seed"] = p.seed;
  j["failed"] = p.failed;
  j["error"] = p.failed ? nlohmann::json(p.error) : nlohmann::json(nullptr);
  j["primary"] = to_json(p.primary);
  j["primary_validation"] = to_json(p.primary_report);
  j["reinferred"] = p.reinferred ? to_json(*p.reinferred) : nlohmann::json(nullptr);
  j["reinferred_validation"] =
      p.reinferred_report ? to_json(*p.reinferred_report) : nlohmann::json(nullptr);
  j["breakdown"] = to_json(p.breakdown);
  j["logprobs"] = p.logprobs ? grpo::to_json(*p.logprobs) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const RolloutGroup& g) {
  nlohmann::json j;
  j["query_id"] = g.query.id;
  j["query_index"] = g.query_index;
  j["question"] = g.query.question;
  j["golden_answers"] = g.query.golds;
  j["lambda"] = g.lambda;
  j["k"] = g.pairs.size();
  j["pairs"] = nlohmann::json::array();
  for (const auto& p : g.pairs) j["pairs"].push_back(to_json(p));
  j["advantages"] = g.advantages;
  return j;
}

/// Rebuilds a group from its JSON line. Trajectories are re-parsed from their
/// raw text; documents are not stored and come back empty.
inline RolloutGroup group_from_json(const nlohmann::json& j, const ValidationPolicy& policy = {}) {
  try {
    RolloutGroup g;
    g.query.id = j.at("query_id").get<std::string>();
    g.query.question = j.at("question").get<std::string>();
    g.query.golds = j.at("golden_answers").get<std::vector<std::string>>();
    g.query_index = j.at("query_index").get<std::size_t>();
    g.lambda = j.at("lambda").get<double>();
    for (const auto& pj : j.at("pairs")) {
      TrajectoryPair p;
      p.sample_index = pj.at("sample_index").get<std::size_t>();
      p.seed = pj.at("seed").get<std::uint64_t>();
      p.failed = pj.at("failed").get<bool>();
      if (p.failed) p.error = pj.at("error").get<std::string>();
      p.primary = parse_trajectory(pj.at("primary").at("raw").get<std::string>());
      p.primary_report = validate(p.primary, {}, policy);
      if (!pj.at("reinferred").is_null()) {
        p.reinferred = parse_trajectory(pj["reinferred"].at("raw").get<std::string>());
        p.reinferred_report = validate(*p.reinferred, {}, policy);
      }
      p.breakdown = breakdown_from_json(pj.at("breakdown"));
      if (!pj.at("logprobs").is_null()) p.logprobs = grpo::logprobs_from_json(pj["logprobs"]);
      g.pairs.push_back(std::move(p));
    }
    g.advantages = j.at("advantages").get<std::vector<double>>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("rollout record: ") + e.what());
  }
}

/// Trainer-facing records for one group, in sample order.
inline std::vector<nlohmann::json> export_group(const RolloutGroup& g,
                                                const grpo::ObjectiveConfig& cfg) {
  grpo::GroupInput in;
  for (const auto& p : g.pairs) {
    in.rewards.push_back(p.breakdown.total);
    in.logprobs.push_back(p.logprobs.value_or(grpo::TokenLogProbs{}));
  }
  const auto terms = grpo::group_terms(in, cfg);
  std::vector<nlohmann::json> out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    out.push_back(grpo::export_record(g.query.id, g.pairs[i].sample_index, terms[i]));
  }
  return out;
}

}  // namespace strux
