#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "strux/error.hpp"
#include "strux/text.hpp"
#include "strux/trajectory.hpp"

namespace strux {

inline std::string normalize_answer(std::string_view a) { return text::normalize_answer(a); }

namespace detail {

inline void require_golds(const std::vector<std::string>& golds) {
  if (golds.empty()) throw Error(ErrorCode::EmptyGolds, "at least one gold answer is required");
}

// Token F1 with multiset overlap against one gold.
inline double f1_single(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::map<std::string_view, long> counts;
  for (const auto& t : gold) ++counts[t];
  long common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(pred.size() + gold.size());
}

}  // namespace detail

inline double exact_match(std::string_view pred, const std::vector<std::string>& golds) {
  detail::require_golds(golds);
  const std::string p = normalize_answer(pred);
  for (const auto& g : golds) {
    if (normalize_answer(g) == p) return 1.0;
  }
  return 0.0;
}

inline double f1(std::string_view pred, const std::vector<std::string>& golds) {
  detail::require_golds(golds);
  const auto p = text::answer_tokens(pred);
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, detail::f1_single(p, text::answer_tokens(g)));
  return best;
}

/// Whether validation findings other than NoAnswer zero the reward.
struct RewardPolicy {
  bool penalize_violations = false;
};

inline double direct_reward(const Trajectory& traj, const std::vector<std::string>& golds,
                            const RewardPolicy& policy = {},
                            const ValidationReport* report = nullptr) {
  if (!traj.answer) return 0.0;
  if (policy.penalize_violations && report && !report->is_clean()) return 0.0;
  return exact_match(*traj.answer, golds);
}

inline double reinference_reward(const std::optional<Trajectory>& reinf, bool had_formats,
                                 const std::vector<std::string>& golds) {
  if (reinf.has_value() != had_formats) {
    throw Error(ErrorCode::InconsistentInput,
                had_formats ? "formats present but no re-inferred trajectory"
                            : "re-inferred trajectory supplied without formats");
  }
  if (!had_formats || !reinf->answer) return 0.0;
  return exact_match(*reinf->answer, golds);
}

struct RewardBreakdown {
  double direct = 0.0;
  double reinf = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

inline RewardBreakdown combined_reward(double direct, double reinf, double lambda) {
  if (lambda < 0.0) throw Error(ErrorCode::NegativeLambda, "lambda must be non-negative");
  return {direct, reinf, lambda, direct + lambda * reinf};
}

inline nlohmann::json to_json(const RewardBreakdown& r) {
  return {{"direct", r.direct}, {"reinf", r.reinf}, {"lambda", r.lambda}, {"total", r.total}};
}

inline RewardBreakdown breakdown_from_json(const nlohmann::json& j) {
  return {j.at("direct").get<double>(), j.at("reinf").get<double>(), j.at("lambda").get<double>(),
          j.at("total").get<double>()};
}

// ---------------------------------------------------------------------------
// Lambda schedule

struct LambdaSchedule {
  enum class Kind { Constant, Linear };

  Kind kind = Kind::Constant;
  double value = 0.2;
  double start = 0.0;
  double end = 0.0;
  unsigned long steps = 0;

  static LambdaSchedule constant(double v) { return {Kind::Constant, v, 0.0, 0.0, 0}; }
  static LambdaSchedule linear(double from, double to, unsigned long n) {
    return {Kind::Linear, 0.0, from, to, n};
  }

  /// Parses "0.2", "constant:0.2" or "linear:START:END:STEPS".
  static LambdaSchedule parse(const std::string& spec) {
    auto fail = [&] { return Error(ErrorCode::ConfigError, "bad lambda schedule '" + spec + "'"); };
    std::vector<std::string> parts;
    std::size_t from = 0;
    while (true) {
      const auto p = spec.find(':', from);
      parts.push_back(spec.substr(from, p == std::string::npos ? std::string::npos : p - from));
      if (p == std::string::npos) break;
      from = p + 1;
    }
    try {
      if (parts.size() == 1) return constant(std::stod(parts[0]));
      if (parts.size() == 2 && parts[0] == "constant") return constant(std::stod(parts[1]));
      if (parts.size() == 4 && parts[0] == "linear") {
        return linear(std::stod(parts[1]), std::stod(parts[2]), std::stoul(parts[3]));
      }
    } catch (const std::logic_error&) {
      throw fail();
    }
    throw fail();
  }

  std::string to_string() const {
    const auto num = [](double v) { return nlohmann::json(v).dump(); };
    if (kind == Kind::Constant) return "constant:" + num(value);
    return "linear:" + num(start) + ":" + num(end) + ":" + std::to_string(steps);
  }
};

inline double lambda_at(const LambdaSchedule& s, unsigned long step) {
  double lambda = 0.0;
  if (s.kind == LambdaSchedule::Kind::Constant) {
    lambda = s.value;
  } else {
    if (s.steps == 0) throw Error(ErrorCode::ZeroSteps, "linear schedule needs steps > 0");
    const double frac =
        static_cast<double>(std::min(step, s.steps)) / static_cast<double>(s.steps);
    lambda = s.start + (s.end - s.start) * frac;
  }
  if (lambda < 0.0) throw Error(ErrorCode::NegativeLambda, "schedule produced a negative lambda");
  return lambda;
}

}  // namespace strux
