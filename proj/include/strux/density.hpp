#pragma once

// Information density of a text relative to a set of gold facts:
//
//   info(a)   = number of facts found in a
//   length(a) = whitespace tokens of the normalized text
//   rho(a)    = info(a) / length(a)
//
// plus the ordering check raw docs < best predefined structure <= best
// structure overall, and a generator for premise-satisfying instances.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "strux/error.hpp"
#include "strux/prompting.hpp"
#include "strux/random.hpp"
#include "strux/text.hpp"

namespace strux::density {

enum class Matcher { NormalizedContainment, TokenSubset };

inline std::string_view to_string(Matcher m) {
  return m == Matcher::NormalizedContainment ? "containment" : "token_subset";
}

inline Matcher parse_matcher(std::string_view s) {
  if (s == "containment" || s == "NormalizedContainment") return Matcher::NormalizedContainment;
  if (s == "token_subset" || s == "TokenSubset") return Matcher::TokenSubset;
  throw Error(ErrorCode::ConfigError, "unknown matcher '" + std::string(s) + "'");
}

struct FactSet {
  std::vector<std::string> facts;
  Matcher matcher = Matcher::NormalizedContainment;
};

/// Token counter applied to a text; the default counts whitespace tokens of
/// the normalized text.
using TokenCounter = std::function<std::size_t(std::string_view)>;

inline std::size_t whitespace_tokens(std::string_view a) { return text::answer_tokens(a).size(); }

/// Facts present in `a`, in FactSet order.
inline std::vector<std::string> matched_facts(std::string_view a, const FactSet& facts) {
  std::vector<std::string> out;
  const auto tokens = text::answer_tokens(a);
  if (facts.matcher == Matcher::NormalizedContainment) {
    const std::string hay = " " + text::join(tokens, " ") + " ";
    for (const auto& f : facts.facts) {
      const std::string needle = text::normalize_answer(f);
      if (needle.empty()) continue;
      if (hay.find(" " + needle + " ") != std::string::npos) out.push_back(f);
    }
  } else {
    const std::set<std::string> have(tokens.begin(), tokens.end());
    for (const auto& f : facts.facts) {
      const auto ft = text::answer_tokens(f);
      if (ft.empty()) continue;
      if (std::all_of(ft.begin(), ft.end(), [&](const std::string& t) { return have.count(t) > 0; })) {
        out.push_back(f);
      }
    }
  }
  return out;
}

inline std::size_t info_content(std::string_view a, const FactSet& facts) {
  return matched_facts(a, facts).size();
}

struct DensityMeasurement {
  std::size_t info = 0;
  std::size_t length = 0;
  double rho = 0.0;
  std::vector<std::string> matched_facts;
};

inline DensityMeasurement measure(std::string_view a, const FactSet& facts,
                                  const TokenCounter& count = whitespace_tokens) {
  const std::size_t len = count(a);
  if (len == 0) throw Error(ErrorCode::EmptyText, "density is undefined for a text with no tokens");
  DensityMeasurement m;
  m.matched_facts = matched_facts(a, facts);
  m.info = m.matched_facts.size();
  m.length = len;
  m.rho = static_cast<double>(m.info) / static_cast<double>(m.length);
  return m;
}

struct StructureCandidate {
  std::string label;  // format name, or "raw_docs"
  std::string body;
};

struct BestStructure {
  std::string label;
  DensityMeasurement measurement;
};

/// argmax rho; the first candidate wins ties.
inline BestStructure best_structure(const std::vector<StructureCandidate>& cands,
                                    const FactSet& facts,
                                    const TokenCounter& count = whitespace_tokens) {
  if (cands.empty()) throw Error(ErrorCode::EmptyCandidates, "no structure candidates");
  std::optional<BestStructure> best;
  for (const auto& c : cands) {
    DensityMeasurement m = measure(c.body, facts, count);
    if (!best || m.rho > best->measurement.rho) best = BestStructure{c.label, std::move(m)};
  }
  return *best;
}

// ---------------------------------------------------------------------------
// Ordering check

struct CandidateRow {
  std::string label;
  bool predefined = false;
  DensityMeasurement measurement;  // length 0 and rho 0 for an empty body
};

struct OrderingReport {
  std::string id;
  CandidateRow raw;
  std::vector<CandidateRow> candidates;
  std::optional<CandidateRow> best_predefined;
  std::optional<CandidateRow> best_overall;
  bool has_self_defined = false;
  bool left_holds = false;   // rho(raw) < max predefined rho
  bool right_holds = false;  // max predefined rho <= max rho over all candidates
  bool premise_info = false;    // info(best predefined) >= ceil(0.9 * info(raw))
  bool premise_length = false;  // length(best predefined) < length(raw)

  bool premise_met() const { return best_predefined.has_value() && premise_info && premise_length; }
  bool chain_holds() const { return left_holds && right_holds; }

  /// "pass", "fail", or "premise_unmet".
  std::string status() const {
    if (!premise_met()) return "premise_unmet";
    return chain_holds() ? "pass" : "fail";
  }
};

namespace detail {

inline CandidateRow row(const std::string& label, std::string_view body, const FactSet& facts,
                        const TokenCounter& count) {
  CandidateRow r;
  r.label = label;
  r.predefined = is_predefined_format(label);
  if (count(body) == 0) {
    r.measurement.matched_facts = matched_facts(body, facts);
    r.measurement.info = r.measurement.matched_facts.size();
    return r;
  }
  r.measurement = measure(body, facts, count);
  return r;
}

}  // namespace detail

inline OrderingReport verify_ordering(std::string_view raw_docs,
                                      const std::vector<StructureCandidate>& structures,
                                      const FactSet& facts,
                                      const TokenCounter& count = whitespace_tokens) {
  OrderingReport rep;
  rep.raw = detail::row("raw_docs", raw_docs, facts, count);
  rep.raw.predefined = false;
  for (const auto& s : structures) {
    rep.candidates.push_back(detail::row(s.label, s.body, facts, count));
    const CandidateRow& c = rep.candidates.back();
    if (!c.predefined) rep.has_self_defined = true;
    if (!rep.best_overall || c.measurement.rho > rep.best_overall->measurement.rho) {
      rep.best_overall = c;
    }
    if (c.predefined &&
        (!rep.best_predefined || c.measurement.rho > rep.best_predefined->measurement.rho)) {
      rep.best_predefined = c;
    }
  }
  if (rep.best_predefined) {
    const auto& s = rep.best_predefined->measurement;
    const auto& r = rep.raw.measurement;
    rep.left_holds = r.rho < s.rho;
    rep.right_holds = s.rho <= rep.best_overall->measurement.rho;
    const auto needed = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(r.info)));
    rep.premise_info = s.info >= needed;
    rep.premise_length = s.length < r.length;
  }
  return rep;
}

inline nlohmann::json to_json(const CandidateRow& r) {
  return {{"label", r.label},
          {"predefined", r.predefined},
          {"info", r.measurement.info},
          {"length", r.measurement.length},
          {"rho", r.measurement.rho},
          {"matched_facts", r.measurement.matched_facts}};
}

inline nlohmann::json to_json(const OrderingReport& rep) {
  nlohmann::json j;
  j["id"] = rep.id;
  j["raw"] = to_json(rep.raw);
  j["candidates"] = nlohmann::json::array();
  for (const auto& c : rep.candidates) j["candidates"].push_back(to_json(c));
  j["best_predefined"] = rep.best_predefined ? to_json(*rep.best_predefined) : nlohmann::json(nullptr);
  j["best_overall"] = rep.best_overall ? to_json(*rep.best_overall) : nlohmann::json(nullptr);
  j["has_self_defined"] = rep.has_self_defined;
  j["left_holds"] = rep.left_holds;
  j["right_holds"] = rep.right_holds;
  j["premise_info"] = rep.premise_info;
  j["premise_length"] = rep.premise_length;
  j["status"] = rep.status();
  return j;
}

/// Full density report: per-instance rows plus pass counts.
inline nlohmann::json report_json(const std::vector<OrderingReport>& reps) {
  std::size_t left = 0, chain = 0, chain_self = 0, unmet = 0;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : reps) {
    rows.push_back(to_json(r));
    if (!r.premise_met()) {
      ++unmet;
      continue;
    }
    if (r.left_holds) ++left;
    if (r.chain_holds()) ++chain;
    if (r.chain_holds() && r.has_self_defined) ++chain_self;
  }
  return {{"instances", rows},
          {"summary",
           {{"n", reps.size()},
            {"left_pass", left},
            {"chain_pass", chain},
            {"chain_pass_with_self_defined", chain_self},
            {"premise_unmet", unmet}}}};
}

// ---------------------------------------------------------------------------
// Synthetic instances

struct SyntheticSpec {
  std::size_t instances = 100;
  std::uint64_t seed = 7;
  std::size_t facts_per_instance = 3;
  std::size_t tokens_per_fact = 4;
  std::size_t raw_tokens_min = 100;
  std::size_t raw_tokens_max = 200;
  // length(predefined) / length(raw)
  double predefined_ratio_min = 0.15;
  double predefined_ratio_max = 0.5;
  // length(self-defined) / length(predefined)
  double self_defined_ratio_min = 0.5;
  double self_defined_ratio_max = 1.0;

  static SyntheticSpec from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    s.instances = j.value("instances", s.instances);
    s.seed = j.value("seed", s.seed);
    s.facts_per_instance = j.value("facts_per_instance", s.facts_per_instance);
    s.tokens_per_fact = j.value("tokens_per_fact", s.tokens_per_fact);
    s.raw_tokens_min = j.value("raw_tokens_min", s.raw_tokens_min);
    s.raw_tokens_max = j.value("raw_tokens_max", s.raw_tokens_max);
    s.predefined_ratio_min = j.value("predefined_ratio_min", s.predefined_ratio_min);
    s.predefined_ratio_max = j.value("predefined_ratio_max", s.predefined_ratio_max);
    s.self_defined_ratio_min = j.value("self_defined_ratio_min", s.self_defined_ratio_min);
    s.self_defined_ratio_max = j.value("self_defined_ratio_max", s.self_defined_ratio_max);
    s.check();
    return s;
  }

  nlohmann::json to_json() const {
    return {{"instances", instances},
            {"seed", seed},
            {"facts_per_instance", facts_per_instance},
            {"tokens_per_fact", tokens_per_fact},
            {"raw_tokens_min", raw_tokens_min},
            {"raw_tokens_max", raw_tokens_max},
            {"predefined_ratio_min", predefined_ratio_min},
            {"predefined_ratio_max", predefined_ratio_max},
            {"self_defined_ratio_min", self_defined_ratio_min},
            {"self_defined_ratio_max", self_defined_ratio_max}};
  }

  void check() const {
    const auto bad = [](const std::string& m) { return Error(ErrorCode::ConfigError, m); };
    if (facts_per_instance == 0 || tokens_per_fact == 0) throw bad("facts need at least one token");
    if (raw_tokens_min > raw_tokens_max) throw bad("raw_tokens_min > raw_tokens_max");
    if (!(predefined_ratio_min > 0.0 && predefined_ratio_min <= predefined_ratio_max &&
          predefined_ratio_max < 1.0)) {
      throw bad("predefined ratios must satisfy 0 < min <= max < 1");
    }
    if (!(self_defined_ratio_min > 0.0 && self_defined_ratio_min <= self_defined_ratio_max &&
          self_defined_ratio_max <= 1.0)) {
      throw bad("self-defined ratios must satisfy 0 < min <= max <= 1");
    }
    // Structures are clamped up to the fact tokens, so raw only has to be longer.
    if (facts_per_instance * tokens_per_fact >= raw_tokens_min) {
      throw bad("raw_tokens_min must exceed the total fact tokens");
    }
  }
};

struct SyntheticInstance {
  std::string id;
  std::string raw_docs;
  FactSet facts;
  std::vector<StructureCandidate> candidates;  // one predefined, one self-defined
};

namespace detail {

inline std::string synthetic_word(std::mt19937_64& gen, char lead) {
  static constexpr std::string_view kCons = "bdfgklmnprstvz";
  static constexpr std::string_view kVow = "aeiou";
  std::string w(1, lead);
  const auto syllables = rng::uniform_int(gen, 2, 3);
  for (std::uint64_t i = 0; i < syllables; ++i) {
    w.push_back(kCons[rng::uniform_below(gen, kCons.size())]);
    w.push_back(kVow[rng::uniform_below(gen, kVow.size())]);
  }
  return w;
}

// Body of `length` tokens containing every fact once, padded with filler.
inline std::string layout(std::mt19937_64& gen, const std::vector<std::string>& facts,
                          std::size_t fact_tokens, std::size_t length, std::string_view sep) {
  const std::size_t filler = length - fact_tokens;
  std::vector<std::size_t> pad(facts.size() + 1, 0);
  for (std::size_t i = 0; i < filler; ++i) ++pad[rng::uniform_below(gen, pad.size())];
  std::vector<std::string> parts;
  for (std::size_t slot = 0; slot < pad.size(); ++slot) {
    std::vector<std::string> words;
    for (std::size_t k = 0; k < pad[slot]; ++k) words.push_back(synthetic_word(gen, 'x'));
    if (!words.empty()) parts.push_back(text::join(words, " "));
    if (slot < facts.size()) parts.push_back(facts[slot]);
  }
  return text::join(parts, sep);
}

}  // namespace detail

inline std::vector<SyntheticInstance> generate_synthetic(const SyntheticSpec& spec) {
  spec.check();
  static const std::vector<std::string> kSelfDefined = {"timeline", "date_comparison",
                                                        "entity_profile", "comparison_list"};
  const auto& predefined = predefined_formats();
  std::mt19937_64 gen(spec.seed);
  std::vector<SyntheticInstance> out;
  const std::size_t fact_tokens = spec.facts_per_instance * spec.tokens_per_fact;
  for (std::size_t n = 0; n < spec.instances; ++n) {
    SyntheticInstance inst;
    inst.id = "syn-" + std::to_string(n);
    inst.facts.matcher = Matcher::NormalizedContainment;
    for (std::size_t f = 0; f < spec.facts_per_instance; ++f) {
      std::vector<std::string> words;
      for (std::size_t t = 0; t < spec.tokens_per_fact; ++t) words.push_back(detail::synthetic_word(gen, 'q'));
      inst.facts.facts.push_back(text::join(words, " "));
    }
    const std::size_t raw_len = static_cast<std::size_t>(
        rng::uniform_int(gen, std::max(spec.raw_tokens_min, fact_tokens),
                         std::max(spec.raw_tokens_max, fact_tokens)));
    const double pre_ratio =
        rng::uniform_real(gen, spec.predefined_ratio_min, spec.predefined_ratio_max);
    const std::size_t pre_len =
        std::max(fact_tokens, static_cast<std::size_t>(std::floor(pre_ratio * static_cast<double>(raw_len))));
    const double self_ratio =
        rng::uniform_real(gen, spec.self_defined_ratio_min, spec.self_defined_ratio_max);
    const std::size_t self_len =
        std::max(fact_tokens, static_cast<std::size_t>(std::floor(self_ratio * static_cast<double>(pre_len))));

    inst.raw_docs = detail::layout(gen, inst.facts.facts, fact_tokens, raw_len, " ");
    const auto& pre = predefined[rng::uniform_below(gen, predefined.size())];
    const auto& self = kSelfDefined[rng::uniform_below(gen, kSelfDefined.size())];
    inst.candidates.push_back({pre.name, detail::layout(gen, inst.facts.facts, fact_tokens, pre_len, " | ")});
    inst.candidates.push_back({self, detail::layout(gen, inst.facts.facts, fact_tokens, self_len, "\n- ")});
    out.push_back(std::move(inst));
  }
  return out;
}

}  // namespace strux::density
