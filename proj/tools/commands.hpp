#pragma once

// Subcommand implementations behind the `strux` executable. Each returns a
// process exit code: 0 success, 1 a --strict validation finding, 2 a
// configuration, I/O or schema error.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strux/strux.hpp"

namespace strux::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFinding = 1;
inline constexpr int kExitError = 2;

/// Resolved settings for rollout-style commands. Layered as
/// defaults < config file < environment < flags.
struct RunConfig {
  std::string dataset;
  std::string backend = "mock";
  std::string endpoint;
  std::string fixtures;
  std::string model = "default";
  bool chat = false;
  std::size_t k = 8;
  std::string lambda_schedule = "constant:0.2";
  std::uint64_t seed = 0;
  std::size_t parallel = 1;
  std::string out = "out";
  double epsilon = 0.2;
  double beta = 0.001;
  double temperature = 1.0;
  int max_tokens = 1024;
  int max_retries = 2;
  std::size_t copy_ngram = 30;
  bool penalize_violations = false;
  std::string api_key;  // environment only; never written out

  void apply(const nlohmann::json& j) {
    try {
      dataset = j.value("dataset", dataset);
      backend = j.value("backend", backend);
      endpoint = j.value("endpoint", endpoint);
      fixtures = j.value("fixtures", fixtures);
      model = j.value("model", model);
      chat = j.value("chat", chat);
      k = j.value("k", k);
      if (j.contains("lambda")) lambda_schedule = "constant:" + j["lambda"].dump();
      lambda_schedule = j.value("lambda_schedule", lambda_schedule);
      seed = j.value("seed", seed);
      parallel = j.value("parallel", parallel);
      out = j.value("out", out);
      epsilon = j.value("epsilon", epsilon);
      beta = j.value("beta", beta);
      temperature = j.value("temperature", temperature);
      max_tokens = j.value("max_tokens", max_tokens);
      max_retries = j.value("max_retries", max_retries);
      copy_ngram = j.value("copy_ngram", copy_ngram);
      penalize_violations = j.value("penalize_violations", penalize_violations);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigError, e.what());
    }
  }

  void apply_file(const std::string& path) {
    try {
      apply(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
  }

  void apply_env() {
    const auto env = [](const char* name) -> const char* {
      const char* v = std::getenv(name);
      return (v && *v) ? v : nullptr;
    };
    if (const char* v = env("STRUX_BACKEND")) backend = v;
    if (const char* v = env("STRUX_ENDPOINT")) endpoint = v;
    if (const char* v = env("STRUX_MODEL")) model = v;
    if (const char* v = env("STRUX_FIXTURES")) fixtures = v;
    if (const char* v = env("STRUX_API_KEY")) api_key = v;
  }

  nlohmann::json to_json() const {
    return {{"dataset", dataset},
            {"backend", backend},
            {"endpoint", endpoint},
            {"fixtures", fixtures},
            {"model", model},
            {"chat", chat},
            {"k", k},
            {"lambda_schedule", lambda_schedule},
            {"seed", seed},
            {"parallel", parallel},
            {"out", out},
            {"epsilon", epsilon},
            {"beta", beta},
            {"temperature", temperature},
            {"max_tokens", max_tokens},
            {"max_retries", max_retries},
            {"copy_ngram", copy_ngram},
            {"penalize_violations", penalize_violations}};
  }

  RolloutConfig rollout_config() const {
    RolloutConfig rc;
    rc.k = k;
    rc.lambda = LambdaSchedule::parse(lambda_schedule);
    rc.seed = seed;
    rc.parallel = parallel;
    rc.max_retries = max_retries;
    rc.sampling.temperature = temperature;
    rc.sampling.max_tokens = max_tokens;
    rc.validation.copy_ngram = copy_ngram;
    rc.reward.penalize_violations = penalize_violations;
    return rc;
  }

  grpo::ObjectiveConfig objective_config() const {
    grpo::ObjectiveConfig oc;
    oc.epsilon = epsilon;
    oc.beta = beta;
    oc.check();
    return oc;
  }
};

inline std::unique_ptr<GenerationBackend> make_backend(const RunConfig& cfg) {
  if (cfg.backend == "mock") {
    if (cfg.fixtures.empty()) throw Error(ErrorCode::ConfigError, "mock backend needs --fixtures");
    return std::make_unique<MockBackend>(cfg.fixtures);
  }
  if (cfg.backend == "http") {
    HttpBackend::Options o;
    o.base_url = cfg.endpoint;
    o.model = cfg.model;
    o.api_key = cfg.api_key;
    o.chat = cfg.chat;
    return std::make_unique<HttpBackend>(o);
  }
  throw Error(ErrorCode::ConfigError, "unknown backend '" + cfg.backend + "'");
}

inline std::string fixed(double v, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

inline std::vector<RolloutGroup> load_rollouts(const std::string& path) {
  std::vector<RolloutGroup> groups;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      groups.push_back(group_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return groups;
}

// ---------------------------------------------------------------------------
// rollout

struct RolloutStats {
  std::size_t groups = 0;
  std::size_t samples = 0;
  std::size_t with_format = 0;
  std::size_t self_contained = 0;
  std::size_t failed = 0;
  double reward_sum = 0.0;
};

inline int cmd_rollout(const RunConfig& cfg, std::ostream& out) {
  if (cfg.dataset.empty()) throw Error(ErrorCode::ConfigError, "--dataset is required");
  const auto dataset = load_jsonl(cfg.dataset);
  const RolloutConfig rc = cfg.rollout_config();
  const grpo::ObjectiveConfig oc = cfg.objective_config();
  auto backend = make_backend(cfg);

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out);
  const fs::path dir(cfg.out);
  write_file((dir / "config.json").string(), cfg.to_json().dump(2) + "\n");

  const auto started = std::chrono::system_clock::now();
  std::string rollouts;
  std::string exports;
  RolloutStats st;
  run_rollouts(dataset, rc, *backend, [&](const RolloutGroup& g) {
    rollouts += to_json(g).dump();
    rollouts.push_back('\n');
    for (const auto& rec : export_group(g, oc)) {
      exports += rec.dump();
      exports.push_back('\n');
    }
    ++st.groups;
    for (const auto& p : g.pairs) {
      ++st.samples;
      st.reward_sum += p.breakdown.total;
      if (p.failed) ++st.failed;
      if (!p.failed && p.primary.has_format()) ++st.with_format;
      if (p.breakdown.reinf == 1.0) ++st.self_contained;
    }
  });
  write_file((dir / "rollouts.jsonl").string(), rollouts);
  write_file((dir / "grpo_export.jsonl").string(), exports);

  const auto finished = std::chrono::system_clock::now();
  const auto stamp = [](std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::ostringstream ss;
    ss << std::put_time(std::gmtime(&tt), "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
  };
  write_file((dir / "run.log").string(), "started " + stamp(started) + "\nfinished " +
                                             stamp(finished) + "\n");

  const auto pct = [&](std::size_t n) {
    return st.samples ? fixed(100.0 * static_cast<double>(n) / static_cast<double>(st.samples), 2)
                      : std::string("0.00");
  };
  out << "groups: " << st.groups << "\n"
      << "samples: " << st.samples << "\n"
      << "mean_reward: "
      << fixed(st.samples ? st.reward_sum / static_cast<double>(st.samples) : 0.0) << "\n"
      << "with_format_pct: " << pct(st.with_format) << "\n"
      << "self_contained_pct: " << pct(st.self_contained) << "\n"
      << "failed_samples: " << st.failed << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// score-export

inline int cmd_score_export(const std::string& rollouts_path, const grpo::ObjectiveConfig& oc,
                            std::ostream& out) {
  oc.check();
  const auto groups = load_rollouts(rollouts_path);
  std::vector<grpo::GroupInput> inputs;
  for (const auto& g : groups) {
    for (const auto& rec : export_group(g, oc)) out << rec.dump() << "\n";
    grpo::GroupInput in;
    for (const auto& p : g.pairs) {
      in.rewards.push_back(p.breakdown.total);
      in.logprobs.push_back(p.logprobs.value_or(grpo::TokenLogProbs{}));
    }
    inputs.push_back(std::move(in));
  }
  if (!inputs.empty()) {
    std::cerr << "objective J = " << grpo::objective(inputs, oc).value << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep-lambda

struct SweepRow {
  double lambda = 0.0;
  std::size_t n = 0;
  double mean_direct = 0.0;
  double mean_reinf = 0.0;
  double mean_total = 0.0;
};

/// Re-scores stored trajectories under each lambda. Never calls a backend.
inline std::vector<SweepRow> sweep_lambda(const std::vector<RolloutGroup>& groups,
                                          const std::vector<double>& values,
                                          const RewardPolicy& policy = {}) {
  std::vector<SweepRow> rows;
  for (double lambda : values) {
    SweepRow row;
    row.lambda = lambda;
    double d = 0.0, r = 0.0, t = 0.0;
    for (const auto& g : groups) {
      for (const auto& p : g.pairs) {
        const RewardBreakdown b = score_pair(p, g.query.golds, lambda, policy);
        d += b.direct;
        r += b.reinf;
        t += b.total;
        ++row.n;
      }
    }
    if (row.n) {
      const double n = static_cast<double>(row.n);
      row.mean_direct = d / n;
      row.mean_reinf = r / n;
      row.mean_total = t / n;
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::string render_sweep(const std::vector<SweepRow>& rows, ReportFormat fmt) {
  if (fmt == ReportFormat::Json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
      arr.push_back({{"lambda", r.lambda},
                     {"n", r.n},
                     {"mean_direct", r.mean_direct},
                     {"mean_reinf", r.mean_reinf},
                     {"mean_total", r.mean_total}});
    }
    return arr.dump(2) + "\n";
  }
  const char* sep = fmt == ReportFormat::Csv ? "," : "\t";
  std::string s = std::string("lambda") + sep + "n" + sep + "mean_direct" + sep + "mean_reinf" +
                  sep + "mean_total\n";
  for (const auto& r : rows) {
    s += fixed(r.lambda, 4) + sep + std::to_string(r.n) + sep + fixed(r.mean_direct, 6) + sep +
         fixed(r.mean_reinf, 6) + sep + fixed(r.mean_total, 6) + "\n";
  }
  return s;
}

inline std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> v;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (text::trim(item).empty()) continue;
    try {
      v.push_back(std::stod(item));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ConfigError, "bad lambda value '" + item + "'");
    }
    if (v.back() < 0.0) throw Error(ErrorCode::NegativeLambda, "lambda values must be >= 0");
  }
  if (v.empty()) throw Error(ErrorCode::ConfigError, "no lambda values given");
  return v;
}

// ---------------------------------------------------------------------------
// eval

struct EvalInput {
  std::string name;
  std::string predictions;
  std::string dataset;
};

inline MetricsSummary evaluate_files(const std::string& predictions_path,
                                     const std::string& dataset_path) {
  const auto dataset = load_jsonl(dataset_path);
  std::map<std::string, const QueryInstance*> by_id;
  for (const auto& q : dataset) by_id[q.id] = &q;

  std::vector<Prediction> items;
  std::istringstream in(read_file(predictions_path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, predictions_path + " line " + std::to_string(lineno));
    }
    if (!j.contains("id")) throw Error(ErrorCode::MissingField, "id at line " + std::to_string(lineno));
    if (!j.contains("prediction")) {
      throw Error(ErrorCode::MissingField, "prediction at line " + std::to_string(lineno));
    }
    const std::string id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::ParseError, "prediction id '" + id + "' is not in " + dataset_path);
    }
    items.push_back({j["prediction"].get<std::string>(), it->second->golds});
  }
  return evaluate(items);
}

inline int cmd_eval(const std::vector<EvalInput>& inputs, ReportFormat fmt, std::ostream& out) {
  std::map<std::string, MetricsSummary> summaries;
  for (const auto& in : inputs) summaries[in.name] = evaluate_files(in.predictions, in.dataset);
  out << report(summaries, fmt);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// density

struct DensityCase {
  std::string id;
  std::string raw_docs;
  density::FactSet facts;
  std::vector<density::StructureCandidate> candidates;
};

inline std::vector<DensityCase> load_density_corpus(const std::string& path) {
  std::vector<DensityCase> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DensityCase c;
      c.id = j.value("id", std::to_string(lineno));
      const auto& raw = j.at("raw_docs");
      if (raw.is_array()) {
        c.raw_docs = text::join(raw.get<std::vector<std::string>>(), "\n");
      } else {
        c.raw_docs = raw.get<std::string>();
      }
      c.facts.facts = j.at("facts").get<std::vector<std::string>>();
      if (j.contains("matcher")) c.facts.matcher = density::parse_matcher(j["matcher"].get<std::string>());
      for (const auto& cj : j.value("candidates", nlohmann::json::array())) {
        c.candidates.push_back({cj.at("label").get<std::string>(), cj.at("body").get<std::string>()});
      }
      out.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<DensityCase> synthetic_cases(const density::SyntheticSpec& spec) {
  std::vector<DensityCase> out;
  for (auto& inst : density::generate_synthetic(spec)) {
    out.push_back({inst.id, inst.raw_docs, inst.facts, inst.candidates});
  }
  return out;
}

inline nlohmann::json density_report(const std::vector<DensityCase>& cases) {
  std::vector<density::OrderingReport> reps;
  for (const auto& c : cases) {
    reps.push_back(density::verify_ordering(c.raw_docs, c.candidates, c.facts));
    reps.back().id = c.id;
  }
  return density::report_json(reps);
}

inline int cmd_density(const std::vector<DensityCase>& cases, const std::string& out_path,
                       ReportFormat fmt, std::ostream& out) {
  const auto rep = density_report(cases);
  if (!out_path.empty()) write_file(out_path, rep.dump(2) + "\n");
  if (fmt == ReportFormat::Json && out_path.empty()) {
    out << rep.dump(2) << "\n";
    return kExitOk;
  }
  const auto& s = rep["summary"];
  out << "instances: " << s["n"].get<std::size_t>() << "\n"
      << "left_pass: " << s["left_pass"].get<std::size_t>() << "\n"
      << "chain_pass: " << s["chain_pass"].get<std::size_t>() << "\n"
      << "chain_pass_with_self_defined: " << s["chain_pass_with_self_defined"].get<std::size_t>()
      << "\n"
      << "premise_unmet: " << s["premise_unmet"].get<std::size_t>() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate

struct TrajectoryInput {
  std::string id;
  std::string text;
  std::optional<std::vector<std::string>> docs;
};

/// `.jsonl`: one {"id", "text", "docs"?} object per line; anything else is a
/// single trajectory.
inline std::vector<TrajectoryInput> load_trajectories(const std::string& path) {
  const std::string contents = read_file(path);
  std::vector<TrajectoryInput> out;
  if (!ends_with(path, ".jsonl") && !ends_with(path, ".jsonl.gz")) {
    out.push_back({std::filesystem::path(path).stem().string(), contents, std::nullopt});
    return out;
  }
  std::istringstream in(contents);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TrajectoryInput t;
      t.id = j.value("id", std::to_string(lineno));
      t.text = j.at("text").get<std::string>();
      if (j.contains("docs")) t.docs = j["docs"].get<std::vector<std::string>>();
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

/// `.json`: array of strings; otherwise one document per non-empty line.
inline std::vector<std::string> load_docs(const std::string& path) {
  const std::string contents = read_file(path);
  if (ends_with(path, ".json")) {
    try {
      return nlohmann::json::parse(contents).get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
  }
  std::vector<std::string> docs;
  std::istringstream in(contents);
  std::string line;
  while (std::getline(in, line)) {
    if (!text::trim(line).empty()) docs.push_back(line);
  }
  return docs;
}

inline int cmd_validate(const std::vector<TrajectoryInput>& inputs,
                        const std::vector<std::string>& docs, const ValidationPolicy& policy,
                        bool strict, ReportFormat fmt, std::ostream& out) {
  bool finding = false;
  for (const auto& in : inputs) {
    const Trajectory t = parse_trajectory(in.text);
    const ValidationReport r = validate(t, in.docs.value_or(docs), policy);
    if (r.has(RuleId::NoAnswer) || r.has(RuleId::PlaceholderAnswer) ||
        r.has(RuleId::PlaceholderFormat)) {
      finding = true;
    }
    if (fmt == ReportFormat::Json) {
      out << nlohmann::json{{"id", in.id}, {"trajectory", to_json(t)}, {"validation", to_json(r)}}.dump()
          << "\n";
    } else {
      out << in.id << ": " << t.blocks.size() << " blocks, ";
      if (r.is_clean()) {
        out << "clean\n";
      } else {
        out << r.violations.size() << " violation(s)\n";
        for (const auto& v : r.violations) {
          out << "  " << to_string(v.rule) << " [" << v.span.begin << "," << v.span.end
              << ") " << v.message << "\n";
        }
      }
    }
  }
  return (strict && finding) ? kExitFinding : kExitOk;
}

}  // namespace strux::cli
