#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"

namespace {

using strux::cli::RunConfig;

// Flags only land in the config when given, so they can override the
// environment and the config file without clobbering them with defaults.
struct RunFlags {
  std::string config_path;
  nlohmann::json set = nlohmann::json::object();

  template <typename T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<T>(flag, [this, key](const T& v) { set[key] = v; }, help);
  }

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file");
    add<std::string>(app, "--dataset", "dataset", "dataset JSONL");
    app->add_option_function<std::string>(
           "--backend", [this](const std::string& v) { set["backend"] = v; }, "generation backend")
        ->check(CLI::IsMember({"mock", "http"}));
    add<std::string>(app, "--endpoint", "endpoint", "base URL of an OpenAI-compatible server");
    add<std::string>(app, "--fixtures", "fixtures", "mock fixture directory");
    add<std::string>(app, "--model", "model", "model name sent to the endpoint");
    app->add_flag_function("--chat", [this](std::int64_t) { set["chat"] = true; },
                           "use the chat completions route");
    add<std::size_t>(app, "--k", "k", "samples per query");
    add<double>(app, "--lambda", "lambda", "constant re-inference weight");
    add<std::string>(app, "--lambda-schedule", "lambda_schedule",
                     "constant:V or linear:START:END:STEPS");
    add<std::uint64_t>(app, "--seed", "seed", "base seed");
    add<std::size_t>(app, "--parallel", "parallel", "concurrent backend calls");
    add<std::string>(app, "--out", "out", "output directory");
    add<double>(app, "--epsilon", "epsilon", "ratio clip range");
    add<double>(app, "--beta", "beta", "KL weight");
    add<double>(app, "--temperature", "temperature", "sampling temperature");
    add<int>(app, "--max-tokens", "max_tokens", "generation length limit");
    add<int>(app, "--max-retries", "max_retries", "retries per backend call");
    add<std::size_t>(app, "--copy-ngram", "copy_ngram", "copy detection n-gram length");
    app->add_flag_function("--penalize-violations",
                           [this](std::int64_t) { set["penalize_violations"] = true; },
                           "zero the direct reward of trajectories with violations");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg.apply_file(config_path);
    cfg.apply_env();
    cfg.apply(set);
    return cfg;
  }
};

std::vector<strux::RolloutGroup> collect_rollouts(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw strux::Error(strux::ErrorCode::ConfigError, "--dataset is required");
  const auto dataset = strux::load_jsonl(cfg.dataset);
  auto backend = strux::cli::make_backend(cfg);
  std::vector<strux::RolloutGroup> groups;
  strux::run_rollouts(dataset, cfg.rollout_config(), *backend,
                      [&](const strux::RolloutGroup& g) { groups.push_back(g); });
  return groups;
}

// Writes to `path` when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw strux::Error(strux::ErrorCode::IoError, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured-knowledge rollout, scoring and analysis tools"};
  app.require_subcommand(1);

  // rollout
  RunFlags rollout_flags;
  auto* rollout = app.add_subcommand("rollout", "sample trajectory pairs and write training records");
  rollout_flags.attach(rollout);

  // score-export
  std::string se_rollouts, se_out;
  double se_epsilon = 0.2, se_beta = 0.001;
  auto* score_export = app.add_subcommand("score-export", "recompute GRPO terms from rollouts");
  score_export->add_option("--rollouts", se_rollouts, "rollouts.jsonl")->required();
  score_export->add_option("--epsilon", se_epsilon, "ratio clip range");
  score_export->add_option("--beta", se_beta, "KL weight");
  score_export->add_option("--out", se_out, "output JSONL (default stdout)");

  // sweep-lambda
  RunFlags sweep_flags;
  std::string sw_rollouts, sw_values = "0,0.1,0.2,0.3", sw_format = "text";
  auto* sweep = app.add_subcommand("sweep-lambda", "re-score rollouts under several lambdas");
  sweep_flags.attach(sweep);
  sweep->add_option("--rollouts", sw_rollouts, "existing rollouts.jsonl (skips generation)");
  sweep->add_option("--values", sw_values, "comma-separated lambdas");
  sweep->add_option("--format", sw_format)->check(CLI::IsMember({"text", "json", "csv"}));

  // eval
  std::vector<std::string> ev_predictions, ev_datasets, ev_names;
  std::string ev_format = "text";
  auto* eval = app.add_subcommand("eval", "EM/F1 report for prediction files");
  eval->add_option("--predictions", ev_predictions, "predictions JSONL {id, prediction}")->required();
  eval->add_option("--dataset", ev_datasets, "dataset JSONL, one per --predictions")->required();
  eval->add_option("--name", ev_names, "report label, one per --predictions");
  eval->add_option("--format", ev_format)->check(CLI::IsMember({"text", "json", "csv"}));

  // density
  std::string de_corpus, de_synthetic, de_out, de_format = "text";
  std::size_t de_instances = 0;
  std::uint64_t de_seed = 0;
  auto* dens = app.add_subcommand("density", "check information density ordering");
  auto* de_corpus_opt = dens->add_option("--corpus", de_corpus, "density corpus JSONL");
  auto* de_syn_opt = dens->add_option("--synthetic", de_synthetic,
                                      "synthetic spec JSON, or 'default'");
  de_corpus_opt->excludes(de_syn_opt);
  auto* de_inst_opt = dens->add_option("--instances", de_instances, "synthetic instance count");
  auto* de_seed_opt = dens->add_option("--seed", de_seed, "synthetic seed");
  dens->add_option("--out", de_out, "write the JSON report here");
  dens->add_option("--format", de_format)->check(CLI::IsMember({"text", "json"}));

  // validate
  std::string va_traj, va_docs, va_format = "text";
  std::size_t va_ngram = 30;
  bool va_strict = false;
  auto* val = app.add_subcommand("validate", "parse and lint trajectories");
  val->add_option("--trajectories", va_traj, ".jsonl of {id, text, docs?} or a plain trace")
      ->required();
  val->add_option("--docs", va_docs, ".json array or one document per line");
  val->add_option("--copy-ngram", va_ngram, "copy detection n-gram length");
  val->add_flag("--strict", va_strict, "exit 1 on missing or placeholder answers/formats");
  val->add_option("--format", va_format)->check(CLI::IsMember({"text", "json"}));

  // convert-dataset
  std::string cv_input, cv_kind = "hotpotqa", cv_out;
  auto* conv = app.add_subcommand("convert-dataset", "convert a raw HotpotQA/2Wiki dump to JSONL");
  conv->add_option("--input", cv_input, "raw JSON array (may be .gz)")->required();
  conv->add_option("--kind", cv_kind)->check(CLI::IsMember({"hotpotqa", "2wiki"}));
  conv->add_option("--out", cv_out, "output JSONL")->required();

  // sample
  std::string sa_dataset, sa_out;
  std::size_t sa_n = 0;
  std::uint64_t sa_seed = 0;
  auto* samp = app.add_subcommand("sample", "draw a reproducible subset");
  samp->add_option("--dataset", sa_dataset, "dataset JSONL")->required();
  samp->add_option("--n", sa_n, "subset size")->required();
  samp->add_option("--seed", sa_seed, "sampling seed");
  samp->add_option("--out", sa_out, "output JSONL")->required();

  // digest
  std::string dg_prompt;
  std::uint64_t dg_seed = 0;
  auto* dig = app.add_subcommand("digest", "print the mock fixture name for a prompt file");
  dig->add_option("--prompt-file", dg_prompt, "prompt bytes")->required();
  dig->add_option("--seed", dg_seed, "sample seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : strux::cli::kExitError;
  }

  try {
    if (*rollout) return strux::cli::cmd_rollout(rollout_flags.resolve(), std::cout);

    if (*score_export) {
      strux::grpo::ObjectiveConfig oc;
      oc.epsilon = se_epsilon;
      oc.beta = se_beta;
      Sink sink(se_out);
      return strux::cli::cmd_score_export(se_rollouts, oc, sink.stream());
    }

    if (*sweep) {
      const auto values = strux::cli::parse_values(sw_values);
      const RunConfig cfg = sweep_flags.resolve();
      const auto groups =
          sw_rollouts.empty() ? collect_rollouts(cfg) : strux::cli::load_rollouts(sw_rollouts);
      strux::RewardPolicy policy;
      policy.penalize_violations = cfg.penalize_violations;
      std::cout << strux::cli::render_sweep(strux::cli::sweep_lambda(groups, values, policy),
                                            strux::parse_report_format(sw_format));
      return strux::cli::kExitOk;
    }

    if (*eval) {
      if (ev_datasets.size() != ev_predictions.size()) {
        throw strux::Error(strux::ErrorCode::ConfigError,
                           "give one --dataset per --predictions");
      }
      if (!ev_names.empty() && ev_names.size() != ev_predictions.size()) {
        throw strux::Error(strux::ErrorCode::ConfigError, "give one --name per --predictions");
      }
      std::vector<strux::cli::EvalInput> inputs;
      for (std::size_t i = 0; i < ev_predictions.size(); ++i) {
        std::string name = ev_names.empty()
                               ? std::filesystem::path(ev_datasets[i]).stem().string()
                               : ev_names[i];
        inputs.push_back({std::move(name), ev_predictions[i], ev_datasets[i]});
      }
      return strux::cli::cmd_eval(inputs, strux::parse_report_format(ev_format), std::cout);
    }

    if (*dens) {
      std::vector<strux::cli::DensityCase> cases;
      if (!de_corpus.empty()) {
        cases = strux::cli::load_density_corpus(de_corpus);
      } else {
        strux::density::SyntheticSpec spec;
        if (!de_synthetic.empty() && de_synthetic != "default") {
          spec = strux::density::SyntheticSpec::from_json(
              nlohmann::json::parse(strux::read_file(de_synthetic)));
        }
        if (*de_inst_opt) spec.instances = de_instances;
        if (*de_seed_opt) spec.seed = de_seed;
        spec.check();
        cases = strux::cli::synthetic_cases(spec);
      }
      return strux::cli::cmd_density(cases, de_out, strux::parse_report_format(de_format),
                                     std::cout);
    }

    if (*val) {
      strux::ValidationPolicy policy;
      policy.copy_ngram = va_ngram;
      const auto inputs = strux::cli::load_trajectories(va_traj);
      const auto docs = va_docs.empty() ? std::vector<std::string>{} : strux::cli::load_docs(va_docs);
      return strux::cli::cmd_validate(inputs, docs, policy, va_strict,
                                      strux::parse_report_format(va_format), std::cout);
    }

    if (*conv) {
      const auto kind =
          cv_kind == "2wiki" ? strux::RawDatasetKind::TwoWiki : strux::RawDatasetKind::HotpotQA;
      const auto out = strux::convert_raw(strux::read_file(cv_input), kind);
      strux::write_jsonl(cv_out, out);
      std::cout << "converted " << out.size() << " records\n";
      return strux::cli::kExitOk;
    }

    if (*samp) {
      const auto out = strux::sample(strux::load_jsonl(sa_dataset), sa_n, sa_seed);
      strux::write_jsonl(sa_out, out);
      std::cout << "sampled " << out.size() << " records\n";
      return strux::cli::kExitOk;
    }

    if (*dig) {
      std::cout << strux::mock_digest(strux::read_file(dg_prompt), dg_seed) << "\n";
      return strux::cli::kExitOk;
    }
  } catch (const strux::Error& e) {
    std::cerr << "error (" << strux::to_string(e.code()) << "): " << e.what() << "\n";
    return strux::cli::kExitError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error (ParseError): " << e.what() << "\n";
    return strux::cli::kExitError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (IoError): " << e.what() << "\n";
    return strux::cli::kExitError;
  }
  return strux::cli::kExitOk;
}
