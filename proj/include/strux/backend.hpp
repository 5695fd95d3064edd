#pragma once

// Text generation backends used by the rollout engine.
//
// MockBackend reads a fixture directory:
//
//   <dir>/<digest>.txt    response text, verbatim
//   <dir>/<digest>.json   {"text": str, "logprobs": {"policy": [...],
//                           "reference": [...], "behavior": [...]}}
//   <dir>/rules.json      fallback rules, first match wins:
//       [{"match": "substring",            // required, matched against the prompt
//         "responses": [str, ...],         // pick responses[seed % size]
//         "response": str,                 // or a single response
//         "response_file": "name.txt",     // or a file next to rules.json
//         "error": "message",              // or simulate a backend failure
//         "logprobs": {...}}]              // optional, as above
//
// <digest> is the lowercase hex SHA-256 of the prompt bytes, one 0x00 byte,
// and the decimal seed (see mock_digest()).
//
// HttpBackend speaks the OpenAI-compatible completions protocol.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "strux/dataset.hpp"
#include "strux/error.hpp"
#include "strux/grpo.hpp"

namespace strux {

struct SamplingParams {
  double temperature = 1.0;
  int max_tokens = 1024;
  std::uint64_t seed = 0;
};

struct GenerationResult {
  std::string text;
  std::optional<grpo::TokenLogProbs> logprobs;
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  /// Throws Error(BackendError) on failure. Must be safe to call concurrently.
  virtual GenerationResult generate(const std::string& prompt, const SamplingParams& params) = 0;
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::BackendError, "SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

inline std::string mock_digest(std::string_view prompt, std::uint64_t seed) {
  std::string buf(prompt);
  buf.push_back('\0');
  buf += std::to_string(seed);
  return sha256_hex(buf);
}

class MockBackend final : public GenerationBackend {
 public:
  struct Rule {
    std::string match;
    std::vector<std::string> responses;
    std::optional<std::string> error;
    std::optional<grpo::TokenLogProbs> logprobs;
  };

  explicit MockBackend(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) {
      throw Error(ErrorCode::ConfigError, "fixture directory not found: " + dir_.string());
    }
    const auto rules = dir_ / "rules.json";
    if (std::filesystem::exists(rules)) load_rules(rules);
  }

  MockBackend(std::filesystem::path dir, std::vector<Rule> rules)
      : dir_(std::move(dir)), rules_(std::move(rules)) {}

  GenerationResult generate(const std::string& prompt, const SamplingParams& params) override {
    const std::string digest = mock_digest(prompt, params.seed);
    if (!dir_.empty()) {
      const auto json_path = dir_ / (digest + ".json");
      if (std::filesystem::exists(json_path)) return from_json_file(json_path);
      const auto txt_path = dir_ / (digest + ".txt");
      if (std::filesystem::exists(txt_path)) return {read_file(txt_path.string()), std::nullopt};
    }
    for (const Rule& r : rules_) {
      if (prompt.find(r.match) == std::string::npos) continue;
      if (r.error) throw Error(ErrorCode::BackendError, *r.error);
      if (r.responses.empty()) break;
      return {r.responses[params.seed % r.responses.size()], r.logprobs};
    }
    throw Error(ErrorCode::BackendError, "no fixture for prompt digest " + digest);
  }

 private:
  static std::optional<grpo::TokenLogProbs> optional_logprobs(const nlohmann::json& j) {
    if (!j.contains("logprobs") || j["logprobs"].is_null()) return std::nullopt;
    return grpo::logprobs_from_json(j["logprobs"]);
  }

  static GenerationResult from_json_file(const std::filesystem::path& p) {
    try {
      const auto j = nlohmann::json::parse(read_file(p.string()));
      return {j.at("text").get<std::string>(), optional_logprobs(j)};
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, p.string() + ": " + e.what());
    }
  }

  void load_rules(const std::filesystem::path& p) {
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(read_file(p.string()));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, p.string() + ": " + e.what());
    }
    if (!arr.is_array()) throw Error(ErrorCode::ParseError, p.string() + ": expected an array");
    for (const auto& j : arr) {
      if (!j.contains("match")) throw Error(ErrorCode::MissingField, "match in " + p.string());
      Rule r;
      r.match = j["match"].get<std::string>();
      if (j.contains("responses")) r.responses = j["responses"].get<std::vector<std::string>>();
      if (j.contains("response")) r.responses.push_back(j["response"].get<std::string>());
      if (j.contains("response_file")) {
        r.responses.push_back(read_file((p.parent_path() / j["response_file"].get<std::string>()).string()));
      }
      if (j.contains("error")) r.error = j["error"].get<std::string>();
      r.logprobs = optional_logprobs(j);
      rules_.push_back(std::move(r));
    }
  }

  std::filesystem::path dir_;
  std::vector<Rule> rules_;
};

/// OpenAI-compatible completions client. POSTs to `<base_url>/completions`.
class HttpBackend final : public GenerationBackend {
 public:
  struct Options {
    std::string base_url;  // e.g. http://localhost:8000/v1
    std::string model;
    std::string api_key;   // sent as a bearer token when non-empty
    bool chat = false;     // use /chat/completions with a single user message
    bool request_logprobs = true;
    int timeout_seconds = 120;
  };

  explicit HttpBackend(Options opts) : opts_(std::move(opts)) {
    if (opts_.base_url.empty()) throw Error(ErrorCode::ConfigError, "HTTP backend needs a base URL");
    const auto scheme_end = opts_.base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "base URL must include a scheme: " + opts_.base_url);
    }
    const auto path_begin = opts_.base_url.find('/', scheme_end + 3);
    host_ = opts_.base_url.substr(0, path_begin);
    prefix_ = path_begin == std::string::npos ? "" : opts_.base_url.substr(path_begin);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  nlohmann::json request_body(const std::string& prompt, const SamplingParams& p) const {
    nlohmann::json body = {{"model", opts_.model},
                           {"temperature", p.temperature},
                           {"max_tokens", p.max_tokens},
                           {"n", 1},
                           {"seed", p.seed}};
    if (opts_.chat) {
      body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
      body["logprobs"] = opts_.request_logprobs;
    } else {
      body["prompt"] = prompt;
      if (opts_.request_logprobs) body["logprobs"] = 1;
    }
    return body;
  }

  /// Extracts text and per-token log-probs from a response body. The sampled
  /// model is the only one the endpoint exposes, so its log-probs fill all
  /// three slots; reference scores come from the external trainer.
  static GenerationResult parse_response(const std::string& body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::BackendError, std::string("malformed response: ") + e.what());
    }
    if (j.contains("error")) throw Error(ErrorCode::BackendError, j["error"].dump());
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
      throw Error(ErrorCode::BackendError, "response has no choices");
    }
    const auto& c = j["choices"][0];
    GenerationResult res;
    std::vector<double> lp;
    if (c.contains("text")) {
      res.text = c["text"].get<std::string>();
      if (c.contains("logprobs") && c["logprobs"].is_object() &&
          c["logprobs"].contains("token_logprobs")) {
        for (const auto& v : c["logprobs"]["token_logprobs"]) {
          if (v.is_number()) lp.push_back(v.get<double>());
        }
      }
    } else if (c.contains("message")) {
      res.text = c["message"].value("content", "");
      if (c.contains("logprobs") && c["logprobs"].is_object() && c["logprobs"].contains("content")) {
        for (const auto& t : c["logprobs"]["content"]) lp.push_back(t.at("logprob").get<double>());
      }
    } else {
      throw Error(ErrorCode::BackendError, "choice has neither text nor message");
    }
    if (!lp.empty()) res.logprobs = grpo::TokenLogProbs{lp, lp, lp};
    return res;
  }

  GenerationResult generate(const std::string& prompt, const SamplingParams& params) override {
    httplib::Client cli(host_);
    cli.set_connection_timeout(opts_.timeout_seconds, 0);
    cli.set_read_timeout(opts_.timeout_seconds, 0);
    cli.set_write_timeout(opts_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);
    const std::string path = prefix_ + (opts_.chat ? "/chat/completions" : "/completions");
    auto res = cli.Post(path, headers, request_body(prompt, params).dump(), "application/json");
    if (!res) {
      throw Error(ErrorCode::BackendError,
                  "request to " + host_ + path + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::BackendError,
                  "HTTP " + std::to_string(res->status) + " from " + host_ + path + ": " + res->body);
    }
    return parse_response(res->body);
  }

 private:
  Options opts_;
  std::string host_;
  std::string prefix_;
};

}  // namespace strux
