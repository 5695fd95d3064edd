#pragma once

// QA dataset records, JSONL persistence and reproducible sampling.
//
// Record schema, one JSON object per line:
//   {"id": str, "question": str, "docs": [str], "golden_answers": [str]}
// Files ending in ".gz" are read through zlib.

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "strux/error.hpp"
#include "strux/random.hpp"
#include "strux/text.hpp"

namespace strux {

struct QueryInstance {
  std::string id;
  std::string question;
  std::vector<std::string> docs;
  std::vector<std::string> golds;

  friend bool operator==(const QueryInstance&, const QueryInstance&) = default;
};

inline nlohmann::json to_json(const QueryInstance& q) {
  return {{"id", q.id}, {"question", q.question}, {"docs", q.docs}, {"golden_answers", q.golds}};
}

inline QueryInstance query_from_json(const nlohmann::json& j, std::size_t line = 0) {
  const auto where = [&] { return line ? " at line " + std::to_string(line) : std::string(); };
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "record is not an object" + where());
  for (const char* field : {"id", "question", "docs", "golden_answers"}) {
    if (!j.contains(field)) {
      throw Error(ErrorCode::MissingField, std::string(field) + where());
    }
  }
  try {
    QueryInstance q;
    q.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    q.question = j.at("question").get<std::string>();
    q.docs = j.at("docs").get<std::vector<std::string>>();
    q.golds = j.at("golden_answers").get<std::vector<std::string>>();
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string(e.what()) + where());
  }
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

/// Whole file contents; gunzips when the path ends in ".gz".
inline std::string read_file(const std::string& path) {
  if (ends_with(path, ".gz")) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::string out;
    char buf[1 << 15];
    int n = 0;
    while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    const bool bad = n < 0;
    gzclose(f);
    if (bad) throw Error(ErrorCode::IoError, "corrupt gzip stream in " + path);
    return out;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << contents;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

inline std::vector<QueryInstance> parse_jsonl(const std::string& contents) {
  std::vector<QueryInstance> out;
  std::unordered_set<std::string> seen;
  std::istringstream in(contents);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": " + e.what());
    }
    QueryInstance q = query_from_json(j, lineno);
    if (!seen.insert(q.id).second) {
      throw Error(ErrorCode::DuplicateId,
                  "id '" + q.id + "' repeated at line " + std::to_string(lineno));
    }
    out.push_back(std::move(q));
  }
  return out;
}

inline std::vector<QueryInstance> load_jsonl(const std::string& path) {
  return parse_jsonl(read_file(path));
}

inline std::string to_jsonl(const std::vector<QueryInstance>& instances) {
  std::string out;
  for (const auto& q : instances) {
    out += to_json(q).dump();
    out.push_back('\n');
  }
  return out;
}

inline void write_jsonl(const std::string& path, const std::vector<QueryInstance>& instances) {
  write_file(path, to_jsonl(instances));
}

/// Uniform sample without replacement: partial Fisher-Yates over indices,
/// driven by mt19937_64(seed). Output order is the shuffle order.
inline std::vector<QueryInstance> sample(const std::vector<QueryInstance>& instances, std::size_t n,
                                         std::uint64_t seed) {
  if (n > instances.size()) {
    throw Error(ErrorCode::SampleTooLarge, "requested " + std::to_string(n) + " of " +
                                               std::to_string(instances.size()) + " instances");
  }
  std::vector<std::size_t> idx(instances.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng::uniform_below(gen, idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<QueryInstance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(instances[idx[i]]);
  return out;
}

// ---------------------------------------------------------------------------
// Converters for raw benchmark dumps. HotpotQA and 2WikiMultihopQA share the
// layout {"_id", "question", "answer", "context": [[title, [sentence, ...]]]}.

enum class RawDatasetKind { HotpotQA, TwoWiki };

inline QueryInstance convert_record(const nlohmann::json& r, RawDatasetKind kind) {
  QueryInstance q;
  if (r.contains("_id")) {
    q.id = r["_id"].get<std::string>();
  } else if (r.contains("id")) {
    q.id = r["id"].is_string() ? r["id"].get<std::string>() : r["id"].dump();
  } else {
    throw Error(ErrorCode::MissingField, "_id");
  }
  if (!r.contains("question")) throw Error(ErrorCode::MissingField, "question");
  if (!r.contains("answer")) throw Error(ErrorCode::MissingField, "answer");
  if (!r.contains("context")) throw Error(ErrorCode::MissingField, "context");
  q.question = r["question"].get<std::string>();
  q.golds.push_back(r["answer"].get<std::string>());
  if (kind == RawDatasetKind::TwoWiki && r.contains("answer_aliases")) {
    for (const auto& a : r["answer_aliases"]) q.golds.push_back(a.get<std::string>());
  }
  for (const auto& entry : r["context"]) {
    const std::string title = entry.at(0).get<std::string>();
    std::string body;
    for (const auto& sent : entry.at(1)) {
      const std::string s(text::trim(sent.get<std::string>()));
      if (s.empty()) continue;
      if (!body.empty()) body.push_back(' ');
      body += s;
    }
    q.docs.push_back(title + ": " + body);
  }
  return q;
}

inline std::vector<QueryInstance> convert_raw(const std::string& contents, RawDatasetKind kind) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(contents);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!root.is_array()) throw Error(ErrorCode::ParseError, "expected a JSON array of records");
  std::vector<QueryInstance> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : root) {
    try {
      out.push_back(convert_record(r, kind));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, e.what());
    }
    if (!seen.insert(out.back().id).second) {
      throw Error(ErrorCode::DuplicateId, "id '" + out.back().id + "'");
    }
  }
  return out;
}

}  // namespace strux
