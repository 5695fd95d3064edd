#pragma once

// Block grammar for generated reasoning traces:
//
//   <think> ... </think>
//   <format: NAME> ... </format: NAME>
//   <answer> ... </answer>
//
// Tags are literal and case-sensitive. Text outside blocks is ignored. The
// first matching close tag terminates an open tag (no nesting).

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "strux/text.hpp"

namespace strux {

enum class BlockKind { Think, Format, Answer };

inline std::string_view to_string(BlockKind k) {
  switch (k) {
    case BlockKind::Think: return "Think";
    case BlockKind::Format: return "Format";
    case BlockKind::Answer: return "Answer";
  }
  return "?";
}

/// Half-open byte range into the raw text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

struct Block {
  BlockKind kind = BlockKind::Think;
  std::optional<std::string> format_name;  // set iff kind == Format
  std::string content;                     // inner text, surrounding whitespace trimmed
  Span span;                               // covers the opening through the closing tag
};

enum class RuleId {
  PlaceholderFormat,
  PlaceholderAnswer,
  CopiedContent,
  UnclosedTag,
  MismatchedFormatName,
  EmptyFormatBody,
  NoAnswer,
};

inline std::string_view to_string(RuleId r) {
  switch (r) {
    case RuleId::PlaceholderFormat: return "PlaceholderFormat";
    case RuleId::PlaceholderAnswer: return "PlaceholderAnswer";
    case RuleId::CopiedContent: return "CopiedContent";
    case RuleId::UnclosedTag: return "UnclosedTag";
    case RuleId::MismatchedFormatName: return "MismatchedFormatName";
    case RuleId::EmptyFormatBody: return "EmptyFormatBody";
    case RuleId::NoAnswer: return "NoAnswer";
  }
  return "?";
}

/// A region the parser skipped. Only UnclosedTag and MismatchedFormatName occur.
struct MalformedRegion {
  RuleId rule = RuleId::UnclosedTag;
  Span span;
  std::string detail;
};

struct Trajectory {
  std::string raw;
  std::vector<Block> blocks;
  std::optional<std::string> answer;  // content of the first Answer block
  std::vector<MalformedRegion> malformed;

  bool has_format() const {
    return std::any_of(blocks.begin(), blocks.end(),
                       [](const Block& b) { return b.kind == BlockKind::Format; });
  }
};

/// Format names: `[A-Za-z0-9_\- ]+` after trimming.
inline bool is_valid_format_name(std::string_view name) {
  name = text::trim(name);
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-' || c == ' ';
  });
}

namespace detail {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";
inline constexpr std::string_view kFormatOpen = "<format:";
inline constexpr std::string_view kFormatClose = "</format:";

inline bool starts_at(std::string_view s, std::size_t pos, std::string_view what) {
  return s.substr(pos, what.size()) == what;
}

// Name segment of `<format: NAME>` starting right after the colon. Returns the
// position of '>' or npos when the segment cannot be a tag.
inline std::size_t find_tag_end(std::string_view s, std::size_t from) {
  for (std::size_t i = from; i < s.size(); ++i) {
    if (s[i] == '>') return i;
    if (s[i] == '<' || s[i] == '\n') return std::string_view::npos;
  }
  return std::string_view::npos;
}

}  // namespace detail

inline Trajectory parse_trajectory(std::string raw) {
  using namespace detail;
  Trajectory traj;
  traj.raw = std::move(raw);
  const std::string_view s = traj.raw;

  auto simple_block = [&](std::size_t p, BlockKind kind, std::string_view open,
                          std::string_view close) -> std::size_t {
    const std::size_t body = p + open.size();
    const std::size_t c = s.find(close, body);
    if (c == std::string_view::npos) {
      traj.malformed.push_back({RuleId::UnclosedTag, {p, body},
                                std::string(open) + " has no matching " + std::string(close)});
      return body;
    }
    Block b;
    b.kind = kind;
    b.content = std::string(text::trim(s.substr(body, c - body)));
    b.span = {p, c + close.size()};
    traj.blocks.push_back(std::move(b));
    return c + close.size();
  };

  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t p = s.find('<', pos);
    if (p == std::string_view::npos) break;

    if (starts_at(s, p, kThinkOpen)) {
      pos = simple_block(p, BlockKind::Think, kThinkOpen, kThinkClose);
    } else if (starts_at(s, p, kAnswerOpen)) {
      pos = simple_block(p, BlockKind::Answer, kAnswerOpen, kAnswerClose);
    } else if (starts_at(s, p, kFormatOpen)) {
      const std::size_t name_begin = p + kFormatOpen.size();
      const std::size_t gt = find_tag_end(s, name_begin);
      if (gt == std::string_view::npos || !is_valid_format_name(s.substr(name_begin, gt - name_begin))) {
        pos = p + 1;
        continue;
      }
      const std::string name(text::trim(s.substr(name_begin, gt - name_begin)));
      const std::size_t body = gt + 1;
      const std::size_t c = s.find(kFormatClose, body);
      const std::size_t gt2 =
          c == std::string_view::npos ? c : find_tag_end(s, c + kFormatClose.size());
      if (gt2 == std::string_view::npos) {
        traj.malformed.push_back(
            {RuleId::UnclosedTag, {p, body}, "<format: " + name + "> has no closing tag"});
        pos = body;
        continue;
      }
      const std::size_t close_begin = c + kFormatClose.size();
      const std::string_view close_name = text::trim(s.substr(close_begin, gt2 - close_begin));
      if (close_name != name) {
        traj.malformed.push_back({RuleId::MismatchedFormatName, {p, gt2 + 1},
                                  "<format: " + name + "> closed by </format: " +
                                      std::string(close_name) + ">"});
        pos = gt2 + 1;
        continue;
      }
      Block b;
      b.kind = BlockKind::Format;
      b.format_name = name;
      b.content = std::string(text::trim(s.substr(body, c - body)));
      b.span = {p, gt2 + 1};
      traj.blocks.push_back(std::move(b));
      pos = gt2 + 1;
    } else {
      pos = p + 1;
    }
  }

  for (const Block& b : traj.blocks) {
    if (b.kind == BlockKind::Answer) {
      traj.answer = b.content;
      break;
    }
  }
  return traj;
}

struct FormatEntry {
  std::string name;
  std::string content;

  friend bool operator==(const FormatEntry&, const FormatEntry&) = default;
};

inline std::vector<FormatEntry> extract_formats(const Trajectory& traj) {
  std::vector<FormatEntry> out;
  for (const Block& b : traj.blocks) {
    if (b.kind == BlockKind::Format) out.push_back({*b.format_name, b.content});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Copy detection

/// Doc-side n-gram index over `text::plain_tokens`. Build once per query.
class NgramIndex {
 public:
  NgramIndex(const std::vector<std::string>& docs, std::size_t n) : n_(n) {
    if (n_ == 0) return;
    for (const std::string& d : docs) {
      const auto toks = text::plain_tokens(d);
      for (std::size_t i = 0; i + n_ <= toks.size(); ++i) grams_.insert(key(toks, i));
    }
  }

  std::size_t n() const { return n_; }

  /// Token offset of the first n-gram of `tokens` present in the index.
  std::optional<std::size_t> first_hit(const std::vector<std::string>& tokens) const {
    if (n_ == 0 || grams_.empty()) return std::nullopt;
    for (std::size_t i = 0; i + n_ <= tokens.size(); ++i) {
      if (grams_.count(key(tokens, i))) return i;
    }
    return std::nullopt;
  }

  bool contains_copy(std::string_view body) const {
    return first_hit(text::plain_tokens(body)).has_value();
  }

 private:
  std::string key(const std::vector<std::string>& toks, std::size_t i) const {
    std::string k;
    for (std::size_t j = i; j < i + n_; ++j) {
      k += toks[j];
      k.push_back('\x1f');
    }
    return k;
  }

  std::size_t n_;
  std::unordered_set<std::string> grams_;
};

// ---------------------------------------------------------------------------
// Validation

struct ValidationPolicy {
  std::size_t copy_ngram = 30;
};

struct Violation {
  RuleId rule = RuleId::NoAnswer;
  Span span;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool is_clean() const { return violations.empty(); }

  bool has(RuleId r) const {
    return std::any_of(violations.begin(), violations.end(),
                       [r](const Violation& v) { return v.rule == r; });
  }
};

inline constexpr std::string_view kPlaceholderFormatName = "format_name";
inline constexpr std::string_view kPlaceholderFormatBody = "Your reformatted information";

/// Answers that are template residue rather than real answers.
inline bool is_placeholder_answer(std::string_view answer) {
  answer = text::trim(answer);
  return answer.empty() || answer == "and" || answer == "..." || answer == "\xE2\x80\xA6" ||
         answer == "Your final answer." || answer == "Your final answer";
}

inline ValidationReport validate(const Trajectory& traj, const std::vector<std::string>& docs,
                                 const ValidationPolicy& policy = {}) {
  ValidationReport report;
  const NgramIndex index(docs, policy.copy_ngram);

  for (const MalformedRegion& m : traj.malformed) {
    report.violations.push_back({m.rule, m.span, m.detail});
  }

  bool any_answer = false;
  bool first_answer = true;
  for (const Block& b : traj.blocks) {
    if (b.kind == BlockKind::Format) {
      if (*b.format_name == kPlaceholderFormatName) {
        report.violations.push_back(
            {RuleId::PlaceholderFormat, b.span, "format name is the template placeholder"});
      }
      if (b.content.find(kPlaceholderFormatBody) != std::string::npos) {
        report.violations.push_back(
            {RuleId::PlaceholderFormat, b.span, "format body contains the template placeholder"});
      }
      if (b.content.empty()) {
        report.violations.push_back(
            {RuleId::EmptyFormatBody, b.span, "<format: " + *b.format_name + "> is empty"});
      }
      const auto hit = index.first_hit(text::plain_tokens(b.content));
      if (hit) {
        report.violations.push_back(
            {RuleId::CopiedContent, b.span,
             "format body shares a " + std::to_string(policy.copy_ngram) +
                 "-token run with the documents at token " + std::to_string(*hit)});
      }
    } else if (b.kind == BlockKind::Answer) {
      any_answer = true;
      if (first_answer && is_placeholder_answer(b.content)) {
        report.violations.push_back(
            {RuleId::PlaceholderAnswer, b.span, "answer is empty or template residue"});
      }
      first_answer = false;
    }
  }
  if (!any_answer) {
    report.violations.push_back(
        {RuleId::NoAnswer, {traj.raw.size(), traj.raw.size()}, "no <answer> block"});
  }
  std::stable_sort(report.violations.begin(), report.violations.end(),
                   [](const Violation& a, const Violation& b) { return a.span.begin < b.span.begin; });
  return report;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const Span& s) { return nlohmann::json::array({s.begin, s.end}); }

inline nlohmann::json to_json(const Block& b) {
  nlohmann::json j;
  j["kind"] = to_string(b.kind);
  j["format_name"] = b.format_name ? nlohmann::json(*b.format_name) : nlohmann::json(nullptr);
  j["content"] = b.content;
  j["span"] = to_json(b.span);
  return j;
}

inline nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json j;
  j["raw"] = t.raw;
  j["blocks"] = nlohmann::json::array();
  for (const Block& b : t.blocks) j["blocks"].push_back(to_json(b));
  j["answer"] = t.answer ? nlohmann::json(*t.answer) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json j;
  j["is_clean"] = r.is_clean();
  j["violations"] = nlohmann::json::array();
  for (const Violation& v : r.violations) {
    j["violations"].push_back(
        {{"rule_id", to_string(v.rule)}, {"span", to_json(v.span)}, {"message", v.message}});
  }
  return j;
}

}  // namespace strux
