#pragma once

#include <algorithm>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "strux/error.hpp"
#include "strux/templates.hpp"
#include "strux/text.hpp"
#include "strux/trajectory.hpp"

namespace strux {

/// A prompt template with exactly one `{context}` and one `{question}`.
/// Substitution is positional: placeholder text inside the substituted
/// values is never expanded.
class PromptTemplate {
 public:
  static constexpr std::string_view kContext = "{context}";
  static constexpr std::string_view kQuestion = "{question}";

  explicit PromptTemplate(std::string text) : text_(std::move(text)) {
    ctx_pos_ = locate(kContext);
    q_pos_ = locate(kQuestion);
  }

  static PromptTemplate from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open template " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return PromptTemplate(ss.str());
  }

  const std::string& text() const { return text_; }

  std::string render(std::string_view context, std::string_view question) const {
    const bool context_first = ctx_pos_ < q_pos_;
    const std::size_t first = context_first ? ctx_pos_ : q_pos_;
    const std::size_t first_len = context_first ? kContext.size() : kQuestion.size();
    const std::size_t second = context_first ? q_pos_ : ctx_pos_;
    const std::size_t second_len = context_first ? kQuestion.size() : kContext.size();
    const std::string_view v1 = context_first ? context : question;
    const std::string_view v2 = context_first ? question : context;

    const std::string_view t = text_;
    std::string out;
    out.reserve(text_.size() + context.size() + question.size());
    out += t.substr(0, first);
    out += v1;
    out += t.substr(first + first_len, second - first - first_len);
    out += v2;
    out += t.substr(second + second_len);
    return out;
  }

  /// The template with both placeholders removed.
  std::string skeleton() const { return render("", ""); }

 private:
  std::size_t locate(std::string_view placeholder) const {
    const std::size_t p = text_.find(placeholder);
    if (p == std::string::npos) {
      throw Error(ErrorCode::TemplateError, "template lacks " + std::string(placeholder));
    }
    if (text_.find(placeholder, p + placeholder.size()) != std::string::npos) {
      throw Error(ErrorCode::TemplateError,
                  "template repeats " + std::string(placeholder));
    }
    return p;
  }

  std::string text_;
  std::size_t ctx_pos_ = 0;
  std::size_t q_pos_ = 0;
};

inline const PromptTemplate& main_template() {
  static const PromptTemplate t{std::string(templates::kMainPrompt)};
  return t;
}

inline const PromptTemplate& reinference_template() {
  static const PromptTemplate t{std::string(templates::kReinferencePrompt)};
  return t;
}

/// "Doc 1: ...\nDoc 2: ..." context block for the main prompt.
inline std::string format_docs(const std::vector<std::string>& docs) {
  std::string out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i) out.push_back('\n');
    out += "Doc " + std::to_string(i + 1) + ": ";
    out += docs[i];
  }
  return out;
}

struct PromptBundle {
  std::string main_prompt;
  std::string question;
  std::string context;
};

inline PromptBundle make_prompt_bundle(const std::string& question,
                                       const std::vector<std::string>& docs,
                                       const PromptTemplate& tpl = main_template()) {
  if (docs.empty()) throw Error(ErrorCode::EmptyDocs, "main prompt needs at least one document");
  PromptBundle b;
  b.question = question;
  b.context = format_docs(docs);
  b.main_prompt = tpl.render(b.context, b.question);
  return b;
}

inline std::string build_main_prompt(const std::string& question,
                                     const std::vector<std::string>& docs,
                                     const PromptTemplate& tpl = main_template()) {
  return make_prompt_bundle(question, docs, tpl).main_prompt;
}

/// Format bodies joined by a blank line; names are dropped.
inline std::string reinference_context(const std::vector<FormatEntry>& formats) {
  std::string out;
  for (std::size_t i = 0; i < formats.size(); ++i) {
    if (i) out += "\n\n";
    out += formats[i].content;
  }
  return out;
}

inline std::string build_reinference_prompt(const std::string& question,
                                            const std::vector<FormatEntry>& formats,
                                            const PromptTemplate& tpl = reinference_template()) {
  if (formats.empty()) {
    throw Error(ErrorCode::NoFormats, "re-inference requires at least one format block");
  }
  return tpl.render(reinference_context(formats), question);
}

// ---------------------------------------------------------------------------
// Format registry

enum class FormatOrigin { Predefined, Dynamic };

struct FormatSpec {
  std::string name;
  std::string description;
  FormatOrigin origin = FormatOrigin::Predefined;

  friend bool operator==(const FormatSpec&, const FormatSpec&) = default;
};

inline const std::vector<FormatSpec>& predefined_formats() {
  static const std::vector<FormatSpec> specs = {
      {"Chunk",
       "A chunk is a self-contained summary of one or multiple documents in natural language.",
       FormatOrigin::Predefined},
      {"Knowledge Graph",
       "A knowledge graph is a structured representation of facts in the form of entities "
       "(things) and relations (connections between things), often expressed as triples: "
       "(head, relation, tail).",
       FormatOrigin::Predefined},
      {"Table",
       "A table is a structured way of organizing data into rows and columns. It's commonly "
       "used to present information clearly and compactly.",
       FormatOrigin::Predefined},
      {"Catalogue",
       "A catalogue is a structured, systematically arranged list of items-each described by a "
       "consistent set of metadata-that lets readers discover, browse, and retrieve individual "
       "entries quickly.",
       FormatOrigin::Predefined},
      {"Algorithm",
       "An algorithm is a step-by-step procedure for solving a problem or achieving a specific "
       "result.",
       FormatOrigin::Predefined},
  };
  return specs;
}

inline bool same_format_name(std::string_view a, std::string_view b) {
  return text::lowercase(text::trim(a)) == text::lowercase(text::trim(b));
}

/// True when `name` refers to one of the predefined formats (case-insensitive).
inline bool is_predefined_format(std::string_view name) {
  const auto& p = predefined_formats();
  return std::any_of(p.begin(), p.end(),
                     [&](const FormatSpec& s) { return same_format_name(s.name, name); });
}

/// Append-only registry of predefined and model-invented formats. Safe for
/// concurrent use; iteration order is insertion order.
class FormatRegistry {
 public:
  FormatRegistry() : specs_(predefined_formats()) {}

  FormatSpec register_dynamic_format(std::string_view name) {
    if (!is_valid_format_name(name)) {
      throw Error(ErrorCode::InvalidName, "invalid format name '" + std::string(name) + "'");
    }
    const std::string trimmed(text::trim(name));
    {
      std::shared_lock lock(mu_);
      if (auto hit = find_locked(trimmed)) return *hit;
    }
    std::unique_lock lock(mu_);
    if (auto hit = find_locked(trimmed)) return *hit;
    specs_.push_back({trimmed, "", FormatOrigin::Dynamic});
    return specs_.back();
  }

  std::optional<FormatSpec> find(std::string_view name) const {
    std::shared_lock lock(mu_);
    return find_locked(name);
  }

  std::vector<FormatSpec> snapshot() const {
    std::shared_lock lock(mu_);
    return specs_;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const FormatSpec& s : snapshot()) {
      arr.push_back({{"name", s.name},
                     {"description", s.description},
                     {"origin", s.origin == FormatOrigin::Predefined ? "Predefined" : "Dynamic"}});
    }
    return arr;
  }

 private:
  std::optional<FormatSpec> find_locked(std::string_view name) const {
    for (const FormatSpec& s : specs_) {
      if (same_format_name(s.name, name)) return s;
    }
    return std::nullopt;
  }

  mutable std::shared_mutex mu_;
  std::vector<FormatSpec> specs_;
};

}  // namespace strux
