#pragma once

// Shared test helpers: fixture paths, scratch directories, a small JSON
// Schema checker and fraction parsing for oracle tables.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strux/dataset.hpp"

namespace strux::fixture {

inline std::string source_path(const std::string& rel) {
  return (std::filesystem::path(STRUX_SOURCE_DIR) / rel).string();
}

inline std::string data_path(const std::string& rel) { return source_path("data/" + rel); }

inline nlohmann::json load_json(const std::string& path) {
  return nlohmann::json::parse(read_file(path));
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("strux_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// "6/7" -> 0.857...
inline double fraction(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return std::stod(s);
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

// Enough of JSON Schema for the shipped schemas: type, enum, required,
// properties, additionalProperties=false, items, minimum, anyOf and local $ref.
class SchemaChecker {
 public:
  explicit SchemaChecker(nlohmann::json root) : root_(std::move(root)) {}

  std::vector<std::string> check(const nlohmann::json& doc) const {
    std::vector<std::string> errs;
    visit(root_, doc, "$", errs);
    return errs;
  }

 private:
  const nlohmann::json& resolve(const nlohmann::json& s) const {
    if (!s.contains("$ref")) return s;
    const std::string ref = s["$ref"].get<std::string>();
    return root_.at(nlohmann::json::json_pointer(ref.substr(1)));
  }

  static bool type_ok(const std::string& t, const nlohmann::json& v) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "number") return v.is_number();
    if (t == "integer") {
      return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    }
    return false;
  }

  void visit(const nlohmann::json& schema, const nlohmann::json& v, const std::string& at,
             std::vector<std::string>& errs) const {
    const nlohmann::json& s = resolve(schema);
    if (s.contains("anyOf")) {
      bool any = false;
      for (const auto& alt : s["anyOf"]) {
        std::vector<std::string> sub;
        visit(alt, v, at, sub);
        if (sub.empty()) {
          any = true;
          break;
        }
      }
      if (!any) errs.push_back(at + ": matches no alternative");
    }
    if (s.contains("type") && !type_ok(s["type"].get<std::string>(), v)) {
      errs.push_back(at + ": expected " + s["type"].get<std::string>());
      return;
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s["enum"]) found = found || e == v;
      if (!found) errs.push_back(at + ": value not in enum");
    }
    if (s.contains("minimum") && v.is_number() && v.get<double>() < s["minimum"].get<double>()) {
      errs.push_back(at + ": below minimum");
    }
    if (v.is_object()) {
      for (const auto& r : s.value("required", nlohmann::json::array())) {
        if (!v.contains(r.get<std::string>())) errs.push_back(at + ": missing " + r.get<std::string>());
      }
      const auto props = s.value("properties", nlohmann::json::object());
      for (const auto& [k, val] : v.items()) {
        if (props.contains(k)) {
          visit(props[k], val, at + "." + k, errs);
        } else if (s.contains("additionalProperties") && s["additionalProperties"] == false) {
          errs.push_back(at + ": unexpected property " + k);
        }
      }
    }
    if (v.is_array() && s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        visit(s["items"], v[i], at + "[" + std::to_string(i) + "]", errs);
      }
    }
  }

  nlohmann::json root_;
};

}  // namespace strux::fixture
