#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "strux/error.hpp"
#include "strux/reward.hpp"

namespace strux {

struct MetricsSummary {
  std::size_t n = 0;
  double em = 0.0;
  double f1 = 0.0;
  double error = 1.0;  // 1 - em
};

struct Prediction {
  std::string prediction;
  std::vector<std::string> golds;
};

inline MetricsSummary evaluate(const std::vector<Prediction>& items) {
  if (items.empty()) throw Error(ErrorCode::EmptyInput, "nothing to evaluate");
  double em_sum = 0.0;
  double f1_sum = 0.0;
  for (const auto& p : items) {
    em_sum += exact_match(p.prediction, p.golds);
    f1_sum += f1(p.prediction, p.golds);
  }
  MetricsSummary s;
  s.n = items.size();
  s.em = em_sum / static_cast<double>(s.n);
  s.f1 = f1_sum / static_cast<double>(s.n);
  s.error = 1.0 - s.em;
  return s;
}

/// fraction -> percentage string with two decimals, ties to even.
inline std::string format_percent(double fraction) {
  const double scaled = fraction * 10000.0;
  double whole = std::floor(scaled);
  const double frac = scaled - whole;
  constexpr double kTieTol = 1e-7;
  if (std::fabs(frac - 0.5) <= kTieTol) {
    if (std::fmod(whole, 2.0) != 0.0) whole += 1.0;
  } else if (frac > 0.5) {
    whole += 1.0;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", whole / 100.0);
  return buf;
}

enum class ReportFormat { Text, Json, Csv };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "text") return ReportFormat::Text;
  if (s == "json") return ReportFormat::Json;
  if (s == "csv") return ReportFormat::Csv;
  throw Error(ErrorCode::ConfigError, "unknown report format '" + s + "'");
}

/// Datasets in key order; columns N, EM, F1.
inline std::string report(const std::map<std::string, MetricsSummary>& summaries, ReportFormat fmt) {
  switch (fmt) {
    case ReportFormat::Json: {
      nlohmann::json j = nlohmann::json::object();
      for (const auto& [name, s] : summaries) {
        j[name] = {{"n", s.n},
                   {"em", s.em},
                   {"f1", s.f1},
                   {"error", s.error},
                   {"em_pct", format_percent(s.em)},
                   {"f1_pct", format_percent(s.f1)}};
      }
      return j.dump(2) + "\n";
    }
    case ReportFormat::Csv: {
      std::string out = "dataset,n,em,f1\n";
      for (const auto& [name, s] : summaries) {
        out += name + "," + std::to_string(s.n) + "," + format_percent(s.em) + "," +
               format_percent(s.f1) + "\n";
      }
      return out;
    }
    case ReportFormat::Text:
    default: {
      std::size_t width = 7;
      for (const auto& kv : summaries) width = std::max(width, kv.first.size());
      auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
      };
      std::string out = pad("dataset", width) + "  " + pad("n", 8) + "  " + pad("EM", 6) + "  F1\n";
      for (const auto& [name, s] : summaries) {
        out += pad(name, width) + "  " + pad(std::to_string(s.n), 8) + "  " +
               pad(format_percent(s.em), 6) + "  " + format_percent(s.f1) + "\n";
      }
      return out;
    }
  }
}

}  // namespace strux
