#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsad/core/error.hpp"
#include "tsad/core/time_series.hpp"

namespace tsad::io {

namespace fs = std::filesystem;

namespace detail {

inline std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Parses `timestamp,value` CSV text. Rows are sorted by timestamp before
/// grid validation.
inline TimeSeries parse_csv(std::istream& in, std::optional<int> period_hint = std::nullopt,
                            const std::string& source = "<stream>") {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<std::pair<std::int64_t, double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      std::string compact;
      for (char c : line)
        if (c != ' ') compact += c;
      if (compact != "timestamp,value")
        fail(Errc::parse_error, source + ":" + std::to_string(line_no) + ": expected header 'timestamp,value'");
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      fail(Errc::parse_error, source + ":" + std::to_string(line_no) + ": expected two columns");
    const std::string ts_text = detail::trim(line.substr(0, comma));
    const std::string val_text = detail::trim(line.substr(comma + 1));
    std::int64_t ts = 0;
    auto [p1, ec1] = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(), ts);
    if (ec1 != std::errc() || p1 != ts_text.data() + ts_text.size())
      fail(Errc::parse_error, source + ":" + std::to_string(line_no) + ": bad timestamp '" + ts_text + "'");
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(val_text, &used);
      if (used != val_text.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      fail(Errc::parse_error, source + ":" + std::to_string(line_no) + ": bad value '" + val_text + "'");
    }
    if (!std::isfinite(value))
      fail(Errc::parse_error, source + ":" + std::to_string(line_no) + ": missing or non-finite value");
    rows.emplace_back(ts, value);
  }
  if (rows.empty()) fail(Errc::empty_input, source + ": no data rows");
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::int64_t> ts;
  std::vector<double> vs;
  ts.reserve(rows.size());
  vs.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].first == rows[i - 1].first)
      fail(Errc::grid_error, source + ": duplicated timestamp " + std::to_string(rows[i].first));
    ts.push_back(rows[i].first);
    vs.push_back(rows[i].second);
  }
  try {
    return TimeSeries(std::move(ts), std::move(vs), period_hint);
  } catch (const Error& e) {
    fail(e.code(), source + ": " + e.what());
  }
}

inline TimeSeries read_csv(const fs::path& path, std::optional<int> period_hint = std::nullopt) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  return parse_csv(in, period_hint, path.string());
}

/// 17 significant digits, enough for every double to round-trip.
inline void write_csv(std::ostream& out, const TimeSeries& series) {
  out << "timestamp,value\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < series.size(); ++i) out << series.timestamps()[i] << ',' << series[i] << '\n';
}

inline void write_csv(const fs::path& path, const TimeSeries& series) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path.string());
  write_csv(out, series);
}

/// `dir/series_1_2.csv` -> `dir/series_1_2.labels.json`.
inline fs::path labels_path_for(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".labels.json");
  return p;
}

inline LabeledSeries read_labeled(const fs::path& csv_path, std::optional<int> period_hint = std::nullopt) {
  TimeSeries series = read_csv(csv_path, period_hint);
  const fs::path lp = labels_path_for(csv_path);
  std::ifstream in(lp);
  if (!in) fail(Errc::io_error, "cannot open " + lp.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, lp.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("labels") || !j["labels"].is_array())
    fail(Errc::parse_error, lp.string() + ": expected object with a 'labels' array");
  std::vector<std::size_t> labels;
  for (const auto& v : j["labels"]) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      fail(Errc::parse_error, lp.string() + ": labels must be non-negative integers");
    labels.push_back(v.get<std::size_t>());
  }
  const AnomalyKind kind =
      j.contains("kind") ? anomaly_kind_from_string(j["kind"].get<std::string>()) : AnomalyKind::unknown;
  try {
    return LabeledSeries(std::move(series), std::move(labels), kind);
  } catch (const Error& e) {
    fail(e.code(), lp.string() + ": " + e.what());
  }
}

inline nlohmann::json labels_json(const LabeledSeries& labeled) {
  return {{"labels", labeled.labels}, {"kind", std::string(to_string(labeled.kind))}};
}

inline void write_labeled(const fs::path& csv_path, const LabeledSeries& labeled) {
  write_csv(csv_path, labeled.series);
  const fs::path lp = labels_path_for(csv_path);
  std::ofstream out(lp);
  if (!out) fail(Errc::io_error, "cannot write " + lp.string());
  out << labels_json(labeled).dump() << '\n';
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace tsad::io
