#pragma once

// Internal helpers shared by the CSV and JSON serializers.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "raregraph/cohort.hpp"
#include "raregraph/errors.hpp"

namespace raregraph::detail {

// Shortest round-trip representation.
inline void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

template <typename Int>
inline void append_int(std::string& out, Int v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

inline std::string format_double(double v) {
  std::string s;
  append_double(s, v);
  return s;
}

// Splits on ',' without quoting support; ids are restricted to [A-Za-z0-9_-].
inline void split_csv(std::string_view line, std::vector<std::string_view>& fields) {
  fields.clear();
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Line-oriented reader that tracks 1-based line numbers and strips '\r'.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path) : path_(path.string()), in_(path, std::ios::binary) {
    if (!in_) throw ParseError(path_, 0, "cannot open file");
  }

  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (!line_.empty() && line_.back() == '\r') line_.pop_back();
      if (line_.empty()) continue;
      split_csv(line_, fields);
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_, line_no_, what); }

  template <typename T>
  T parse_int(std::string_view field, std::string_view column) const {
    T v{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
      fail("column " + std::string(column) + ": expected an integer, got '" + std::string(field) + "'");
    }
    return v;
  }

  double parse_double(std::string_view field, std::string_view column) const {
    double v{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
      fail("column " + std::string(column) + ": expected a number, got '" + std::string(field) + "'");
    }
    return v;
  }

  Label parse_label(std::string_view field) const {
    if (field.empty()) return std::nullopt;
    if (field == "0") return false;
    if (field == "1") return true;
    fail("column label: expected 0, 1 or empty, got '" + std::string(field) + "'");
  }

  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_no_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  const auto text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

inline nlohmann::json standardization_to_json(const Standardization& s) {
  return {{"mean", s.mean}, {"std", s.stddev}};
}

inline Standardization standardization_from_json(const nlohmann::json& j) {
  Standardization s;
  s.mean = j.at("mean").get<ClaimsVector>();
  s.stddev = j.at("std").get<ClaimsVector>();
  return s;
}

inline nlohmann::json schema_to_json(const FeatureSchema& schema) {
  return {{"num_codes", schema.num_codes},
          {"num_specialties", schema.num_specialties},
          {"num_regions", schema.num_regions},
          {"num_age_decades", schema.num_age_decades},
          {"standardization", standardization_to_json(schema.standardization)}};
}

inline FeatureSchema schema_from_json(const nlohmann::json& j) {
  FeatureSchema s;
  s.num_codes = j.at("num_codes").get<std::size_t>();
  s.num_specialties = j.at("num_specialties").get<std::size_t>();
  s.num_regions = j.at("num_regions").get<std::size_t>();
  s.num_age_decades = j.at("num_age_decades").get<std::size_t>();
  s.standardization = standardization_from_json(j.at("standardization"));
  return s;
}

}  // namespace raregraph::detail
