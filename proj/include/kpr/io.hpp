#pragma once

// Output helpers: CSV with 17 significant digits (round-trip exact for
// doubles) and JSON documents with stable key order under the "kpr/1" schema.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace kpr {

using Json = nlohmann::ordered_json;

inline constexpr const char* kJsonSchema = "kpr/1";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (i) os_ << ',';
      os_ << names[i];
    }
    os_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) os_ << ',';
      os_ << format_double(values[i]);
    }
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Json json_document() {
  Json doc;
  doc["schema"] = kJsonSchema;
  return doc;
}

}  // namespace kpr
