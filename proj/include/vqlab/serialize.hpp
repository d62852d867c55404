#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vqlab/distributions.hpp"
#include "vqlab/geometry.hpp"
#include "vqlab/margin.hpp"

namespace vqlab {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

// Shortest round-trip decimal form ('.' separator, no locale).
std::string format_double(double v);

// FNV-1a (64 bit) of the compact JSON dump, as 16 hex digits.
std::string config_hash(const json& config);

// RFC-4180 CSV with LF line endings. Fields containing a comma, quote or line
// break are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return text_; }

 private:
  void append(const std::vector<std::string>& fields);
  std::size_t width_;
  std::string text_;
};

// One point per row, d numeric columns; a non-numeric first row is taken as a
// header and skipped.
PointSet read_points_csv(const std::filesystem::path& path);

json points_to_json(const PointSet& p);
PointSet points_from_json(const json& j);
json codebook_to_json(const Codebook& c);
Codebook codebook_from_json(const json& j);

// Distribution documents carry a "kind" tag: finite, mixture, assouad or
// cone-mixture. Relative CSV paths resolve against base_dir.
SourceDistribution distribution_from_json(const json& j, const std::filesystem::path& base_dir = {});
json distribution_to_json(const SourceDistribution& P);

json curve_to_json(const PCurve& c);
json margin_report_to_json(const MarginReport& r);
json certificate_to_json(const FiniteCertificate& c);
json mixture_report_to_json(const MixtureConditionReport& r);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace vqlab
