#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bergman/carleson.hpp"
#include "bergman/construction.hpp"
#include "bergman/geometry.hpp"
#include "bergman/types.hpp"
#include "bergman/weights.hpp"

namespace bergman::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Shortest round-trip decimal form; identical input gives identical text.
[[nodiscard]] std::string format_double(double v);

/// Numeric rows of a CSV file. Blank lines and lines starting with '#' are
/// skipped, as is a first line that does not parse as numbers. Errors carry
/// the file name and line number.
[[nodiscard]] std::vector<std::vector<double>> read_numeric_csv(const std::string& path, std::size_t columns);

[[nodiscard]] PointSequence read_points_csv(const std::string& path, double delta_sep = kDefaultSeparationDelta);
[[nodiscard]] DiscreteMeasure read_measure_csv(const std::string& path);

/// Writes rows with a header; values formatted by format_double.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  void row(const std::vector<double>& values);

 private:
  struct Impl;
  Impl* impl_;
};

/// Parses `lattice(spacing=<float>, stride=<int>[, phase=<float>])`.
[[nodiscard]] PointSequence generate_from_spec(std::string_view spec, const RadiiSchedule& s,
                                               double delta_sep = kDefaultSeparationDelta);

[[nodiscard]] Json points_json(std::span<const Complex> pts);
[[nodiscard]] Json gmodel_json(const GModel& g);

void write_json(const std::string& path, const Json& j);

}  // namespace bergman::io
