#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bergman::cli {

using Json = nlohmann::ordered_json;

struct ExperimentConfig {
  std::string weight = "constant";
  std::size_t n_radii = 0;  // 0: default truncation for the weight
  std::size_t degree = 0;   // 0: default degree for the schedule
  std::string sequence;     // CSV of re,im
  std::string generate;     // generator spec, used when no sequence file is given
  std::string measure;      // CSV of re,im,mass
  std::size_t measure_count = 40;
  std::size_t m_min = 1;
  std::size_t m_max = 0;  // 0: default for the schedule
  bool include_self = true;
  std::optional<std::size_t> m;
  std::optional<double> epsilon;
  std::string kind = "auto";  // interpolation, sampling, auto
  std::uint64_t seed = 1;
  std::string out = ".";
  std::size_t grid_radial = 64;
  std::size_t grid_angular = 32;
  double delta = 0.05;
  double margin = 0.02;
  std::vector<double> spacings{64.0, 47.5, 35.3, 26.2, 19.4, 14.4, 10.7, 8.0, 5.9, 4.4};
  std::size_t stride = 1;
  std::size_t lattice_max_circle = 0;  // 0: N - 2
  std::size_t gram_max_circle = 8;
  std::size_t frame_degree = 0;  // 0: min(degree, 1024)
  std::size_t frame_d0 = 64;
  std::size_t data_vectors = 20;
  std::string test_function = "poly";  // poly or one
  std::size_t threads = 0;
  std::string isa = "auto";
};

/// Parses a JSON object into `base`, overriding only the keys present.
/// Unknown keys and type mismatches raise ValidationError naming the field.
void apply_json(ExperimentConfig& base, const Json& j);
[[nodiscard]] ExperimentConfig load_config(const std::string& path);
[[nodiscard]] Json to_json(const ExperimentConfig& c);

/// Resolves the schedule-dependent defaults (n_radii, degree, m_max, ...).
[[nodiscard]] ExperimentConfig resolve(ExperimentConfig c);

[[nodiscard]] const std::vector<std::string>& subcommands();

/// Runs one subcommand, writing <out>/<name>.json and its CSV tables.
/// Returns 0, 2 on validation errors, 3 on numerical guard failures or
/// escalated tail flags; diagnostics go to stderr.
int run(const std::string& subcommand, const ExperimentConfig& config);

}  // namespace bergman::cli
