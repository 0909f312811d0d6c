#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regflood/eval.hpp"
#include "regflood/indexflood.hpp"
#include "regflood/pot.hpp"
#include "regflood/regional.hpp"

namespace regflood::cli {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

// Series CSV: header `datetime,discharge_m3s`, ISO-8601 times.
DischargeSeries parse_series_csv(std::istream& in, std::string code);
DischargeSeries read_series_csv(const fs::path& path, std::string code);
void write_series_csv(const fs::path& path, const DischargeSeries& series);

// Metadata CSV: `code,name,area_km2,x_km,y_km,record_start,record_end`.
std::vector<StationMeta> parse_metadata_csv(std::istream& in);
std::vector<StationMeta> read_metadata_csv(const fs::path& path);
void write_metadata_csv(const fs::path& path, std::span<const StationMeta> rows);

json to_json(const PotSeries& pot, const IndependenceRule& rule);
PotSeries pot_from_json(const json& j);
PotSeries read_pot_file(const fs::path& path);

json to_json(const GpParams& p);
GpParams gp_params_from_json(const json& j);
json to_json(const PriorSpec& prior);

/// Pretty JSON with a trailing newline.
void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

struct StationEntry {
  std::string code;
  fs::path metadata;
  fs::path series;
  std::optional<double> threshold;
};

struct RegionConfig {
  std::string target;
  std::vector<StationEntry> stations;
  /// Events per year used to select thresholds of stations without an
  /// explicit one; nullopt requires every station to carry a threshold.
  std::optional<double> target_rate = 2.0;
  IndependenceRule rule;
  IndexFloodMethod index_flood_method = IndexFloodMethod::GpFit;
  RescaleMode rescale_mode = RescaleMode::OneYearQuantile;
  double threshold_cv = 0.1;
  std::optional<fs::path> ground_truth;
};

/// Relative file paths resolve against `base_dir`.
RegionConfig parse_region_config(const json& j, const fs::path& base_dir);
RegionConfig read_region_config(const fs::path& path);
/// Paths are written as given, so the result is stable across directories.
json to_json(const RegionConfig& config);

std::string to_string(RescaleMode mode);
RescaleMode parse_rescale_mode(std::string_view text);

/// Reads every station and extracts its POT series.
Region build_region(const RegionConfig& config);

struct GroundTruth {
  std::vector<SiteTruth> sites;
  GpParams growth;
};
json to_json(const GroundTruth& truth);
GroundTruth read_ground_truth(const fs::path& path);

}  // namespace regflood::cli
