#include "io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "regflood/error.hpp"
#include "regflood/log.hpp"

namespace regflood::cli {
namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// Splits one CSV record; double-quoted fields may contain commas and "".
std::vector<std::string> split_csv(std::string_view line, std::size_t row) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", row);
  fields.push_back(trim(field));
  return fields;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

double parse_double(const std::string& text, std::string_view what, std::size_t row) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError("malformed " + std::string(what) + " '" + text + "'", row);
  }
  return value;
}

int parse_int(const std::string& text, std::string_view what, std::size_t row) {
  int value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError("malformed " + std::string(what) + " '" + text + "'", row);
  }
  return value;
}

// Reads lines, strips a UTF-8 byte order mark and checks the header.
std::vector<std::pair<std::size_t, std::string>> read_records(std::istream& in,
                                                              const std::string& header) {
  std::string line;
  std::size_t row = 0;
  std::vector<std::pair<std::size_t, std::string>> records;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!have_header) {
      std::string compact;
      for (char ch : t) {
        if (ch != ' ') compact += ch;
      }
      if (compact != header) throw ParseError("expected header '" + header + "'", row);
      have_header = true;
      continue;
    }
    records.emplace_back(row, t);
  }
  if (!have_header) throw ParseError("empty file, expected header '" + header + "'", 1);
  return records;
}

}  // namespace

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

DischargeSeries parse_series_csv(std::istream& in, std::string code) {
  DischargeSeries series;
  series.code = std::move(code);
  for (const auto& [row, line] : read_records(in, "datetime,discharge_m3s")) {
    const auto fields = split_csv(line, row);
    if (fields.size() != 2) throw ParseError("expected 2 fields", row);
    const auto t = parse_iso8601(fields[0]);
    if (!t) throw ParseError("malformed date '" + fields[0] + "'", row);
    const double q = parse_double(fields[1], "discharge", row);
    if (!std::isfinite(q) || q < 0.0) {
      throw ParseError("discharge must be finite and non-negative", row);
    }
    if (!series.time.empty() && *t <= series.time.back()) {
      throw ParseError("timestamps must be strictly increasing", row);
    }
    series.time.push_back(*t);
    series.discharge.push_back(q);
  }
  if (series.time.empty()) throw InputError("series '" + series.code + "' has no data rows");
  return series;
}

DischargeSeries read_series_csv(const fs::path& path, std::string code) {
  auto in = open_in(path);
  try {
    return parse_series_csv(in, std::move(code));
  } catch (const ParseError& e) {
    const std::string what = e.what();
    throw ParseError(path.string() + ": " + what.substr(0, what.rfind(" (row")), e.row());
  }
}

void write_series_csv(const fs::path& path, const DischargeSeries& series) {
  auto out = open_out(path);
  out << "datetime,discharge_m3s\n";
  for (std::size_t i = 0; i < series.time.size(); ++i) {
    out << format_iso8601(series.time[i]) << ',' << format_number(series.discharge[i]) << '\n';
  }
}

std::vector<StationMeta> parse_metadata_csv(std::istream& in) {
  std::vector<StationMeta> rows;
  for (const auto& [row, line] :
       read_records(in, "code,name,area_km2,x_km,y_km,record_start,record_end")) {
    const auto f = split_csv(line, row);
    if (f.size() != 7) throw ParseError("expected 7 fields", row);
    StationMeta m;
    m.code = f[0];
    if (m.code.empty()) throw ParseError("empty station code", row);
    m.name = f[1];
    m.area_km2 = parse_double(f[2], "area", row);
    if (!(m.area_km2 > 0.0) || !std::isfinite(m.area_km2)) {
      throw ParseError("area must be positive", row);
    }
    m.x_km = parse_double(f[3], "x coordinate", row);
    m.y_km = parse_double(f[4], "y coordinate", row);
    m.record_start = parse_int(f[5], "record start year", row);
    m.record_end = parse_int(f[6], "record end year", row);
    rows.push_back(std::move(m));
  }
  return rows;
}

std::vector<StationMeta> read_metadata_csv(const fs::path& path) {
  auto in = open_in(path);
  return parse_metadata_csv(in);
}

void write_metadata_csv(const fs::path& path, std::span<const StationMeta> rows) {
  auto out = open_out(path);
  out << "code,name,area_km2,x_km,y_km,record_start,record_end\n";
  for (const auto& m : rows) {
    out << quote_csv(m.code) << ',' << quote_csv(m.name) << ',' << format_number(m.area_km2) << ','
        << format_number(m.x_km) << ',' << format_number(m.y_km) << ',' << m.record_start << ','
        << m.record_end << '\n';
  }
}

json to_json(const PotSeries& pot, const IndependenceRule& rule) {
  json events = json::array();
  for (std::size_t i = 0; i < pot.peaks.size(); ++i) {
    events.push_back({{"datetime", format_iso8601(pot.times[i])}, {"discharge_m3s", pot.peaks[i]}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "pot_series"},
          {"code", pot.code},
          {"threshold", pot.threshold},
          {"record_years", pot.record_years},
          {"record_start", format_iso8601(pot.record_start)},
          {"record_end", format_iso8601(pot.record_end)},
          {"events_per_year", pot.rate()},
          {"independence_rule",
           {{"min_gap_days", rule.min_gap_days},
            {"trough_fraction", rule.trough_fraction},
            {"missing_gap_days", rule.missing_gap_days}}},
          {"events", events}};
}

namespace {

Timestamp parse_time_field(const json& j, const char* key) {
  const auto t = parse_iso8601(j.at(key).get<std::string>());
  if (!t) throw InputError(std::string("malformed date in '") + key + "'");
  return *t;
}

}  // namespace

PotSeries pot_from_json(const json& j) {
  try {
    PotSeries pot;
    pot.code = j.at("code").get<std::string>();
    pot.threshold = j.at("threshold").get<double>();
    pot.record_years = j.at("record_years").get<double>();
    pot.record_start = parse_time_field(j, "record_start");
    pot.record_end = parse_time_field(j, "record_end");
    for (const auto& e : j.at("events")) {
      pot.times.push_back(parse_time_field(e, "datetime"));
      pot.peaks.push_back(e.at("discharge_m3s").get<double>());
    }
    if (!(pot.record_years > 0.0)) throw InputError("POT file: record_years must be positive");
    for (double x : pot.peaks) {
      if (!(x > pot.threshold)) throw InputError("POT file: every event must exceed the threshold");
    }
    return pot;
  } catch (const json::exception& e) {
    throw InputError(std::string("POT file: ") + e.what());
  }
}

PotSeries read_pot_file(const fs::path& path) { return pot_from_json(read_json(path)); }

json to_json(const GpParams& p) {
  return {{"location", p.location}, {"scale", p.scale}, {"shape", p.shape}};
}

GpParams gp_params_from_json(const json& j) {
  return {j.at("location").get<double>(), j.at("scale").get<double>(), j.at("shape").get<double>()};
}

json to_json(const PriorSpec& prior) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "prior"},
          {"target", prior.target},
          {"gamma", prior.gamma},
          {"d", prior.d},
          {"parameters", {"log_location", "log_scale", "shape"}},
          {"sites", prior.sites},
          {"target_area_km2", prior.target_area_km2},
          {"index_flood", prior.c_hat},
          {"var_log_index_flood", prior.var_log_c}};
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::string to_string(RescaleMode mode) {
  return mode == RescaleMode::Mean ? "mean" : "one-year-quantile";
}

RescaleMode parse_rescale_mode(std::string_view text) {
  if (text == "mean") return RescaleMode::Mean;
  if (text == "one-year-quantile") return RescaleMode::OneYearQuantile;
  throw InputError("unknown rescale mode '" + std::string(text) +
                   "' (expected mean or one-year-quantile)");
}

RegionConfig parse_region_config(const json& j, const fs::path& base_dir) {
  try {
    if (j.value("schema_version", 0) != kSchemaVersion) {
      throw InputError("config: schema_version must be " + std::to_string(kSchemaVersion));
    }
    RegionConfig c;
    c.target = j.value("target", std::string());
    const auto resolve = [&](const std::string& p) {
      const fs::path path(p);
      return path.is_absolute() ? path : base_dir / path;
    };
    if (j.contains("threshold_policy")) {
      const json& tp = j.at("threshold_policy");
      const std::string kind = tp.at("kind").get<std::string>();
      if (kind == "target_rate") {
        c.target_rate = tp.at("target_rate").get<double>();
        if (!(*c.target_rate > 0.0)) throw InputError("config: target_rate must be positive");
      } else if (kind == "explicit") {
        c.target_rate.reset();
      } else {
        throw InputError("config: threshold_policy kind must be target_rate or explicit");
      }
    }
    if (j.contains("independence_rule")) {
      const json& r = j.at("independence_rule");
      c.rule.min_gap_days = r.value("min_gap_days", c.rule.min_gap_days);
      c.rule.trough_fraction = r.value("trough_fraction", c.rule.trough_fraction);
      c.rule.missing_gap_days = r.value("missing_gap_days", c.rule.missing_gap_days);
    }
    if (j.contains("index_flood_method")) {
      c.index_flood_method = parse_index_flood_method(j.at("index_flood_method").get<std::string>());
    }
    if (j.contains("rescale_mode")) {
      c.rescale_mode = parse_rescale_mode(j.at("rescale_mode").get<std::string>());
    }
    c.threshold_cv = j.value("threshold_cv", c.threshold_cv);
    if (j.contains("ground_truth")) c.ground_truth = resolve(j.at("ground_truth").get<std::string>());
    std::set<std::string> codes;
    for (const auto& s : j.at("stations")) {
      StationEntry e;
      e.code = s.at("code").get<std::string>();
      if (!codes.insert(e.code).second) throw InputError("config: duplicate station '" + e.code + "'");
      e.metadata = resolve(s.at("metadata").get<std::string>());
      e.series = resolve(s.at("series").get<std::string>());
      if (s.contains("threshold")) e.threshold = s.at("threshold").get<double>();
      if (!e.threshold && !c.target_rate) {
        throw InputError("config: station '" + e.code + "' needs a threshold");
      }
      c.stations.push_back(std::move(e));
    }
    if (c.stations.size() < 2) throw InputError("config: a region needs at least 2 stations");
    if (!c.target.empty() && !codes.count(c.target)) {
      throw InputError("config: target '" + c.target + "' is not a station");
    }
    return c;
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

RegionConfig read_region_config(const fs::path& path) {
  RegionConfig c = parse_region_config(read_json(path), path.parent_path());
  for (const auto& s : c.stations) {
    if (!fs::exists(s.metadata)) throw InputError("config: missing file '" + s.metadata.string() + "'");
    if (!fs::exists(s.series)) throw InputError("config: missing file '" + s.series.string() + "'");
  }
  return c;
}

json to_json(const RegionConfig& c) {
  json stations = json::array();
  for (const auto& s : c.stations) {
    json e = {{"code", s.code},
              {"metadata", s.metadata.generic_string()},
              {"series", s.series.generic_string()}};
    if (s.threshold) e["threshold"] = *s.threshold;
    stations.push_back(e);
  }
  json j = {{"schema_version", kSchemaVersion},
            {"target", c.target},
            {"stations", stations},
            {"independence_rule",
             {{"min_gap_days", c.rule.min_gap_days},
              {"trough_fraction", c.rule.trough_fraction},
              {"missing_gap_days", c.rule.missing_gap_days}}},
            {"index_flood_method", to_string(c.index_flood_method)},
            {"rescale_mode", to_string(c.rescale_mode)},
            {"threshold_cv", c.threshold_cv}};
  if (c.target_rate) {
    j["threshold_policy"] = {{"kind", "target_rate"}, {"target_rate", *c.target_rate}};
  } else {
    j["threshold_policy"] = {{"kind", "explicit"}};
  }
  if (c.ground_truth) j["ground_truth"] = c.ground_truth->generic_string();
  return j;
}

Region build_region(const RegionConfig& config) {
  Region region;
  region.target = config.target;
  std::map<fs::path, std::vector<StationMeta>> meta_cache;
  for (const auto& s : config.stations) {
    auto it = meta_cache.find(s.metadata);
    if (it == meta_cache.end()) it = meta_cache.emplace(s.metadata, read_metadata_csv(s.metadata)).first;
    Site site;
    bool found = false;
    for (const auto& m : it->second) {
      if (m.code == s.code) {
        site.meta = m;
        found = true;
        break;
      }
    }
    if (!found) {
      throw InputError("metadata file '" + s.metadata.string() + "' has no row for '" + s.code + "'");
    }
    const DischargeSeries series = read_series_csv(s.series, s.code);
    const double threshold =
        s.threshold ? *s.threshold : select_threshold(series, *config.target_rate, config.rule).threshold;
    site.pot = extract_pot(series, threshold, config.rule);
    region.sites.push_back(std::move(site));
  }
  validate(region);
  return region;
}

json to_json(const GroundTruth& truth) {
  json sites = json::array();
  for (const auto& s : truth.sites) {
    sites.push_back({{"code", s.code},
                     {"index_flood", s.index_flood},
                     {"params", to_json(s.params)},
                     {"events_per_year", s.rate}});
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "ground_truth"},
          {"growth_curve", to_json(truth.growth)},
          {"sites", sites}};
}

GroundTruth read_ground_truth(const fs::path& path) {
  const json j = read_json(path);
  try {
    GroundTruth t;
    t.growth = gp_params_from_json(j.at("growth_curve"));
    for (const auto& s : j.at("sites")) {
      t.sites.push_back({s.at("code").get<std::string>(), s.at("index_flood").get<double>(),
                         gp_params_from_json(s.at("params")), s.at("events_per_year").get<double>()});
    }
    return t;
  } catch (const json::exception& e) {
    throw InputError("ground truth: " + std::string(e.what()));
  }
}

}  // namespace regflood::cli
