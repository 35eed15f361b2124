#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "cir.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "stats.hpp"
#include "version.hpp"
#include "xband.hpp"

namespace v2x {

// ---------------------------------------------------------------------------
// Text helpers

// Shortest decimal text that reads back to the same double.
inline std::string format_real(double v) {
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline std::string format_fixed(double v, int decimals) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.*f", decimals, v);
  return buf.data();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one line on `delim`. Double quotes protect delimiters; "" is a quote.
inline std::vector<std::string> split_fields(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

inline std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_integer(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// ---------------------------------------------------------------------------
// MPC dataset wire format

inline constexpr std::array<std::string_view, 12> kRequiredColumns = {
    "location_id", "segment",    "band_ghz",   "path_id",    "power_dbm",  "phase_deg",
    "toa_ns",      "aoa_az_deg", "aoa_el_deg", "aod_az_deg", "aod_el_deg", "interaction_count"};

inline constexpr std::array<std::string_view, 3> kOptionalColumns = {"time_s", "doppler_phase_deg",
                                                                      "predicted_from_band"};

// One MPC row in wire units (degrees).
struct MpcRecord {
  int location_id = 0;
  Segment segment = Segment::los;
  double band_ghz = 0.0;
  int path_id = 0;
  double power_dbm = 0.0;
  double phase_deg = 0.0;
  double toa_ns = 0.0;
  double aoa_az_deg = 0.0;
  double aoa_el_deg = 90.0;
  double aod_az_deg = 0.0;
  double aod_el_deg = 90.0;
  int interaction_count = 0;
  double time_s = 0.0;
  double doppler_phase_deg = 0.0;
  std::optional<double> predicted_from_band;
};

struct ParsedDataset {
  Dataset dataset;
  std::vector<ParseIssue> warnings;
};

namespace detail {

inline double phase_to_wire_deg(double rad) { return wrap_positive(rad_to_deg(rad), 360.0); }

inline double phase_from_wire_rad(double deg) {
  return wrap_positive(deg_to_rad(deg), 2.0 * std::numbers::pi);
}

// Checks records and folds them into CIRs. Problems are appended to `issues`;
// nothing is dropped without an entry there.
inline Dataset assemble(const std::vector<std::pair<std::size_t, MpcRecord>>& rows, std::vector<ParseIssue>& issues,
                        std::string scene_name, int format_version) {
  Dataset ds;
  ds.scene_name = std::move(scene_name);
  ds.format_version = format_version;

  std::map<std::tuple<int, double>, std::size_t> cir_index;
  std::set<std::tuple<int, double, int>> seen_paths;
  std::map<int, std::pair<Segment, std::size_t>> location_segment;

  for (const auto& [row, r] : rows) {
    auto bad = [&, row = row](std::string_view column, std::string message) {
      issues.push_back({row, std::string(column), std::move(message)});
    };
    bool ok = true;
    if (!(r.band_ghz > 0.0)) ok = false, bad("band_ghz", "band must be positive");
    if (!(r.toa_ns > 0.0)) ok = false, bad("toa_ns", "TOA must be positive");
    if (!(r.phase_deg >= 0.0 && r.phase_deg < 360.0)) ok = false, bad("phase_deg", "phase outside [0, 360)");
    if (!(r.aoa_az_deg >= 0.0 && r.aoa_az_deg < 360.0)) ok = false, bad("aoa_az_deg", "azimuth outside [0, 360)");
    if (!(r.aod_az_deg >= 0.0 && r.aod_az_deg < 360.0)) ok = false, bad("aod_az_deg", "azimuth outside [0, 360)");
    if (!(r.aoa_el_deg >= 0.0 && r.aoa_el_deg <= 180.0)) ok = false, bad("aoa_el_deg", "elevation outside [0, 180]");
    if (!(r.aod_el_deg >= 0.0 && r.aod_el_deg <= 180.0)) ok = false, bad("aod_el_deg", "elevation outside [0, 180]");
    if (r.interaction_count < 0) ok = false, bad("interaction_count", "must be >= 0");
    if (r.predicted_from_band && !(*r.predicted_from_band > 0.0))
      ok = false, bad("predicted_from_band", "band must be positive");
    if (!ok) continue;

    // Bands are keyed by exact value after normalizing through the dataset's
    // first-seen representative.
    double band = r.band_ghz;
    for (auto k = cir_index.lower_bound({r.location_id, -1.0});
         k != cir_index.end() && std::get<0>(k->first) == r.location_id; ++k)
      if (same_band(std::get<1>(k->first), band)) band = std::get<1>(k->first);
    if (!seen_paths.emplace(r.location_id, band, r.path_id).second) {
      bad("path_id", "duplicate (location, band, path_id) = (" + std::to_string(r.location_id) + ", " +
                         format_real(r.band_ghz) + ", " + std::to_string(r.path_id) + ")");
      continue;
    }
    auto [seg_it, fresh_loc] = location_segment.emplace(r.location_id, std::make_pair(r.segment, row));
    if (!fresh_loc && seg_it->second.first != r.segment) {
      bad("segment", "label disagrees with row " + std::to_string(seg_it->second.second) + " for location " +
                         std::to_string(r.location_id));
      continue;
    }
    auto [it, fresh] = cir_index.emplace(std::make_tuple(r.location_id, band), ds.cirs.size());
    if (fresh) {
      Cir c;
      c.location_id = r.location_id;
      c.segment = r.segment;
      c.band_ghz = band;
      c.excitation_time_s = r.time_s;
      c.predicted_from_band_ghz = r.predicted_from_band;
      ds.cirs.push_back(std::move(c));
    }
    Cir& cir = ds.cirs[it->second];
    if (cir.excitation_time_s != r.time_s) {
      bad("time_s", "differs from other rows of the same CIR");
      continue;
    }
    if (cir.predicted_from_band_ghz != r.predicted_from_band) {
      bad("predicted_from_band", "differs from other rows of the same CIR");
      continue;
    }
    Mpc m;
    m.power_dbm = r.power_dbm;
    m.phase_rad = phase_from_wire_rad(r.phase_deg);
    m.toa_ns = r.toa_ns;
    m.aoa_az_deg = r.aoa_az_deg;
    m.aoa_el_deg = r.aoa_el_deg;
    m.aod_az_deg = r.aod_az_deg;
    m.aod_el_deg = r.aod_el_deg;
    m.path_id = r.path_id;
    m.interaction_count = r.interaction_count;
    m.doppler_phase_rad = deg_to_rad(r.doppler_phase_deg);
    cir.mpcs.push_back(m);
  }
  ds.normalize();
  return ds;
}

inline void read_metadata_line(std::string_view line, std::string& scene, int& version,
                               std::vector<ParseIssue>& issues, std::size_t row) {
  line.remove_prefix(1);
  const auto colon = line.find(':');
  if (colon == std::string_view::npos) return;
  const auto key = trim(line.substr(0, colon));
  const auto value = trim(line.substr(colon + 1));
  if (key == "scene") {
    scene = std::string(value);
  } else if (key == "format_version") {
    auto v = parse_integer(value);
    if (!v) {
      issues.push_back({row, "", "format_version is not an integer"});
    } else if (*v != kDatasetFormatVersion) {
      issues.push_back({row, "", "unsupported dataset format_version " + std::to_string(*v)});
    } else {
      version = static_cast<int>(*v);
    }
  }
}

}  // namespace detail

// Reads the canonical MPC CSV: optional '# key: value' metadata lines, a
// mandatory header, then one row per MPC. Every problem is collected and
// reported together with its line number.
inline ParsedDataset parse_mpc_dataset(std::istream& in) {
  std::vector<ParseIssue> issues;
  std::vector<ParseIssue> warnings;
  std::string scene_name;
  int version = kDatasetFormatVersion;

  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      detail::read_metadata_line(t, scene_name, version, issues, row);
      continue;
    }
    header = split_fields(t, ',');
    break;
  }
  if (header.empty()) throw ParseError({{0, "", "missing header"}});

  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!col.emplace(header[i], i).second) issues.push_back({row, header[i], "duplicate column"});
    const bool known = std::find(kRequiredColumns.begin(), kRequiredColumns.end(), header[i]) != kRequiredColumns.end() ||
                       std::find(kOptionalColumns.begin(), kOptionalColumns.end(), header[i]) != kOptionalColumns.end();
    if (!known) warnings.push_back({row, header[i], "unknown column ignored"});
  }
  for (auto name : kRequiredColumns)
    if (!col.contains(std::string(name))) issues.push_back({row, std::string(name), "missing column"});
  if (!issues.empty()) throw ParseError(std::move(issues));

  std::vector<std::pair<std::size_t, MpcRecord>> records;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_fields(t, ',');
    if (fields.size() != header.size()) {
      issues.push_back({row, "", "expected " + std::to_string(header.size()) + " fields, found " +
                                     std::to_string(fields.size())});
      continue;
    }
    bool ok = true;
    auto text = [&](std::string_view name) -> const std::string& { return fields[col.at(std::string(name))]; };
    auto real = [&](std::string_view name, double fallback = 0.0) {
      auto it = col.find(std::string(name));
      if (it == col.end()) return fallback;
      auto v = parse_real(fields[it->second]);
      if (!v) {
        issues.push_back({row, std::string(name), "not a number: '" + fields[it->second] + "'"});
        ok = false;
        return 0.0;
      }
      return *v;
    };
    auto integer = [&](std::string_view name) {
      auto v = parse_integer(text(name));
      if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max()) {
        issues.push_back({row, std::string(name), "not an integer: '" + text(name) + "'"});
        ok = false;
        return 0;
      }
      return static_cast<int>(*v);
    };

    MpcRecord r;
    r.location_id = integer("location_id");
    if (auto s = parse_segment(text("segment"))) {
      r.segment = *s;
    } else {
      issues.push_back({row, "segment", "expected LOS or NLOS, found '" + text("segment") + "'"});
      ok = false;
    }
    r.band_ghz = real("band_ghz");
    r.path_id = integer("path_id");
    r.power_dbm = real("power_dbm");
    r.phase_deg = real("phase_deg");
    r.toa_ns = real("toa_ns");
    r.aoa_az_deg = real("aoa_az_deg");
    r.aoa_el_deg = real("aoa_el_deg");
    r.aod_az_deg = real("aod_az_deg");
    r.aod_el_deg = real("aod_el_deg");
    r.interaction_count = integer("interaction_count");
    r.time_s = real("time_s");
    r.doppler_phase_deg = real("doppler_phase_deg");
    if (auto it = col.find("predicted_from_band"); it != col.end() && !fields[it->second].empty())
      r.predicted_from_band = real("predicted_from_band");
    if (ok) records.emplace_back(row, r);
  }

  ParsedDataset out;
  try {
    out.dataset = detail::assemble(records, issues, scene_name, version);
  } catch (const ValidationError& e) {
    issues.push_back({0, "", e.what()});
  }
  if (!issues.empty()) throw ParseError(std::move(issues));
  out.warnings = std::move(warnings);
  return out;
}

inline ParsedDataset parse_mpc_dataset_text(const std::string& text) {
  std::istringstream in(text);
  return parse_mpc_dataset(in);
}

inline ParsedDataset load_mpc_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return parse_mpc_dataset(in);
}

// Deterministic CSV: metadata lines, header, rows sorted by (location, band,
// toa), reals in shortest round-trip form.
inline void write_mpc_dataset(const Dataset& ds, std::ostream& out) {
  Dataset sorted = ds;
  sorted.normalize();
  const bool predicted = std::any_of(sorted.cirs.begin(), sorted.cirs.end(),
                                     [](const Cir& c) { return c.predicted_from_band_ghz.has_value(); });
  out << "# format_version: " << kDatasetFormatVersion << '\n';
  out << "# scene: " << sorted.scene_name << '\n';
  out << "# bands_ghz:";
  for (double b : sorted.bands_ghz) out << ' ' << format_real(b);
  out << '\n';
  for (auto name : kRequiredColumns) out << name << ',';
  out << "time_s,doppler_phase_deg";
  if (predicted) out << ",predicted_from_band";
  out << '\n';
  for (const auto& c : sorted.cirs) {
    for (const auto& m : c.mpcs) {
      out << c.location_id << ',' << to_string(c.segment) << ',' << format_real(c.band_ghz) << ',' << m.path_id
          << ',' << format_real(m.power_dbm) << ',' << format_real(detail::phase_to_wire_deg(m.phase_rad)) << ','
          << format_real(m.toa_ns) << ',' << format_real(m.aoa_az_deg) << ',' << format_real(m.aoa_el_deg) << ','
          << format_real(m.aod_az_deg) << ',' << format_real(m.aod_el_deg) << ',' << m.interaction_count << ','
          << format_real(c.excitation_time_s) << ',' << format_real(rad_to_deg(m.doppler_phase_rad));
      if (predicted) {
        out << ',';
        if (c.predicted_from_band_ghz) out << format_real(*c.predicted_from_band_ghz);
      }
      out << '\n';
    }
  }
}

inline std::string write_mpc_dataset_text(const Dataset& ds) {
  std::ostringstream out;
  write_mpc_dataset(ds, out);
  return out.str();
}

inline void save_mpc_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_mpc_dataset(ds, out);
  if (!out) throw IoError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// External ray-tracing exports

// Maps a foreign tabular export onto MPC records. Each canonical field is
// taken from a named source column (then scaled and offset) or from a constant.
// Fields with neither fall back to their defaults; path ids default to the row
// order within each (location, band).
struct ColumnMapping {
  char delimiter = ',';
  std::string comment_prefix = "#";
  std::size_t skip_lines = 0;
  std::map<std::string, std::string> columns;  // canonical field -> source column
  std::map<std::string, double> scale;
  std::map<std::string, double> offset;
  std::map<std::string, double> constants;
  std::optional<Segment> segment_constant;
  std::optional<int> nlos_below_location;  // locations < N are NLOS, others LOS
  bool phase_in_radians = false;
  bool elevation_from_horizon = false;      // convert to zenith angle
  bool wrap_azimuth = true;
  std::string scene_name = "external";
};

inline ColumnMapping column_mapping_from_json(const nlohmann::json& j) {
  try {
    const int version = j.value("format_version", 1);
    if (version != 1) throw ValidationError("unsupported column mapping format_version");
    ColumnMapping m;
    const std::string delim = j.value("delimiter", std::string(","));
    if (delim == "\\t" || delim == "tab") m.delimiter = '\t';
    else if (delim.size() == 1) m.delimiter = delim[0];
    else throw ValidationError("delimiter must be a single character");
    m.comment_prefix = j.value("comment_prefix", std::string("#"));
    m.skip_lines = j.value("skip_lines", std::size_t{0});
    m.columns = j.value("columns", std::map<std::string, std::string>{});
    m.scale = j.value("scale", std::map<std::string, double>{});
    m.offset = j.value("offset", std::map<std::string, double>{});
    m.constants = j.value("constants", std::map<std::string, double>{});
    if (j.contains("segment")) {
      auto s = parse_segment(j.at("segment").get<std::string>());
      if (!s) throw ValidationError("mapping segment must be LOS or NLOS");
      m.segment_constant = s;
    }
    if (j.contains("nlos_below_location")) m.nlos_below_location = j.at("nlos_below_location").get<int>();
    m.phase_in_radians = j.value("phase_unit", std::string("deg")) == "rad";
    m.elevation_from_horizon = j.value("elevation_reference", std::string("zenith")) == "horizon";
    m.wrap_azimuth = j.value("wrap_azimuth", true);
    m.scene_name = j.value("scene", std::string("external"));
    for (const auto& [field, source] : m.columns) {
      const bool known = field == "segment" ||
                         std::find(kRequiredColumns.begin(), kRequiredColumns.end(), field) != kRequiredColumns.end() ||
                         std::find(kOptionalColumns.begin(), kOptionalColumns.end(), field) != kOptionalColumns.end();
      if (!known) throw ValidationError("mapping names unknown field '" + field + "'");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("column mapping: ") + e.what());
  }
}

inline ColumnMapping load_column_mapping(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open column mapping '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("column mapping is not valid JSON: ") + e.what());
  }
  return column_mapping_from_json(j);
}

inline ParsedDataset convert_external(std::istream& in, const ColumnMapping& map) {
  std::vector<ParseIssue> issues;
  std::vector<ParseIssue> warnings;
  std::string line;
  std::size_t row = 0;
  std::vector<std::string> header;
  auto is_comment = [&](std::string_view t) {
    return !map.comment_prefix.empty() && t.substr(0, map.comment_prefix.size()) == map.comment_prefix;
  };
  while (std::getline(in, line)) {
    ++row;
    if (row <= map.skip_lines) continue;
    const auto t = trim(line);
    if (t.empty() || is_comment(t)) continue;
    header = split_fields(t, map.delimiter);
    break;
  }
  if (header.empty()) throw ParseError({{0, "", "missing header"}});
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);
  for (const auto& [field, source] : map.columns)
    if (!col.contains(source)) issues.push_back({row, source, "mapped column for '" + field + "' not found"});
  if (!map.columns.contains("segment") && !map.segment_constant && !map.nlos_below_location)
    issues.push_back({0, "segment", "mapping gives no source for the LOS/NLOS label"});
  if (!map.columns.contains("band_ghz") && !map.constants.contains("band_ghz"))
    issues.push_back({0, "band_ghz", "mapping gives no source for the band"});
  if (!issues.empty()) throw ParseError(std::move(issues));

  std::map<std::pair<int, double>, int> next_path_id;
  std::vector<std::pair<std::size_t, MpcRecord>> records;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || is_comment(t)) continue;
    const auto fields = split_fields(t, map.delimiter);
    if (fields.size() != header.size()) {
      issues.push_back({row, "", "expected " + std::to_string(header.size()) + " fields, found " +
                                     std::to_string(fields.size())});
      continue;
    }
    bool ok = true;
    auto value = [&](const std::string& field, double fallback) -> std::optional<double> {
      double v = fallback;
      if (auto c = map.columns.find(field); c != map.columns.end()) {
        const auto& raw = fields[col.at(c->second)];
        auto parsed = parse_real(raw);
        if (!parsed) {
          issues.push_back({row, c->second, "not a number: '" + raw + "'"});
          ok = false;
          return std::nullopt;
        }
        v = *parsed;
      } else if (auto k = map.constants.find(field); k != map.constants.end()) {
        v = k->second;
      } else {
        return std::nullopt;
      }
      if (auto s = map.scale.find(field); s != map.scale.end()) v *= s->second;
      if (auto o = map.offset.find(field); o != map.offset.end()) v += o->second;
      return v;
    };
    auto as_int = [&](const std::string& field, std::optional<double> v) -> std::optional<int> {
      if (!v) return std::nullopt;
      if (std::round(*v) != *v) {
        issues.push_back({row, field, "expected an integer value"});
        ok = false;
        return std::nullopt;
      }
      return static_cast<int>(*v);
    };

    MpcRecord r;
    r.location_id = as_int("location_id", value("location_id", 0.0)).value_or(0);
    r.band_ghz = value("band_ghz", 0.0).value_or(0.0);
    r.power_dbm = value("power_dbm", 0.0).value_or(0.0);
    r.toa_ns = value("toa_ns", 0.0).value_or(0.0);
    double phase = value("phase_deg", 0.0).value_or(0.0);
    if (map.phase_in_radians) phase = rad_to_deg(phase);
    r.phase_deg = wrap_positive(phase, 360.0);
    auto az = [&](const std::string& f) {
      double v = value(f, 0.0).value_or(0.0);
      return map.wrap_azimuth ? wrap_positive(v, 360.0) : v;
    };
    auto el = [&](const std::string& f) {
      double v = value(f, 90.0).value_or(90.0);
      return map.elevation_from_horizon ? 90.0 - v : v;
    };
    r.aoa_az_deg = az("aoa_az_deg");
    r.aod_az_deg = az("aod_az_deg");
    r.aoa_el_deg = el("aoa_el_deg");
    r.aod_el_deg = el("aod_el_deg");
    r.interaction_count = as_int("interaction_count", value("interaction_count", 0.0)).value_or(0);
    r.time_s = value("time_s", 0.0).value_or(0.0);
    r.doppler_phase_deg = value("doppler_phase_deg", 0.0).value_or(0.0);

    if (auto c = map.columns.find("segment"); c != map.columns.end()) {
      const auto& raw = fields[col.at(c->second)];
      if (auto s = parse_segment(raw)) {
        r.segment = *s;
      } else {
        issues.push_back({row, c->second, "expected LOS or NLOS, found '" + raw + "'"});
        ok = false;
      }
    } else if (map.segment_constant) {
      r.segment = *map.segment_constant;
    } else {
      r.segment = r.location_id < *map.nlos_below_location ? Segment::nlos : Segment::los;
    }

    if (auto pid = as_int("path_id", value("path_id", 0.0)); map.columns.contains("path_id") && pid) {
      r.path_id = *pid;
    } else {
      r.path_id = next_path_id[{r.location_id, r.band_ghz}]++;
    }
    if (ok) records.emplace_back(row, r);
  }

  ParsedDataset out;
  try {
    out.dataset = detail::assemble(records, issues, map.scene_name, kDatasetFormatVersion);
  } catch (const ValidationError& e) {
    issues.push_back({0, "", e.what()});
  }
  if (!issues.empty()) throw ParseError(std::move(issues));
  out.warnings = std::move(warnings);
  return out;
}

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { csv, json };

struct ReportData {
  double mpct_db = 40.0;
  std::vector<double> bands_ghz;
  BinningSet binning;
  std::vector<CorrelationMatrix> matrices;
  std::pair<double, double> summary_bands{5.9, 28.0};
  std::vector<SummaryEntry> summary;
  std::vector<SweepCurve> curves;
};

inline ReportData report_data(const CorrelationReport& rep) {
  ReportData d;
  d.mpct_db = rep.mpct_db;
  d.bands_ghz = rep.bands_ghz;
  d.binning = rep.binning;
  d.matrices = rep.matrices;
  d.summary_bands = rep.summary_bands;
  d.summary = rep.summary;
  return d;
}

inline std::string segment_slug(Segment s) { return s == Segment::los ? "los" : "nlos"; }

inline std::string matrix_file_name(const CorrelationMatrix& m) {
  return "corr_" + std::string(to_string(m.domain)) + "_" + segment_slug(m.segment) + ".csv";
}

// Bands as both header row and first column; "NA" where no location contributed.
inline void write_matrix_csv(const CorrelationMatrix& m, std::ostream& out) {
  out << "f_ghz";
  for (double b : m.bands_ghz) out << ',' << format_real(b);
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << format_real(m.bands_ghz[i]);
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto v = m.at(i, j);
      out << ',' << (v ? format_fixed(*v, 6) : std::string("NA"));
    }
    out << '\n';
  }
}

inline void write_curves_csv(const std::vector<SweepCurve>& curves, std::ostream& out) {
  out << "statistic,band_ghz,segment,mpct_db,value,n_defined\n";
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.thresholds.size(); ++k) {
      out << c.statistic << ',' << format_real(c.band_ghz) << ',' << to_string(c.segment) << ','
          << format_real(c.thresholds[k]) << ',' << (c.values[k] ? format_real(*c.values[k]) : std::string("NA"))
          << ',' << c.n_defined[k] << '\n';
    }
  }
}

inline void write_summary_csv(const ReportData& d, std::ostream& out) {
  out << "domain,segment,band_i_ghz,band_j_ghz,value,samples\n";
  for (const auto& s : d.summary) {
    out << to_string(s.domain) << ',' << to_string(s.segment) << ',' << format_real(d.summary_bands.first) << ','
        << format_real(d.summary_bands.second) << ',' << (s.value ? format_fixed(*s.value, 6) : std::string("NA"))
        << ',' << s.samples << '\n';
  }
}

inline nlohmann::json report_json(const ReportData& d) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["format_version"] = 1;
  j["mpct_db"] = d.mpct_db;
  j["bands_ghz"] = d.bands_ghz;
  j["bin_widths"] = {{"toa_ns", d.binning.toa.width},
                     {"azimuth_deg", d.binning.azimuth.width},
                     {"elevation_deg", d.binning.elevation.width}};
  json mats = json::array();
  for (const auto& m : d.matrices) {
    json entries = json::array();
    json counts = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
      json er = json::array();
      json cr = json::array();
      for (std::size_t k = 0; k < m.size(); ++k) {
        er.push_back(opt(m.at(i, k)));
        cr.push_back(m.count(i, k));
      }
      entries.push_back(er);
      counts.push_back(cr);
    }
    mats.push_back({{"domain", to_string(m.domain)},
                    {"segment", to_string(m.segment)},
                    {"bands_ghz", m.bands_ghz},
                    {"entries", entries},
                    {"sample_counts", counts}});
  }
  j["correlation"] = mats;
  json summary = json::array();
  for (const auto& s : d.summary)
    summary.push_back({{"domain", to_string(s.domain)},
                       {"segment", to_string(s.segment)},
                       {"band_i_ghz", d.summary_bands.first},
                       {"band_j_ghz", d.summary_bands.second},
                       {"value", opt(s.value)},
                       {"samples", s.samples}});
  j["summary"] = summary;
  json curves = json::array();
  for (const auto& c : d.curves) {
    json values = json::array();
    for (const auto& v : c.values) values.push_back(opt(v));
    curves.push_back({{"statistic", c.statistic},
                      {"band_ghz", c.band_ghz},
                      {"segment", to_string(c.segment)},
                      {"mpct_db", c.thresholds},
                      {"value", values},
                      {"n_defined", c.n_defined}});
  }
  j["curves"] = curves;
  return j;
}

// Writes plot-ready files into `dir` and returns their paths in write order.
inline std::vector<std::filesystem::path> write_report(const ReportData& d, const std::filesystem::path& dir,
                                                       ReportFormat format) {
  if (d.matrices.empty() && d.curves.empty()) throw ValidationError("nothing to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const auto& body) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    body(out);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
    written.push_back(path);
  };
  if (format == ReportFormat::json) {
    emit("report.json", [&](std::ostream& out) { out << report_json(d).dump(2) << '\n'; });
    return written;
  }
  for (const auto& m : d.matrices)
    emit(matrix_file_name(m), [&](std::ostream& out) { write_matrix_csv(m, out); });
  if (!d.summary.empty()) emit("corr_summary.csv", [&](std::ostream& out) { write_summary_csv(d, out); });
  if (!d.curves.empty()) emit("stats.csv", [&](std::ostream& out) { write_curves_csv(d.curves, out); });
  return written;
}

}  // namespace v2x
