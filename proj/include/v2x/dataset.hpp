#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cir.hpp"
#include "error.hpp"

namespace v2x {

inline constexpr int kDatasetFormatVersion = 1;

// Band equality up to a relative tolerance of 1e-9.
inline bool same_band(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

// Shortest text for a band value, e.g. "5.9".
inline std::string band_label(double band_ghz) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), band_ghz);
  return std::string(buf.data(), end);
}

// CIRs keyed by (location, band), kept sorted by location then band.
struct Dataset {
  std::string scene_name;
  int format_version = kDatasetFormatVersion;
  std::vector<double> bands_ghz;  // ascending
  std::vector<Cir> cirs;

  bool empty() const { return cirs.empty(); }

  const Cir* find(int location_id, double band_ghz) const {
    auto it = std::lower_bound(cirs.begin(), cirs.end(), location_id,
                               [](const Cir& c, int loc) { return c.location_id < loc; });
    for (; it != cirs.end() && it->location_id == location_id; ++it)
      if (same_band(it->band_ghz, band_ghz)) return &*it;
    return nullptr;
  }

  bool has_band(double band_ghz) const {
    return std::any_of(bands_ghz.begin(), bands_ghz.end(), [&](double b) { return same_band(b, band_ghz); });
  }

  std::vector<int> locations() const {
    std::vector<int> out;
    for (const auto& c : cirs)
      if (out.empty() || out.back() != c.location_id) out.push_back(c.location_id);
    return out;
  }

  // Segment label per location, in location order.
  std::map<int, Segment> segments() const {
    std::map<int, Segment> out;
    for (const auto& c : cirs) out.emplace(c.location_id, c.segment);
    return out;
  }

  // Sorts CIRs and their MPCs, refreshes the band list, and checks that every
  // (location, band) pair is unique and that labels agree across bands.
  void normalize() {
    std::stable_sort(cirs.begin(), cirs.end(), [](const Cir& a, const Cir& b) {
      if (a.location_id != b.location_id) return a.location_id < b.location_id;
      return a.band_ghz < b.band_ghz;
    });
    std::vector<double> bands;
    for (auto& c : cirs) {
      if (!(c.band_ghz > 0.0)) throw ValidationError("band must be positive");
      sort_by_toa(c.mpcs);
      if (std::none_of(bands.begin(), bands.end(), [&](double b) { return same_band(b, c.band_ghz); }))
        bands.push_back(c.band_ghz);
    }
    std::sort(bands.begin(), bands.end());
    bands_ghz = std::move(bands);
    for (std::size_t i = 1; i < cirs.size(); ++i) {
      const Cir& prev = cirs[i - 1];
      const Cir& cur = cirs[i];
      if (prev.location_id != cur.location_id) continue;
      if (same_band(prev.band_ghz, cur.band_ghz))
        throw ValidationError("duplicate CIR for location " + std::to_string(cur.location_id) + " at " +
                              band_label(cur.band_ghz) + " GHz");
      if (prev.segment != cur.segment)
        throw ValidationError("inconsistent LOS/NLOS label across bands at location " +
                              std::to_string(cur.location_id));
    }
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace v2x
