#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "v2x/v2x.hpp"

namespace testing {

inline v2x::Material concrete() { return {"concrete", 5.31, 0.0326}; }
inline v2x::Material ground_material() { return {"ground", 15.0, 0.035}; }

// Empty world with one tx, ground of the usual material.
inline v2x::Scene open_scene(v2x::Vec3 tx, std::vector<double> bands = {5.9}) {
  v2x::Scene s;
  s.ground = ground_material();
  s.tx = tx;
  s.bands_ghz = std::move(bands);
  return s;
}

inline v2x::Building box(std::string name, double x0, double x1, double y0, double y1, double h,
                         v2x::Material m = concrete()) {
  return {std::move(name), x0, x1, y0, y1, h, std::move(m)};
}

inline v2x::Mpc mpc(double power_dbm, double toa_ns, double phase = 0.0, int path_id = 0) {
  v2x::Mpc m;
  m.power_dbm = power_dbm;
  m.toa_ns = toa_ns;
  m.phase_rad = phase;
  m.path_id = path_id;
  return m;
}

inline v2x::Cir cir_of(std::vector<v2x::Mpc> mpcs, double band = 5.9, int loc = 0,
                       v2x::Segment seg = v2x::Segment::los) {
  v2x::Cir c;
  c.location_id = loc;
  c.segment = seg;
  c.band_ghz = band;
  c.mpcs = std::move(mpcs);
  v2x::sort_by_toa(c.mpcs);
  return c;
}

// Random CIR with angles and delays inside the default binning ranges.
inline v2x::Cir random_cir(std::mt19937_64& rng, std::size_t max_mpcs, double band = 5.9, int loc = 0) {
  std::uniform_int_distribution<std::size_t> count(0, max_mpcs);
  std::uniform_real_distribution<double> power(-140.0, -40.0);
  std::uniform_real_distribution<double> toa(1.0, 999.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> az(0.0, 359.999);
  std::uniform_real_distribution<double> el(0.0, 180.0);
  std::vector<v2x::Mpc> mpcs;
  const std::size_t n = count(rng);
  for (std::size_t i = 0; i < n; ++i) {
    v2x::Mpc m = mpc(power(rng), toa(rng), phase(rng), static_cast<int>(i));
    m.aoa_az_deg = az(rng);
    m.aod_az_deg = az(rng);
    m.aoa_el_deg = el(rng);
    m.aod_el_deg = el(rng);
    m.interaction_count = static_cast<int>(i % 4);
    mpcs.push_back(m);
  }
  return cir_of(std::move(mpcs), band, loc);
}

inline std::vector<std::complex<double>> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::complex<double>> v(n);
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

// First difference between two datasets, or "" when they agree: integers and
// labels exactly, reals to `rel` relative, phases to `rel` radians on the circle.
inline std::string dataset_mismatch(const v2x::Dataset& a, const v2x::Dataset& b, double rel = 1e-9) {
  auto close = [&](double x, double y) { return std::abs(x - y) <= rel * std::max({1.0, std::abs(x), std::abs(y)}); };
  auto close_phase = [&](double x, double y) {
    const double d = std::abs(std::remainder(x - y, 2.0 * std::numbers::pi));
    return d <= rel;
  };
  if (a.scene_name != b.scene_name) return "scene name";
  if (a.format_version != b.format_version) return "format version";
  if (a.bands_ghz != b.bands_ghz) return "band list";
  if (a.cirs.size() != b.cirs.size()) return "CIR count";
  for (std::size_t i = 0; i < a.cirs.size(); ++i) {
    const auto& x = a.cirs[i];
    const auto& y = b.cirs[i];
    const std::string where = "CIR " + std::to_string(i) + ": ";
    if (x.location_id != y.location_id || x.segment != y.segment || x.band_ghz != y.band_ghz) return where + "key";
    if (!close(x.excitation_time_s, y.excitation_time_s)) return where + "time";
    if (x.predicted_from_band_ghz != y.predicted_from_band_ghz) return where + "predicted_from_band";
    if (x.mpcs.size() != y.mpcs.size()) return where + "MPC count";
    for (std::size_t k = 0; k < x.mpcs.size(); ++k) {
      const auto& m = x.mpcs[k];
      const auto& n = y.mpcs[k];
      const std::string at = where + "MPC " + std::to_string(k) + ": ";
      if (m.path_id != n.path_id || m.interaction_count != n.interaction_count) return at + "ids";
      if (!close(m.power_dbm, n.power_dbm)) return at + "power";
      if (!close(m.toa_ns, n.toa_ns)) return at + "toa";
      if (!close(m.aoa_az_deg, n.aoa_az_deg) || !close(m.aoa_el_deg, n.aoa_el_deg)) return at + "aoa";
      if (!close(m.aod_az_deg, n.aod_az_deg) || !close(m.aod_el_deg, n.aod_el_deg)) return at + "aod";
      if (!close_phase(m.phase_rad, n.phase_rad)) return at + "phase";
      if (!close_phase(m.doppler_phase_rad, n.doppler_phase_rad)) return at + "doppler phase";
    }
  }
  return "";
}

}  // namespace testing
