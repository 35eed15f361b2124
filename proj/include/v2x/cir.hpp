#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "segment.hpp"

namespace v2x {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

inline double dbm_to_magnitude(double dbm) { return std::pow(10.0, dbm / 20.0); }
inline double dbm_to_milliwatt(double dbm) { return std::pow(10.0, dbm / 10.0); }

// One multipath component. Angles are degrees: azimuth in [0, 360), elevation
// as a zenith angle in [0, 180].
struct Mpc {
  double power_dbm = 0.0;
  double phase_rad = 0.0;  // [0, 2*pi)
  double toa_ns = 0.0;
  double aoa_az_deg = 0.0;
  double aoa_el_deg = 90.0;
  double aod_az_deg = 0.0;
  double aod_el_deg = 90.0;
  int path_id = 0;
  int interaction_count = 0;
  double doppler_phase_rad = 0.0;

  double magnitude() const { return dbm_to_magnitude(power_dbm); }
  // rho * exp(-j phi)
  std::complex<double> phasor() const { return std::polar(magnitude(), -phase_rad); }

  friend bool operator==(const Mpc&, const Mpc&) = default;
};

// Channel impulse response at one (location, band).
struct Cir {
  int location_id = 0;
  Segment segment = Segment::los;
  double band_ghz = 0.0;
  double excitation_time_s = 0.0;
  std::vector<Mpc> mpcs;  // ascending toa
  std::optional<double> predicted_from_band_ghz;

  std::size_t size() const { return mpcs.size(); }
  bool empty() const { return mpcs.empty(); }

  friend bool operator==(const Cir&, const Cir&) = default;
};

inline void sort_by_toa(std::vector<Mpc>& mpcs) {
  std::stable_sort(mpcs.begin(), mpcs.end(), [](const Mpc& a, const Mpc& b) {
    if (a.toa_ns != b.toa_ns) return a.toa_ns < b.toa_ns;
    return a.path_id < b.path_id;
  });
}

// Keeps the MPCs whose power is at least (strongest - mpct_db). Order is kept.
inline Cir apply_mpct(const Cir& cir, double mpct_db) {
  if (!(mpct_db >= 0.0)) throw ValidationError("MPCT must be >= 0 dB");
  Cir out = cir;
  if (cir.mpcs.empty()) return out;
  double strongest = cir.mpcs.front().power_dbm;
  for (const auto& m : cir.mpcs) strongest = std::max(strongest, m.power_dbm);
  const double floor_dbm = strongest - mpct_db;
  std::erase_if(out.mpcs, [&](const Mpc& m) { return m.power_dbm < floor_dbm; });
  return out;
}

enum class Domain { toa, aoa_az, aoa_el, aod_az, aod_el };

inline constexpr std::array<Domain, 5> kAllDomains = {Domain::toa, Domain::aoa_az, Domain::aoa_el,
                                                      Domain::aod_az, Domain::aod_el};

constexpr std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::toa: return "toa";
    case Domain::aoa_az: return "aoa-az";
    case Domain::aoa_el: return "aoa-el";
    case Domain::aod_az: return "aod-az";
    case Domain::aod_el: return "aod-el";
  }
  return "?";
}

inline std::optional<Domain> parse_domain(std::string_view text) {
  for (Domain d : kAllDomains)
    if (text == to_string(d)) return d;
  return std::nullopt;
}

inline double domain_value(const Mpc& m, Domain d) {
  switch (d) {
    case Domain::toa: return m.toa_ns;
    case Domain::aoa_az: return m.aoa_az_deg;
    case Domain::aoa_el: return m.aoa_el_deg;
    case Domain::aod_az: return m.aod_az_deg;
    case Domain::aod_el: return m.aod_el_deg;
  }
  return 0.0;
}

// Bin grid for one domain. Bins are [n*width, (n+1)*width) for n in
// [0, upper/width); values must lie in [lower, upper). When `closed_upper` is
// set the value `upper` itself is accepted and lands in the last bin.
struct Binning {
  double lower = 0.0;
  double upper = 0.0;
  double width = 1.0;
  bool closed_upper = false;

  std::size_t n_bins() const {
    if (!(width > 0.0) || !(upper > 0.0)) throw ValidationError("bin width and range must be positive");
    const double n = upper / width;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n))
      throw ValidationError("bin range must be a whole number of bins");
    return static_cast<std::size_t>(rounded);
  }

  friend bool operator==(const Binning&, const Binning&) = default;
};

// 1 ns over 1..1000 ns; 1 degree over the full azimuth circle and zenith span.
inline Binning default_binning(Domain d) {
  switch (d) {
    case Domain::toa: return {1.0, 1000.0, 1.0, false};
    case Domain::aoa_az:
    case Domain::aod_az: return {0.0, 360.0, 1.0, false};
    case Domain::aoa_el:
    case Domain::aod_el: return {0.0, 180.0, 1.0, true};
  }
  return {};
}

// Same grid with a different resolution.
inline Binning with_width(Binning b, double width) {
  b.width = width;
  return b;
}

struct SparseCir {
  Domain domain = Domain::toa;
  double bin_width = 1.0;
  std::vector<std::complex<double>> values;

  std::size_t n_bins() const { return values.size(); }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (values[i] != std::complex<double>{}) out.push_back(i);
    return out;
  }
};

// Bins the MPC phasors of an already-thresholded CIR into one domain. MPCs that
// share a bin add coherently. A value outside the grid is an error.
inline SparseCir to_sparse(const Cir& cir, Domain domain, const Binning& binning) {
  SparseCir out;
  out.domain = domain;
  out.bin_width = binning.width;
  const std::size_t n = binning.n_bins();
  out.values.assign(n, {});
  for (const auto& m : cir.mpcs) {
    const double v = domain_value(m, domain);
    const bool in_range = v >= binning.lower && (v < binning.upper || (binning.closed_upper && v == binning.upper));
    if (!in_range) {
      throw ValidationError("MPC path_id " + std::to_string(m.path_id) + " at location " +
                            std::to_string(cir.location_id) + " has " + std::string(to_string(domain)) +
                            " value " + std::to_string(v) + " outside the binning range");
    }
    auto bin = static_cast<std::size_t>(std::floor(v / binning.width));
    bin = std::min(bin, n - 1);
    out.values[bin] += m.phasor();
  }
  return out;
}

inline SparseCir to_sparse(const Cir& cir, Domain domain) { return to_sparse(cir, domain, default_binning(domain)); }

}  // namespace v2x
