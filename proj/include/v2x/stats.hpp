#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cir.hpp"
#include "dataset.hpp"
#include "error.hpp"

namespace v2x {

// A statistic averaged over the locations of one segment, per MPCT value.
struct SweepCurve {
  std::string statistic;
  double band_ghz = 0.0;
  Segment segment = Segment::los;
  std::vector<double> thresholds;
  std::vector<std::optional<double>> values;  // nullopt when no location was defined
  std::vector<std::size_t> n_defined;
};

// K / (tau_max - tau_min) in MPCs per ns; undefined for K <= 1 or zero span.
inline std::optional<double> normalized_mpc_metric(const Cir& cir) {
  if (cir.mpcs.size() <= 1) return std::nullopt;
  double lo = cir.mpcs.front().toa_ns;
  double hi = lo;
  for (const auto& m : cir.mpcs) {
    lo = std::min(lo, m.toa_ns);
    hi = std::max(hi, m.toa_ns);
  }
  if (!(hi > lo)) return std::nullopt;
  return static_cast<double>(cir.mpcs.size()) / (hi - lo);
}

// Power-weighted standard deviation of the delays, in ns.
inline double rms_delay_spread(const Cir& cir) {
  if (cir.mpcs.empty()) throw ValidationError("RMS delay spread of an empty CIR");
  if (cir.mpcs.size() == 1) return 0.0;
  // Delays relative to the first arrival.
  const double ref = cir.mpcs.front().toa_ns;
  double strongest = cir.mpcs.front().power_dbm;
  for (const auto& m : cir.mpcs) strongest = std::max(strongest, m.power_dbm);
  double sum_p = 0.0, sum_pt = 0.0;
  for (const auto& m : cir.mpcs) {
    const double p = dbm_to_milliwatt(m.power_dbm - strongest);
    sum_p += p;
    sum_pt += p * (m.toa_ns - ref);
  }
  const double mean = sum_pt / sum_p;
  double sum_var = 0.0;
  for (const auto& m : cir.mpcs) {
    const double p = dbm_to_milliwatt(m.power_dbm - strongest);
    const double dt = m.toa_ns - ref - mean;
    sum_var += p * dt * dt;
  }
  return std::sqrt(sum_var / sum_p);
}

struct SegmentSummary {
  std::optional<double> los_mean;
  std::optional<double> nlos_mean;
  std::size_t los_defined = 0;
  std::size_t nlos_defined = 0;
  std::size_t los_total = 0;
  std::size_t nlos_total = 0;
};

// Per-segment arithmetic mean, skipping undefined entries. A segment with no
// defined value has no mean.
inline SegmentSummary aggregate_by_segment(std::span<const std::optional<double>> values,
                                           std::span<const Segment> labels) {
  if (values.size() != labels.size())
    throw ValidationError("aggregate_by_segment: values and labels differ in length");
  SegmentSummary out;
  double los_sum = 0.0, nlos_sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool los = labels[i] == Segment::los;
    (los ? out.los_total : out.nlos_total) += 1;
    if (!values[i]) continue;
    (los ? out.los_defined : out.nlos_defined) += 1;
    (los ? los_sum : nlos_sum) += *values[i];
  }
  if (out.los_defined > 0) out.los_mean = los_sum / static_cast<double>(out.los_defined);
  if (out.nlos_defined > 0) out.nlos_mean = nlos_sum / static_cast<double>(out.nlos_defined);
  return out;
}

using CirStatistic = std::function<std::optional<double>(const Cir&)>;

inline void check_thresholds(std::span<const double> thresholds) {
  if (thresholds.empty()) throw ValidationError("threshold list is empty");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0)) throw ValidationError("MPCT values must be >= 0");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw ValidationError("MPCT values must be strictly increasing");
  }
}

// Generic sweep: for each band and segment, the mean of `stat` over locations
// after thresholding at each MPCT. Curves are ordered by band, then LOS before
// NLOS; segments with no location are left out.
inline std::vector<SweepCurve> sweep_vs_mpct(const Dataset& ds, std::span<const double> thresholds,
                                             const std::string& name, const CirStatistic& stat) {
  if (ds.empty()) throw ValidationError("dataset is empty");
  check_thresholds(thresholds);
  std::vector<SweepCurve> out;
  for (double band : ds.bands_ghz) {
    for (Segment seg : {Segment::los, Segment::nlos}) {
      std::vector<const Cir*> cirs;
      for (const auto& c : ds.cirs)
        if (c.segment == seg && same_band(c.band_ghz, band)) cirs.push_back(&c);
      if (cirs.empty()) continue;
      SweepCurve curve;
      curve.statistic = name;
      curve.band_ghz = band;
      curve.segment = seg;
      curve.thresholds.assign(thresholds.begin(), thresholds.end());
      for (double t : thresholds) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const Cir* c : cirs) {
          if (auto v = stat(apply_mpct(*c, t))) {
            sum += *v;
            ++n;
          }
        }
        curve.values.push_back(n > 0 ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt);
        curve.n_defined.push_back(n);
      }
      out.push_back(std::move(curve));
    }
  }
  return out;
}

inline std::vector<SweepCurve> mpc_count_vs_mpct(const Dataset& ds, std::span<const double> thresholds) {
  return sweep_vs_mpct(ds, thresholds, "mpc_count",
                       [](const Cir& c) { return std::optional<double>(static_cast<double>(c.mpcs.size())); });
}

inline std::vector<SweepCurve> normalized_mpc_vs_mpct(const Dataset& ds, std::span<const double> thresholds) {
  return sweep_vs_mpct(ds, thresholds, "normalized_mpc_per_ns", normalized_mpc_metric);
}

inline std::vector<SweepCurve> rms_delay_spread_vs_mpct(const Dataset& ds, std::span<const double> thresholds) {
  return sweep_vs_mpct(ds, thresholds, "rms_delay_spread_ns", [](const Cir& c) -> std::optional<double> {
    if (c.mpcs.empty()) return std::nullopt;
    return rms_delay_spread(c);
  });
}

// lo, lo+step, ... up to hi inclusive (within half a step).
inline std::vector<double> threshold_range(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ValidationError("invalid MPCT sweep range");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + step * static_cast<double>(i));
  return out;
}

}  // namespace v2x
