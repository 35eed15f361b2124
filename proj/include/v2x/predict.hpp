#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <optional>
#include <vector>

#include "cir.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "pathloss.hpp"
#include "raytracer.hpp"

namespace v2x {

// Close-in reference-distance path-loss model with one exponent per band.
struct PathLossModel {
  double reference_distance_m = 1.0;
  std::map<double, double> exponents;  // band GHz -> gamma
  double default_exponent = 2.0;
  double shadowing_sigma_db = 0.0;     // frequency independent, cancels between bands

  double exponent(double band_ghz) const {
    for (const auto& [band, gamma] : exponents)
      if (same_band(band, band_ghz)) return gamma;
    return default_exponent;
  }

  void validate() const {
    if (!(reference_distance_m > 0.0)) throw ValidationError("path-loss model: d0 must be positive");
    if (!(default_exponent > 0.0)) throw ValidationError("path-loss model: exponents must be positive");
    for (const auto& [band, gamma] : exponents)
      if (!(gamma > 0.0)) throw ValidationError("path-loss model: exponents must be positive");
    if (!(shadowing_sigma_db >= 0.0)) throw ValidationError("path-loss model: shadowing sigma must be >= 0");
  }
};

// Extra loss at f_i relative to f_j over a link of length d:
//   20*log10(f_i/f_j) + 10*(gamma_i - gamma_j)*log10(d/d0)
// Swapping the bands negates the result exactly.
inline double delta_pathloss(const PathLossModel& model, double band_i_ghz, double band_j_ghz, double distance_m) {
  model.validate();
  if (!(band_i_ghz > 0.0) || !(band_j_ghz > 0.0)) throw ValidationError("bands must be positive");
  if (!(distance_m >= model.reference_distance_m))
    throw ValidationError("link distance is shorter than the reference distance");
  const double freq_term = 20.0 * (std::log10(band_i_ghz) - std::log10(band_j_ghz));
  const double exp_term = 10.0 * (model.exponent(band_i_ghz) - model.exponent(band_j_ghz)) *
                          std::log10(distance_m / model.reference_distance_m);
  return freq_term + exp_term;
}

struct PredictedCir {
  Cir cir;
  double source_band_ghz = 0.0;
  std::vector<double> amplitude_offset_db;  // per source MPC, before re-thresholding
  std::size_t source_mpc_count = 0;
};

// Coarse CIR at `target_band_ghz` from a thresholded CIR at another band: delays
// and angles are copied, powers drop by delta_pathloss, and phases are
// recomputed for the target carrier. The Doppler term uses the speed, heading
// and initial phase of `doppler` with the target wavelength.
inline PredictedCir predict_coarse_cir(const Cir& source, double target_band_ghz, const PathLossModel& model,
                                       const DopplerSpec& doppler, double link_distance_m, double mpct_db) {
  if (source.mpcs.empty()) throw ValidationError("cannot predict from an empty CIR");
  if (!(target_band_ghz > 0.0)) throw ValidationError("target band must be positive");
  const double offset = delta_pathloss(model, target_band_ghz, source.band_ghz, link_distance_m);

  DopplerSpec target = doppler;
  target.carrier_wavelength_m = wavelength_m(target_band_ghz);
  target.validate();

  PredictedCir out;
  out.source_band_ghz = source.band_ghz;
  out.source_mpc_count = source.mpcs.size();
  out.cir = source;
  out.cir.band_ghz = target_band_ghz;
  out.cir.predicted_from_band_ghz = source.band_ghz;
  for (auto& m : out.cir.mpcs) {
    m.power_dbm -= offset;
    const Vec3 arrival = direction_from_angles(m.aoa_az_deg, m.aoa_el_deg);
    m.doppler_phase_rad = doppler_phase(target, arrival, source.excitation_time_s);
    m.phase_rad = propagation_phase(target_band_ghz, m.toa_ns, m.doppler_phase_rad, target.initial_phase_rad);
    out.amplitude_offset_db.push_back(offset);
  }
  out.cir = apply_mpct(out.cir, mpct_db);
  return out;
}

// Straight-line distance implied by the earliest arrival. Exact for a LOS CIR,
// a lower bound on the path length otherwise.
inline double first_arrival_distance_m(const Cir& cir) {
  if (cir.mpcs.empty()) throw ValidationError("empty CIR has no first arrival");
  double toa = cir.mpcs.front().toa_ns;
  for (const auto& m : cir.mpcs) toa = std::min(toa, m.toa_ns);
  return toa * 1e-9 * kSpeedOfLight;
}

struct PredictOptions {
  PathLossModel model;
  DopplerSpec doppler;                    // wavelength is replaced per target band
  double mpct_db = 40.0;
  std::optional<double> link_distance_m;  // default: first-arrival distance per location
  std::optional<Segment> segment;         // restrict to one segment
};

// Predicted CIRs at `target_band_ghz` for every location that has a non-empty
// CIR at `source_band_ghz`. The result carries predicted_from_band on each CIR.
inline Dataset predict_dataset(const Dataset& ds, double source_band_ghz, double target_band_ghz,
                               const PredictOptions& options) {
  if (!ds.has_band(source_band_ghz))
    throw ValidationError("band " + band_label(source_band_ghz) + " GHz absent from dataset");
  Dataset out;
  out.scene_name = ds.scene_name;
  for (const auto& c : ds.cirs) {
    if (!same_band(c.band_ghz, source_band_ghz)) continue;
    if (options.segment && c.segment != *options.segment) continue;
    const Cir source = apply_mpct(c, options.mpct_db);
    if (source.empty()) continue;
    const double d = options.link_distance_m.value_or(
        std::max(first_arrival_distance_m(source), options.model.reference_distance_m));
    out.cirs.push_back(
        predict_coarse_cir(source, target_band_ghz, options.model, options.doppler, d, options.mpct_db).cir);
  }
  out.normalize();
  return out;
}

struct OverlapMetrics {
  std::optional<double> recall;     // |P & T| / |T|
  std::optional<double> precision;  // |P & T| / |P|
  std::optional<double> jaccard;    // |P & T| / |P | T|
  std::size_t predicted_support = 0;
  std::size_t truth_support = 0;
  std::size_t intersection = 0;
};

// Set metrics over the non-zero bins of the two CIRs in one domain.
inline OverlapMetrics support_overlap(const Cir& predicted, const Cir& truth, Domain domain, const Binning& binning) {
  const auto p = to_sparse(predicted, domain, binning).support();
  const auto t = to_sparse(truth, domain, binning).support();
  std::vector<std::size_t> both;
  std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(both));
  OverlapMetrics out;
  out.predicted_support = p.size();
  out.truth_support = t.size();
  out.intersection = both.size();
  const std::size_t uni = p.size() + t.size() - both.size();
  const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  out.recall = ratio(both.size(), t.size());
  out.precision = ratio(both.size(), p.size());
  out.jaccard = ratio(both.size(), uni);
  return out;
}

inline OverlapMetrics support_overlap(const Cir& predicted, const Cir& truth, Domain domain = Domain::toa) {
  return support_overlap(predicted, truth, domain, default_binning(domain));
}

}  // namespace v2x
