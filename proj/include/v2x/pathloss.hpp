#pragma once

#include <cmath>
#include <numbers>

#include "cir.hpp"
#include "error.hpp"

namespace v2x {

// Free-space path loss in dB: 20*log10(4*pi*f*d/c).
inline double fspl(double band_ghz, double distance_m) {
  if (!(band_ghz > 0.0)) throw ValidationError("fspl: band must be positive");
  if (!(distance_m > 0.0)) throw ValidationError("fspl: distance must be positive");
  return 20.0 * std::log10(4.0 * std::numbers::pi * band_ghz * 1e9 * distance_m / kSpeedOfLight);
}

}  // namespace v2x
