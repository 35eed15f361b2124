#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cir.hpp"
#include "dataset.hpp"
#include "error.hpp"

namespace v2x {

// Complex Pearson coefficient
//   1/(N-1) * sum conj((a-mean_a)/sd_a) * ((b-mean_b)/sd_b)
// accumulated in one pass with running means and co-moments. Returns nullopt
// when either input has zero variance.
inline std::optional<std::complex<double>> pearson(std::span<const std::complex<double>> a,
                                                   std::span<const std::complex<double>> b) {
  if (a.size() != b.size()) throw ValidationError("pearson: vectors differ in length");
  if (a.size() < 2) throw ValidationError("pearson: need at least two bins");
  std::complex<double> mean_a{}, mean_b{}, co{};
  double m2a = 0.0, m2b = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double n = static_cast<double>(k + 1);
    const double w = (n - 1.0) / n;
    const std::complex<double> da = a[k] - mean_a;
    const std::complex<double> db = b[k] - mean_b;
    mean_a += da / n;
    mean_b += db / n;
    m2a += std::norm(da) * w;
    m2b += std::norm(db) * w;
    co += std::conj(da) * db * w;
  }
  if (!(m2a > 0.0) || !(m2b > 0.0)) return std::nullopt;
  return co / std::sqrt(m2a * m2b);
}

inline std::optional<std::complex<double>> pearson(const SparseCir& a, const SparseCir& b) {
  if (a.domain != b.domain) throw ValidationError("pearson: sparse CIRs are in different domains");
  if (a.n_bins() != b.n_bins()) throw ValidationError("pearson: sparse CIRs have different bin counts");
  return pearson(std::span<const std::complex<double>>(a.values), std::span<const std::complex<double>>(b.values));
}

// Band x band mean of |pearson| over the locations of one segment.
struct CorrelationMatrix {
  std::vector<double> bands_ghz;
  Domain domain = Domain::toa;
  Segment segment = Segment::los;
  std::vector<std::optional<double>> entries;  // row-major
  std::vector<std::size_t> sample_counts;      // row-major

  std::size_t size() const { return bands_ghz.size(); }
  std::optional<double> at(std::size_t i, std::size_t j) const { return entries[i * size() + j]; }
  std::size_t count(std::size_t i, std::size_t j) const { return sample_counts[i * size() + j]; }

  std::optional<std::size_t> index_of(double band) const {
    for (std::size_t i = 0; i < bands_ghz.size(); ++i)
      if (same_band(bands_ghz[i], band)) return i;
    return std::nullopt;
  }

  std::optional<double> between(double band_i, double band_j) const {
    auto i = index_of(band_i);
    auto j = index_of(band_j);
    if (!i || !j) return std::nullopt;
    return at(*i, *j);
  }
};

struct SegmentMatrices {
  CorrelationMatrix los;
  CorrelationMatrix nlos;

  const CorrelationMatrix& operator[](Segment s) const { return s == Segment::los ? los : nlos; }
};

// Each location contributes |pearson| between the thresholded, binned CIRs at
// every band pair. Locations where a band is missing or a vector has zero
// variance are skipped for that pair and show up in sample_counts.
inline SegmentMatrices correlation_matrix(const Dataset& ds, Domain domain, double mpct_db,
                                          std::span<const double> bands, const Binning& binning) {
  if (bands.empty()) throw ValidationError("no bands requested");
  for (double band : bands) {
    const bool present = std::any_of(ds.cirs.begin(), ds.cirs.end(),
                                     [&](const Cir& c) { return same_band(c.band_ghz, band); });
    if (!present) throw ValidationError("band " + band_label(band) + " GHz absent from dataset");
  }
  const std::size_t nb = bands.size();

  SegmentMatrices out;
  std::map<Segment, std::pair<std::vector<double>, std::vector<std::size_t>>> acc;
  for (Segment seg : {Segment::los, Segment::nlos}) acc[seg] = {std::vector<double>(nb * nb, 0.0),
                                                               std::vector<std::size_t>(nb * nb, 0)};

  for (int loc : ds.locations()) {
    std::vector<std::optional<SparseCir>> sparse(nb);
    Segment seg = Segment::los;
    for (std::size_t b = 0; b < nb; ++b) {
      if (const Cir* c = ds.find(loc, bands[b])) {
        sparse[b] = to_sparse(apply_mpct(*c, mpct_db), domain, binning);
        seg = c->segment;
      }
    }
    auto& [sums, counts] = acc[seg];
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t j = i; j < nb; ++j) {
        if (!sparse[i] || !sparse[j]) continue;
        const auto r = pearson(*sparse[i], *sparse[j]);
        if (!r) continue;
        const double mag = std::min(std::abs(*r), 1.0);
        sums[i * nb + j] += mag;
        counts[i * nb + j] += 1;
      }
    }
  }

  for (Segment seg : {Segment::los, Segment::nlos}) {
    CorrelationMatrix& m = seg == Segment::los ? out.los : out.nlos;
    m.bands_ghz.assign(bands.begin(), bands.end());
    m.domain = domain;
    m.segment = seg;
    m.entries.assign(nb * nb, std::nullopt);
    m.sample_counts.assign(nb * nb, 0);
    const auto& [sums, counts] = acc[seg];
    for (std::size_t i = 0; i < nb; ++i) {
      for (std::size_t j = i; j < nb; ++j) {
        const std::size_t n = counts[i * nb + j];
        const std::optional<double> v =
            n > 0 ? std::optional<double>(sums[i * nb + j] / static_cast<double>(n)) : std::nullopt;
        m.entries[i * nb + j] = m.entries[j * nb + i] = v;
        m.sample_counts[i * nb + j] = m.sample_counts[j * nb + i] = n;
      }
    }
  }
  return out;
}

inline SegmentMatrices correlation_matrix(const Dataset& ds, Domain domain, double mpct_db) {
  return correlation_matrix(ds, domain, mpct_db, ds.bands_ghz, default_binning(domain));
}

struct BinningSet {
  Binning toa = default_binning(Domain::toa);
  Binning azimuth = default_binning(Domain::aoa_az);
  Binning elevation = default_binning(Domain::aoa_el);

  Binning for_domain(Domain d) const {
    switch (d) {
      case Domain::toa: return toa;
      case Domain::aoa_az:
      case Domain::aod_az: return azimuth;
      case Domain::aoa_el:
      case Domain::aod_el: return elevation;
    }
    return toa;
  }
};

struct SummaryEntry {
  Domain domain = Domain::toa;
  Segment segment = Segment::los;
  std::optional<double> value;
  std::size_t samples = 0;
};

struct CorrelationReport {
  double mpct_db = 40.0;
  std::vector<double> bands_ghz;
  BinningSet binning;
  std::vector<CorrelationMatrix> matrices;  // domain-major, LOS then NLOS
  std::pair<double, double> summary_bands{5.9, 28.0};
  std::vector<SummaryEntry> summary;        // empty when the pair is not in the dataset

  const CorrelationMatrix* find(Domain d, Segment s) const {
    for (const auto& m : matrices)
      if (m.domain == d && m.segment == s) return &m;
    return nullptr;
  }
};

// All five domains for both segments, plus the cross-domain summary for one
// band pair (5.9 / 28 GHz by default).
inline CorrelationReport correlation_report(const Dataset& ds, double mpct_db, const BinningSet& binning = {},
                                            std::pair<double, double> summary_bands = {5.9, 28.0}) {
  if (ds.empty()) throw ValidationError("dataset is empty");
  CorrelationReport rep;
  rep.mpct_db = mpct_db;
  rep.bands_ghz = ds.bands_ghz;
  rep.binning = binning;
  rep.summary_bands = summary_bands;
  const bool have_pair = ds.has_band(summary_bands.first) && ds.has_band(summary_bands.second);
  for (Domain d : kAllDomains) {
    auto pair = correlation_matrix(ds, d, mpct_db, ds.bands_ghz, binning.for_domain(d));
    for (const CorrelationMatrix* m : {&pair.los, &pair.nlos}) {
      if (have_pair) {
        const auto i = *m->index_of(summary_bands.first);
        const auto j = *m->index_of(summary_bands.second);
        rep.summary.push_back({d, m->segment, m->at(i, j), m->count(i, j)});
      }
    }
    rep.matrices.push_back(std::move(pair.los));
    rep.matrices.push_back(std::move(pair.nlos));
  }
  return rep;
}

}  // namespace v2x
