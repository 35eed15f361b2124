#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "cir.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "pathloss.hpp"
#include "scene.hpp"

namespace v2x {

inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m

enum class Antenna { isotropic, half_wave_dipole };

struct TraceOptions {
  int max_order = 3;
  bool ground_reflections = true;
  std::size_t max_paths = 250;  // per location, strongest kept
  Antenna antenna = Antenna::isotropic;
};

// A planar reflector: one face of a building box, or the ground plane.
struct Surface {
  int id = 0;
  int axis = 2;     // axis of the face normal
  double coord = 0.0;
  int outward = 1;  // sign of the normal along `axis`
  double u_lo = -std::numeric_limits<double>::infinity();
  double u_hi = std::numeric_limits<double>::infinity();
  double v_lo = -std::numeric_limits<double>::infinity();
  double v_hi = std::numeric_limits<double>::infinity();
  Material material;

  int u_axis() const { return (axis + 1) % 3; }
  int v_axis() const { return (axis + 2) % 3; }

  Vec3 mirror(Vec3 p) const {
    p[axis] = 2.0 * coord - p[axis];
    return p;
  }

  bool on_outer_side(Vec3 p) const { return (p[axis] - coord) * outward > 1e-9; }

  bool within_bounds(Vec3 p) const {
    constexpr double tol = 1e-9;
    const double u = p[u_axis()];
    const double v = p[v_axis()];
    return u >= u_lo - tol && u <= u_hi + tol && v >= v_lo - tol && v <= v_hi + tol;
  }
};

// Surface ids are stable: 0 is the ground, building b face f is 1 + 5*b + f.
inline std::vector<Surface> reflecting_surfaces(const Scene& scene, bool ground) {
  std::vector<Surface> out;
  if (ground) {
    Surface g;
    g.id = 0;
    g.axis = 2;
    g.coord = 0.0;
    g.outward = 1;
    g.material = scene.ground;
    out.push_back(g);
  }
  for (std::size_t b = 0; b < scene.buildings.size(); ++b) {
    const Box box = scene.buildings[b].box();
    const int base = 1 + 5 * static_cast<int>(b);
    auto face = [&](int f, int axis, double coord, int outward) {
      Surface s;
      s.id = base + f;
      s.axis = axis;
      s.coord = coord;
      s.outward = outward;
      s.u_lo = box.lo[s.u_axis()];
      s.u_hi = box.hi[s.u_axis()];
      s.v_lo = box.lo[s.v_axis()];
      s.v_hi = box.hi[s.v_axis()];
      s.material = scene.buildings[b].material;
      out.push_back(s);
    };
    face(0, 0, box.lo.x, -1);
    face(1, 0, box.hi.x, +1);
    face(2, 1, box.lo.y, -1);
    face(3, 1, box.hi.y, +1);
    face(4, 2, box.hi.z, +1);  // roof
  }
  return out;
}

struct Interaction {
  int surface_id = 0;
  double incidence_angle_rad = 0.0;  // from the surface normal
  Material material;
};

struct GeometricPath {
  std::vector<Vec3> vertices;  // tx, reflection points..., rx
  double total_length = 0.0;
  int interaction_count = 0;
  std::vector<Interaction> surfaces;

  Vec3 departure_direction() const { return vertices[1] - vertices[0]; }
  // Points from the receiver back toward where the wave came from.
  Vec3 arrival_direction() const { return vertices[vertices.size() - 2] - vertices.back(); }
};

namespace detail {

inline bool obstructed(const Scene& scene, Vec3 a, Vec3 b) {
  for (const auto& building : scene.buildings)
    if (segment_crosses_interior(a, b, building.box())) return true;
  return false;
}

// Image-method construction for one reflection sequence. `images[m]` is the
// source mirrored through the first m surfaces.
inline std::optional<GeometricPath> construct_path(const Scene& scene, Vec3 tx, Vec3 rx,
                                                   std::span<const Surface* const> sequence,
                                                   std::span<const Vec3> images) {
  const std::size_t k = sequence.size();
  std::vector<Vec3> verts(k + 2);
  verts.front() = tx;
  verts.back() = rx;
  Vec3 target = rx;
  for (std::size_t m = k; m-- > 0;) {
    const Surface& s = *sequence[m];
    const Vec3 image = images[m + 1];
    const double denom = target[s.axis] - image[s.axis];
    if (std::abs(denom) < 1e-12) return std::nullopt;
    const double t = (s.coord - image[s.axis]) / denom;
    if (!(t > 1e-12 && t < 1.0 - 1e-12)) return std::nullopt;
    Vec3 p = image + (target - image) * t;
    p[s.axis] = s.coord;
    if (!s.within_bounds(p)) return std::nullopt;
    verts[m + 1] = p;
    target = p;
  }
  for (std::size_t m = 0; m < k; ++m) {
    const Surface& s = *sequence[m];
    if (!s.on_outer_side(verts[m]) || !s.on_outer_side(verts[m + 2])) return std::nullopt;
  }
  for (std::size_t i = 0; i + 1 < verts.size(); ++i)
    if (obstructed(scene, verts[i], verts[i + 1])) return std::nullopt;

  GeometricPath path;
  path.interaction_count = static_cast<int>(k);
  for (std::size_t i = 0; i + 1 < verts.size(); ++i) path.total_length += distance(verts[i], verts[i + 1]);
  for (std::size_t m = 0; m < k; ++m) {
    const Surface& s = *sequence[m];
    const Vec3 incoming = verts[m + 1] - verts[m];
    const double cos_i = std::clamp(std::abs(incoming[s.axis]) / norm(incoming), 0.0, 1.0);
    path.surfaces.push_back({s.id, std::acos(cos_i), s.material});
  }
  path.vertices = std::move(verts);
  return path;
}

inline bool same_vertices(const GeometricPath& a, const GeometricPath& b) {
  if (a.vertices.size() != b.vertices.size()) return false;
  for (std::size_t i = 0; i < a.vertices.size(); ++i)
    if (distance(a.vertices[i], b.vertices[i]) > 1e-9) return false;
  return true;
}

inline void enumerate(const Scene& scene, Vec3 tx, Vec3 rx, const std::vector<Surface>& surfaces, int max_order,
                      std::vector<const Surface*>& sequence, std::vector<Vec3>& images,
                      std::vector<GeometricPath>& out) {
  if (auto p = construct_path(scene, tx, rx, sequence, images)) out.push_back(std::move(*p));
  if (static_cast<int>(sequence.size()) == max_order) return;
  for (const auto& s : surfaces) {
    if (!sequence.empty() && sequence.back() == &s) continue;
    // The first reflection needs the transmitter in front of the face.
    if (sequence.empty() && !s.on_outer_side(tx)) continue;
    sequence.push_back(&s);
    images.push_back(s.mirror(images[images.size() - 1]));
    enumerate(scene, tx, rx, surfaces, max_order, sequence, images, out);
    images.pop_back();
    sequence.pop_back();
  }
}

}  // namespace detail

// All unobstructed specular paths from `tx` to `rx` with at most `max_order`
// reflections, ordered by (interaction count, length).
inline std::vector<GeometricPath> trace_paths_between(const Scene& scene, Vec3 tx, Vec3 rx,
                                                      const TraceOptions& options = {}) {
  if (options.max_order < 0) throw ValidationError("max_order must be >= 0");
  for (const auto& b : scene.buildings) {
    if (b.box().contains(rx)) throw ValidationError("rx inside building '" + b.name + "'");
    if (b.box().contains(tx)) throw ValidationError("tx inside building '" + b.name + "'");
  }
  const auto surfaces = reflecting_surfaces(scene, options.ground_reflections);
  std::vector<GeometricPath> paths;
  std::vector<const Surface*> sequence;
  std::vector<Vec3> images{tx};
  detail::enumerate(scene, tx, rx, surfaces, options.max_order, sequence, images, paths);

  std::stable_sort(paths.begin(), paths.end(), [](const GeometricPath& a, const GeometricPath& b) {
    if (a.interaction_count != b.interaction_count) return a.interaction_count < b.interaction_count;
    return a.total_length < b.total_length;
  });
  std::vector<GeometricPath> unique;
  for (auto& p : paths) {
    const bool dup = std::any_of(unique.rbegin(), unique.rend(), [&](const GeometricPath& q) {
      return q.interaction_count == p.interaction_count && std::abs(q.total_length - p.total_length) < 1e-9 &&
             detail::same_vertices(p, q);
    });
    if (!dup) unique.push_back(std::move(p));
  }
  return unique;
}

inline std::vector<GeometricPath> trace_paths(const Scene& scene, Vec3 rx, const TraceOptions& options = {}) {
  return trace_paths_between(scene, scene.tx, rx, options);
}

// Perpendicular-polarization Fresnel coefficient for a lossy half-space with
// complex permittivity er - j*sigma/(2*pi*f*e0).
inline std::complex<double> fresnel_perpendicular(const Material& material, double band_ghz,
                                                  double incidence_rad) {
  if (std::isinf(material.conductivity)) return {-1.0, 0.0};
  const double omega = 2.0 * std::numbers::pi * band_ghz * 1e9;
  const std::complex<double> eps(material.relative_permittivity,
                                 -material.conductivity / (omega * kVacuumPermittivity));
  const double c = std::cos(incidence_rad);
  const double s = std::sin(incidence_rad);
  const std::complex<double> root = std::sqrt(eps - s * s);
  return (c - root) / (c + root);
}

inline double reflection_loss_db(const Material& material, double band_ghz, double incidence_rad) {
  const double mag = std::max(std::abs(fresnel_perpendicular(material, band_ghz, incidence_rad)), 1e-12);
  return -20.0 * std::log10(mag);
}

// Vertical half-wave dipole; zenith angle in degrees.
inline double antenna_gain_dbi(Antenna antenna, double zenith_deg_value) {
  if (antenna == Antenna::isotropic) return 0.0;
  const double theta = deg_to_rad(zenith_deg_value);
  const double s = std::sin(theta);
  if (std::abs(s) < 1e-9) return -100.0;
  const double pattern = std::cos(std::numbers::pi / 2.0 * std::cos(theta)) / s;
  return std::max(10.0 * std::log10(1.641 * pattern * pattern), -100.0);
}

struct DopplerSpec {
  double speed_mps = 0.0;
  Vec3 heading{1.0, 0.0, 0.0};
  double carrier_wavelength_m = 1.0;
  double initial_phase_rad = 0.0;

  void validate() const {
    if (!(speed_mps >= 0.0)) throw ValidationError("doppler: speed must be >= 0");
    if (std::abs(norm(heading) - 1.0) > 1e-9) throw ValidationError("doppler: heading must be unit-norm");
    if (!(carrier_wavelength_m > 0.0)) throw ValidationError("doppler: wavelength must be positive");
  }
};

inline double wavelength_m(double band_ghz) { return kSpeedOfLight / (band_ghz * 1e9); }

// 2*pi*(v/lambda)*cos(angle between heading and arrival direction)*t.
inline double doppler_phase(const DopplerSpec& d, Vec3 arrival_direction, double elapsed_s) {
  if (d.speed_mps == 0.0 || elapsed_s == 0.0) return 0.0;
  const double cos_angle = dot(d.heading, normalized(arrival_direction));
  return 2.0 * std::numbers::pi * d.speed_mps / d.carrier_wavelength_m * cos_angle * elapsed_s;
}

// 2*pi*f*tau - doppler - phi0 in [0, 2*pi). f*tau is formed as GHz*ns cycles so
// the whole-cycle part drops out before scaling.
inline double propagation_phase(double band_ghz, double toa_ns, double doppler_rad, double initial_rad) {
  const double cycles = band_ghz * toa_ns;
  const double frac = cycles - std::floor(cycles);
  return wrap_positive(2.0 * std::numbers::pi * frac - doppler_rad - initial_rad, 2.0 * std::numbers::pi);
}

inline Mpc evaluate_path(const GeometricPath& path, double band_ghz, double tx_power_dbm,
                         const DopplerSpec& doppler, double elapsed_s, Antenna antenna = Antenna::isotropic) {
  if (!(band_ghz > 0.0)) throw ValidationError("band must be positive");
  if (path.vertices.size() < 2) throw ValidationError("path needs at least two vertices");
  doppler.validate();
  const Vec3 dep = path.departure_direction();
  const Vec3 arr = path.arrival_direction();

  Mpc m;
  m.toa_ns = path.total_length / kSpeedOfLight * 1e9;
  m.aod_az_deg = azimuth_deg(dep);
  m.aod_el_deg = zenith_deg(dep);
  m.aoa_az_deg = azimuth_deg(arr);
  m.aoa_el_deg = zenith_deg(arr);
  m.interaction_count = path.interaction_count;

  double loss = fspl(band_ghz, path.total_length);
  for (const auto& hit : path.surfaces) loss += reflection_loss_db(hit.material, band_ghz, hit.incidence_angle_rad);
  m.power_dbm = tx_power_dbm + antenna_gain_dbi(antenna, m.aod_el_deg) + antenna_gain_dbi(antenna, m.aoa_el_deg) - loss;

  m.doppler_phase_rad = doppler_phase(doppler, arr, elapsed_s);
  m.phase_rad = propagation_phase(band_ghz, m.toa_ns, m.doppler_phase_rad, doppler.initial_phase_rad);
  return m;
}

// Unit direction of travel at each route point: toward the next point, or from
// the previous one at the end.
inline std::vector<Vec3> route_headings(const Route& route) {
  std::vector<Vec3> out(route.size(), Vec3{1.0, 0.0, 0.0});
  for (std::size_t i = 0; i < route.size(); ++i) {
    Vec3 d{};
    if (i + 1 < route.size()) d = route.points[i + 1] - route.points[i];
    else if (i > 0) d = route.points[i] - route.points[i - 1];
    if (norm(d) > 0.0) out[i] = normalized(d);
  }
  return out;
}

// Seconds since the first point, from arc length at constant speed. Zero when
// the route is static.
inline std::vector<double> route_times(const Route& route) {
  std::vector<double> out(route.size(), 0.0);
  if (route.speed_mps <= 0.0) return out;
  double s = 0.0;
  for (std::size_t i = 1; i < route.size(); ++i) {
    s += distance(route.points[i - 1], route.points[i]);
    out[i] = s / route.speed_mps;
  }
  return out;
}

namespace detail {

inline std::vector<Cir> location_cirs(const Scenario& sc, std::size_t index, Vec3 heading, double elapsed,
                                      const TraceOptions& options) {
  const Scene& scene = sc.scene;
  const auto paths = trace_paths(scene, sc.route.points[index], options);

  std::vector<DopplerSpec> dopplers;
  for (double band : scene.bands_ghz)
    dopplers.push_back({sc.route.speed_mps, heading, wavelength_m(band), 0.0});

  // Ranked by power at the lowest band; every band keeps the same set.
  std::vector<std::size_t> keep(paths.size());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
  if (paths.size() > options.max_paths) {
    std::vector<double> rank(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i)
      rank[i] = evaluate_path(paths[i], scene.bands_ghz.front(), scene.tx_power_dbm, dopplers.front(), elapsed,
                              options.antenna)
                    .power_dbm;
    std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) { return rank[a] > rank[b]; });
    keep.resize(options.max_paths);
    std::sort(keep.begin(), keep.end());
  }

  std::vector<Cir> out;
  for (std::size_t b = 0; b < scene.bands_ghz.size(); ++b) {
    Cir cir;
    cir.location_id = static_cast<int>(index);
    cir.segment = sc.route.labels[index];
    cir.band_ghz = scene.bands_ghz[b];
    cir.excitation_time_s = elapsed;
    for (std::size_t i : keep) {
      Mpc m = evaluate_path(paths[i], cir.band_ghz, scene.tx_power_dbm, dopplers[b], elapsed, options.antenna);
      m.path_id = static_cast<int>(i);
      cir.mpcs.push_back(m);
    }
    sort_by_toa(cir.mpcs);
    out.push_back(std::move(cir));
  }
  return out;
}

}  // namespace detail

// One CIR per (route point, band). Route points are traced on up to `threads`
// workers; the result does not depend on the thread count.
inline Dataset generate_route_cirs(const Scenario& sc, const TraceOptions& options = {}, unsigned threads = 1) {
  validate(sc.scene);
  if (sc.route.points.empty()) throw ValidationError("route must contain at least one point");
  if (sc.route.labels.size() != sc.route.points.size())
    throw ValidationError("route labels must match the number of points");
  if (options.max_order < 0) throw ValidationError("max_order must be >= 0");

  const auto headings = route_headings(sc.route);
  const auto times = route_times(sc.route);
  const std::size_t n = sc.route.size();
  std::vector<std::vector<Cir>> per_point(n);
  std::vector<std::exception_ptr> failures(n);

  auto work = [&](std::size_t first, std::size_t step) {
    for (std::size_t i = first; i < n; i += step) {
      try {
        per_point[i] = detail::location_cirs(sc, i, headings[i], times[i], options);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, n);
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);

  Dataset ds;
  ds.scene_name = sc.name;
  for (auto& cirs : per_point)
    for (auto& c : cirs) ds.cirs.push_back(std::move(c));
  ds.normalize();
  return ds;
}

}  // namespace v2x
