// v2xcir: simulate, ingest and analyse multiband V2X multipath datasets.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "v2x/v2x.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kInvalid = 3, kIo = 4 };

std::string default_out_dir() {
  const char* env = std::getenv("V2XCIR_OUT_DIR");
  return env && *env ? env : ".";
}

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> parse_sweep(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    auto v = v2x::parse_real(item);
    if (!v) throw v2x::ValidationError("--mpct-sweep expects lo:hi:step, got '" + spec + "'");
    parts.push_back(*v);
  }
  if (parts.size() != 3) throw v2x::ValidationError("--mpct-sweep expects lo:hi:step, got '" + spec + "'");
  return v2x::threshold_range(parts[0], parts[1], parts[2]);
}

v2x::ReportFormat parse_format(const std::string& f) {
  return f == "json" ? v2x::ReportFormat::json : v2x::ReportFormat::csv;
}

v2x::Dataset load_dataset(const std::string& path) {
  auto parsed = v2x::load_mpc_dataset(path);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w.describe() << '\n';
  return std::move(parsed.dataset);
}

std::vector<v2x::SweepCurve> all_curves(const v2x::Dataset& ds, const std::vector<double>& thresholds) {
  auto out = v2x::mpc_count_vs_mpct(ds, thresholds);
  for (auto&& c : v2x::normalized_mpc_vs_mpct(ds, thresholds)) out.push_back(std::move(c));
  for (auto&& c : v2x::rms_delay_spread_vs_mpct(ds, thresholds)) out.push_back(std::move(c));
  return out;
}

struct BinFlags {
  double toa_ns = 1.0;
  double angle_deg = 1.0;

  v2x::BinningSet get() const {
    v2x::BinningSet b;
    b.toa = v2x::with_width(b.toa, toa_ns);
    b.azimuth = v2x::with_width(b.azimuth, angle_deg);
    b.elevation = v2x::with_width(b.elevation, angle_deg);
    return b;
  }
};

void add_bin_flags(CLI::App* cmd, BinFlags& bins) {
  cmd->add_option("--toa-bin", bins.toa_ns, "TOA bin width in ns")->capture_default_str();
  cmd->add_option("--angle-bin", bins.angle_deg, "Azimuth and elevation bin width in degrees")->capture_default_str();
}

void report_written(const std::vector<fs::path>& files) {
  for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiband V2X channel simulation, statistics, cross-band correlation and prediction"};
  app.set_version_flag("--version", std::string(v2x::kToolName) + " " + v2x::kToolVersion);
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads for per-location work (0 = all cores)")
      ->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Trace a scene document and write the MPC dataset");
  std::string scene_path;
  std::string sim_out;
  v2x::TraceOptions trace;
  bool no_ground = false;
  bool dipole = false;
  sim->add_option("--scene", scene_path, "Scene document (JSON)")->required();
  sim->add_option("--out", sim_out, "Output dataset CSV (default: $V2XCIR_OUT_DIR/mpcs.csv)");
  sim->add_option("--max-order", trace.max_order, "Maximum number of reflections per path")->capture_default_str();
  sim->add_option("--max-paths", trace.max_paths, "Path cap per location")->capture_default_str();
  sim->add_flag("--no-ground", no_ground, "Disable ground reflections");
  sim->add_flag("--dipole", dipole, "Use half-wave dipole elevation patterns instead of isotropic antennas");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a dataset, or convert an external export, to canonical CSV");
  std::string ingest_in;
  std::string ingest_mapping;
  std::string ingest_out;
  ingest->add_option("--in", ingest_in, "Input file")->required();
  ingest->add_option("--mapping", ingest_mapping, "Column mapping (JSON) for external exports");
  ingest->add_option("--out", ingest_out, "Output dataset CSV (default: $V2XCIR_OUT_DIR/mpcs.csv)");

  // stats
  auto* stats = app.add_subcommand("stats", "MPC count, normalized MPC metric and RMS delay spread versus MPCT");
  std::string stats_in;
  std::string stats_out;
  std::string sweep = "0:60:1";
  std::string stats_format = "csv";
  stats->add_option("--in", stats_in, "Dataset CSV")->required();
  stats->add_option("--mpct-sweep", sweep, "MPCT values lo:hi:step in dB")->capture_default_str();
  stats->add_option("--out", stats_out, "Output directory (default: $V2XCIR_OUT_DIR)");
  stats->add_option("--format", stats_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  // correlate
  auto* corr = app.add_subcommand("correlate", "Band-by-band correlation matrices per domain and segment");
  std::string corr_in;
  std::string corr_out;
  std::string corr_domain = "all";
  std::string corr_format = "csv";
  double corr_mpct = 40.0;
  std::vector<double> corr_bands;
  BinFlags corr_bins;
  corr->add_option("--in", corr_in, "Dataset CSV")->required();
  corr->add_option("--domain", corr_domain, "toa, aoa-az, aoa-el, aod-az, aod-el or all")
      ->check(CLI::IsMember({"all", "toa", "aoa-az", "aoa-el", "aod-az", "aod-el"}))
      ->capture_default_str();
  corr->add_option("--mpct", corr_mpct, "MPC threshold in dB")->capture_default_str();
  corr->add_option("--bands", corr_bands, "Band subset in GHz (default: all bands in the dataset)")->delimiter(',');
  corr->add_option("--out", corr_out, "Output directory (default: $V2XCIR_OUT_DIR)");
  corr->add_option("--format", corr_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  add_bin_flags(corr, corr_bins);

  // predict
  auto* pred = app.add_subcommand("predict", "Coarse CIR at one band from the CIR at another band");
  std::string pred_in;
  std::string pred_out;
  double from = 0.0;
  double to = 0.0;
  double pred_mpct = 40.0;
  double gamma_from = 2.0;
  double gamma_to = 2.0;
  double d0 = 1.0;
  std::optional<double> link_distance;
  double speed = 0.0;
  double heading_deg = 0.0;
  double initial_phase = 0.0;
  std::string pred_segment = "all";
  pred->add_option("--in", pred_in, "Dataset CSV")->required();
  pred->add_option("--from", from, "Source band in GHz")->required();
  pred->add_option("--to", to, "Target band in GHz")->required();
  pred->add_option("--out", pred_out, "Output dataset CSV (default: $V2XCIR_OUT_DIR/predicted.csv)");
  pred->add_option("--mpct", pred_mpct, "MPC threshold in dB")->capture_default_str();
  pred->add_option("--gamma-from", gamma_from, "Path-loss exponent at the source band")->capture_default_str();
  pred->add_option("--gamma-to", gamma_to, "Path-loss exponent at the target band")->capture_default_str();
  pred->add_option("--d0", d0, "Reference distance in m")->capture_default_str();
  pred->add_option("--distance", link_distance, "Link distance in m (default: first-arrival distance)");
  pred->add_option("--speed", speed, "Vehicle speed in m/s")->capture_default_str();
  pred->add_option("--heading-deg", heading_deg, "Vehicle heading azimuth in degrees")->capture_default_str();
  pred->add_option("--initial-phase", initial_phase, "Constant phase offset in rad")->capture_default_str();
  pred->add_option("--segment", pred_segment, "LOS, NLOS or all")
      ->check(CLI::IsMember({"all", "LOS", "NLOS"}))
      ->capture_default_str();

  // report
  auto* rep = app.add_subcommand("report", "Statistics and correlation in one run");
  std::string rep_in;
  std::string rep_out;
  std::string rep_sweep = "0:60:1";
  std::string rep_format = "csv";
  double rep_mpct = 40.0;
  BinFlags rep_bins;
  rep->add_option("--in", rep_in, "Dataset CSV")->required();
  rep->add_option("--mpct", rep_mpct, "MPC threshold in dB for the correlation part")->capture_default_str();
  rep->add_option("--mpct-sweep", rep_sweep, "MPCT values lo:hi:step in dB")->capture_default_str();
  rep->add_option("--out", rep_out, "Output directory (default: $V2XCIR_OUT_DIR)");
  rep->add_option("--format", rep_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  add_bin_flags(rep, rep_bins);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << '\n';
    return kUsage;
  }

  const std::string out_dir = default_out_dir();
  try {
    if (*sim) {
      trace.ground_reflections = !no_ground;
      trace.antenna = dipole ? v2x::Antenna::half_wave_dipole : v2x::Antenna::isotropic;
      const auto scenario = v2x::load_scene_file(scene_path);
      const auto ds = v2x::generate_route_cirs(scenario, trace, worker_count(threads));
      const std::string path = sim_out.empty() ? (fs::path(out_dir) / "mpcs.csv").string() : sim_out;
      v2x::save_mpc_dataset(ds, path);
      std::cout << "wrote " << path << " (" << ds.cirs.size() << " CIRs)\n";
    } else if (*ingest) {
      v2x::ParsedDataset parsed;
      if (ingest_mapping.empty()) {
        parsed = v2x::load_mpc_dataset(ingest_in);
      } else {
        const auto mapping = v2x::load_column_mapping(ingest_mapping);
        std::ifstream in(ingest_in);
        if (!in) throw v2x::IoError("cannot open '" + ingest_in + "'");
        parsed = v2x::convert_external(in, mapping);
      }
      for (const auto& w : parsed.warnings) std::cerr << "warning: " << w.describe() << '\n';
      const std::string path = ingest_out.empty() ? (fs::path(out_dir) / "mpcs.csv").string() : ingest_out;
      v2x::save_mpc_dataset(parsed.dataset, path);
      std::cout << "wrote " << path << " (" << parsed.dataset.cirs.size() << " CIRs)\n";
    } else if (*stats) {
      const auto ds = load_dataset(stats_in);
      v2x::ReportData data;
      data.bands_ghz = ds.bands_ghz;
      data.curves = all_curves(ds, parse_sweep(sweep));
      report_written(v2x::write_report(data, stats_out.empty() ? out_dir : stats_out, parse_format(stats_format)));
    } else if (*corr) {
      const auto ds = load_dataset(corr_in);
      if (ds.empty()) throw v2x::ValidationError("dataset is empty");
      const auto binning = corr_bins.get();
      const std::vector<double> bands = corr_bands.empty() ? ds.bands_ghz : corr_bands;
      v2x::ReportData data;
      data.mpct_db = corr_mpct;
      data.bands_ghz = bands;
      data.binning = binning;
      std::vector<v2x::Domain> domains(v2x::kAllDomains.begin(), v2x::kAllDomains.end());
      if (corr_domain != "all") domains = {*v2x::parse_domain(corr_domain)};
      for (auto d : domains) {
        auto m = v2x::correlation_matrix(ds, d, corr_mpct, bands, binning.for_domain(d));
        for (const auto* seg : {&m.los, &m.nlos}) {
          auto i = seg->index_of(data.summary_bands.first);
          auto j = seg->index_of(data.summary_bands.second);
          if (i && j) data.summary.push_back({d, seg->segment, seg->at(*i, *j), seg->count(*i, *j)});
        }
        data.matrices.push_back(std::move(m.los));
        data.matrices.push_back(std::move(m.nlos));
      }
      report_written(v2x::write_report(data, corr_out.empty() ? out_dir : corr_out, parse_format(corr_format)));
    } else if (*pred) {
      const auto ds = load_dataset(pred_in);
      v2x::PredictOptions opts;
      opts.model.reference_distance_m = d0;
      opts.model.exponents = {{from, gamma_from}, {to, gamma_to}};
      opts.mpct_db = pred_mpct;
      opts.link_distance_m = link_distance;
      opts.doppler.speed_mps = speed;
      opts.doppler.heading = v2x::direction_from_angles(heading_deg, 90.0);
      opts.doppler.initial_phase_rad = initial_phase;
      if (pred_segment != "all") opts.segment = v2x::parse_segment(pred_segment);
      const auto predicted = v2x::predict_dataset(ds, from, to, opts);
      const std::string path = pred_out.empty() ? (fs::path(out_dir) / "predicted.csv").string() : pred_out;
      v2x::save_mpc_dataset(predicted, path);
      std::cout << "wrote " << path << " (" << predicted.cirs.size() << " CIRs)\n";
      if (ds.has_band(to)) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& p : predicted.cirs) {
          const auto* truth = ds.find(p.location_id, to);
          if (!truth) continue;
          if (auto r = v2x::support_overlap(p, v2x::apply_mpct(*truth, pred_mpct)).recall) {
            sum += *r;
            ++n;
          }
        }
        if (n > 0) std::cout << "toa_support_recall " << v2x::format_fixed(sum / static_cast<double>(n), 6) << '\n';
      }
    } else if (*rep) {
      const auto ds = load_dataset(rep_in);
      auto data = v2x::report_data(v2x::correlation_report(ds, rep_mpct, rep_bins.get()));
      data.curves = all_curves(ds, parse_sweep(rep_sweep));
      report_written(v2x::write_report(data, rep_out.empty() ? out_dir : rep_out, parse_format(rep_format)));
    }
  } catch (const v2x::IoError& e) {
    std::cerr << "error: io: " << e.what() << '\n';
    return kIo;
  } catch (const v2x::ValidationError& e) {
    std::cerr << "error: validation: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
