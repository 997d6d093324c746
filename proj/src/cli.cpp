#include "rgrow/cli.hpp"

#include "rgrow/analysis.hpp"
#include "rgrow/clustering.hpp"
#include "rgrow/errors.hpp"
#include "rgrow/forward.hpp"
#include "rgrow/mesh.hpp"
#include "rgrow/serialize.hpp"
#include "rgrow/text_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>

namespace rgrow {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct GlobalOptions {
  int threads = 1;
  bool quiet = false;
};

struct SimulateOptions {
  std::string mesh_kind = "icosphere";
  int subdiv = 3;
  double radius = 0.08;
  int rows = 10;
  int cols = 10;
  double spacing = 0.005;
  std::string mesh_file;
  int copies = 1;
  int sensors = 64;
  double sensor_radius_factor = 1.3;
  int seed_vertex = 0;
  int region_size = 0;
  double amplitude = 1.0;
  std::optional<double> noise_sigma;
  std::optional<double> snr_db;
  std::uint64_t rng_seed = 0;
  std::string out;
  bool leadfield_csv = false;
};

struct SolveOptions {
  std::string mesh;
  std::string leadfield;
  std::string measurement;
  double lambda = 0.0;
  std::string out;
  bool naive = false;
  bool positive_amplitude = false;
  bool debug_validate = false;
};

struct ReportOptions {
  std::string dendrogram;
  std::string truth;
  int speed_threshold = 10;
  double error_threshold = std::numeric_limits<double>::infinity();
  int top_k = 3;
  int min_points = 2;
  std::string out;
};

Json number_or_string(double v) { return std::isfinite(v) ? Json(v) : Json(format_double(v)); }

std::string manifest(const std::string& command, Json flags, const Json& rng_seed) {
  Json doc;
  doc["command"] = command;
  doc["version"] = kVersion;
  doc["flags"] = std::move(flags);
  doc["rng_seed"] = rng_seed;
  doc["timestamp_excluded_from_hash"] = true;
  return doc.dump(1) + "\n";
}

fs::path prepare_out_dir(const std::string& dir) {
  if (dir.empty()) throw InvalidArgument("--out is required");
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (!fs::is_directory(p)) throw InvalidArgument("cannot create output directory " + dir);
  return p;
}

TriangleMesh make_mesh(const SimulateOptions& o) {
  TriangleMesh base;
  if (o.mesh_kind == "icosphere") {
    base = generate_icosphere(o.subdiv, o.radius);
  } else if (o.mesh_kind == "grid") {
    base = generate_grid(o.rows, o.cols, o.spacing);
  } else if (o.mesh_kind == "file") {
    if (o.mesh_file.empty()) throw InvalidArgument("--mesh-kind file needs --mesh-file");
    base = load_mesh(o.mesh_file);
  } else {
    throw InvalidArgument("unknown mesh kind '" + o.mesh_kind + "'");
  }
  if (o.copies < 1) throw InvalidArgument("--copies must be >= 1");
  if (o.copies == 1) return base;
  // Copies are laid out along x with a gap of one extent between them.
  const Eigen::Vector3d lo = base.positions.rowwise().minCoeff();
  const Eigen::Vector3d hi = base.positions.rowwise().maxCoeff();
  const double step = 2.0 * std::max((hi - lo).maxCoeff(), 1e-6);
  std::vector<TriangleMesh> parts;
  for (int c = 0; c < o.copies; ++c) parts.push_back(translated(base, Eigen::Vector3d(c * step, 0.0, 0.0)));
  return concatenate(parts);
}

int cmd_simulate(const SimulateOptions& o, const GlobalOptions& g, std::ostream& out) {
  if (o.noise_sigma && o.snr_db) throw InvalidArgument("--noise-sigma and --snr-db are mutually exclusive");
  if (o.region_size < 1) throw InvalidArgument("--region-size must be >= 1");
  const TriangleMesh mesh = make_mesh(o);
  if (o.region_size > mesh.vertex_count()) {
    throw InvalidArgument("--region-size " + std::to_string(o.region_size) + " exceeds the mesh's " +
                          std::to_string(mesh.vertex_count()) + " vertices");
  }
  if (o.seed_vertex < 0 || o.seed_vertex >= mesh.vertex_count()) throw InvalidArgument("--seed-vertex out of range");
  const AdjacencyGraph graph = build_adjacency(mesh);
  const SensorArray sensors = fibonacci_sensors(mesh, o.sensors, o.sensor_radius_factor);
  const LeadFieldMatrix leadfield = compute_lead_field(mesh, sensors, g.threads);
  const VertexSet region = grow_ground_truth_region(graph, o.seed_vertex, o.region_size);

  double sigma = o.noise_sigma.value_or(0.0);
  if (o.snr_db) {
    const double clean = region_signal(leadfield, region, o.amplitude).norm();
    sigma = clean / std::sqrt(static_cast<double>(leadfield.rows())) / std::pow(10.0, *o.snr_db / 20.0);
  }
  const Measurement meas = simulate(leadfield, region, o.amplitude, sigma, o.rng_seed);

  const fs::path dir = prepare_out_dir(o.out);
  save_mesh(mesh, dir / "mesh.txt");
  save_lead_field(leadfield, dir / "leadfield.lfm");
  if (o.leadfield_csv) save_lead_field_csv(leadfield, dir / "leadfield.csv");
  save_measurement(meas.values, dir / "measurement.csv");
  save_vertex_set(region, dir / "truth.txt");

  Json flags;
  flags["mesh_kind"] = o.mesh_kind;
  flags["subdiv"] = o.subdiv;
  flags["radius"] = o.radius;
  flags["rows"] = o.rows;
  flags["cols"] = o.cols;
  flags["spacing"] = o.spacing;
  flags["mesh_file"] = o.mesh_file;
  flags["copies"] = o.copies;
  flags["sensors"] = o.sensors;
  flags["sensor_radius_factor"] = o.sensor_radius_factor;
  flags["seed_vertex"] = o.seed_vertex;
  flags["region_size"] = o.region_size;
  flags["amplitude"] = o.amplitude;
  flags["noise_sigma"] = o.noise_sigma ? Json(*o.noise_sigma) : Json(nullptr);
  flags["snr_db"] = o.snr_db ? Json(*o.snr_db) : Json(nullptr);
  flags["effective_noise_sigma"] = sigma;
  flags["leadfield_csv"] = o.leadfield_csv;
  flags["out"] = o.out;
  write_text_file(dir / "manifest.json", manifest("simulate", std::move(flags), Json(o.rng_seed)));

  if (!g.quiet) {
    out << "vertices: " << mesh.vertex_count() << "\nsensors: " << leadfield.rows()
        << "\nsnr_db: " << format_double(snr(meas, leadfield, region, o.amplitude)) << "\n";
  }
  return 0;
}

int cmd_solve(const SolveOptions& o, const GlobalOptions& g, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const TriangleMesh mesh = load_mesh(o.mesh, &warnings);
  if (!g.quiet) {
    for (const auto& w : warnings) err << "warning: " << w << "\n";
  }
  const LeadFieldMatrix leadfield = load_lead_field(o.leadfield);
  const Eigen::VectorXd y = load_measurement(o.measurement);
  if (leadfield.cols() != mesh.vertex_count()) {
    throw InvalidArgument("lead field has " + std::to_string(leadfield.cols()) + " sources but the mesh has " +
                          std::to_string(mesh.vertex_count()) + " vertices");
  }
  if (y.size() != leadfield.rows()) {
    throw InvalidArgument("measurement has " + std::to_string(y.size()) + " values but the lead field has " +
                          std::to_string(leadfield.rows()) + " sensors");
  }
  SolverConfig config;
  config.lambda = o.lambda;
  config.positive_amplitude = o.positive_amplitude;
  config.debug_validate = o.debug_validate;
  config.threads = g.threads;

  const fs::path dir = prepare_out_dir(o.out);
  const auto start = std::chrono::steady_clock::now();
  const AdjacencyGraph graph = build_adjacency(mesh);
  const Dendrogram dendrogram = o.naive ? run_naive(graph, leadfield, y, config) : run(graph, leadfield, y, config);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_dendrogram(dendrogram, dir / "dendrogram.json");

  Json flags;
  flags["mesh"] = o.mesh;
  flags["leadfield"] = o.leadfield;
  flags["measurement"] = o.measurement;
  flags["lambda"] = o.lambda;
  flags["naive"] = o.naive;
  flags["positive_amplitude"] = o.positive_amplitude;
  flags["debug_validate"] = o.debug_validate;
  flags["out"] = o.out;
  write_text_file(dir / "solve_manifest.json", manifest("solve", std::move(flags), Json(nullptr)));

  if (!g.quiet) {
    out << "merges: " << dendrogram.merges.size() << "\ncomponents: " << dendrogram.roots.size()
        << "\nwall_time_s: " << seconds << "\n";
  }
  return 0;
}

int cmd_report(const ReportOptions& o, const GlobalOptions& g, std::ostream& out) {
  CutConfig cut;
  cut.speed_threshold = o.speed_threshold;
  cut.error_threshold = o.error_threshold;
  cut.top_k = o.top_k;
  cut.min_points = o.min_points;
  cut.validate();

  const Dendrogram dendrogram = load_dendrogram(o.dendrogram);
  std::optional<VertexSet> truth;
  if (!o.truth.empty()) {
    truth = load_vertex_set(o.truth);
    for (VertexId v : *truth) {
      if (v >= dendrogram.leaf_count) throw InvalidArgument("truth vertex " + std::to_string(v) + " out of range");
    }
  }
  const auto regions = cut_dendrogram(dendrogram, cut.speed_threshold, cut.min_points);
  auto reports = rank_regions(regions, cut.error_threshold, cut.top_k);
  annotate_reports(reports, dendrogram, truth);

  const fs::path dir = prepare_out_dir(o.out);
  write_text_file(dir / "curves.csv", curves_to_csv(regions));
  write_text_file(dir / "report.json", reports_to_json(reports));

  Json flags;
  flags["dendrogram"] = o.dendrogram;
  flags["truth"] = o.truth;
  flags["speed_threshold"] = o.speed_threshold;
  flags["error_threshold"] = number_or_string(o.error_threshold);
  flags["top_k"] = o.top_k;
  flags["min_points"] = o.min_points;
  flags["out"] = o.out;
  write_text_file(dir / "report_manifest.json", manifest("report", std::move(flags), Json(nullptr)));

  if (!g.quiet) {
    out << "regions: " << regions.size() << "\n";
    for (const auto& r : reports) {
      out << "rank " << r.rank << ": region " << r.region_id << " best_error " << format_double(r.best_error)
          << " size " << r.best_size;
      if (r.jaccard) out << " jaccard " << format_double(*r.jaccard);
      out << "\n";
    }
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Agglomerative region growing for single-region M/EEG source localization", "rgrow"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  GlobalOptions global;
  app.add_option("--threads", global.threads, "Scoring worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", global.quiet, "Suppress progress output");

  SimulateOptions sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate mesh, lead field and a noisy single-region measurement");
  simulate_cmd->add_option("--mesh-kind", sim.mesh_kind, "icosphere | grid | file")
      ->check(CLI::IsMember({"icosphere", "grid", "file"}));
  simulate_cmd->add_option("--subdiv", sim.subdiv, "Icosphere subdivisions");
  simulate_cmd->add_option("--radius", sim.radius, "Icosphere radius in meters");
  simulate_cmd->add_option("--rows", sim.rows);
  simulate_cmd->add_option("--cols", sim.cols);
  simulate_cmd->add_option("--spacing", sim.spacing, "Grid spacing in meters");
  simulate_cmd->add_option("--mesh-file", sim.mesh_file, "Mesh text file for --mesh-kind file");
  simulate_cmd->add_option("--copies", sim.copies, "Number of disjoint translated copies of the mesh");
  simulate_cmd->add_option("--sensors", sim.sensors, "Sensor count");
  simulate_cmd->add_option("--sensor-radius-factor", sim.sensor_radius_factor);
  simulate_cmd->add_option("--seed-vertex", sim.seed_vertex);
  simulate_cmd->add_option("--region-size", sim.region_size)->required();
  simulate_cmd->add_option("--amplitude", sim.amplitude);
  simulate_cmd->add_option("--noise-sigma", sim.noise_sigma, "Std. dev. of additive Gaussian noise");
  simulate_cmd->add_option("--snr-db", sim.snr_db, "Pick the noise level for this expected SNR");
  simulate_cmd->add_option("--rng-seed", sim.rng_seed);
  simulate_cmd->add_option("--out", sim.out, "Output directory")->required();
  simulate_cmd->add_flag("--leadfield-csv", sim.leadfield_csv, "Also write leadfield.csv");

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Run the merge engine and write dendrogram.json");
  solve_cmd->add_option("--mesh", solve.mesh)->required();
  solve_cmd->add_option("--leadfield", solve.leadfield)->required();
  solve_cmd->add_option("--measurement", solve.measurement)->required();
  solve_cmd->add_option("--lambda", solve.lambda, "Isotropy regularization weight")->required();
  solve_cmd->add_option("--out", solve.out, "Output directory")->required();
  solve_cmd->add_flag("--naive", solve.naive, "Use the quadratic reference engine");
  solve_cmd->add_flag("--positive-amplitude", solve.positive_amplitude, "Restrict amplitudes to be >= 0");
  solve_cmd->add_flag("--debug-validate", solve.debug_validate, "Check cluster invariants after every merge");

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Cut the dendrogram and rank growing regions");
  report_cmd->add_option("--dendrogram", report.dendrogram)->required();
  report_cmd->add_option("--truth", report.truth, "Ground-truth vertex list for Jaccard scores");
  report_cmd->add_option("--speed-threshold", report.speed_threshold, "Merging speed threshold s")->required();
  report_cmd->add_option("--error-threshold", report.error_threshold, "Error threshold for size bounds");
  report_cmd->add_option("--top-k", report.top_k);
  report_cmd->add_option("--min-points", report.min_points);
  report_cmd->add_option("--out", report.out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(sim, global, out);
    if (*solve_cmd) return cmd_solve(solve, global, out, err);
    if (*report_cmd) return cmd_report(report, global, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidState& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateGeometry& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace rgrow
