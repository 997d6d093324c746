#include "rgrow/forward.hpp"

#include "rgrow/errors.hpp"
#include "rgrow/parallel.hpp"
#include "rgrow/text_io.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace rgrow {

namespace {

constexpr double kCoincidentDistance = 1e-9;

Eigen::Vector3d centroid(const TriangleMesh& mesh) {
  if (mesh.vertex_count() == 0) throw DegenerateGeometry("empty mesh has no centroid");
  return mesh.positions.rowwise().mean();
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return v;
}

std::vector<std::string> nonempty_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

SensorArray fibonacci_sensors(const TriangleMesh& mesh, int count, double radius_factor) {
  if (count < 1) throw InvalidArgument("sensor count must be positive");
  if (!(radius_factor > 1.0)) throw InvalidArgument("sensor radius factor must exceed 1");
  const Eigen::Vector3d center = centroid(mesh);
  const double bound = (mesh.positions.colwise() - center).colwise().norm().maxCoeff();
  if (!(bound > 0.0)) throw DegenerateGeometry("mesh has zero extent");
  const double radius = radius_factor * bound;
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));

  SensorArray sensors;
  sensors.positions.resize(3, count);
  for (int i = 0; i < count; ++i) {
    const double z = count == 1 ? 1.0 : 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double theta = golden_angle * i;
    sensors.positions.col(i) = center + radius * Eigen::Vector3d(r * std::cos(theta), r * std::sin(theta), z);
  }
  return sensors;
}

void check_sensors_outside(const TriangleMesh& mesh, const SensorArray& sensors) {
  const Eigen::Vector3d center = centroid(mesh);
  const double bound = (mesh.positions.colwise() - center).colwise().norm().maxCoeff();
  for (Eigen::Index s = 0; s < sensors.size(); ++s) {
    if (!((sensors.positions.col(s) - center).norm() > bound)) {
      throw InvalidArgument("sensor " + std::to_string(s) + " lies inside the source space");
    }
  }
}

LeadFieldMatrix compute_lead_field(const TriangleMesh& mesh, const SensorArray& sensors, int threads) {
  const Eigen::Index n = sensors.size();
  const Eigen::Index m = mesh.vertex_count();
  LeadFieldMatrix leadfield(n, m);
  std::atomic<bool> degenerate{false};
  parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t jj) {
    const auto j = static_cast<Eigen::Index>(jj);
    const Eigen::Vector3d p = mesh.positions.col(j);
    const Eigen::Vector3d q = mesh.normals.col(j);
    for (Eigen::Index s = 0; s < n; ++s) {
      const Eigen::Vector3d d = sensors.positions.col(s) - p;
      const double dist = d.norm();
      if (dist < kCoincidentDistance) {
        degenerate = true;
        leadfield(s, j) = 0.0;
        continue;
      }
      leadfield(s, j) = q.dot(d) / (dist * dist * dist);
    }
  });
  if (degenerate) throw DegenerateGeometry("a sensor coincides with a source vertex");
  if (!leadfield.allFinite()) throw DegenerateGeometry("lead field has non-finite entries");
  return leadfield;
}

VertexSet grow_ground_truth_region(const AdjacencyGraph& graph, VertexId seed, int size) {
  const auto nv = graph.vertex_count();
  if (seed < 0 || static_cast<std::size_t>(seed) >= nv) throw InvalidArgument("seed vertex out of range");
  if (size < 1) throw InvalidArgument("region size must be at least 1");
  std::vector<char> seen(nv, 0);
  std::deque<VertexId> frontier{seed};
  seen[static_cast<std::size_t>(seed)] = 1;
  VertexSet region;
  while (!frontier.empty() && static_cast<int>(region.size()) < size) {
    const VertexId v = frontier.front();
    frontier.pop_front();
    region.push_back(v);
    for (VertexId w : graph.neighbors(v)) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        frontier.push_back(w);
      }
    }
  }
  if (static_cast<int>(region.size()) < size) {
    throw InvalidArgument("region size " + std::to_string(size) + " exceeds the seed's component size " +
                          std::to_string(region.size()));
  }
  std::sort(region.begin(), region.end());
  return region;
}

Eigen::VectorXd region_signal(const LeadFieldMatrix& leadfield, const VertexSet& region, double amplitude) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(leadfield.rows());
  for (VertexId v : region) {
    if (v < 0 || v >= leadfield.cols()) throw InvalidArgument("region vertex " + std::to_string(v) + " out of range");
    sum += leadfield.col(v);
  }
  return amplitude * sum;
}

Measurement simulate(const LeadFieldMatrix& leadfield, const VertexSet& region, double amplitude, double noise_sigma,
                     std::uint64_t rng_seed) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw InvalidArgument("noise sigma must be >= 0");
  GroundTruth truth;
  truth.region = region;
  truth.amplitude = amplitude;
  truth.clean = region_signal(leadfield, region, amplitude);
  truth.noise = Eigen::VectorXd::Zero(leadfield.rows());
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    for (Eigen::Index i = 0; i < truth.noise.size(); ++i) truth.noise(i) = gauss(rng);
  }
  Measurement out;
  out.values = truth.clean + truth.noise;
  out.truth = std::move(truth);
  return out;
}

double snr(const Measurement& measurement, const LeadFieldMatrix& leadfield, const VertexSet& region, double amplitude) {
  if (!measurement.truth) throw InvalidState("snr requires a simulated measurement with ground truth");
  const Eigen::VectorXd clean = region_signal(leadfield, region, amplitude);
  const Eigen::VectorXd noise = measurement.values - clean;
  const double noise_norm = noise.norm();
  if (noise_norm == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(clean.norm() / noise_norm);
}

void save_lead_field(const LeadFieldMatrix& leadfield, const std::filesystem::path& path) {
  std::string out = "LFM1";
  out.reserve(20 + 8 * static_cast<std::size_t>(leadfield.size()));
  put_u64(out, static_cast<std::uint64_t>(leadfield.rows()));
  put_u64(out, static_cast<std::uint64_t>(leadfield.cols()));
  for (Eigen::Index s = 0; s < leadfield.rows(); ++s) {
    for (Eigen::Index j = 0; j < leadfield.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(leadfield(s, j)));
  }
  write_text_file(path, out);
}

LeadFieldMatrix load_lead_field(const std::filesystem::path& path) {
  const std::string in = read_text_file(path);
  if (in.size() < 20 || in.compare(0, 4, "LFM1") != 0) throw ParseError("lead field: missing LFM1 header");
  const std::uint64_t n = get_u64(in, 4);
  const std::uint64_t m = get_u64(in, 12);
  if (n > (1ull << 31) || m > (1ull << 31) || in.size() != 20 + 8 * n * m) {
    throw ParseError("lead field: payload size does not match " + std::to_string(n) + " x " + std::to_string(m));
  }
  LeadFieldMatrix leadfield(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::size_t at = 20;
  for (Eigen::Index s = 0; s < leadfield.rows(); ++s) {
    for (Eigen::Index j = 0; j < leadfield.cols(); ++j, at += 8) leadfield(s, j) = std::bit_cast<double>(get_u64(in, at));
  }
  if (!leadfield.allFinite()) throw ParseError("lead field: non-finite entries");
  return leadfield;
}

void save_lead_field_csv(const LeadFieldMatrix& leadfield, const std::filesystem::path& path) {
  std::string out;
  for (Eigen::Index s = 0; s < leadfield.rows(); ++s) {
    for (Eigen::Index j = 0; j < leadfield.cols(); ++j) {
      if (j) out += ',';
      out += format_double(leadfield(s, j));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

void save_measurement(const Eigen::VectorXd& values, const std::filesystem::path& path) {
  std::string out;
  for (Eigen::Index i = 0; i < values.size(); ++i) out += format_double(values(i)) + '\n';
  write_text_file(path, out);
}

Eigen::VectorXd load_measurement(const std::filesystem::path& path) {
  const auto lines = nonempty_lines(read_text_file(path));
  if (lines.empty()) throw ParseError("measurement: empty file");
  Eigen::VectorXd values(static_cast<Eigen::Index>(lines.size()));
  for (std::size_t i = 0; i < lines.size(); ++i) values(static_cast<Eigen::Index>(i)) = parse_double(lines[i]);
  if (!values.allFinite()) throw ParseError("measurement: non-finite value");
  return values;
}

void save_vertex_set(const VertexSet& vertices, const std::filesystem::path& path) {
  std::string out;
  for (VertexId v : vertices) out += std::to_string(v) + '\n';
  write_text_file(path, out);
}

VertexSet load_vertex_set(const std::filesystem::path& path) {
  VertexSet out;
  for (const auto& line : nonempty_lines(read_text_file(path))) {
    const long long v = parse_integer(line);
    if (v < 0 || v > std::numeric_limits<int>::max()) throw ParseError("vertex index out of range: " + line);
    out.push_back(static_cast<VertexId>(v));
  }
  return out;
}

}  // namespace rgrow
