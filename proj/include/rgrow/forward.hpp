#pragma once

#include "rgrow/mesh.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>

namespace rgrow {

// n x m; column j is the sensor signature of a unit-amplitude dipole at vertex j.
using LeadFieldMatrix = Eigen::MatrixXd;

struct SensorArray {
  Eigen::Matrix3Xd positions;
  Eigen::Index size() const { return positions.cols(); }
};

// Fibonacci lattice on a sphere around the mesh centroid, radius
// `radius_factor` times the largest centroid-to-vertex distance.
SensorArray fibonacci_sensors(const TriangleMesh& mesh, int count, double radius_factor = 1.3);

// Throws InvalidArgument when a sensor is not strictly farther from the
// mesh centroid than every vertex.
void check_sensors_outside(const TriangleMesh& mesh, const SensorArray& sensors);

// Point current dipole in an infinite homogeneous medium:
//   L(s, j) = q_j . (r_s - p_j) / |r_s - p_j|^3
// Columns are independent, so the result does not depend on `threads`.
LeadFieldMatrix compute_lead_field(const TriangleMesh& mesh, const SensorArray& sensors, int threads = 1);

// Breadth-first growth from `seed`, neighbors visited in ascending index order.
VertexSet grow_ground_truth_region(const AdjacencyGraph& graph, VertexId seed, int size);

struct GroundTruth {
  VertexSet region;
  double amplitude = 0.0;
  Eigen::VectorXd clean;
  Eigen::VectorXd noise;
};

struct Measurement {
  Eigen::VectorXd values;
  std::optional<GroundTruth> truth;
};

// y = a * sum_{j in region} L(:, j) + noise, noise ~ N(0, sigma^2) i.i.d.
Measurement simulate(const LeadFieldMatrix& leadfield, const VertexSet& region, double amplitude, double noise_sigma,
                     std::uint64_t rng_seed);

// Region signal a * L * 1_region.
Eigen::VectorXd region_signal(const LeadFieldMatrix& leadfield, const VertexSet& region, double amplitude);

// 20 log10(|clean| / |noise|) in dB, +inf for a noiseless measurement.
// Throws InvalidState when the measurement carries no ground truth.
double snr(const Measurement& measurement, const LeadFieldMatrix& leadfield, const VertexSet& region, double amplitude);

// LFM1 binary: "LFM1", u64 n, u64 m (little endian), n*m doubles row-major.
void save_lead_field(const LeadFieldMatrix& leadfield, const std::filesystem::path& path);
LeadFieldMatrix load_lead_field(const std::filesystem::path& path);
void save_lead_field_csv(const LeadFieldMatrix& leadfield, const std::filesystem::path& path);

// One value per line.
void save_measurement(const Eigen::VectorXd& values, const std::filesystem::path& path);
Eigen::VectorXd load_measurement(const std::filesystem::path& path);

// One vertex index per line.
void save_vertex_set(const VertexSet& vertices, const std::filesystem::path& path);
VertexSet load_vertex_set(const std::filesystem::path& path);

}  // namespace rgrow
