#pragma once

#include "rgrow/clustering.hpp"

#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace rgrow {

struct CutConfig {
  int speed_threshold = 10;  // merging "speed" s, in vertices
  double error_threshold = std::numeric_limits<double>::infinity();
  int top_k = 3;
  int min_points = 2;  // chains with fewer trajectory points are not reported

  void validate() const;
};

struct TrajectoryPoint {
  ClusterId cluster_id = -1;
  int size = 0;
  double raw_error = 0.0;
  double amplitude = 0.0;
};

// A nested chain of clusters, smallest first.
struct GrowingRegion {
  int region_id = 0;
  std::vector<TrajectoryPoint> trajectory;
  VertexSet terminal_vertex_set;

  const TrajectoryPoint& best_point() const;
};

// Splits the dendrogram into growing regions.
//
// Walking merges c_k = c_i U c_j with |c_i| >= |c_j| (equal sizes: the
// smaller id plays c_i):
//  * |c_j| <= s and c_i is on a chain: c_k extends the chain of c_i, the
//    chain of c_j is absorbed into it.
//  * |c_j| > s: c_i and c_j are cutting points; both chains end there and
//    c_k, like every cluster above it, belongs to no chain.
//  * c_i belongs to no chain: c_k belongs to no chain; the chain of c_j, if
//    any, ends at c_j.
// Every leaf starts a chain. A chain is reported when it ends at a cutting
// point, at a root, or against an unchained cluster, and has at least
// `min_points` points. Reported terminal vertex sets are pairwise disjoint.
std::vector<GrowingRegion> cut_dendrogram(const Dendrogram& dendrogram, int speed_threshold, int min_points = 2);

// (size, raw_error) per trajectory point, read from the dendrogram records.
// Throws InvalidArgument when the region does not belong to `dendrogram`.
std::vector<std::pair<int, double>> trajectory_errors(const GrowingRegion& region, const Dendrogram& dendrogram);

struct RegionReport {
  int region_id = 0;
  int rank = 0;  // 1-based
  double best_error = 0.0;
  int best_size = 0;
  ClusterId best_cluster = -1;
  std::optional<int> size_lower;
  std::optional<int> size_upper;
  std::optional<double> jaccard;
  VertexSet vertices;  // vertex set of best_cluster, filled by annotate_reports
};

// Orders regions by their minimum raw error (ties: smaller region_id) and
// keeps the first `top_k`. Size bounds are the smallest and largest
// trajectory sizes with raw error <= error_threshold.
std::vector<RegionReport> rank_regions(const std::vector<GrowingRegion>& regions, double error_threshold, int top_k);

// Fills `vertices` and, when `truth` is given, `jaccard`.
void annotate_reports(std::vector<RegionReport>& reports, const Dendrogram& dendrogram,
                      const std::optional<VertexSet>& truth);

// |a n b| / |a u b| over sorted sets; 1 when both are empty.
double jaccard(std::span<const VertexId> a, std::span<const VertexId> b);

}  // namespace rgrow
