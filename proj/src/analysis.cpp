#include "rgrow/analysis.hpp"

#include "rgrow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

namespace rgrow {

void CutConfig::validate() const {
  if (speed_threshold < 1) throw InvalidArgument("speed threshold must be >= 1");
  if (!(error_threshold > 0.0)) throw InvalidArgument("error threshold must be > 0");
  if (top_k < 1) throw InvalidArgument("top-k must be >= 1");
  if (min_points < 1) throw InvalidArgument("min points must be >= 1");
}

const TrajectoryPoint& GrowingRegion::best_point() const {
  if (trajectory.empty()) throw InvalidState("region " + std::to_string(region_id) + " has an empty trajectory");
  // First minimum, so ties resolve to the smaller cluster.
  return *std::min_element(trajectory.begin(), trajectory.end(),
                           [](const TrajectoryPoint& a, const TrajectoryPoint& b) { return a.raw_error < b.raw_error; });
}

std::vector<GrowingRegion> cut_dendrogram(const Dendrogram& dendrogram, int speed_threshold, int min_points) {
  if (speed_threshold < 1) throw InvalidArgument("speed threshold must be >= 1");
  if (min_points < 1) throw InvalidArgument("min points must be >= 1");

  struct Chain {
    std::vector<TrajectoryPoint> points;
    bool open = true;
    bool reported = false;
  };
  const auto point_of = [&](ClusterId id) {
    const LeafFit fit = dendrogram.fit_of(id);
    return TrajectoryPoint{id, dendrogram.size_of(id), fit.raw_error, fit.amplitude};
  };

  std::vector<Chain> chains(static_cast<std::size_t>(dendrogram.leaf_count));
  std::vector<int> chain_of(static_cast<std::size_t>(dendrogram.cluster_count()), -1);
  for (ClusterId v = 0; v < dendrogram.leaf_count; ++v) {
    chains[static_cast<std::size_t>(v)].points.push_back(point_of(v));
    chain_of[static_cast<std::size_t>(v)] = v;
  }
  const auto close = [&](int chain, bool reported) {
    if (chain < 0) return;
    auto& c = chains[static_cast<std::size_t>(chain)];
    c.open = false;
    c.reported = reported;
  };

  for (const auto& rec : dendrogram.merges) {
    const int size_left = dendrogram.size_of(rec.left);
    const int size_right = dendrogram.size_of(rec.right);
    // left < right by construction, so on equal sizes left takes the larger role.
    const bool left_is_big = size_left >= size_right;
    const ClusterId big = left_is_big ? rec.left : rec.right;
    const ClusterId small = left_is_big ? rec.right : rec.left;
    const int small_size = left_is_big ? size_right : size_left;
    const int chain_big = chain_of[static_cast<std::size_t>(big)];
    const int chain_small = chain_of[static_cast<std::size_t>(small)];

    if (small_size > speed_threshold) {
      close(chain_big, true);
      close(chain_small, true);
    } else if (chain_big < 0) {
      close(chain_small, true);
    } else {
      chains[static_cast<std::size_t>(chain_big)].points.push_back(point_of(rec.merged));
      chain_of[static_cast<std::size_t>(rec.merged)] = chain_big;
      close(chain_small, false);
    }
  }
  for (ClusterId root : dendrogram.roots) close(chain_of[static_cast<std::size_t>(root)], true);

  std::vector<GrowingRegion> regions;
  for (auto& chain : chains) {
    if (!chain.reported || static_cast<int>(chain.points.size()) < min_points) continue;
    GrowingRegion region;
    region.region_id = static_cast<int>(regions.size());
    region.terminal_vertex_set = cluster_vertices(dendrogram, chain.points.back().cluster_id);
    region.trajectory = std::move(chain.points);
    regions.push_back(std::move(region));
  }
  return regions;
}

std::vector<std::pair<int, double>> trajectory_errors(const GrowingRegion& region, const Dendrogram& dendrogram) {
  const auto parent = dendrogram.parents();
  std::vector<std::pair<int, double>> out;
  out.reserve(region.trajectory.size());
  for (std::size_t i = 0; i < region.trajectory.size(); ++i) {
    const auto& p = region.trajectory[i];
    if (!dendrogram.contains(p.cluster_id) || dendrogram.size_of(p.cluster_id) != p.size) {
      throw InvalidArgument("region " + std::to_string(region.region_id) + " does not belong to this dendrogram");
    }
    if (i > 0 && parent[static_cast<std::size_t>(region.trajectory[i - 1].cluster_id)] != p.cluster_id) {
      throw InvalidArgument("region " + std::to_string(region.region_id) + " is not a chain of this dendrogram");
    }
    out.emplace_back(p.size, dendrogram.fit_of(p.cluster_id).raw_error);
  }
  return out;
}

std::vector<RegionReport> rank_regions(const std::vector<GrowingRegion>& regions, double error_threshold, int top_k) {
  std::vector<RegionReport> reports;
  reports.reserve(regions.size());
  for (const auto& region : regions) {
    RegionReport r;
    r.region_id = region.region_id;
    const auto& best = region.best_point();
    r.best_error = best.raw_error;
    r.best_size = best.size;
    r.best_cluster = best.cluster_id;
    for (const auto& p : region.trajectory) {
      if (p.raw_error <= error_threshold) {
        r.size_lower = std::min(r.size_lower.value_or(p.size), p.size);
        r.size_upper = std::max(r.size_upper.value_or(p.size), p.size);
      }
    }
    reports.push_back(std::move(r));
  }
  std::sort(reports.begin(), reports.end(), [](const RegionReport& a, const RegionReport& b) {
    if (a.best_error != b.best_error) return a.best_error < b.best_error;
    return a.region_id < b.region_id;
  });
  if (top_k >= 0 && reports.size() > static_cast<std::size_t>(top_k)) reports.resize(static_cast<std::size_t>(top_k));
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].rank = static_cast<int>(i) + 1;
  return reports;
}

void annotate_reports(std::vector<RegionReport>& reports, const Dendrogram& dendrogram,
                      const std::optional<VertexSet>& truth) {
  for (auto& r : reports) {
    r.vertices = cluster_vertices(dendrogram, r.best_cluster);
    if (truth) r.jaccard = jaccard(r.vertices, *truth);
  }
}

double jaccard(std::span<const VertexId> a, std::span<const VertexId> b) {
  VertexSet sa(a.begin(), a.end());
  VertexSet sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  VertexSet common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  const auto unite = sa.size() + sb.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(unite);
}

}  // namespace rgrow
