#include "rgrow/clustering.hpp"

#include "rgrow/errors.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace rgrow {

namespace {

// Vertices of `from` with at least one mesh neighbor labelled `to`.
long long brute_border(const AdjacencyGraph& graph, const std::vector<ClusterId>& label, const VertexSet& from,
                       ClusterId to) {
  long long count = 0;
  for (VertexId v : from) {
    for (VertexId w : graph.neighbors(v)) {
      if (label[static_cast<std::size_t>(w)] == to) {
        ++count;
        break;
      }
    }
  }
  return count;
}

}  // namespace

Dendrogram run_naive(const AdjacencyGraph& graph, const LeadFieldMatrix& leadfield, const Eigen::VectorXd& y,
                     const SolverConfig& config) {
  config.validate();
  if (static_cast<std::size_t>(leadfield.cols()) != graph.vertex_count() || y.size() != leadfield.rows()) {
    throw InvalidArgument("dimension mismatch between mesh, lead field and measurement");
  }
  const auto m = static_cast<int>(graph.vertex_count());

  std::vector<VertexSet> members;
  std::vector<Eigen::VectorXd> leads;
  std::vector<ClusterId> label(static_cast<std::size_t>(m));
  for (int v = 0; v < m; ++v) {
    members.push_back({v});
    leads.emplace_back(leadfield.col(v));
    label[static_cast<std::size_t>(v)] = v;
  }

  Dendrogram out;
  out.leaf_count = m;
  out.lambda = config.lambda;
  out.leaves = leaf_fits(leadfield, y, config);

  while (true) {
    std::set<std::pair<ClusterId, ClusterId>> pairs;
    for (int v = 0; v < m; ++v) {
      for (VertexId w : graph.neighbors(v)) {
        const ClusterId a = label[static_cast<std::size_t>(v)];
        const ClusterId b = label[static_cast<std::size_t>(w)];
        if (a != b) pairs.emplace(std::min(a, b), std::max(a, b));
      }
    }
    if (pairs.empty()) break;

    bool found = false;
    PairScore best{};
    std::pair<ClusterId, ClusterId> best_pair{-1, -1};
    for (const auto& [lo, hi] : pairs) {
      const auto& mlo = members[static_cast<std::size_t>(lo)];
      const auto& mhi = members[static_cast<std::size_t>(hi)];
      long long b_lo_hi = 0;
      long long b_hi_lo = 0;
      if (config.lambda != 0.0) {
        b_lo_hi = brute_border(graph, label, mlo, hi);
        b_hi_lo = brute_border(graph, label, mhi, lo);
      }
      const auto s = score_merge(leads[static_cast<std::size_t>(lo)], leads[static_cast<std::size_t>(hi)], y,
                                 static_cast<long long>(mlo.size()), static_cast<long long>(mhi.size()), b_lo_hi,
                                 b_hi_lo, config);
      // pairs iterate in (lo, hi) order, so strict < keeps the lexicographic tie-break.
      if (!found || s.score < best.score) {
        found = true;
        best = s;
        best_pair = {lo, hi};
      }
    }

    const auto [lo, hi] = best_pair;
    const auto k = static_cast<ClusterId>(members.size());
    VertexSet merged;
    std::merge(members[static_cast<std::size_t>(lo)].begin(), members[static_cast<std::size_t>(lo)].end(),
               members[static_cast<std::size_t>(hi)].begin(), members[static_cast<std::size_t>(hi)].end(),
               std::back_inserter(merged));
    for (VertexId v : merged) label[static_cast<std::size_t>(v)] = k;
    Eigen::VectorXd lead = leads[static_cast<std::size_t>(lo)] + leads[static_cast<std::size_t>(hi)];
    members[static_cast<std::size_t>(lo)].clear();
    members[static_cast<std::size_t>(hi)].clear();

    MergeRecord rec;
    rec.step = k - m;
    rec.left = lo;
    rec.right = hi;
    rec.merged = k;
    rec.size = static_cast<int>(merged.size());
    rec.raw_error = best.raw_residual;
    rec.regularizer = best.regularizer;
    rec.amplitude = best.amplitude;
    out.merges.push_back(rec);

    members.push_back(std::move(merged));
    leads.push_back(std::move(lead));
  }

  for (std::size_t c = 0; c < members.size(); ++c) {
    if (!members[c].empty()) out.roots.push_back(static_cast<ClusterId>(c));
  }
  return out;
}

}  // namespace rgrow
