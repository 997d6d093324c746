#include "rgrow/clustering.hpp"

#include "rgrow/errors.hpp"
#include "rgrow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace rgrow {

namespace {

// Below this many new pairs the scoring loop stays on the calling thread.
constexpr std::size_t kParallelPairThreshold = 64;

void check_dimensions(const AdjacencyGraph& graph, const LeadFieldMatrix& leadfield, const Eigen::VectorXd& y) {
  if (static_cast<std::size_t>(leadfield.cols()) != graph.vertex_count()) {
    throw InvalidArgument("lead field has " + std::to_string(leadfield.cols()) + " columns for " +
                          std::to_string(graph.vertex_count()) + " mesh vertices");
  }
  if (y.size() != leadfield.rows()) {
    throw InvalidArgument("measurement has " + std::to_string(y.size()) + " values for " +
                          std::to_string(leadfield.rows()) + " sensors");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) throw InvalidArgument("lambda must be finite and >= 0");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
}

const MergeRecord* Dendrogram::record_of(ClusterId id) const {
  if (!contains(id)) throw InvalidArgument("cluster " + std::to_string(id) + " is not in the dendrogram");
  if (is_leaf(id)) return nullptr;
  return &merges[static_cast<std::size_t>(id - leaf_count)];
}

int Dendrogram::size_of(ClusterId id) const {
  const MergeRecord* rec = record_of(id);
  return rec ? rec->size : 1;
}

LeafFit Dendrogram::fit_of(ClusterId id) const {
  const MergeRecord* rec = record_of(id);
  if (rec) return {rec->raw_error, rec->amplitude};
  return leaves.at(static_cast<std::size_t>(id));
}

std::vector<ClusterId> Dendrogram::parents() const {
  std::vector<ClusterId> parent(static_cast<std::size_t>(cluster_count()), -1);
  for (const auto& rec : merges) {
    parent[static_cast<std::size_t>(rec.left)] = rec.merged;
    parent[static_cast<std::size_t>(rec.right)] = rec.merged;
  }
  return parent;
}

VertexSet cluster_vertices(const Dendrogram& dendrogram, ClusterId id) {
  if (!dendrogram.contains(id)) throw InvalidArgument("cluster " + std::to_string(id) + " is not in the dendrogram");
  VertexSet out;
  std::vector<ClusterId> stack{id};
  while (!stack.empty()) {
    const ClusterId c = stack.back();
    stack.pop_back();
    if (const MergeRecord* rec = dendrogram.record_of(c)) {
      stack.push_back(rec->left);
      stack.push_back(rec->right);
    } else {
      out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

PairScore score_merge(const Eigen::VectorXd& lead_lo, const Eigen::VectorXd& lead_hi, const Eigen::VectorXd& y,
                      long long size_lo, long long size_hi, long long border_lo_hi, long long border_hi_lo,
                      const SolverConfig& config) {
  const Eigen::VectorXd merged = lead_lo + lead_hi;
  const auto fit = fit_amplitude(y, merged, config.positive_amplitude);
  const double reg = regularization(size_lo, size_hi, border_lo_hi, border_hi_lo, config.lambda);
  return {fit.residual + reg, fit.amplitude, fit.residual, reg};
}

std::vector<LeafFit> leaf_fits(const LeadFieldMatrix& leadfield, const Eigen::VectorXd& y, const SolverConfig& config) {
  std::vector<LeafFit> out;
  out.reserve(static_cast<std::size_t>(leadfield.cols()));
  for (Eigen::Index j = 0; j < leadfield.cols(); ++j) {
    const Eigen::VectorXd column = leadfield.col(j);
    const auto fit = fit_amplitude(y, column, config.positive_amplitude);
    out.push_back({fit.residual, fit.amplitude});
  }
  return out;
}

ClusterState::ClusterState(const AdjacencyGraph& graph, const LeadFieldMatrix& leadfield, Eigen::VectorXd y,
                           SolverConfig config)
    : graph_(&graph), leadfield_(&leadfield), y_(std::move(y)), config_(config) {
  config_.validate();
  check_dimensions(graph, leadfield, y_);
  leaf_count_ = static_cast<int>(graph.vertex_count());
  const auto m = static_cast<std::size_t>(leaf_count_);
  const std::size_t max_clusters = m == 0 ? 0 : 2 * m - 1;
  clusters_.reserve(max_clusters);
  active_.reserve(max_clusters);
  neighbors_.reserve(max_clusters);
  vertex_cluster_.resize(m);
  slot_of_cluster_.assign(max_clusters, -1);
  vertex_stamp_.assign(m, 0);

  for (std::size_t v = 0; v < m; ++v) {
    Cluster c;
    c.id = static_cast<ClusterId>(v);
    c.vertices = {static_cast<VertexId>(v)};
    c.lead_field = leadfield.col(static_cast<Eigen::Index>(v));
    clusters_.push_back(std::move(c));
    active_.push_back(1);
    neighbors_.push_back(graph.neighbors(static_cast<VertexId>(v)));
    vertex_cluster_[v] = static_cast<ClusterId>(v);
  }

  // Each mesh edge is a singleton pair with borders (1, 1).
  std::vector<std::pair<ClusterId, ClusterId>> edges;
  edges.reserve(graph.edge_count());
  for (std::size_t v = 0; v < m; ++v) {
    for (VertexId w : graph.neighbors(static_cast<VertexId>(v))) {
      if (w > static_cast<VertexId>(v)) edges.emplace_back(static_cast<ClusterId>(v), w);
    }
  }
  std::vector<Candidate> scored(edges.size());
  parallel_for(edges.size(), config_.threads, [&](std::size_t e) {
    const auto [lo, hi] = edges[e];
    const auto s = score_merge(clusters_[static_cast<std::size_t>(lo)].lead_field,
                               clusters_[static_cast<std::size_t>(hi)].lead_field, y_, 1, 1, 1, 1, config_);
    scored[e] = {s.score, lo, hi, s.amplitude, s.raw_residual, s.regularizer};
  });
  queue_ = decltype(queue_)(WorseCandidate{}, std::move(scored));
}

bool ClusterState::is_active(ClusterId id) const {
  return id >= 0 && static_cast<std::size_t>(id) < active_.size() && active_[static_cast<std::size_t>(id)];
}

const Cluster& ClusterState::cluster(ClusterId id) const {
  if (!is_active(id)) throw InvalidState("cluster " + std::to_string(id) + " is not active");
  return clusters_[static_cast<std::size_t>(id)];
}

std::vector<ClusterId> ClusterState::active_clusters() const {
  std::vector<ClusterId> out;
  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (active_[i]) out.push_back(static_cast<ClusterId>(i));
  }
  return out;
}

const std::vector<ClusterId>& ClusterState::cluster_neighbors(ClusterId id) const {
  if (!is_active(id)) throw InvalidState("cluster " + std::to_string(id) + " is not active");
  return neighbors_[static_cast<std::size_t>(id)];
}

bool ClusterState::adjacent(ClusterId i, ClusterId j) const {
  const auto& adj = cluster_neighbors(i);
  return std::binary_search(adj.begin(), adj.end(), j);
}

void ClusterState::push_pairs(ClusterId k, const std::vector<ClusterId>& partners) {
  const Cluster& ck = clusters_[static_cast<std::size_t>(k)];
  std::vector<int> border_k_n(partners.size(), 0);
  std::vector<int> border_n_k(partners.size(), 0);

  if (config_.lambda != 0.0) {
    // One sweep over c_k gives B(k, n) and B(n, k) for every neighbor n:
    // B(k, n) counts members of c_k touching c_n, B(n, k) counts distinct
    // members of c_n touching c_k.
    for (std::size_t p = 0; p < partners.size(); ++p) slot_of_cluster_[static_cast<std::size_t>(partners[p])] = static_cast<int>(p);
    ++stamp_;
    std::vector<int> last_counted(partners.size(), -1);
    for (VertexId v : ck.vertices) {
      for (VertexId w : graph_->neighbors(v)) {
        const ClusterId n = vertex_cluster_[static_cast<std::size_t>(w)];
        if (n == k) continue;
        const int slot = slot_of_cluster_[static_cast<std::size_t>(n)];
        if (slot < 0) throw ConsistencyError("mesh neighbor in a cluster missing from the adjacency");
        const auto s = static_cast<std::size_t>(slot);
        if (last_counted[s] != v) {
          last_counted[s] = v;
          ++border_k_n[s];
        }
        if (vertex_stamp_[static_cast<std::size_t>(w)] != stamp_) {
          vertex_stamp_[static_cast<std::size_t>(w)] = stamp_;
          ++border_n_k[s];
        }
      }
    }
    for (ClusterId n : partners) slot_of_cluster_[static_cast<std::size_t>(n)] = -1;
  }

  std::vector<Candidate> scored(partners.size());
  const int workers = partners.size() >= kParallelPairThreshold ? config_.threads : 1;
  parallel_for(partners.size(), workers, [&](std::size_t p) {
    const ClusterId n = partners[p];
    const Cluster& cn = clusters_[static_cast<std::size_t>(n)];
    // n < k always: k is the newest id.
    const auto s = score_merge(cn.lead_field, ck.lead_field, y_, cn.size(), ck.size(), border_n_k[p], border_k_n[p], config_);
    scored[p] = {s.score, n, k, s.amplitude, s.raw_residual, s.regularizer};
  });
  for (const auto& c : scored) queue_.push(c);
}

std::optional<MergeRecord> ClusterState::merge_step() {
  while (!queue_.empty()) {
    const Candidate best = queue_.top();
    queue_.pop();
    if (!active_[static_cast<std::size_t>(best.lo)] || !active_[static_cast<std::size_t>(best.hi)]) continue;
    return merge(best.lo, best.hi, {best.score, best.amplitude, best.raw_residual, best.regularizer});
  }
  return std::nullopt;
}

MergeRecord ClusterState::merge_pair(ClusterId i, ClusterId j) {
  if (i == j || !adjacent(i, j)) {
    throw InvalidState("clusters " + std::to_string(i) + " and " + std::to_string(j) + " are not adjacent");
  }
  const PairScore score = potential_error(*this, y_, i, j, config_);
  return merge(std::min(i, j), std::max(i, j), score);
}

MergeRecord ClusterState::merge(ClusterId lo_id, ClusterId hi_id, const PairScore& score) {
  const auto lo = static_cast<std::size_t>(lo_id);
  const auto hi = static_cast<std::size_t>(hi_id);
  const auto k = static_cast<ClusterId>(clusters_.size());

  Cluster merged;
  merged.id = k;
  merged.vertices.reserve(clusters_[lo].vertices.size() + clusters_[hi].vertices.size());
  std::merge(clusters_[lo].vertices.begin(), clusters_[lo].vertices.end(), clusters_[hi].vertices.begin(),
             clusters_[hi].vertices.end(), std::back_inserter(merged.vertices));
  merged.lead_field = clusters_[lo].lead_field + clusters_[hi].lead_field;
  for (VertexId v : merged.vertices) vertex_cluster_[static_cast<std::size_t>(v)] = k;

  // N(n, k) = N(n, lo) or N(n, hi).
  const auto is_input = [&](ClusterId c) { return c == lo_id || c == hi_id; };
  std::vector<ClusterId> adj;
  adj.reserve(neighbors_[lo].size() + neighbors_[hi].size());
  std::set_union(neighbors_[lo].begin(), neighbors_[lo].end(), neighbors_[hi].begin(), neighbors_[hi].end(),
                 std::back_inserter(adj));
  std::erase_if(adj, is_input);
  for (ClusterId n : adj) {
    auto& list = neighbors_[static_cast<std::size_t>(n)];
    std::erase_if(list, is_input);
    list.push_back(k);
  }

  active_[lo] = 0;
  active_[hi] = 0;
  for (auto idx : {lo, hi}) {
    clusters_[idx].vertices = {};
    clusters_[idx].lead_field = {};
    neighbors_[idx] = {};
  }

  clusters_.push_back(std::move(merged));
  active_.push_back(1);
  neighbors_.push_back(adj);

  if (config_.debug_validate) validate_cluster(clusters_.back());
  push_pairs(k, adj);

  MergeRecord rec;
  rec.step = k - leaf_count_;
  rec.left = lo_id;
  rec.right = hi_id;
  rec.merged = k;
  rec.size = clusters_.back().size();
  rec.raw_error = score.raw_residual;
  rec.regularizer = score.regularizer;
  rec.amplitude = score.amplitude;
  return rec;
}

void ClusterState::validate_cluster(const Cluster& c) const {
  Eigen::VectorXd resummed = Eigen::VectorXd::Zero(y_.size());
  for (VertexId v : c.vertices) resummed += leadfield_->col(v);
  const double scale = std::max(resummed.norm(), c.lead_field.norm());
  if ((resummed - c.lead_field).norm() > 1e-9 * scale) {
    throw ConsistencyError("lead field of cluster " + std::to_string(c.id) + " drifted from its column sum");
  }

  // Connectivity by flood fill restricted to the cluster.
  const auto index_in = [&](VertexId v) {
    return static_cast<std::size_t>(std::lower_bound(c.vertices.begin(), c.vertices.end(), v) - c.vertices.begin());
  };
  std::vector<char> visited(c.vertices.size(), 0);
  std::deque<VertexId> frontier{c.vertices.front()};
  visited[0] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const VertexId v = frontier.front();
    frontier.pop_front();
    for (VertexId w : graph_->neighbors(v)) {
      if (vertex_cluster_[static_cast<std::size_t>(w)] != c.id) continue;
      const auto at = index_in(w);
      if (!visited[at]) {
        visited[at] = 1;
        ++reached;
        frontier.push_back(w);
      }
    }
  }
  if (reached != c.vertices.size()) throw ConsistencyError("cluster " + std::to_string(c.id) + " is disconnected");

  // Cluster adjacency must match the one implied by mesh edges.
  std::vector<ClusterId> expected;
  for (VertexId v : c.vertices) {
    for (VertexId w : graph_->neighbors(v)) {
      const ClusterId n = vertex_cluster_[static_cast<std::size_t>(w)];
      if (n != c.id) expected.push_back(n);
    }
  }
  std::sort(expected.begin(), expected.end());
  expected.erase(std::unique(expected.begin(), expected.end()), expected.end());
  if (expected != neighbors_[static_cast<std::size_t>(c.id)]) {
    throw ConsistencyError("adjacency of cluster " + std::to_string(c.id) + " disagrees with the mesh");
  }
}

int border_count(const ClusterState& state, ClusterId i, ClusterId j) {
  if (i == j) throw InvalidState("border_count needs two distinct clusters");
  const Cluster& ci = state.cluster(i);
  state.cluster(j);
  int count = 0;
  for (VertexId v : ci.vertices) {
    const auto& adj = state.graph().neighbors(v);
    if (std::any_of(adj.begin(), adj.end(), [&](VertexId w) { return state.cluster_of(w) == j; })) ++count;
  }
  return count;
}

PairScore potential_error(const ClusterState& state, const Eigen::VectorXd& y, ClusterId i, ClusterId j,
                          const SolverConfig& config) {
  const ClusterId lo = std::min(i, j);
  const ClusterId hi = std::max(i, j);
  const Cluster& clo = state.cluster(lo);
  const Cluster& chi = state.cluster(hi);
  long long b_lo_hi = 0;
  long long b_hi_lo = 0;
  if (config.lambda != 0.0) {
    b_lo_hi = border_count(state, lo, hi);
    b_hi_lo = border_count(state, hi, lo);
  }
  return score_merge(clo.lead_field, chi.lead_field, y, clo.size(), chi.size(), b_lo_hi, b_hi_lo, config);
}

std::optional<MergeRecord> merge_step(ClusterState& state) { return state.merge_step(); }

Dendrogram run(const AdjacencyGraph& graph, const LeadFieldMatrix& leadfield, const Eigen::VectorXd& y,
               const SolverConfig& config) {
  ClusterState state(graph, leadfield, y, config);
  Dendrogram out;
  out.leaf_count = state.leaf_count();
  out.lambda = config.lambda;
  out.leaves = leaf_fits(leadfield, y, config);
  out.merges.reserve(static_cast<std::size_t>(std::max(0, out.leaf_count - 1)));
  while (auto rec = state.merge_step()) out.merges.push_back(*rec);
  out.roots = state.active_clusters();
  return out;
}

Dendrogram run(const TriangleMesh& mesh, const LeadFieldMatrix& leadfield, const Eigen::VectorXd& y,
               const SolverConfig& config) {
  return run(build_adjacency(mesh), leadfield, y, config);
}

}  // namespace rgrow
