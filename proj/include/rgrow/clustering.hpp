#pragma once

#include "rgrow/fit.hpp"
#include "rgrow/forward.hpp"
#include "rgrow/mesh.hpp"

#include <Eigen/Dense>

#include <optional>
#include <queue>
#include <vector>

namespace rgrow {

// Leaf clusters use their vertex index as id; the cluster created by merge
// step s (0-based) gets id leaf_count + s. Ids are never reused.
using ClusterId = int;

struct SolverConfig {
  double lambda = 0.0;              // isotropy regularization weight, >= 0
  bool positive_amplitude = false;  // clamp fitted amplitudes at zero
  bool debug_validate = false;      // re-check cluster invariants after every merge
  int threads = 1;                  // candidate scoring workers; output is independent of this

  void validate() const;
};

struct Cluster {
  ClusterId id = -1;
  VertexSet vertices;          // sorted
  Eigen::VectorXd lead_field;  // sum of member columns

  int size() const { return static_cast<int>(vertices.size()); }
};

struct MergeRecord {
  int step = 0;
  ClusterId left = -1;  // smaller id of the merged pair
  ClusterId right = -1;
  ClusterId merged = -1;
  int size = 0;
  double raw_error = 0.0;    // min_a |y - a L(c_k)|_2
  double regularizer = 0.0;  // R(left, right)
  double amplitude = 0.0;    // minimizing a

  double score() const { return raw_error + regularizer; }
  friend bool operator==(const MergeRecord&, const MergeRecord&) = default;
};

struct LeafFit {
  double raw_error = 0.0;
  double amplitude = 0.0;
  friend bool operator==(const LeafFit&, const LeafFit&) = default;
};

// Full merge history. merges.size() == leaf_count - roots.size().
struct Dendrogram {
  int leaf_count = 0;
  double lambda = 0.0;
  std::vector<LeafFit> leaves;
  std::vector<MergeRecord> merges;
  std::vector<ClusterId> roots;  // clusters still active when no adjacent pair remained, ascending

  int cluster_count() const { return leaf_count + static_cast<int>(merges.size()); }
  bool contains(ClusterId id) const { return id >= 0 && id < cluster_count(); }
  bool is_leaf(ClusterId id) const { return id >= 0 && id < leaf_count; }
  // nullptr for leaves.
  const MergeRecord* record_of(ClusterId id) const;
  int size_of(ClusterId id) const;
  LeafFit fit_of(ClusterId id) const;
  // parent id per cluster, -1 for roots.
  std::vector<ClusterId> parents() const;

  friend bool operator==(const Dendrogram&, const Dendrogram&) = default;
};

// Vertex set of any cluster in the dendrogram, sorted.
VertexSet cluster_vertices(const Dendrogram& dendrogram, ClusterId id);

struct PairScore {
  double score = 0.0;
  double amplitude = 0.0;
  double raw_residual = 0.0;
  double regularizer = 0.0;
};

// Scores the merge of two clusters given their lead fields, sizes and
// border counts. Shared by every engine so that equal inputs give
// bit-identical scores.
PairScore score_merge(const Eigen::VectorXd& lead_lo, const Eigen::VectorXd& lead_hi, const Eigen::VectorXd& y,
                      long long size_lo, long long size_hi, long long border_lo_hi, long long border_hi_lo,
                      const SolverConfig& config);

// Single-vertex fits, one per lead field column.
std::vector<LeafFit> leaf_fits(const LeadFieldMatrix& leadfield, const Eigen::VectorXd& y, const SolverConfig& config);

// Live partition of the mesh during agglomeration, plus the candidate queue.
//
// Every adjacent active pair is pushed exactly once, when the younger of the
// two clusters is created. A pair's score depends only on the two clusters
// and y, so an entry stays exact until one of its clusters is merged away;
// entries naming an inactive cluster are dropped when popped.
class ClusterState {
 public:
  ClusterState(const AdjacencyGraph& graph, const LeadFieldMatrix& leadfield, Eigen::VectorXd y, SolverConfig config);

  int leaf_count() const { return leaf_count_; }
  int steps_done() const { return static_cast<int>(clusters_.size()) - leaf_count_; }
  bool is_active(ClusterId id) const;
  // Throws InvalidState for unknown or inactive ids.
  const Cluster& cluster(ClusterId id) const;
  std::vector<ClusterId> active_clusters() const;
  const std::vector<ClusterId>& cluster_neighbors(ClusterId id) const;
  bool adjacent(ClusterId i, ClusterId j) const;
  ClusterId cluster_of(VertexId v) const { return vertex_cluster_[static_cast<std::size_t>(v)]; }
  const AdjacencyGraph& graph() const { return *graph_; }
  const LeadFieldMatrix& leadfield() const { return *leadfield_; }
  const Eigen::VectorXd& measurement() const { return y_; }
  const SolverConfig& config() const { return config_; }
  std::size_t queue_size() const { return queue_.size(); }

  // Merges the best adjacent pair; nullopt once no adjacent pair remains.
  std::optional<MergeRecord> merge_step();

  // Merges a chosen adjacent pair regardless of its score. Throws
  // InvalidState when the clusters are inactive or not adjacent.
  MergeRecord merge_pair(ClusterId i, ClusterId j);

 private:
  struct Candidate {
    double score;
    ClusterId lo;
    ClusterId hi;
    double amplitude;
    double raw_residual;
    double regularizer;
  };
  struct WorseCandidate {
    bool operator()(const Candidate& a, const Candidate& b) const {
      if (a.score != b.score) return a.score > b.score;
      if (a.lo != b.lo) return a.lo > b.lo;
      return a.hi > b.hi;
    }
  };

  MergeRecord merge(ClusterId lo, ClusterId hi, const PairScore& score);
  void push_pairs(ClusterId k, const std::vector<ClusterId>& partners);
  void validate_cluster(const Cluster& c) const;

  const AdjacencyGraph* graph_;
  const LeadFieldMatrix* leadfield_;
  Eigen::VectorXd y_;
  SolverConfig config_;
  int leaf_count_ = 0;

  std::vector<Cluster> clusters_;
  std::vector<char> active_;
  std::vector<std::vector<ClusterId>> neighbors_;
  std::vector<ClusterId> vertex_cluster_;
  std::priority_queue<Candidate, std::vector<Candidate>, WorseCandidate> queue_;

  // Scratch for border counting, indexed by cluster id / vertex id.
  std::vector<int> slot_of_cluster_;
  std::vector<int> vertex_stamp_;
  int stamp_ = 0;
};

// Number of vertices of c_i with at least one mesh neighbor in c_j.
// Throws InvalidState unless i and j are active and distinct.
int border_count(const ClusterState& state, ClusterId i, ClusterId j);

// Potential error of merging active adjacent clusters i and j, recomputed
// from the clusters' current contents.
PairScore potential_error(const ClusterState& state, const Eigen::VectorXd& y, ClusterId i, ClusterId j,
                          const SolverConfig& config);

// Free-function form of ClusterState::merge_step.
std::optional<MergeRecord> merge_step(ClusterState& state);

// Merges until every connected component is a single cluster.
// Throws InvalidArgument on dimension mismatch.
Dendrogram run(const AdjacencyGraph& graph, const LeadFieldMatrix& leadfield, const Eigen::VectorXd& y,
               const SolverConfig& config = {});
Dendrogram run(const TriangleMesh& mesh, const LeadFieldMatrix& leadfield, const Eigen::VectorXd& y,
               const SolverConfig& config = {});

// Reference engine: rescans every adjacent pair at every step and counts
// borders by brute force. Quadratic; meant for small meshes and testing.
Dendrogram run_naive(const AdjacencyGraph& graph, const LeadFieldMatrix& leadfield, const Eigen::VectorXd& y,
                     const SolverConfig& config = {});

}  // namespace rgrow
