#ifndef GEOPREFER_INTERACTION_HPP
#define GEOPREFER_INTERACTION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "geoprefer/girtree.hpp"
#include "geoprefer/model.hpp"

namespace geoprefer {

/// Raised when feedback would make the known order cyclic, i.e. the user
/// contradicted an earlier pick or a dominance fact.
class InconsistentFeedback : public Error {
 public:
  using Error::Error;
};

/// Square bit matrix; row i is a bitset over columns.
class BitMatrix {
 public:
  BitMatrix() = default;
  explicit BitMatrix(std::size_t n) : n_(n), stride_((n + 63) / 64), bits_(n * stride_, 0) {}

  std::size_t size() const { return n_; }
  bool test(std::size_t i, std::size_t j) const { return (row(i)[j >> 6] >> (j & 63)) & 1u; }
  void set(std::size_t i, std::size_t j) { row(i)[j >> 6] |= std::uint64_t{1} << (j & 63); }
  void reset(std::size_t i, std::size_t j) { row(i)[j >> 6] &= ~(std::uint64_t{1} << (j & 63)); }
  std::span<std::uint64_t> row(std::size_t i) { return {bits_.data() + i * stride_, stride_}; }
  std::span<const std::uint64_t> row(std::size_t i) const { return {bits_.data() + i * stride_, stride_}; }

 private:
  std::size_t n_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint64_t> bits_;
};

using Vertex = std::size_t;

/// Candidates plus what is known about their preference order.
///
/// Vertices are candidate indices (ascending object id). The known order is
/// kept transitively closed; an undirected edge joins two live vertices
/// exactly when neither order between them is known.
class NoSuperiorGraph {
 public:
  /// Seeds the known order with every pairwise dominance fact.
  static NoSuperiorGraph build(std::span<const Candidate> candidates);

  std::size_t capacity() const { return ids_.size(); }
  std::size_t vertex_count() const { return live_; }
  std::size_t edge_count() const { return edges_; }

  bool alive(Vertex v) const { return alive_[v]; }
  bool has_edge(Vertex a, Vertex b) const { return adj_.test(a, b); }
  /// a is known to be preferred to b.
  bool known_superior(Vertex a, Vertex b) const { return below_.test(a, b); }
  bool order_known(Vertex a, Vertex b) const { return below_.test(a, b) || below_.test(b, a); }
  std::size_t degree(Vertex v) const;
  /// Live vertices known to be preferred to v.
  std::size_t superiors(Vertex v) const;

  std::vector<Vertex> vertices() const;
  std::vector<std::pair<Vertex, Vertex>> edges() const;

  ObjectId id(Vertex v) const { return ids_[v]; }
  const ScorePair& scores(Vertex v) const { return scores_[v]; }
  std::optional<Vertex> vertex_of(ObjectId id) const;

  /// Records superior > inferior, closes the order and drops every edge
  /// whose order became known. Returns the number of edges dropped.
  std::size_t learn(Vertex superior, Vertex inferior);
  void remove_vertex(Vertex v);

  /// Throws Error if the edge/order duality or acyclicity is broken.
  void check_invariants() const;

 private:
  std::vector<ObjectId> ids_;
  std::vector<ScorePair> scores_;
  std::vector<bool> alive_;
  std::size_t live_ = 0;
  std::size_t edges_ = 0;
  BitMatrix below_;  // below_(a, b): a > b known
  BitMatrix above_;  // transpose of below_
  BitMatrix adj_;
  std::vector<std::uint64_t> alive_bits_;
};

/// Uniform sample of min(theta, |V|) live vertices, ascending.
std::vector<Vertex> select_random(const NoSuperiorGraph& g, std::size_t theta, std::uint64_t seed);

/// Expected number of constraints a pick from shown yields when the user
/// is equally likely to choose any shown vertex not known to be beaten by
/// another shown vertex.
double expected_constraints(const NoSuperiorGraph& g, std::span<const Vertex> shown);

/// Greedy peeling on an explicit graph: repeatedly drops a minimum-degree
/// vertex (lowest index on ties) and returns the intermediate vertex set of
/// highest edge density, preferring the larger set on ties.
std::vector<std::size_t> peel_densest(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges);

/// Peeling over the live part of g.
std::vector<Vertex> peel_densest(const NoSuperiorGraph& g);

/// Densest-subgraph selection followed by the size adjustment loop.
/// Falls back to select_random(seed) on graphs without edges.
std::vector<Vertex> select_densest(const NoSuperiorGraph& g, std::size_t theta, std::uint64_t seed);

/// One constraint chosen > o for every shown o whose order against chosen
/// is still unknown. features[v] is the feature map of vertex v.
std::vector<Constraint> generate_constraints(const NoSuperiorGraph& g, std::span<const Vertex> shown, Vertex chosen,
                                             std::size_t round, std::span<const Eigen::VectorXd> features);

struct FilterReport {
  std::size_t edges_removed = 0;
  std::vector<Vertex> vertices_removed;
};

/// Learns the constraint facts, then drops every vertex with k or more
/// known superiors.
FilterReport filter_candidates(NoSuperiorGraph& g, std::span<const Constraint> constraints, std::size_t k);

enum class TerminationReason { CandidatesExhausted, FullyOrdered, MaxRounds, UserStop };

std::string to_string(TerminationReason r);

struct TerminationConfig {
  std::size_t max_rounds = 10;
};

struct TerminationDecision {
  bool terminate = false;
  std::vector<TerminationReason> reasons;
};

TerminationDecision should_terminate(const NoSuperiorGraph& g, std::size_t k, std::size_t round_no,
                                     const TerminationConfig& cfg, bool user_stop = false);

}  // namespace geoprefer

#endif  // GEOPREFER_INTERACTION_HPP
