#ifndef GEOPREFER_GIRTREE_HPP
#define GEOPREFER_GIRTREE_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "geoprefer/model.hpp"
#include "geoprefer/scoring.hpp"
#include "geoprefer/signature.hpp"

namespace geoprefer {

struct TreeConfig {
  std::uint32_t fanout = 32;
  SignatureConfig sig;
};

/// R-tree node augmented with the superimposed signature of every word
/// beneath it. Children are the contiguous range [first, first + count) of
/// GirTree::nodes() (internal) or GirTree::entries() (leaf).
struct GirNode {
  Rect mbr;
  Signature sig;
  bool is_leaf = false;
  std::uint32_t first = 0;
  std::uint32_t count = 0;
};

struct LeafEntry {
  ObjectId id = 0;
  Location location;
  Signature sig;
};

/// One member of the k-superior candidate set.
struct Candidate {
  ObjectId id = 0;
  ScorePair scores;
};

struct SearchStats {
  std::size_t nodes_visited = 0;
  std::size_t nodes_pruned = 0;
  std::size_t entries_examined = 0;
  std::size_t entries_rejected = 0;
  std::size_t removed_by_verification = 0;
};

/// Height-balanced, immutable GIR-Tree over one dataset.
///
/// Built by sort-tile-recursive bulk loading. Nodes are stored breadth-first
/// with the root at index 0, and objects are kept in leaf order so that
/// entries()[i] describes objects()[i].
class GirTree {
 public:
  static GirTree build(std::vector<GeoObject> objects, const TreeConfig& cfg = {});

  /// Binary index format; load(save(t)) reproduces t byte for byte.
  void save(std::ostream& out) const;
  static GirTree load(std::istream& in);
  void save_file(const std::string& path) const;
  static GirTree load_file(const std::string& path);

  const TreeConfig& config() const { return cfg_; }
  const SpatialFrame& frame() const { return frame_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return objects_.size(); }

  const GirNode& root() const { return nodes_.front(); }
  std::span<const GirNode> nodes() const { return nodes_; }
  std::span<const LeafEntry> entries() const { return entries_; }
  std::span<const GeoObject> objects() const { return objects_; }

  /// nullptr when absent.
  const GeoObject* find(ObjectId id) const;
  /// Throws Error when absent.
  const GeoObject& object(ObjectId id) const;

 private:
  void index_objects();

  TreeConfig cfg_;
  SpatialFrame frame_;
  std::size_t height_ = 0;
  std::vector<GirNode> nodes_;
  std::vector<LeafEntry> entries_;
  std::vector<GeoObject> objects_;
  std::unordered_map<ObjectId, std::size_t> by_id_;
};

/// Optimistic (proximity, similarity) for anything stored under node.
ScorePair node_bound(const Query& q, const GirNode& node, const SpatialFrame& frame, const SignatureProbe& probe);

/// Heap key: bound proximity + bound similarity.
double f_sort(const Query& q, const GirNode& node, const SpatialFrame& frame, const SignatureConfig& sig_cfg);

/// Every object with fewer than q.k dominators, sorted by id.
std::vector<Candidate> gi_super_search(const GirTree& tree, const Query& q, SearchStats* stats = nullptr);

}  // namespace geoprefer

#endif  // GEOPREFER_GIRTREE_HPP
