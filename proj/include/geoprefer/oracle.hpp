#ifndef GEOPREFER_ORACLE_HPP
#define GEOPREFER_ORACLE_HPP

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "geoprefer/model.hpp"

// Brute-force references for tests and evaluation. Nothing in the engine
// calls into this header.
namespace geoprefer::oracle {

/// Ids of objects with fewer than q.k dominators, ascending. O(N^2).
std::vector<ObjectId> brute_k_superiors(std::span<const GeoObject> objects, const Query& q, const SpatialFrame& frame,
                                        std::size_t cap = 5000);

/// Top-k ids by f_prefer descending, ties by ascending id.
std::vector<ObjectId> brute_topk_prefer(std::span<const GeoObject> objects, const Query& q, const PreferenceVector& p,
                                        std::size_t k, const SpatialFrame& frame);

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

/// 2|E'| / (|V'| (|V'| - 1)) of the subgraph induced by vertices.
double edge_density(std::span<const std::size_t> vertices, const EdgeList& edges);

/// Exhaustive search over every vertex subset of size >= 2 for the one
/// maximizing edge density; ties go to the lexicographically smallest set.
/// Requires n <= 16.
std::vector<std::size_t> brute_densest_subgraph(std::size_t n, const EdgeList& edges);

}  // namespace geoprefer::oracle

#endif  // GEOPREFER_ORACLE_HPP
