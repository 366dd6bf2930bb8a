#include "geoprefer/oracle.hpp"

#include <algorithm>
#include <numeric>

#include "geoprefer/scoring.hpp"

namespace geoprefer::oracle {

std::vector<ObjectId> brute_k_superiors(std::span<const GeoObject> objects, const Query& q, const SpatialFrame& frame,
                                        std::size_t cap) {
  if (objects.size() > cap) throw Error("brute_k_superiors: dataset exceeds cap of " + std::to_string(cap));
  std::vector<ScorePair> sp;
  sp.reserve(objects.size());
  for (const auto& o : objects) sp.push_back(score_pair(q, o, frame));

  std::vector<ObjectId> out;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    std::size_t dominators = 0;
    for (std::size_t j = 0; j < objects.size(); ++j) {
      if (j != i && dominance(sp[j], sp[i]) == DominanceOutcome::FirstDominates) ++dominators;
    }
    if (dominators < q.k) out.push_back(objects[i].id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ObjectId> brute_topk_prefer(std::span<const GeoObject> objects, const Query& q, const PreferenceVector& p,
                                        std::size_t k, const SpatialFrame& frame) {
  std::vector<std::pair<double, ObjectId>> scored;
  scored.reserve(objects.size());
  for (const auto& o : objects) scored.emplace_back(f_prefer(q, o, p, frame), o.id);
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<ObjectId> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

double edge_density(std::span<const std::size_t> vertices, const EdgeList& edges) {
  const std::size_t v = vertices.size();
  if (v < 2) return 0.0;
  std::size_t e = 0;
  for (const auto& [a, b] : edges) {
    const bool has_a = std::find(vertices.begin(), vertices.end(), a) != vertices.end();
    const bool has_b = std::find(vertices.begin(), vertices.end(), b) != vertices.end();
    if (has_a && has_b) ++e;
  }
  return 2.0 * static_cast<double>(e) / (static_cast<double>(v) * static_cast<double>(v - 1));
}

std::vector<std::size_t> brute_densest_subgraph(std::size_t n, const EdgeList& edges) {
  if (n > 16) throw Error("brute_densest_subgraph: at most 16 vertices");
  if (n < 2) return {};

  std::vector<std::uint32_t> adj(n, 0);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n || a == b) throw Error("brute_densest_subgraph: bad edge");
    adj[a] |= 1u << b;
    adj[b] |= 1u << a;
  }

  double best = -1.0;
  std::vector<std::size_t> best_set;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    const int v = std::popcount(mask);
    if (v < 2) continue;
    int twice_e = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) twice_e += std::popcount(adj[i] & mask);
    }
    const double xi = static_cast<double>(twice_e) / (static_cast<double>(v) * (v - 1));
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) set.push_back(i);
    }
    if (xi > best || (xi == best && set < best_set)) {
      best = xi;
      best_set = std::move(set);
    }
  }
  return best_set;
}

}  // namespace geoprefer::oracle
