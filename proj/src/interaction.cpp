#include "geoprefer/interaction.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <unordered_set>

#include "geoprefer/scoring.hpp"

namespace geoprefer {

namespace {

std::size_t popcount_and(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += static_cast<std::size_t>(std::popcount(a[i] & b[i]));
  return n;
}

}  // namespace

NoSuperiorGraph NoSuperiorGraph::build(std::span<const Candidate> candidates) {
  const std::size_t n = candidates.size();
  NoSuperiorGraph g;
  g.ids_.reserve(n);
  g.scores_.reserve(n);
  for (const auto& c : candidates) {
    g.ids_.push_back(c.id);
    g.scores_.push_back(c.scores);
  }
  g.alive_.assign(n, true);
  g.live_ = n;
  g.below_ = BitMatrix(n);
  g.above_ = BitMatrix(n);
  g.adj_ = BitMatrix(n);
  g.alive_bits_.assign((n + 63) / 64, 0);
  for (std::size_t v = 0; v < n; ++v) g.alive_bits_[v >> 6] |= std::uint64_t{1} << (v & 63);

  // Dominance is already transitive, so no closure is needed here.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      switch (dominance(g.scores_[i], g.scores_[j])) {
        case DominanceOutcome::FirstDominates:
          g.below_.set(i, j);
          g.above_.set(j, i);
          break;
        case DominanceOutcome::SecondDominates:
          g.below_.set(j, i);
          g.above_.set(i, j);
          break;
        case DominanceOutcome::Incomparable:
        case DominanceOutcome::Equal:
          g.adj_.set(i, j);
          g.adj_.set(j, i);
          ++g.edges_;
          break;
      }
    }
  }
  return g;
}

std::size_t NoSuperiorGraph::degree(Vertex v) const {
  std::size_t n = 0;
  for (auto w : adj_.row(v)) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

std::size_t NoSuperiorGraph::superiors(Vertex v) const { return popcount_and(above_.row(v), alive_bits_); }

std::vector<Vertex> NoSuperiorGraph::vertices() const {
  std::vector<Vertex> out;
  out.reserve(live_);
  for (Vertex v = 0; v < ids_.size(); ++v) {
    if (alive_[v]) out.push_back(v);
  }
  return out;
}

std::vector<std::pair<Vertex, Vertex>> NoSuperiorGraph::edges() const {
  std::vector<std::pair<Vertex, Vertex>> out;
  out.reserve(edges_);
  for (Vertex a = 0; a < ids_.size(); ++a) {
    for (Vertex b = a + 1; b < ids_.size(); ++b) {
      if (adj_.test(a, b)) out.emplace_back(a, b);
    }
  }
  return out;
}

std::optional<Vertex> NoSuperiorGraph::vertex_of(ObjectId id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
  if (it == ids_.end() || *it != id) return std::nullopt;
  return static_cast<Vertex>(it - ids_.begin());
}

std::size_t NoSuperiorGraph::learn(Vertex superior, Vertex inferior) {
  if (superior == inferior) throw InconsistentFeedback("an object cannot be preferred to itself");
  if (below_.test(inferior, superior))
    throw InconsistentFeedback("feedback contradicts known order: " + std::to_string(ids_[inferior]) + " > " +
                               std::to_string(ids_[superior]));
  if (below_.test(superior, inferior)) return 0;

  // New pairs: every x at or above `superior` against every y at or below
  // `inferior`.
  std::vector<Vertex> ups{superior};
  for (Vertex x = 0; x < ids_.size(); ++x) {
    if (above_.test(superior, x)) ups.push_back(x);
  }
  std::vector<Vertex> downs{inferior};
  for (Vertex y = 0; y < ids_.size(); ++y) {
    if (below_.test(inferior, y)) downs.push_back(y);
  }

  std::size_t dropped = 0;
  for (auto x : ups) {
    for (auto y : downs) {
      if (below_.test(x, y)) continue;
      below_.set(x, y);
      above_.set(y, x);
      if (adj_.test(x, y)) {
        adj_.reset(x, y);
        adj_.reset(y, x);
        --edges_;
        ++dropped;
      }
    }
  }
  return dropped;
}

void NoSuperiorGraph::remove_vertex(Vertex v) {
  if (!alive_[v]) return;
  for (Vertex u = 0; u < ids_.size(); ++u) {
    if (adj_.test(v, u)) {
      adj_.reset(v, u);
      adj_.reset(u, v);
      --edges_;
    }
  }
  alive_[v] = false;
  alive_bits_[v >> 6] &= ~(std::uint64_t{1} << (v & 63));
  --live_;
}

void NoSuperiorGraph::check_invariants() const {
  std::size_t edges = 0;
  for (Vertex a = 0; a < ids_.size(); ++a) {
    if (below_.test(a, a)) throw Error("known order has a cycle through " + std::to_string(ids_[a]));
    for (Vertex b = 0; b < ids_.size(); ++b) {
      if (a == b) continue;
      if (below_.test(a, b) != above_.test(b, a)) throw Error("order transpose out of sync");
      if (below_.test(a, b) && below_.test(b, a)) throw Error("known order is cyclic");
      const bool edge = adj_.test(a, b);
      if (edge != adj_.test(b, a)) throw Error("asymmetric edge");
      const bool expect = alive_[a] && alive_[b] && !order_known(a, b);
      if (edge != expect)
        throw Error("edge/order duality broken at " + std::to_string(ids_[a]) + "," + std::to_string(ids_[b]));
      if (edge && a < b) ++edges;
      // Transitivity: a > b and b > c imply a > c.
      if (below_.test(a, b)) {
        for (std::size_t w = 0; w < below_.row(b).size(); ++w) {
          if ((below_.row(b)[w] & ~below_.row(a)[w]) != 0) throw Error("known order is not transitively closed");
        }
      }
    }
  }
  if (edges != edges_) throw Error("edge count out of sync");
}

std::vector<Vertex> select_random(const NoSuperiorGraph& g, std::size_t theta, std::uint64_t seed) {
  auto pool = g.vertices();
  const std::size_t m = std::min(theta, pool.size());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

double expected_constraints(const NoSuperiorGraph& g, std::span<const Vertex> shown) {
  std::size_t undominated = 0;
  std::size_t total = 0;
  for (auto o : shown) {
    bool beaten = false;
    for (auto j : shown) {
      if (j != o && g.known_superior(j, o)) {
        beaten = true;
        break;
      }
    }
    if (beaten) continue;
    ++undominated;
    for (auto j : shown) {
      if (j != o && g.has_edge(o, j)) ++total;
    }
  }
  if (undominated == 0) return 0.0;
  return static_cast<double>(total) / static_cast<double>(undominated);
}

std::vector<std::size_t> peel_densest(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  if (n == 0) return {};
  std::vector<std::vector<std::size_t>> nbr(n);
  for (const auto& [a, b] : edges) {
    if (a == b || a >= n || b >= n) throw Error("peel_densest: bad edge");
    nbr[a].push_back(b);
    nbr[b].push_back(a);
  }
  std::vector<std::size_t> deg(n);
  for (std::size_t v = 0; v < n; ++v) deg[v] = nbr[v].size();
  std::vector<bool> gone(n, false);

  std::size_t e = edges.size();
  std::size_t v_left = n;
  double best = -1.0;
  std::size_t best_removed = 0;  // number of peeled vertices at the best stage
  std::vector<std::size_t> order;
  order.reserve(n);

  while (v_left >= 2) {
    const double xi = 2.0 * static_cast<double>(e) / (static_cast<double>(v_left) * static_cast<double>(v_left - 1));
    if (xi > best) {
      best = xi;
      best_removed = order.size();
    }
    std::size_t pick = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (!gone[v] && (pick == n || deg[v] < deg[pick])) pick = v;
    }
    gone[pick] = true;
    order.push_back(pick);
    --v_left;
    for (auto u : nbr[pick]) {
      if (!gone[u]) {
        --deg[u];
        --e;
      }
    }
  }

  std::vector<bool> dropped(n, false);
  for (std::size_t i = 0; i < best_removed; ++i) dropped[order[i]] = true;
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < n; ++v) {
    if (!dropped[v]) out.push_back(v);
  }
  return out;
}

std::vector<Vertex> peel_densest(const NoSuperiorGraph& g) {
  const auto verts = g.vertices();
  std::vector<std::size_t> local(g.capacity(), 0);
  for (std::size_t i = 0; i < verts.size(); ++i) local[verts[i]] = i;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(g.edge_count());
  for (const auto& [a, b] : g.edges()) edges.emplace_back(local[a], local[b]);
  std::vector<Vertex> out;
  for (auto i : peel_densest(verts.size(), edges)) out.push_back(verts[i]);
  return out;
}

namespace {

// Member of s with the most known inferiors inside s; lowest vertex on ties.
Vertex most_dominating(const NoSuperiorGraph& g, std::span<const Vertex> s) {
  Vertex best = s.front();
  std::size_t best_count = 0;
  bool first = true;
  for (auto a : s) {
    std::size_t c = 0;
    for (auto b : s) {
      if (a != b && g.known_superior(a, b)) ++c;
    }
    if (first || c > best_count || (c == best_count && a < best)) {
      best = a;
      best_count = c;
      first = false;
    }
  }
  return best;
}

}  // namespace

std::vector<Vertex> select_densest(const NoSuperiorGraph& g, std::size_t theta, std::uint64_t seed) {
  if (g.vertex_count() < 2 || g.edge_count() == 0) return select_random(g, theta, seed);

  std::vector<Vertex> s = peel_densest(g);
  std::unordered_set<Vertex> visited;
  double e = expected_constraints(g, s);
  const std::size_t max_iters = s.size() + theta;

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    if (s.size() > theta) {
      while (s.size() > theta) {
        const Vertex v = most_dominating(g, s);
        s.erase(std::find(s.begin(), s.end(), v));
      }
      break;
    }
    if (s.size() == theta) {
      const Vertex v = most_dominating(g, s);
      std::vector<Vertex> trial;
      for (auto x : s) {
        if (x != v) trial.push_back(x);
      }
      const double et = expected_constraints(g, trial);
      if (et > e) {
        s = std::move(trial);
        e = et;
        visited.insert(v);
        continue;
      }
      break;
    }
    // Fewer than theta: try the unvisited outsider with most edges into s.
    std::optional<Vertex> add;
    std::size_t add_deg = 0;
    for (auto v : g.vertices()) {
      if (visited.contains(v) || std::find(s.begin(), s.end(), v) != s.end()) continue;
      std::size_t d = 0;
      for (auto x : s) {
        if (g.has_edge(v, x)) ++d;
      }
      if (!add || d > add_deg) {
        add = v;
        add_deg = d;
      }
    }
    if (!add) break;
    std::vector<Vertex> trial = s;
    trial.insert(std::upper_bound(trial.begin(), trial.end(), *add), *add);
    const double et = expected_constraints(g, trial);
    if (et > e) {
      s = std::move(trial);
      e = et;
      continue;
    }
    break;
  }
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<Constraint> generate_constraints(const NoSuperiorGraph& g, std::span<const Vertex> shown, Vertex chosen,
                                             std::size_t round, std::span<const Eigen::VectorXd> features) {
  if (std::find(shown.begin(), shown.end(), chosen) == shown.end())
    throw Error("chosen object " + std::to_string(g.id(chosen)) + " was not shown this round");
  std::vector<Constraint> out;
  for (auto o : shown) {
    if (o == chosen || g.order_known(chosen, o)) continue;
    out.push_back({g.id(chosen), g.id(o), round, features[chosen] - features[o]});
  }
  return out;
}

FilterReport filter_candidates(NoSuperiorGraph& g, std::span<const Constraint> constraints, std::size_t k) {
  FilterReport report;
  for (const auto& c : constraints) {
    const auto a = g.vertex_of(c.chosen);
    const auto b = g.vertex_of(c.rejected);
    if (!a || !b) throw Error("constraint refers to an unknown candidate");
    report.edges_removed += g.learn(*a, *b);
  }
  for (auto v : g.vertices()) {
    if (g.superiors(v) >= k) report.vertices_removed.push_back(v);
  }
  for (auto v : report.vertices_removed) g.remove_vertex(v);
  return report;
}

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::CandidatesExhausted:
      return "candidates_exhausted";
    case TerminationReason::FullyOrdered:
      return "fully_ordered";
    case TerminationReason::MaxRounds:
      return "max_rounds";
    case TerminationReason::UserStop:
      return "user_stop";
  }
  return "Unknown";
}

TerminationDecision should_terminate(const NoSuperiorGraph& g, std::size_t k, std::size_t round_no,
                                     const TerminationConfig& cfg, bool user_stop) {
  TerminationDecision d;
  if (g.vertex_count() <= k) d.reasons.push_back(TerminationReason::CandidatesExhausted);
  if (g.edge_count() == 0) d.reasons.push_back(TerminationReason::FullyOrdered);
  if (round_no >= cfg.max_rounds) d.reasons.push_back(TerminationReason::MaxRounds);
  if (user_stop) d.reasons.push_back(TerminationReason::UserStop);
  d.terminate = !d.reasons.empty();
  return d;
}

}  // namespace geoprefer
