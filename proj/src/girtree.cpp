#include "geoprefer/girtree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <queue>

namespace geoprefer {

namespace {

static_assert(std::endian::native == std::endian::little, "index format assumes a little-endian host");

constexpr char kMagic[8] = {'G', 'I', 'R', 'T', 'R', 'E', 'E', '\0'};
constexpr std::uint32_t kVersion = 1;

// Sort-tile-recursive ordering: after the call, consecutive runs of
// `fanout` indices in `perm` form one node.
void str_order(std::vector<std::uint32_t>& perm, const std::vector<Location>& centers, std::size_t fanout) {
  const std::size_t n = perm.size();
  const std::size_t pages = (n + fanout - 1) / fanout;
  const auto slices = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(pages))));
  const std::size_t slice_len = slices * fanout;

  auto by_lon = [&](std::uint32_t a, std::uint32_t b) {
    const auto& pa = centers[a];
    const auto& pb = centers[b];
    if (pa.lon != pb.lon) return pa.lon < pb.lon;
    if (pa.lat != pb.lat) return pa.lat < pb.lat;
    return a < b;
  };
  auto by_lat = [&](std::uint32_t a, std::uint32_t b) {
    const auto& pa = centers[a];
    const auto& pb = centers[b];
    if (pa.lat != pb.lat) return pa.lat < pb.lat;
    if (pa.lon != pb.lon) return pa.lon < pb.lon;
    return a < b;
  };

  std::sort(perm.begin(), perm.end(), by_lon);
  for (std::size_t s = 0; s < n; s += slice_len) {
    auto end = perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + slice_len));
    std::sort(perm.begin() + static_cast<std::ptrdiff_t>(s), end, by_lat);
  }
}

// Little-endian binary helpers.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.write(buf, sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void sig(const Signature& s) {
    for (auto w : s.blocks()) put<std::uint64_t>(w);
  }
  void rect(const Rect& r) {
    put(r.min_lon);
    put(r.min_lat);
    put(r.max_lon);
    put(r.max_lat);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T get() {
    char buf[sizeof(T)];
    in_.read(buf, sizeof(T));
    if (!in_) throw Error("index: truncated file");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 24)) throw Error("index: corrupt string length");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (!in_) throw Error("index: truncated file");
    return s;
  }
  Signature sig(std::size_t bits) {
    Signature s(bits);
    for (auto& w : s.blocks()) w = get<std::uint64_t>();
    return s;
  }
  Rect rect() {
    Rect r;
    r.min_lon = get<double>();
    r.min_lat = get<double>();
    r.max_lon = get<double>();
    r.max_lat = get<double>();
    return r;
  }

 private:
  std::istream& in_;
};

std::size_t count_dominators(std::span<const Candidate> set, const ScorePair& p, std::size_t limit) {
  std::size_t n = 0;
  for (const auto& c : set) {
    if (dominates(c.scores, p) && ++n >= limit) break;
  }
  return n;
}

}  // namespace

GirTree GirTree::build(std::vector<GeoObject> objects, const TreeConfig& cfg) {
  if (objects.empty()) throw Error("cannot build an index over an empty dataset");
  if (cfg.fanout < 2) throw ValidationError("index: fanout must be >= 2");
  cfg.sig.validate();
  const DatasetSummary summary = validate_dataset(objects);

  GirTree t;
  t.cfg_ = cfg;
  t.frame_ = summary.frame;
  const std::size_t fanout = cfg.fanout;

  // Leaf level: objects in STR order.
  std::vector<std::uint32_t> perm(objects.size());
  std::iota(perm.begin(), perm.end(), 0u);
  {
    std::vector<Location> centers(objects.size());
    for (std::size_t i = 0; i < objects.size(); ++i) centers[i] = objects[i].location;
    str_order(perm, centers, fanout);
  }
  t.objects_.reserve(objects.size());
  t.entries_.reserve(objects.size());
  for (auto i : perm) {
    t.objects_.push_back(std::move(objects[i]));
    const auto& o = t.objects_.back();
    t.entries_.push_back({o.id, o.location, sign_words(o.words, cfg.sig)});
  }

  std::vector<std::vector<GirNode>> levels;
  {
    std::vector<GirNode> leaves;
    for (std::size_t s = 0; s < t.entries_.size(); s += fanout) {
      GirNode n;
      n.is_leaf = true;
      n.first = static_cast<std::uint32_t>(s);
      n.count = static_cast<std::uint32_t>(std::min(fanout, t.entries_.size() - s));
      n.mbr = Rect::around(t.entries_[s].location);
      n.sig = Signature(cfg.sig.length_bits);
      for (std::size_t e = s; e < s + n.count; ++e) {
        n.mbr.expand(t.entries_[e].location);
        n.sig |= t.entries_[e].sig;
      }
      leaves.push_back(std::move(n));
    }
    levels.push_back(std::move(leaves));
  }

  while (levels.back().size() > 1) {
    auto& lower = levels.back();
    std::vector<std::uint32_t> order(lower.size());
    std::iota(order.begin(), order.end(), 0u);
    std::vector<Location> centers(lower.size());
    for (std::size_t i = 0; i < lower.size(); ++i) centers[i] = lower[i].mbr.center();
    str_order(order, centers, fanout);

    std::vector<GirNode> reordered;
    reordered.reserve(lower.size());
    for (auto i : order) reordered.push_back(std::move(lower[i]));
    lower = std::move(reordered);

    std::vector<GirNode> upper;
    for (std::size_t s = 0; s < lower.size(); s += fanout) {
      GirNode n;
      n.first = static_cast<std::uint32_t>(s);  // local to `lower`; rebased below
      n.count = static_cast<std::uint32_t>(std::min(fanout, lower.size() - s));
      n.mbr = lower[s].mbr;
      n.sig = Signature(cfg.sig.length_bits);
      for (std::size_t c = s; c < s + n.count; ++c) {
        n.mbr.expand(lower[c].mbr);
        n.sig |= lower[c].sig;
      }
      upper.push_back(std::move(n));
    }
    levels.push_back(std::move(upper));
  }

  // Concatenate top-down so the node array is breadth-first.
  t.height_ = levels.size();
  std::vector<std::size_t> offset(levels.size());
  std::size_t total = 0;
  for (std::size_t l = levels.size(); l-- > 0;) {
    offset[l] = total;
    total += levels[l].size();
  }
  t.nodes_.reserve(total);
  for (std::size_t l = levels.size(); l-- > 0;) {
    for (auto& n : levels[l]) {
      if (!n.is_leaf) n.first += static_cast<std::uint32_t>(offset[l - 1]);
      t.nodes_.push_back(std::move(n));
    }
  }

  t.index_objects();
  return t;
}

void GirTree::index_objects() {
  by_id_.clear();
  by_id_.reserve(objects_.size());
  for (std::size_t i = 0; i < objects_.size(); ++i) by_id_.emplace(objects_[i].id, i);
}

const GeoObject* GirTree::find(ObjectId id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &objects_[it->second];
}

const GeoObject& GirTree::object(ObjectId id) const {
  const auto* o = find(id);
  if (o == nullptr) throw Error("unknown object id " + std::to_string(id));
  return *o;
}

void GirTree::save(std::ostream& out) const {
  Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(cfg_.fanout);
  w.put<std::uint32_t>(cfg_.sig.length_bits);
  w.put<std::uint32_t>(cfg_.sig.bits_per_word);
  w.put<std::uint64_t>(cfg_.sig.seed);
  w.put<double>(frame_.d_max);
  w.put<double>(frame_.lon_scale);
  w.put<std::uint64_t>(objects_.size());
  w.put<std::uint64_t>(nodes_.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(height_));

  for (const auto& n : nodes_) {
    w.put<std::uint8_t>(n.is_leaf ? 1 : 0);
    w.rect(n.mbr);
    w.put<std::uint32_t>(n.first);
    w.put<std::uint32_t>(n.count);
    w.sig(n.sig);
  }
  for (const auto& e : entries_) {
    w.put<std::uint64_t>(e.id);
    w.put<double>(e.location.lon);
    w.put<double>(e.location.lat);
    w.sig(e.sig);
  }
  for (const auto& o : objects_) {
    w.put<std::uint64_t>(o.id);
    w.put<double>(o.location.lon);
    w.put<double>(o.location.lat);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(o.words.size()));
    for (auto wd : o.words) w.put<std::uint32_t>(wd);
    w.put<std::uint8_t>(o.image_url ? 1 : 0);
    if (o.image_url) w.str(*o.image_url);
    w.put<std::uint8_t>(o.tags ? 1 : 0);
    if (o.tags) {
      w.put<std::uint32_t>(static_cast<std::uint32_t>(o.tags->size()));
      for (const auto& tag : *o.tags) w.str(tag);
    }
  }
  if (!out) throw Error("index: write failed");
}

GirTree GirTree::load(std::istream& in) {
  Reader r(in);
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw Error("index: bad magic");
  if (r.get<std::uint32_t>() != kVersion) throw Error("index: unsupported version");

  GirTree t;
  t.cfg_.fanout = r.get<std::uint32_t>();
  t.cfg_.sig.length_bits = r.get<std::uint32_t>();
  t.cfg_.sig.bits_per_word = r.get<std::uint32_t>();
  t.cfg_.sig.seed = r.get<std::uint64_t>();
  t.cfg_.sig.validate();
  t.frame_.d_max = r.get<double>();
  t.frame_.lon_scale = r.get<double>();
  const auto n_objects = r.get<std::uint64_t>();
  const auto n_nodes = r.get<std::uint64_t>();
  t.height_ = r.get<std::uint32_t>();
  if (n_objects == 0 || n_nodes == 0 || n_nodes > 4 * n_objects + 1) throw Error("index: corrupt header");

  const std::size_t bits = t.cfg_.sig.length_bits;
  t.nodes_.resize(n_nodes);
  for (auto& n : t.nodes_) {
    n.is_leaf = r.get<std::uint8_t>() != 0;
    n.mbr = r.rect();
    n.first = r.get<std::uint32_t>();
    n.count = r.get<std::uint32_t>();
    n.sig = r.sig(bits);
    const std::size_t limit = n.is_leaf ? n_objects : n_nodes;
    if (static_cast<std::size_t>(n.first) + n.count > limit) throw Error("index: corrupt node record");
  }
  t.entries_.resize(n_objects);
  for (auto& e : t.entries_) {
    e.id = r.get<std::uint64_t>();
    e.location.lon = r.get<double>();
    e.location.lat = r.get<double>();
    e.sig = r.sig(bits);
  }
  t.objects_.resize(n_objects);
  for (auto& o : t.objects_) {
    o.id = r.get<std::uint64_t>();
    o.location.lon = r.get<double>();
    o.location.lat = r.get<double>();
    const auto nw = r.get<std::uint32_t>();
    o.words.resize(nw);
    for (auto& wd : o.words) wd = r.get<std::uint32_t>();
    if (r.get<std::uint8_t>() != 0) o.image_url = r.str();
    if (r.get<std::uint8_t>() != 0) {
      const auto nt = r.get<std::uint32_t>();
      o.tags.emplace();
      for (std::uint32_t i = 0; i < nt; ++i) o.tags->push_back(r.str());
    }
  }
  validate_dataset(t.objects_);
  t.index_objects();
  return t;
}

void GirTree::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  save(out);
}

GirTree GirTree::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index " + path);
  return load(in);
}

ScorePair node_bound(const Query& q, const GirNode& node, const SpatialFrame& frame, const SignatureProbe& probe) {
  return {geo_proximity(frame, q.location, node.mbr.clamp(q.location)), probe.similarity_upper_bound(node.sig)};
}

double f_sort(const Query& q, const GirNode& node, const SpatialFrame& frame, const SignatureConfig& sig_cfg) {
  const auto b = node_bound(q, node, frame, SignatureProbe(q.words, sig_cfg));
  return b.proximity + b.similarity;
}

std::vector<Candidate> gi_super_search(const GirTree& tree, const Query& q, SearchStats* stats) {
  validate_query(q);
  SearchStats local;
  SearchStats& st = stats ? *stats : local;
  st = {};

  const SignatureProbe probe(q.words, tree.config().sig);
  const auto& frame = tree.frame();
  const auto nodes = tree.nodes();
  const auto objects = tree.objects();
  const std::size_t k = q.k;

  struct HeapItem {
    double key;
    std::uint32_t node;
    ScorePair bound;
  };
  // Largest f_sort first; lower node index breaks ties.
  auto cmp = [](const HeapItem& a, const HeapItem& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.node > b.node;
  };
  std::priority_queue<HeapItem, std::vector<HeapItem>, decltype(cmp)> heap(cmp);

  auto push = [&](std::uint32_t idx) {
    const auto b = node_bound(q, nodes[idx], frame, probe);
    heap.push({b.proximity + b.similarity, idx, b});
  };

  std::vector<Candidate> s;
  push(0);
  while (!heap.empty()) {
    const HeapItem top = heap.top();
    heap.pop();
    // S may have grown since the node was queued.
    if (count_dominators(s, top.bound, k) >= k) {
      ++st.nodes_pruned;
      continue;
    }
    ++st.nodes_visited;
    const GirNode& n = nodes[top.node];
    if (!n.is_leaf) {
      for (std::uint32_t c = n.first; c < n.first + n.count; ++c) {
        const auto b = node_bound(q, nodes[c], frame, probe);
        if (count_dominators(s, b, k) < k) {
          heap.push({b.proximity + b.similarity, c, b});
        } else {
          ++st.nodes_pruned;
        }
      }
    } else {
      for (std::uint32_t e = n.first; e < n.first + n.count; ++e) {
        ++st.entries_examined;
        const auto sp = score_pair(q, objects[e], frame);
        if (count_dominators(s, sp, k) < k) {
          s.push_back({objects[e].id, sp});
        } else {
          ++st.entries_rejected;
        }
      }
    }
  }

  // Members admitted before their dominators were discovered.
  std::vector<Candidate> out;
  out.reserve(s.size());
  for (const auto& c : s) {
    if (count_dominators(s, c.scores, k) < k) out.push_back(c);
  }
  st.removed_by_verification = s.size() - out.size();
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
  return out;
}

}  // namespace geoprefer
