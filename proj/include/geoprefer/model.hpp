#ifndef GEOPREFER_MODEL_HPP
#define GEOPREFER_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace geoprefer {

using ObjectId = std::uint64_t;
using WordId = std::uint32_t;

/// Sorted, duplicate-free list of visual-word ids.
using WordSet = std::vector<WordId>;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

struct Location {
  double lon = 0.0;  // degrees, [-180, 180]
  double lat = 0.0;  // degrees, [-90, 90]

  friend bool operator==(const Location&, const Location&) = default;
};

/// Axis-aligned rectangle in (lon, lat) degrees.
struct Rect {
  double min_lon = 0.0;
  double min_lat = 0.0;
  double max_lon = 0.0;
  double max_lat = 0.0;

  static Rect around(const Location& p) { return {p.lon, p.lat, p.lon, p.lat}; }

  void expand(const Location& p);
  void expand(const Rect& r);
  bool contains(const Location& p) const;
  bool contains(const Rect& r) const;
  Location center() const { return {(min_lon + max_lon) / 2, (min_lat + max_lat) / 2}; }
  /// Point of the rectangle closest to p (p itself when inside).
  Location clamp(const Location& p) const;

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct GeoObject {
  ObjectId id = 0;
  Location location;
  WordSet words;
  std::optional<std::string> image_url;
  std::optional<std::vector<std::string>> tags;

  friend bool operator==(const GeoObject&, const GeoObject&) = default;
};

struct Query {
  Location location;
  WordSet words;
  std::size_t k = 20;
  std::size_t theta = 8;
  double lambda = 0.5;
};

/// Throws ValidationError when the query breaks its invariants.
void validate_query(const Query& q);

/// Geographic weight followed by one weight per query word, all >= 0.
///
/// Stored as one dense vector so that preference scores are plain dot
/// products with the feature map of an object.
struct PreferenceVector {
  Eigen::VectorXd weights;  // [0] geographic, [1..t] query words

  PreferenceVector() = default;
  explicit PreferenceVector(Eigen::VectorXd w) : weights(std::move(w)) {}

  /// (1, 1, ..., 1) for a query of t words.
  static PreferenceVector uniform(std::size_t t) {
    return PreferenceVector(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(t) + 1));
  }

  std::size_t word_count() const { return weights.size() == 0 ? 0 : static_cast<std::size_t>(weights.size()) - 1; }
  double geo() const { return weights[0]; }
  auto words() const { return weights.tail(weights.size() - 1); }
};

/// One feedback fact "chosen is preferred to rejected".
struct Constraint {
  ObjectId chosen = 0;
  ObjectId rejected = 0;
  std::size_t round = 0;
  Eigen::VectorXd delta;  // feature(chosen) - feature(rejected), length t+1
};

/// Normalized geographic proximity and visual similarity of one object
/// with respect to one query; the two dominance dimensions.
struct ScorePair {
  double proximity = 0.0;
  double similarity = 0.0;

  friend bool operator==(const ScorePair&, const ScorePair&) = default;
};

/// Planar approximation of (lon, lat): longitudes are scaled by the cosine
/// of the dataset's mean latitude. d_max normalizes distances to [0, 1].
struct SpatialFrame {
  double lon_scale = 1.0;
  double d_max = 0.0;

  double distance(const Location& a, const Location& b) const;
};

struct DatasetSummary {
  std::size_t count = 0;
  Rect bbox;
  SpatialFrame frame;
  bool degenerate_extent = false;  // d_max == 0
};

/// Checks ids, coordinates and word-set invariants and derives the
/// normalization frame. Throws ValidationError on the first violation.
DatasetSummary validate_dataset(std::span<const GeoObject> objects);

/// Throws ValidationError if a single object violates its invariants.
void validate_object(const GeoObject& o);

}  // namespace geoprefer

#endif  // GEOPREFER_MODEL_HPP
