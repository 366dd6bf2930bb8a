#include "geoprefer/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

namespace geoprefer {

void Rect::expand(const Location& p) {
  min_lon = std::min(min_lon, p.lon);
  min_lat = std::min(min_lat, p.lat);
  max_lon = std::max(max_lon, p.lon);
  max_lat = std::max(max_lat, p.lat);
}

void Rect::expand(const Rect& r) {
  min_lon = std::min(min_lon, r.min_lon);
  min_lat = std::min(min_lat, r.min_lat);
  max_lon = std::max(max_lon, r.max_lon);
  max_lat = std::max(max_lat, r.max_lat);
}

bool Rect::contains(const Location& p) const {
  return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
}

bool Rect::contains(const Rect& r) const {
  return r.min_lon >= min_lon && r.max_lon <= max_lon && r.min_lat >= min_lat && r.max_lat <= max_lat;
}

Location Rect::clamp(const Location& p) const {
  return {std::clamp(p.lon, min_lon, max_lon), std::clamp(p.lat, min_lat, max_lat)};
}

double SpatialFrame::distance(const Location& a, const Location& b) const {
  const double dx = (a.lon - b.lon) * lon_scale;
  const double dy = a.lat - b.lat;
  return std::sqrt(dx * dx + dy * dy);
}

void validate_query(const Query& q) {
  if (q.words.empty()) throw ValidationError("query: words must be non-empty");
  if (!std::is_sorted(q.words.begin(), q.words.end()) ||
      std::adjacent_find(q.words.begin(), q.words.end()) != q.words.end())
    throw ValidationError("query: words must be sorted and duplicate-free");
  if (q.k < 1) throw ValidationError("query: k must be >= 1");
  if (q.theta < 2) throw ValidationError("query: theta must be >= 2");
  if (!(q.lambda >= 0.0 && q.lambda <= 1.0)) throw ValidationError("query: lambda must lie in [0, 1]");
  if (!(q.location.lon >= -180.0 && q.location.lon <= 180.0 && q.location.lat >= -90.0 && q.location.lat <= 90.0))
    throw ValidationError("query: location out of range");
}

void validate_object(const GeoObject& o) {
  const auto& p = o.location;
  if (!(p.lon >= -180.0 && p.lon <= 180.0) || !(p.lat >= -90.0 && p.lat <= 90.0))
    throw ValidationError("object " + std::to_string(o.id) + ": coordinates out of range");
  for (std::size_t i = 1; i < o.words.size(); ++i) {
    if (o.words[i - 1] >= o.words[i])
      throw ValidationError("object " + std::to_string(o.id) + ": words must be sorted and duplicate-free");
  }
}

DatasetSummary validate_dataset(std::span<const GeoObject> objects) {
  if (objects.empty()) throw ValidationError("empty dataset");

  std::unordered_set<ObjectId> seen;
  seen.reserve(objects.size());
  DatasetSummary s;
  s.count = objects.size();
  s.bbox = Rect::around(objects.front().location);
  double lat_sum = 0.0;
  for (const auto& o : objects) {
    validate_object(o);
    if (!seen.insert(o.id).second) throw ValidationError("duplicate id " + std::to_string(o.id));
    s.bbox.expand(o.location);
    lat_sum += o.location.lat;
  }

  const double mean_lat = lat_sum / static_cast<double>(objects.size());
  s.frame.lon_scale = std::cos(mean_lat * std::numbers::pi / 180.0);
  s.frame.d_max = s.frame.distance({s.bbox.min_lon, s.bbox.min_lat}, {s.bbox.max_lon, s.bbox.max_lat});
  s.degenerate_extent = s.frame.d_max == 0.0;
  return s;
}

}  // namespace geoprefer
