#include "geoprefer/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

namespace geoprefer {

using nlohmann::json;

namespace {

GeoObject parse_object(const json& j) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  for (const char* key : {"id", "lat", "lon", "words"}) {
    if (!j.contains(key)) throw ValidationError(std::string("missing field \"") + key + "\"");
  }
  GeoObject o;
  if (!j["id"].is_number_integer() || j["id"].get<std::int64_t>() < 0)
    throw ValidationError("field \"id\" must be a non-negative integer");
  o.id = j["id"].get<ObjectId>();
  if (!j["lat"].is_number() || !j["lon"].is_number()) throw ValidationError("fields \"lat\"/\"lon\" must be numbers");
  o.location = {j["lon"].get<double>(), j["lat"].get<double>()};
  if (!j["words"].is_array()) throw ValidationError("field \"words\" must be an array");
  for (const auto& w : j["words"]) {
    if (!w.is_number_unsigned() || w.get<std::uint64_t>() > 0xffffffffULL)
      throw ValidationError("field \"words\" must hold 32-bit unsigned integers");
    o.words.push_back(w.get<WordId>());
  }
  if (j.contains("image_url") && !j["image_url"].is_null()) {
    if (!j["image_url"].is_string()) throw ValidationError("field \"image_url\" must be a string");
    o.image_url = j["image_url"].get<std::string>();
  }
  if (j.contains("tags") && !j["tags"].is_null()) {
    if (!j["tags"].is_array()) throw ValidationError("field \"tags\" must be an array of strings");
    o.tags.emplace();
    for (const auto& t : j["tags"]) {
      if (!t.is_string()) throw ValidationError("field \"tags\" must be an array of strings");
      o.tags->push_back(t.get<std::string>());
    }
  }
  validate_object(o);
  return o;
}

}  // namespace

std::vector<GeoObject> read_jsonl(std::istream& in) {
  std::vector<GeoObject> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_object(json::parse(line)));
    } catch (const json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.empty()) throw ValidationError("empty dataset");
  validate_dataset(out);
  return out;
}

std::vector<GeoObject> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_jsonl(in);
}

std::string to_json_line(const GeoObject& o) {
  json j;
  j["id"] = o.id;
  j["lat"] = o.location.lat;
  j["lon"] = o.location.lon;
  j["words"] = o.words;
  if (o.image_url) j["image_url"] = *o.image_url;
  if (o.tags) j["tags"] = *o.tags;
  return j.dump();
}

void write_jsonl(std::ostream& out, const std::vector<GeoObject>& objects) {
  for (const auto& o : objects) out << to_json_line(o) << '\n';
}

void save_jsonl(const std::string& path, const std::vector<GeoObject>& objects) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_jsonl(out, objects);
  if (!out) throw Error("write to " + path + " failed");
}

ZipfSampler::ZipfSampler(std::uint32_t vocab_size, double exponent) {
  if (vocab_size == 0) throw ValidationError("vocabulary must be non-empty");
  cdf_.resize(vocab_size);
  double acc = 0.0;
  for (std::uint32_t r = 0; r < vocab_size; ++r) {
    acc += 1.0 / std::pow(static_cast<double>(r) + 1.0, exponent);
    cdf_[r] = acc;
  }
}

WordId ZipfSampler::sample(double u) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<WordId>(it - cdf_.begin());
}

std::vector<GeoObject> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n < 1) throw ValidationError("n must be >= 1");
  if (!(spec.words_per_object_mean > 0)) throw ValidationError("mean word count must be positive");
  const auto& b = spec.bbox;
  if (!(b.min_lon <= b.max_lon && b.min_lat <= b.max_lat)) throw ValidationError("bbox is inverted");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ulon(b.min_lon, b.max_lon);
  std::uniform_real_distribution<double> ulat(b.min_lat, b.max_lat);
  std::poisson_distribution<std::uint32_t> size_dist(spec.words_per_object_mean);
  const ZipfSampler zipf(spec.vocab_size, spec.zipf_exponent);

  std::vector<GeoObject> out;
  out.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    GeoObject o;
    o.id = i + 1;
    o.location.lon = b.min_lon == b.max_lon ? b.min_lon : ulon(rng);
    o.location.lat = b.min_lat == b.max_lat ? b.min_lat : ulat(rng);
    const std::uint32_t target = std::clamp<std::uint32_t>(size_dist(rng), 1, spec.vocab_size);
    std::set<WordId> words;
    while (words.size() < target) words.insert(zipf(rng));
    o.words.assign(words.begin(), words.end());
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace geoprefer
