#ifndef GEOPREFER_INGEST_HPP
#define GEOPREFER_INGEST_HPP

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "geoprefer/model.hpp"

namespace geoprefer {

/// One object per line:
///   {"id": 1, "lat": 40.7, "lon": -73.9, "words": [3, 17], "image_url": "...", "tags": ["..."]}
/// image_url and tags are optional. Blank lines are skipped. Errors name
/// the 1-based line number; the result is validated as a dataset.
std::vector<GeoObject> read_jsonl(std::istream& in);
std::vector<GeoObject> load_jsonl(const std::string& path);

std::string to_json_line(const GeoObject& o);
void write_jsonl(std::ostream& out, const std::vector<GeoObject>& objects);
void save_jsonl(const std::string& path, const std::vector<GeoObject>& objects);

struct SyntheticSpec {
  std::size_t n = 1000;
  std::uint32_t vocab_size = 1000;
  double words_per_object_mean = 100.0;
  Rect bbox{-74.05, 40.60, -73.85, 40.85};
  double zipf_exponent = 1.0;
  std::uint64_t seed = 0;
};

/// Locations uniform in the bbox, set sizes Poisson(mean) with a minimum of
/// one, word ids Zipf-distributed over the vocabulary. Ids are 1..n.
std::vector<GeoObject> generate_synthetic(const SyntheticSpec& spec);

/// Samples ids from a Zipf law over [0, vocab_size).
class ZipfSampler {
 public:
  ZipfSampler(std::uint32_t vocab_size, double exponent);

  template <typename Rng>
  WordId operator()(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, cdf_.back())(rng);
    return sample(u);
  }

  std::uint32_t vocab_size() const { return static_cast<std::uint32_t>(cdf_.size()); }

 private:
  WordId sample(double u) const;
  std::vector<double> cdf_;
};

}  // namespace geoprefer

#endif  // GEOPREFER_INGEST_HPP
