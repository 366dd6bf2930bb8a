#ifndef GEOPREFER_SIGNATURE_HPP
#define GEOPREFER_SIGNATURE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "geoprefer/model.hpp"

namespace geoprefer {

struct SignatureConfig {
  std::uint32_t length_bits = 512;
  std::uint32_t bits_per_word = 2;
  std::uint64_t seed = 0;

  /// Throws ValidationError unless 1 <= bits_per_word < length_bits.
  void validate() const;

  friend bool operator==(const SignatureConfig&, const SignatureConfig&) = default;
};

/// Fixed-length bit string; bit i lives in word i / 64, position i % 64.
class Signature {
 public:
  Signature() = default;
  explicit Signature(std::size_t length_bits) : bits_(length_bits), words_((length_bits + 63) / 64, 0) {}

  std::size_t length() const { return bits_; }
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  std::size_t count() const;
  bool covers(const Signature& other) const;  // every bit of other is set here

  Signature& operator|=(const Signature& other);

  std::span<const std::uint64_t> blocks() const { return words_; }
  std::span<std::uint64_t> blocks() { return words_; }

  friend bool operator==(const Signature&, const Signature&) = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Bit positions a word hashes to. May repeat when two probes collide.
std::vector<std::uint32_t> word_bit_positions(WordId word, const SignatureConfig& cfg);

Signature sign_word(WordId word, const SignatureConfig& cfg);

/// Superimposed code of a whole word set.
Signature sign_words(std::span<const WordId> words, const SignatureConfig& cfg);

/// Bitwise OR of sigs. Throws Error on a length mismatch.
Signature superimpose(std::span<const Signature> sigs, std::size_t length_bits);

/// Query words pre-hashed once so node bounds cost one bit probe per word.
class SignatureProbe {
 public:
  SignatureProbe(std::span<const WordId> q_words, const SignatureConfig& cfg);

  std::size_t matched(const Signature& sig) const;
  /// matched / |q|, an upper bound of set similarity for every object
  /// whose signature is covered by sig.
  double similarity_upper_bound(const Signature& sig) const;

 private:
  std::vector<std::vector<std::uint32_t>> positions_;
};

double similarity_upper_bound(std::span<const WordId> q_words, const Signature& node_sig, const SignatureConfig& cfg);

}  // namespace geoprefer

#endif  // GEOPREFER_SIGNATURE_HPP
