#include "geoprefer/signature.hpp"

#include <bit>

namespace geoprefer {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void SignatureConfig::validate() const {
  if (bits_per_word < 1 || bits_per_word >= length_bits)
    throw ValidationError("signature: need 1 <= bits_per_word < length_bits");
}

std::size_t Signature::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool Signature::covers(const Signature& other) const {
  if (other.bits_ != bits_) return false;
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if ((words_[i] & other.words_[i]) != other.words_[i]) return false;
  }
  return true;
}

Signature& Signature::operator|=(const Signature& other) {
  if (other.bits_ != bits_) throw Error("signature length mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

std::vector<std::uint32_t> word_bit_positions(WordId word, const SignatureConfig& cfg) {
  // Double hashing: h1 + j * h2 with an odd stride.
  const std::uint64_t h1 = splitmix64(cfg.seed ^ splitmix64(word));
  const std::uint64_t h2 = splitmix64(h1) | 1u;
  std::vector<std::uint32_t> pos(cfg.bits_per_word);
  for (std::uint32_t j = 0; j < cfg.bits_per_word; ++j)
    pos[j] = static_cast<std::uint32_t>((h1 + j * h2) % cfg.length_bits);
  return pos;
}

Signature sign_word(WordId word, const SignatureConfig& cfg) {
  Signature s(cfg.length_bits);
  for (auto p : word_bit_positions(word, cfg)) s.set(p);
  return s;
}

Signature sign_words(std::span<const WordId> words, const SignatureConfig& cfg) {
  Signature s(cfg.length_bits);
  for (auto w : words)
    for (auto p : word_bit_positions(w, cfg)) s.set(p);
  return s;
}

Signature superimpose(std::span<const Signature> sigs, std::size_t length_bits) {
  Signature out(length_bits);
  for (const auto& s : sigs) out |= s;
  return out;
}

SignatureProbe::SignatureProbe(std::span<const WordId> q_words, const SignatureConfig& cfg) {
  positions_.reserve(q_words.size());
  for (auto w : q_words) positions_.push_back(word_bit_positions(w, cfg));
}

std::size_t SignatureProbe::matched(const Signature& sig) const {
  std::size_t n = 0;
  for (const auto& pos : positions_) {
    bool all = true;
    for (auto p : pos) {
      if (!sig.test(p)) {
        all = false;
        break;
      }
    }
    n += all ? 1 : 0;
  }
  return n;
}

double SignatureProbe::similarity_upper_bound(const Signature& sig) const {
  if (positions_.empty()) return 0.0;
  return static_cast<double>(matched(sig)) / static_cast<double>(positions_.size());
}

double similarity_upper_bound(std::span<const WordId> q_words, const Signature& node_sig, const SignatureConfig& cfg) {
  return SignatureProbe(q_words, cfg).similarity_upper_bound(node_sig);
}

}  // namespace geoprefer
