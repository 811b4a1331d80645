#include "blocksdn/rng.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace blocksdn {

namespace {

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix64(std::uint64_t value) {
  std::uint64_t state = value;
  return splitmix64(state);
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

RngStream::RngStream(std::uint64_t master_seed, std::string_view label)
    : RngStream(master_seed, std::string(label), mix64(master_seed) ^ fnv1a(label)) {}

RngStream::RngStream(std::uint64_t master_seed, std::string label, std::uint64_t stream_key)
    : master_seed_(master_seed), label_(std::move(label)), key_(stream_key) {
  std::uint64_t state = key_;
  for (auto& word : s_) word = splitmix64(state);
}

RngStream RngStream::fork(std::uint64_t index) const {
  return RngStream(master_seed_, label_ + "/" + std::to_string(index),
                   mix64(key_ ^ mix64(index + 0x632be59bd9b4e019ULL)));
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() { return to_unit(next_u64()); }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("RngStream::below: bound must be positive");
  // Lemire's nearly-divisionless rejection.
  __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<__uint128_t>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngStream::exponential(double mean) {
  double u = uniform();
  // 1 - u lies in (0, 1].
  return -mean * std::log(1.0 - u);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

std::size_t RngStream::weighted(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("RngStream::weighted: weights sum to zero");
  double pick = uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (pick < weights[i]) return i;
    pick -= weights[i];
  }
  // Rounding left us past the end; return the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

double keyed_uniform(std::uint64_t master_seed, std::string_view label, std::uint64_t a,
                     std::uint64_t b) {
  std::uint64_t h = mix64(master_seed) ^ fnv1a(label);
  h = mix64(h ^ mix64(a + 0x9e3779b97f4a7c15ULL));
  h = mix64(h ^ mix64(b + 0xd1b54a32d192ed03ULL));
  return to_unit(h);
}

}  // namespace blocksdn
