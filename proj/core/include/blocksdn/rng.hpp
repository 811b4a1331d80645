#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blocksdn {

std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t mix64(std::uint64_t value);
std::uint64_t fnv1a(std::string_view text);

/// Seeded random stream identified by (master_seed, label). Streams with
/// different labels are independent; the same pair always yields the same
/// sequence. Sub-streams are derived with `fork(index)`.
///
/// Draws come from xoshiro256** with hand-rolled distributions so the value
/// sequence does not depend on the standard library implementation.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view label);

  std::uint64_t master_seed() const { return master_seed_; }
  const std::string& label() const { return label_; }

  RngStream fork(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  double exponential(double mean);
  bool bernoulli(double p);
  /// Index drawn proportionally to non-negative weights (at least one > 0).
  std::size_t weighted(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  RngStream(std::uint64_t master_seed, std::string label, std::uint64_t stream_key);

  std::uint64_t master_seed_;
  std::string label_;
  std::uint64_t key_;
  std::uint64_t s_[4];
};

/// Stateless keyed draw in [0, 1): same (seed, label, a, b) gives the same value.
double keyed_uniform(std::uint64_t master_seed, std::string_view label, std::uint64_t a,
                     std::uint64_t b);

}  // namespace blocksdn
