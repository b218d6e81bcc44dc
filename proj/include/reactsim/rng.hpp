#ifndef REACTSIM_RNG_HPP
#define REACTSIM_RNG_HPP

#include <cstdint>
#include <limits>

namespace reactsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ splitmix64(value + 0x632be59bd9b4e019ULL));
}

// Counter-based generator. The output sequence is a pure function of the key, so streams
// for different (seed, agent, step) triples can be drawn in any order on any thread.
// Satisfies UniformRandomBitGenerator for use with <random> distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() = default;
  explicit RngStream(std::uint64_t key) : key_(splitmix64(key)) {}
  RngStream(std::uint64_t seed, std::int64_t agent_id, std::int64_t step_index)
      : key_(hash_combine(hash_combine(splitmix64(seed), static_cast<std::uint64_t>(agent_id)),
                          static_cast<std::uint64_t>(step_index))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  // Independent child stream, e.g. one per sampling purpose.
  RngStream fork(std::uint64_t salt) const { return RngStream(hash_combine(key_, salt)); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  // Uniform in [0, 1) with 53 random bits; independent of <random> implementation details.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace reactsim

#endif  // REACTSIM_RNG_HPP
