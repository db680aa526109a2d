#pragma once
// Shared basics: deterministic RNG, error types, small numeric helpers.
//
// All randomness in the library flows through Rng (xoshiro256++ seeded via
// splitmix64, gaussians via Box-Muller). std:: distributions are
// implementation-defined and would break cross-run reproducibility, so they
// are not used anywhere.

#include <Eigen/Dense>
#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace coins {

using Vec = Eigen::VectorXf;
using Mat = Eigen::MatrixXf;
using VecD = Eigen::VectorXd;
using MatD = Eigen::MatrixXd;

struct CoinsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : CoinsError {
  using CoinsError::CoinsError;
};
struct CheckpointError : CoinsError {
  using CoinsError::CoinsError;
};
struct NumericalError : CoinsError {
  using CoinsError::CoinsError;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// FNV-1a, used to derive named sub-streams from a master seed.
inline std::uint64_t hash_str(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
    have_spare_ = false;
  }

  // Derive an independent, reproducible stream for a named purpose.
  static Rng stream(std::uint64_t master, const std::string& tag) {
    return Rng(master ^ hash_str(tag));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw NumericalError("uniform_int: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Uniform integer in [lo, hi] inclusive.
  long long uniform_int(long long lo, long long hi) {
    return lo + static_cast<long long>(uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Standard normal via Box-Muller (cached spare for determinism and speed).
  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double gauss(double mu, double sd) { return mu + sd * gauss(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(static_cast<std::uint64_t>(i))]);
    }
  }

  // Raw state access for checkpointing.
  const std::uint64_t* state() const { return s_; }
  void set_state(const std::uint64_t st[4]) {
    for (int i = 0; i < 4; ++i) s_[i] = st[i];
    have_spare_ = false;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4] = {1, 2, 3, 4};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

template <typename T>
inline T clamp(T v, T lo, T hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace coins
