#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace safeadapt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// 64-bit FNV-1a over the bytes of a string; used to tag seed streams by role.
std::uint64_t fnv1a64(std::string_view s);

// One splitmix64 output step (advances state).
std::uint64_t splitmix64(std::uint64_t& state);

// Seed-splitting scheme: every random stream in a run is derived from the
// master seed as derive_seed(master, role_tag, counter). Role tags are short
// strings ("offline_ens", "adapt_ego_batch", ...), counters are iteration or
// episode indices. Two splitmix64 rounds mix the tag hash and counter so
// streams with different tags or counters are independent.
std::uint64_t derive_seed(std::uint64_t master, std::string_view role,
                          std::uint64_t counter);

// Deterministic random stream. Draws go through fixed integer-based
// conversions (no std::*_distribution), so sequences are identical across
// standard library implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [-s, s].
  double uniform_symmetric(double s) { return (2.0 * u01() - 1.0) * s; }

  // Unbiased uniform integer in [0, n) via rejection.
  int uniform_int(int n);

  // Index sampled from a probability vector by CDF inversion on one u01 draw.
  int sample_categorical(const Vec& probs);

 private:
  std::mt19937_64 engine_;
};

}  // namespace safeadapt
