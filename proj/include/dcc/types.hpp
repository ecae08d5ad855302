#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dcc {

using Scalar = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Error with a short machine-readable tag ("io-error", "parse-error", ...).
/// The CLI prints the tag as a one-line prefix on the diagnostic stream.
class Error : public std::runtime_error {
 public:
  Error(std::string tag, const std::string& message)
      : std::runtime_error(message), tag_(std::move(tag)) {}

  const std::string& tag() const { return tag_; }

 private:
  std::string tag_;
};

namespace rng_stream {
// Named sub-streams so every consumer of randomness draws from an
// independently seeded generator. Epoch-scoped streams take the epoch as
// `index`, which makes checkpoint resume reproduce the uninterrupted run.
inline constexpr std::uint64_t kWeightInit = 1;
inline constexpr std::uint64_t kSdaeShuffle = 2;
inline constexpr std::uint64_t kSdaeDropout = 3;
inline constexpr std::uint64_t kEdgeShuffle = 4;
}  // namespace rng_stream

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace dcc
