// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace gpn {

using Real = double;
using Index = Eigen::Index;

using Vec2 = Eigen::Matrix<Real, 2, 1>;
using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Vec4 = Eigen::Matrix<Real, 4, 1>;
using Mat3 = Eigen::Matrix<Real, 3, 3>;
using Mat4 = Eigen::Matrix<Real, 4, 4>;
using VecX = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using MatX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using Mat3X = Eigen::Matrix<Real, 3, Eigen::Dynamic>;
using Mat4X = Eigen::Matrix<Real, 4, Eigen::Dynamic>;

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateExtent,
  kEmptyPart,
  kParse,
  kIo,
  kCountMismatch,
  kConfig,
  kShapeMismatch,
  kEmptySet,
  kEmptyMesh,
  kNonFinite,
  kIncompatibleCheckpoint,
  kNumerical,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code so the
/// CLI can map it to a distinct exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return mix_seed(mix_seed(mix_seed(seed) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  Real uniform() { return std::uniform_real_distribution<Real>(0.0, 1.0)(engine_); }
  Real uniform(Real lo, Real hi) { return std::uniform_real_distribution<Real>(lo, hi)(engine_); }
  Real normal() { return std::normal_distribution<Real>(0.0, 1.0)(engine_); }
  Index index(Index n) {
    return static_cast<Index>(
        std::uniform_int_distribution<std::uint64_t>(0, static_cast<std::uint64_t>(n - 1))(engine_));
  }
  Vec3 unit_vector() {
    Vec3 v;
    do {
      v = Vec3(normal(), normal(), normal());
    } while (v.squaredNorm() < 1e-12);
    return v.normalized();
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline bool all_finite(std::span<const Real> values) {
  for (Real v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline std::span<const Real> as_span(const VecX& v) { return {v.data(), static_cast<size_t>(v.size())}; }
inline std::span<Real> as_span(VecX& v) { return {v.data(), static_cast<size_t>(v.size())}; }

}  // namespace gpn
