// Copyright 2026 The GPN Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "doctest.h"
#include "gpn/common.hpp"
#include "gpn/geometry.hpp"

namespace gpn::test {

// Runs `fn` and checks that it throws gpn::Error with `code`.
#define CHECK_GPN_ERROR(expr, expected_code)                                   \
  do {                                                                         \
    bool gpn_thrown_ = false;                                                  \
    try {                                                                      \
      (void)(expr);                                                            \
    } catch (const ::gpn::Error& e) {                                          \
      gpn_thrown_ = true;                                                      \
      CHECK_MESSAGE(e.code() == (expected_code), "got code ", ::gpn::to_string(e.code())); \
    }                                                                          \
    CHECK_MESSAGE(gpn_thrown_, "expected gpn::Error from " #expr);             \
  } while (0)

inline Mat3X random_points(Index n, std::uint64_t seed, Real lo = -1.0, Real hi = 1.0) {
  Rng rng(seed);
  Mat3X p(3, n);
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) p(k, i) = rng.uniform(lo, hi);
  return p;
}

inline ColoredPointCloud random_cloud(Index n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 17));
  Mat3X c(3, n);
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) c(k, i) = rng.uniform();
  return {random_points(n, seed), c};
}

// Central differences of a scalar function of a vector.
inline VecX numeric_gradient(const std::function<Real(const VecX&)>& f, VecX x, Real h = 1e-5) {
  VecX g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const Real x0 = x[i];
    x[i] = x0 + h;
    const Real fp = f(x);
    x[i] = x0 - h;
    const Real fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, floor).
inline Real relative_error(const VecX& a, const VecX& b, Real floor = 1e-8) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("gpn_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace gpn::test
