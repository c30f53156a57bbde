#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace opsplit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Mismatched or invalid dimensions.
struct DimensionError : Error {
  using Error::Error;
};

// Operation requires a single-valued operator (e.g. apply on a normal cone).
struct NotSingleValuedError : Error {
  using Error::Error;
};

// Catalog variant not supported by the requested operation.
struct UnsupportedError : Error {
  using Error::Error;
};

// Numerical failure: non-finite values, singular solves, non-converged
// root finds. The message carries the residual or condition estimate.
struct NumericError : Error {
  using Error::Error;
};

// Invalid run configuration (CLI / JSON layer).
struct ConfigError : Error {
  using Error::Error;
};

inline void check_dim(Index got, Index want, const char* where) {
  if (got != want) {
    throw DimensionError(std::string(where) + ": dimension " + std::to_string(got) +
                         ", expected " + std::to_string(want));
  }
}

inline void check_finite(const Vector& v, const char* where) {
  if (!v.allFinite()) throw NumericError(std::string(where) + ": non-finite vector entry");
}

// Central tolerances; every check accepts an override but defaults here.
struct ToleranceConfig {
  double projection = 1e-12;   // relative residual for curve projections
  int projection_max_iter = 200;
  double invariant = 1e-9;     // firm-nonexpansiveness / averagedness slack
  double solve_residual = 1e-10;  // dense linear solve acceptance (relative)
  double rank_cutoff = 1e-10;  // singular values below cutoff*sigma_max are zero
};

inline const ToleranceConfig& default_tolerances() {
  static const ToleranceConfig cfg{};
  return cfg;
}

// Deterministic Gaussian sampler. mt19937_64 has a standard-pinned stream, and
// the Box-Muller transform avoids std::normal_distribution, whose algorithm is
// implementation-defined. Same seed => same samples on every platform.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed)
      : engine_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

  Vector vector(Index dim, double scale) {
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) v[i] = scale * normal();
    return v;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Fixed 17-significant-digit decimal rendering; round-trips binary64 exactly
// and keeps CSV output bit-stable across runs.
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

}  // namespace opsplit
