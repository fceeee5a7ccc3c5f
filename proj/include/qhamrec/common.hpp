// Copyright 2026 The qhamrec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file
 * Error types, RNG alias and small numeric helpers shared by every module.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace qhamrec {

constexpr double kPi = std::numbers::pi;

/// Deterministic pseudo-random engine used for every seeded draw.
using Rng = std::mt19937_64;

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Precondition on a call argument violated (shape, range, index).
class ArgumentError : public Error {
  public:
    using Error::Error;
};

class ParseError : public Error {
  public:
    ParseError(std::size_t line, const std::string &what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class ValidationError : public Error {
  public:
    using Error::Error;
};

class EmptyDatasetError : public Error {
  public:
    using Error::Error;
};

class NumericError : public Error {
  public:
    using Error::Error;
};

class TrainingError : public Error {
  public:
    using Error::Error;
};

class ConfigurationError : public Error {
  public:
    using Error::Error;
};

class PatternCollisionError : public Error {
  public:
    using Error::Error;
};

class BindingError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// Round half to even, independent of the current floating-point rounding mode.
inline long long round_half_even(double x) {
    const double fl = std::floor(x);
    const double diff = x - fl;
    auto base = static_cast<long long>(fl);
    if (diff > 0.5) {
        return base + 1;
    }
    if (diff < 0.5) {
        return base;
    }
    return (base % 2 == 0) ? base : base + 1;
}

inline bool all_finite(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

/// Derives an independent seed for a named sub-stream.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31U);
}

} // namespace qhamrec
