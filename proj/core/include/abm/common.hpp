#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace abm {

// Error taxonomy shared by every module. The CLI maps ConfigError to exit
// code 2 and everything else raised inside a stage to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

using Rng = std::mt19937_64;

// Portable draws on top of the raw engine output; the std distributions are
// implementation-defined and would break byte-stable artifacts across
// standard libraries.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Child seed for item `index` of a named stream. Every seed in the
/// pipeline is produced by this function from the master seed.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view stream,
                                 std::uint64_t index = 0) {
  return mix64(mix64(parent ^ fnv1a(stream)) + index);
}

std::string hex64(std::uint64_t v);

// printf("%.17g"); used for every float written to a text artifact.
std::string format_double(double v);

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace abm
