#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace maad {

// CLI exit-code classes: 2 usage/config, 3 I/O, 4 numerical/runtime.
class Error : public std::runtime_error {
 public:
  Error(const std::string& msg, int exit_code)
      : std::runtime_error(msg), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

#define MAAD_ERROR_TYPE(NAME, CODE)                            \
  class NAME : public ::maad::Error {                          \
   public:                                                     \
    explicit NAME(const std::string& msg)                      \
        : ::maad::Error(std::string(#NAME ": ") + msg, CODE) {} \
  };

// usage / config / malformed data
MAAD_ERROR_TYPE(ConfigError, 2)
MAAD_ERROR_TYPE(ParseError, 2)
MAAD_ERROR_TYPE(SchemaError, 2)
MAAD_ERROR_TYPE(GridError, 2)
MAAD_ERROR_TYPE(FrameOutOfRange, 2)
MAAD_ERROR_TYPE(MissingTarget, 2)
MAAD_ERROR_TYPE(SceneTooShort, 2)
MAAD_ERROR_TYPE(MissingLabel, 2)
MAAD_ERROR_TYPE(DegenerateLabels, 2)
MAAD_ERROR_TYPE(SingleClass, 2)
MAAD_ERROR_TYPE(NoPositives, 2)
MAAD_ERROR_TYPE(EmptyTrainingSet, 2)
MAAD_ERROR_TYPE(InfeasibleScript, 2)
// I/O
MAAD_ERROR_TYPE(IoFailure, 3)
// numerical / runtime
MAAD_ERROR_TYPE(ShapeMismatch, 4)
MAAD_ERROR_TYPE(ArchitectureMismatch, 4)
MAAD_ERROR_TYPE(VersionMismatch, 4)
MAAD_ERROR_TYPE(SolverDivergence, 4)
MAAD_ERROR_TYPE(CenterUninitialized, 4)
MAAD_ERROR_TYPE(TrainingFailure, 4)

#undef MAAD_ERROR_TYPE

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double norm_sq() const { return x * x + y * y; }
  Vec2 rotated(double angle) const {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * x - s * y, s * x + c * y};
  }
  // left-hand normal of a unit direction
  Vec2 perp() const { return {-y, x}; }
  Vec2 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{};
  }
};

inline double wrap_angle(double a) {
  // wraps to (-pi, pi]
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

// Deterministic RNG. All randomness in the project flows through this class so
// that identical seeds reproduce identical artifacts on one machine; std::
// distributions are avoided because their output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed), seed_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) { return int(next_u64() % uint64_t(n)); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  // Independent child stream; derived from the construction seed, not from the
  // current state, so derivation order does not matter.
  Rng derive(uint64_t tag) const { return Rng(mix(seed_, tag)); }

  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  uint64_t seed_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level();
void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

// Runs fn(i) for i in [0, n). jobs <= 1 runs inline. Exceptions from workers
// are rethrown on the calling thread (first one wins).
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace maad
