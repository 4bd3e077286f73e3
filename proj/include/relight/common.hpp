#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relight {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Rgb = Eigen::Array3f;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class for every error raised by the library. The message always
/// names the offending entity when one exists.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated file payloads.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant of an input (camera, mesh, image) does not hold.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Threading

/// Worker count used by parallel_for. Defaults to RELIGHT_THREADS when set,
/// otherwise std::thread::hardware_concurrency().
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, count). Work is handed out in contiguous chunks;
/// callers must write disjoint outputs so results do not depend on scheduling.
void parallel_for(int count, const std::function<void(int)>& body);

// ---------------------------------------------------------------------------
// Hashing and random numbers

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename... Ts>
std::uint64_t hash_combine(std::uint64_t seed, Ts... values) {
  std::uint64_t h = mix64(seed);
  ((h = mix64(h ^ static_cast<std::uint64_t>(values))), ...);
  return h;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

/// Counter-based stream: each (seed, key...) tuple gives an independent,
/// reproducible sequence regardless of evaluation order.
class SampleStream {
 public:
  explicit SampleStream(std::uint64_t key) : state_(key) {}
  template <typename... Ts>
  static SampleStream keyed(std::uint64_t seed, Ts... parts) {
    return SampleStream(hash_combine(seed, parts...));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }
  /// Uniform in [0, 1).
  double next() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  Vec2 next2() {
    const double a = next();
    return {a, next()};
  }

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Small geometric helpers

/// Orthonormal frame around a unit vector (Duff et al. branchless basis).
struct Frame {
  Vec3 s, t, n;
  explicit Frame(const Vec3& normal);
  Vec3 to_world(const Vec3& local) const { return s * local.x() + t * local.y() + n * local.z(); }
  Vec3 to_local(const Vec3& w) const { return {w.dot(s), w.dot(t), w.dot(n)}; }
};

/// Cosine-weighted hemisphere sample around +z (pdf = cos / pi).
Vec3 sample_cosine_hemisphere(const Vec2& u);

/// Uniform direction inside a cone around +z with half-angle acos(cos_max).
Vec3 sample_uniform_cone(const Vec2& u, double cos_max);

inline Vec3 reflect(const Vec3& incident, const Vec3& n) { return incident - 2.0 * incident.dot(n) * n; }

inline float luminance(const Rgb& c) { return 0.2126f * c[0] + 0.7152f * c[1] + 0.0722f * c[2]; }

}  // namespace relight
