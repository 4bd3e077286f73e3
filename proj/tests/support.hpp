#pragma once

// Shared fixtures and brute-force oracles for the test binaries.

#include "relight/oracle.hpp"
#include "relight/raytrace.hpp"
#include "relight/scene.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace relight::fixtures {

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("relight_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Axis-aligned quad as two triangles with normal `n` (normals per vertex).
inline void add_quad(TriangleMesh& m, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const auto base = static_cast<std::uint32_t>(m.vertices.size());
  const Vec3 n = (b - a).cross(d - a).normalized();
  for (const Vec3& p : {a, b, c, d}) {
    m.vertices.push_back(p);
    m.normals.push_back(n);
  }
  m.triangles.push_back({base, base + 1, base + 2});
  m.triangles.push_back({base, base + 2, base + 3});
}

/// Regular grid in the z = 0 plane, normals +z.
inline TriangleMesh grid_mesh(int n, double spacing = 0.1) {
  TriangleMesh m;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      m.vertices.emplace_back(i * spacing, j * spacing, 0.0);
      m.normals.emplace_back(0, 0, 1);
    }
  auto id = [n](int i, int j) { return static_cast<std::uint32_t>(j * (n + 1) + i); };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return m;
}

/// O(n) nearest hit: smallest t, ties to the lowest triangle index.
inline std::optional<std::pair<std::uint32_t, double>> brute_force_hit(const TriangleMesh& mesh, const Ray& ray) {
  std::optional<std::pair<std::uint32_t, double>> best;
  for (std::uint32_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    const Vec3& p0 = mesh.vertices[t[0]];
    TriangleRecord rec{p0, mesh.vertices[t[1]] - p0, mesh.vertices[t[2]] - p0};
    double th, u, v;
    if (!intersect_triangle(rec, ray, th, u, v)) continue;
    if (!(th > ray.t_min && th < ray.t_max)) continue;
    if (!best || th < best->second) best = std::make_pair(i, th);
  }
  return best;
}

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

/// Constant-color images for every camera of a scene (before finalize_scene).
inline void fill_images(MultiViewScene& s, const Rgb& value) {
  s.images.clear();
  for (const Camera& c : s.cameras) s.images.push_back({RgbImage(c.width, c.height, value), {}});
}

/// Scene from an explicit mesh and cameras with images rendered from a radiance field.
inline MultiViewScene field_scene(TriangleMesh mesh, std::vector<Camera> cameras, const oracle::RadianceField& field) {
  MultiViewScene s;
  s.mesh = std::move(mesh);
  s.cameras = std::move(cameras);
  const Bvh bvh(s.mesh);
  for (const Camera& c : s.cameras) s.images.push_back({oracle::render_radiance_field(bvh, c, field), {}});
  finalize_scene(s);
  return s;
}

}  // namespace relight::fixtures
