#pragma once

#include "relight/common.hpp"
#include "relight/image.hpp"
#include "relight/scene.hpp"

#include <optional>
#include <vector>

namespace relight {

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double t_min = 0.0;
  double t_max = kInf;
};

struct Hit {
  double t = kInf;
  std::uint32_t triangle = 0;
  double u = 0, v = 0;
  Vec3 position = Vec3::Zero();
  /// Barycentric interpolation of vertex normals, renormalized.
  Vec3 normal = Vec3::UnitZ();
  Vec3 geometric_normal = Vec3::UnitZ();
};

/// Precomputed triangle for Moller-Trumbore tests.
struct TriangleRecord {
  Vec3 p0, e1, e2;
};

/// Ray/triangle test shared by the BVH and brute-force paths. On success
/// writes t and barycentrics (u weights vertex 1, v weights vertex 2).
bool intersect_triangle(const TriangleRecord& tri, const Ray& ray, double& t, double& u, double& v);

/// Bounding volume hierarchy over a triangle mesh (binned SAH). Immutable
/// after construction; concurrent queries are safe.
class Bvh {
 public:
  explicit Bvh(const TriangleMesh& mesh);

  /// Nearest hit with t in (t_min, t_max). Exact t ties go to the lower triangle index.
  std::optional<Hit> intersect(const Ray& ray) const;
  bool occluded(const Ray& ray) const;

  const TriangleMesh& mesh() const { return mesh_; }
  const std::vector<TriangleRecord>& triangles() const { return tris_; }
  /// Fills position and normals of a hit from (triangle, u, v, t).
  Hit complete_hit(const Ray& ray, std::uint32_t tri, double t, double u, double v) const;
  int node_count() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left_or_first = 0;  // child index for inner nodes, first primitive for leaves
    int count = 0;          // 0 for inner nodes
  };
  int build(int first, int count, std::vector<Eigen::AlignedBox3d>& boxes, std::vector<Vec3>& centroids, int depth);

  TriangleMesh mesh_;
  std::vector<TriangleRecord> tris_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Per-pixel primary visibility for one camera.
struct GBuffer {
  int width = 0, height = 0;
  std::vector<std::optional<Hit>> hits;
  /// Camera-space z of the hit; +inf where the primary ray misses.
  FloatImage depth;

  const std::optional<Hit>& at(int x, int y) const { return hits[static_cast<std::size_t>(y) * width + x]; }
};

GBuffer render_gbuffer(const Bvh& bvh, const Camera& camera);
FloatImage render_depth(const Bvh& bvh, const Camera& camera);

/// Default relative depth tolerance for visibility tests.
inline constexpr double kVisibilityTolerance = 0.01;

/// True iff `point` projects inside view `view` and its camera depth agrees with
/// the view's depth map within tol * z (z > 0). The depth map is read at the
/// containing pixel and, when all four neighbours are finite, also by bilinear
/// interpolation of inverse depth (exact on planes); either match counts.
bool visible(const MultiViewScene& scene, const Vec3& point, int view, double tol = kVisibilityTolerance);

/// Continuous projection into `view` when visible, otherwise nullopt.
std::optional<Vec2> visible_projection(const MultiViewScene& scene, const Vec3& point, int view,
                                       double tol = kVisibilityTolerance);

/// Normal facing the side the ray came from.
inline Vec3 facing_normal(const Vec3& n, const Vec3& incoming_dir) { return n.dot(incoming_dir) > 0 ? Vec3(-n) : n; }

/// Ray leaving a surface point with the scene-scaled self-intersection offset.
inline Ray spawn_ray(const Vec3& from, const Vec3& dir, double epsilon, double t_max = kInf) {
  return Ray{from + epsilon * dir, dir, 0.0, t_max};
}

}  // namespace relight
