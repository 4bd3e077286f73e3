#pragma once

#include "relight/scene.hpp"

#include <cstdint>
#include <vector>

namespace relight::geomproc {

struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;  // plane: normal . x = offset
  std::vector<std::uint32_t> inlier_indices;
};

/// n <- normalize((1 - lambda) n + lambda * mean(1-ring normals)), `iterations`
/// times (Jacobi updates). Vertices without neighbours keep their normal.
TriangleMesh smooth_normals(const TriangleMesh& mesh, int iterations = 3, double lambda = 0.5);

struct SnapOptions {
  double distance_tol = 0.0;  // meters; <= 0 selects 0.5% of the bbox diagonal
  double min_support = 0.05;  // fraction of all vertices
  double angle_tol_deg = 15.0;
  int max_planes = 16;
  int trials = 1000;
  std::uint64_t seed = 0x5eed;
};

/// RANSAC plane detection over vertex positions; inliers whose normal lies
/// within angle_tol of an accepted plane get the plane normal (sign kept).
TriangleMesh snap_planes(const TriangleMesh& mesh, const SnapOptions& options = {},
                         std::vector<PlaneFit>* planes = nullptr);

/// Total least-squares plane through the given vertices.
PlaneFit fit_plane_least_squares(const std::vector<Vec3>& points, const std::vector<std::uint32_t>& indices);

/// Vertex adjacency (1-ring) derived from triangles, sorted and unique.
std::vector<std::vector<std::uint32_t>> vertex_neighbors(const TriangleMesh& mesh);

}  // namespace relight::geomproc
