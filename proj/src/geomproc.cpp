#include "relight/geomproc.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace relight::geomproc {

std::vector<std::vector<std::uint32_t>> vertex_neighbors(const TriangleMesh& mesh) {
  std::vector<std::vector<std::uint32_t>> ring(mesh.vertices.size());
  for (const auto& t : mesh.triangles) {
    for (int a = 0; a < 3; ++a) {
      ring[t[a]].push_back(t[(a + 1) % 3]);
      ring[t[a]].push_back(t[(a + 2) % 3]);
    }
  }
  for (auto& r : ring) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }
  return ring;
}

TriangleMesh smooth_normals(const TriangleMesh& mesh, int iterations, double lambda) {
  if (iterations < 0) throw Error("smooth_normals: iterations must be >= 0");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error("smooth_normals: lambda must lie in (0, 1]");
  TriangleMesh out = mesh;
  if (iterations == 0) return out;
  const auto ring = vertex_neighbors(mesh);
  std::vector<Vec3> next(out.normals.size());
  for (int it = 0; it < iterations; ++it) {
    parallel_for(static_cast<int>(out.normals.size()), [&](int i) {
      if (ring[i].empty()) {
        next[i] = out.normals[i];
        return;
      }
      Vec3 mean = Vec3::Zero();
      for (auto j : ring[i]) mean += out.normals[j];
      mean /= static_cast<double>(ring[i].size());
      const Vec3 blended = (1.0 - lambda) * out.normals[i] + lambda * mean;
      const double len = blended.norm();
      next[i] = len > 1e-12 ? Vec3(blended / len) : out.normals[i];
    });
    out.normals.swap(next);
  }
  return out;
}

PlaneFit fit_plane_least_squares(const std::vector<Vec3>& points, const std::vector<std::uint32_t>& indices) {
  PlaneFit fit;
  fit.inlier_indices = indices;
  if (indices.size() < 3) throw Error("plane fit needs at least 3 points");
  Vec3 centroid = Vec3::Zero();
  for (auto i : indices) centroid += points[i];
  centroid /= static_cast<double>(indices.size());
  Mat3 cov = Mat3::Zero();
  for (auto i : indices) {
    const Vec3 d = points[i] - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  fit.normal = eig.eigenvectors().col(0).normalized();
  fit.offset = fit.normal.dot(centroid);
  return fit;
}

TriangleMesh snap_planes(const TriangleMesh& mesh, const SnapOptions& options, std::vector<PlaneFit>* planes) {
  TriangleMesh out = mesh;
  const std::size_t n = mesh.vertices.size();
  if (n < 3) return out;
  const double tol = options.distance_tol > 0 ? options.distance_tol : 0.005 * mesh.bbox_diagonal();
  const auto support = static_cast<std::size_t>(std::ceil(options.min_support * static_cast<double>(n)));
  const double cos_tol = std::cos(options.angle_tol_deg * kPi / 180.0);

  std::mt19937_64 rng(options.seed);
  std::vector<std::uint32_t> remaining(n);
  for (std::size_t i = 0; i < n; ++i) remaining[i] = static_cast<std::uint32_t>(i);

  auto inliers_of = [&](const Vec3& normal, double offset) {
    std::vector<std::uint32_t> in;
    for (auto i : remaining)
      if (std::abs(normal.dot(mesh.vertices[i]) - offset) <= tol) in.push_back(i);
    return in;
  };

  for (int plane = 0; plane < options.max_planes && remaining.size() >= std::max<std::size_t>(3, support); ++plane) {
    std::vector<std::uint32_t> best;
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    for (int trial = 0; trial < options.trials; ++trial) {
      const Vec3& a = mesh.vertices[remaining[pick(rng)]];
      const Vec3& b = mesh.vertices[remaining[pick(rng)]];
      const Vec3& c = mesh.vertices[remaining[pick(rng)]];
      const Vec3 nrm = (b - a).cross(c - a);
      const double len = nrm.norm();
      if (len < 1e-12) continue;
      const Vec3 unit = nrm / len;
      auto in = inliers_of(unit, unit.dot(a));
      if (in.size() > best.size()) best = std::move(in);
    }
    if (best.size() < support || best.size() < 3) break;

    // Refit on the consensus set, then recollect inliers against the refined plane.
    PlaneFit fit = fit_plane_least_squares(mesh.vertices, best);
    auto refined = inliers_of(fit.normal, fit.offset);
    if (refined.size() >= support && refined.size() >= 3) {
      fit = fit_plane_least_squares(mesh.vertices, refined);
      fit.inlier_indices = std::move(refined);
    }
    if (fit.inlier_indices.size() < support) break;

    for (auto i : fit.inlier_indices) {
      const Vec3& prior = mesh.normals[i];
      const double d = prior.dot(fit.normal);
      if (std::abs(d) >= cos_tol) out.normals[i] = d >= 0 ? fit.normal : Vec3(-fit.normal);
    }
    std::vector<std::uint32_t> keep;
    std::set_difference(remaining.begin(), remaining.end(), fit.inlier_indices.begin(), fit.inlier_indices.end(),
                        std::back_inserter(keep));
    remaining.swap(keep);
    if (planes) planes->push_back(std::move(fit));
  }
  return out;
}

}  // namespace relight::geomproc
