#include "relight/raytrace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace relight {

// Barycentric slack so rays through a shared edge do not slip between both triangles.
constexpr double kEdgeSlack = 1e-9;

bool intersect_triangle(const TriangleRecord& tri, const Ray& ray, double& t, double& u, double& v) {
  const Vec3 pvec = ray.direction.cross(tri.e2);
  const double det = tri.e1.dot(pvec);
  if (std::abs(det) < 1e-300) return false;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = ray.origin - tri.p0;
  u = tvec.dot(pvec) * inv_det;
  if (u < -kEdgeSlack || u > 1.0 + kEdgeSlack) return false;
  const Vec3 qvec = tvec.cross(tri.e1);
  v = ray.direction.dot(qvec) * inv_det;
  if (v < -kEdgeSlack || u + v > 1.0 + kEdgeSlack) return false;
  t = tri.e2.dot(qvec) * inv_det;
  return t > ray.t_min && t < ray.t_max;
}

namespace {

constexpr int kLeafSize = 4;
constexpr int kBins = 16;

bool hit_box(const Eigen::AlignedBox3d& box, const Vec3& origin, const Vec3& inv_dir, double t_min, double t_max) {
  for (int a = 0; a < 3; ++a) {
    double t0 = (box.min()[a] - origin[a]) * inv_dir[a];
    double t1 = (box.max()[a] - origin[a]) * inv_dir[a];
    if (t0 > t1) std::swap(t0, t1);
    // NaN (0 * inf) leaves the interval unchanged.
    if (t0 > t_min) t_min = t0;
    if (t1 < t_max) t_max = t1;
    if (t_min > t_max * (1 + 1e-12)) return false;
  }
  return true;
}

}  // namespace

Bvh::Bvh(const TriangleMesh& mesh) : mesh_(mesh) {
  if (mesh_.triangles.empty()) throw Error("cannot build BVH over an empty mesh");
  const std::size_t n = mesh_.triangles.size();
  tris_.resize(n);
  std::vector<Eigen::AlignedBox3d> boxes(n);
  std::vector<Vec3> centroids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = mesh_.triangles[i];
    const Vec3& a = mesh_.vertices[t[0]];
    const Vec3& b = mesh_.vertices[t[1]];
    const Vec3& c = mesh_.vertices[t[2]];
    tris_[i] = TriangleRecord{a, b - a, c - a};
    boxes[i] = Eigen::AlignedBox3d(a);
    boxes[i].extend(b);
    boxes[i].extend(c);
    centroids[i] = (a + b + c) / 3.0;
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * n);
  build(0, static_cast<int>(n), boxes, centroids, 0);
}

int Bvh::build(int first, int count, std::vector<Eigen::AlignedBox3d>& boxes, std::vector<Vec3>& centroids,
               int depth) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Eigen::AlignedBox3d box, cbox;
  for (int i = first; i < first + count; ++i) {
    box.extend(boxes[order_[i]]);
    cbox.extend(centroids[order_[i]]);
  }
  nodes_[index].box = box;
  if (count <= kLeafSize || depth > 60) {
    nodes_[index].left_or_first = first;
    nodes_[index].count = count;
    return index;
  }

  int best_axis = -1;
  int best_split = 0;
  double best_cost = kInf;
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = cbox.min()[axis];
    const double extent = cbox.max()[axis] - lo;
    if (extent <= 0) continue;
    std::array<Eigen::AlignedBox3d, kBins> bin_box;
    std::array<int, kBins> bin_count{};
    for (int i = first; i < first + count; ++i) {
      const std::uint32_t p = order_[i];
      int b = static_cast<int>((centroids[p][axis] - lo) / extent * kBins);
      b = std::clamp(b, 0, kBins - 1);
      ++bin_count[b];
      bin_box[b].extend(boxes[p]);
    }
    std::array<double, kBins> right_cost{};
    Eigen::AlignedBox3d acc;
    int acc_count = 0;
    for (int b = kBins - 1; b > 0; --b) {
      acc.extend(bin_box[b]);
      acc_count += bin_count[b];
      if (acc_count) {
        const Vec3 s = acc.sizes();
        right_cost[b] = acc_count * (s.x() * s.y() + s.y() * s.z() + s.z() * s.x());
      }
    }
    acc.setEmpty();
    acc_count = 0;
    for (int b = 0; b < kBins - 1; ++b) {
      acc.extend(bin_box[b]);
      acc_count += bin_count[b];
      if (acc_count == 0 || acc_count == count) continue;
      const Vec3 s = acc.sizes();
      const double cost = acc_count * (s.x() * s.y() + s.y() * s.z() + s.z() * s.x()) + right_cost[b + 1];
      if (cost < best_cost) {
        best_cost = cost;
        best_axis = axis;
        best_split = b + 1;
      }
    }
  }

  int mid = first + count / 2;
  if (best_axis >= 0) {
    const double lo = cbox.min()[best_axis];
    const double extent = cbox.max()[best_axis] - lo;
    auto it = std::partition(order_.begin() + first, order_.begin() + first + count, [&](std::uint32_t p) {
      int b = static_cast<int>((centroids[p][best_axis] - lo) / extent * kBins);
      return std::clamp(b, 0, kBins - 1) < best_split;
    });
    mid = static_cast<int>(it - order_.begin());
  }
  if (mid == first || mid == first + count) {
    // Degenerate centroids: fall back to a median split along the widest axis.
    int axis = 0;
    cbox.sizes().maxCoeff(&axis);
    mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](std::uint32_t a, std::uint32_t b) { return centroids[a][axis] < centroids[b][axis]; });
  }
  const int left = build(first, mid - first, boxes, centroids, depth + 1);
  const int right = build(mid, first + count - mid, boxes, centroids, depth + 1);
  (void)left;
  nodes_[index].left_or_first = right;  // left child is index + 1
  nodes_[index].count = 0;
  return index;
}

Hit Bvh::complete_hit(const Ray& ray, std::uint32_t tri, double t, double u, double v) const {
  Hit h;
  h.t = t;
  h.triangle = tri;
  h.u = u;
  h.v = v;
  h.position = ray.origin + t * ray.direction;
  const TriangleRecord& r = tris_[tri];
  h.geometric_normal = r.e1.cross(r.e2).normalized();
  const auto& ids = mesh_.triangles[tri];
  const Vec3 n = (1.0 - u - v) * mesh_.normals[ids[0]] + u * mesh_.normals[ids[1]] + v * mesh_.normals[ids[2]];
  const double len = n.norm();
  h.normal = len > 1e-12 ? Vec3(n / len) : h.geometric_normal;
  return h;
}

std::optional<Hit> Bvh::intersect(const Ray& ray) const {
  const Vec3 inv_dir = ray.direction.cwiseInverse();
  double best_t = ray.t_max;
  std::uint32_t best_tri = 0;
  double best_u = 0, best_v = 0;
  bool found = false;
  std::array<int, 128> stack;
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[stack[--sp]];
    if (!hit_box(node.box, ray.origin, inv_dir, ray.t_min, best_t)) continue;
    if (node.count > 0) {
      for (int i = node.left_or_first; i < node.left_or_first + node.count; ++i) {
        const std::uint32_t p = order_[i];
        double t, u, v;
        if (intersect_triangle(tris_[p], ray, t, u, v)) {
          if (!found || t < best_t || (t == best_t && p < best_tri)) {
            best_t = t;
            best_tri = p;
            best_u = u;
            best_v = v;
            found = true;
          }
        }
      }
    } else {
      const int self = static_cast<int>(&node - nodes_.data());
      stack[sp++] = node.left_or_first;
      stack[sp++] = self + 1;
    }
  }
  if (!found) return std::nullopt;
  return complete_hit(ray, best_tri, best_t, best_u, best_v);
}

bool Bvh::occluded(const Ray& ray) const {
  const Vec3 inv_dir = ray.direction.cwiseInverse();
  std::array<int, 128> stack;
  int sp = 0;
  stack[sp++] = 0;
  while (sp > 0) {
    const Node& node = nodes_[stack[--sp]];
    if (!hit_box(node.box, ray.origin, inv_dir, ray.t_min, ray.t_max)) continue;
    if (node.count > 0) {
      for (int i = node.left_or_first; i < node.left_or_first + node.count; ++i) {
        double t, u, v;
        if (intersect_triangle(tris_[order_[i]], ray, t, u, v)) return true;
      }
    } else {
      const int self = static_cast<int>(&node - nodes_.data());
      stack[sp++] = node.left_or_first;
      stack[sp++] = self + 1;
    }
  }
  return false;
}

GBuffer render_gbuffer(const Bvh& bvh, const Camera& camera) {
  GBuffer g;
  g.width = camera.width;
  g.height = camera.height;
  g.hits.resize(static_cast<std::size_t>(camera.width) * camera.height);
  g.depth = FloatImage(camera.width, camera.height, std::numeric_limits<float>::infinity());
  const Vec3 forward = camera.rotation.row(2).transpose();
  parallel_for(camera.height, [&](int y) {
    for (int x = 0; x < camera.width; ++x) {
      const Ray ray = camera.primary_ray(x, y);
      auto hit = bvh.intersect(ray);
      if (!hit) continue;
      g.depth(x, y) = static_cast<float>(hit->t * ray.direction.dot(forward));
      g.hits[g.depth.index(x, y)] = std::move(hit);
    }
  });
  return g;
}

FloatImage render_depth(const Bvh& bvh, const Camera& camera) { return render_gbuffer(bvh, camera).depth; }

std::optional<Vec2> visible_projection(const MultiViewScene& scene, const Vec3& point, int view, double tol) {
  const Camera& cam = scene.cameras[view];
  const double z = cam.depth_of(point);
  if (!(z > 0.0)) return std::nullopt;
  const Vec3 pc = cam.to_camera(point);
  const Vec2 p(cam.fx * pc.x() / z + cam.cx, cam.fy * pc.y() / z + cam.cy);
  int px, py;
  if (!nearest_pixel(cam.width, cam.height, p, px, py)) return std::nullopt;
  const FloatImage& depth = scene.depth_maps[view];
  const double bound = tol * z;
  const double nearest = depth(px, py);
  if (std::abs(nearest - z) <= bound) return p;
  const BilinearTaps t = bilinear_taps(cam.width, cam.height, p);
  const float d00 = depth(t.x0, t.y0), d10 = depth(t.x1, t.y0), d01 = depth(t.x0, t.y1), d11 = depth(t.x1, t.y1);
  if (!(std::isfinite(d00) && std::isfinite(d10) && std::isfinite(d01) && std::isfinite(d11))) return std::nullopt;
  const double inv_top = (1.0 - t.wx) / d00 + t.wx / d10;
  const double inv_bottom = (1.0 - t.wx) / d01 + t.wx / d11;
  const double interpolated = 1.0 / ((1.0 - t.wy) * inv_top + t.wy * inv_bottom);
  if (std::abs(interpolated - z) <= bound) return p;
  return std::nullopt;
}

bool visible(const MultiViewScene& scene, const Vec3& point, int view, double tol) {
  return visible_projection(scene, point, view, tol).has_value();
}

}  // namespace relight
