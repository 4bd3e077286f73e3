#pragma once

#include "relight/common.hpp"
#include "relight/image.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace relight {

class Bvh;
struct Ray;

/// Pinhole camera. World-to-camera: x_cam = R * x_world + t, +z forward,
/// image x to the right and y down. Pixel (x, y) covers [x, x+1) x [y, y+1)
/// in continuous image coordinates.
struct Camera {
  int id = 0;
  int width = 0;
  int height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 center() const { return -rotation.transpose() * translation; }
  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  double depth_of(const Vec3& world) const { return rotation.row(2).dot(world) + translation.z(); }

  /// Continuous pixel coordinates; nullopt when the point is not in front.
  std::optional<Vec2> project(const Vec3& world) const;
  Vec3 unproject(const Vec2& pixel, double depth) const;
  /// Unit world direction through continuous pixel coordinates.
  Vec3 direction(const Vec2& pixel) const;
  Ray primary_ray(int x, int y) const;

  bool in_frame(const Vec2& p) const { return p.x() >= 0 && p.y() >= 0 && p.x() < width && p.y() < height; }

  /// Throws ValidationError naming the camera id.
  void validate() const;

  /// Camera at `eye` looking at `target`; `up` is a world hint.
  static Camera look_at(int id, int width, int height, double fov_x_deg, const Vec3& eye, const Vec3& target,
                        const Vec3& up = Vec3::UnitZ());
};

/// Per-channel clip bits stored in clip_mask (bit c set = channel c saturated).
struct RadianceImage {
  RgbImage pixels;
  MaskImage clip_mask;

  int width() const { return pixels.width(); }
  int height() const { return pixels.height(); }
  bool clipped(int x, int y) const { return !clip_mask.empty() && clip_mask(x, y) != 0; }
  void validate(const Camera& owner) const;
};

/// Bit c of the result is set iff channel c >= 0.99 * white_level.
MaskImage detect_clipped(const RgbImage& raw, double white_level);

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  /// Optional per-vertex pseudo-albedo; empty when absent.
  std::vector<Rgb> albedo;
  /// Optional flags paired with albedo: 0 = seen by no input view.
  std::vector<std::uint8_t> albedo_seen;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  double triangle_area(std::size_t t) const;
  Eigen::AlignedBox3d bounds() const;
  double bbox_diagonal() const { return bounds().diagonal().norm(); }

  void validate() const;
  /// Drops zero-area triangles. Returns the number removed.
  std::size_t remove_degenerate();
  /// Area-weighted vertex normals from the current triangles.
  void recompute_normals();
};

struct AreaLight {
  int id = 0;
  Vec3 origin = Vec3::Zero();
  Vec3 edge_u = Vec3::UnitX();
  Vec3 edge_v = Vec3::UnitY();
  Rgb emittance = Rgb::Ones();
  bool two_sided = false;

  Vec3 normal() const { return edge_u.cross(edge_v).normalized(); }
  double area() const { return edge_u.cross(edge_v).norm(); }
  void validate() const;
};

struct LightingEdit {
  double alpha_dim = 0.0;
  std::map<int, double> light_weights;

  bool is_noop() const;
  void validate() const;
};

struct MultiViewScene {
  std::vector<Camera> cameras;
  std::vector<RadianceImage> images;
  TriangleMesh mesh;
  std::vector<FloatImage> depth_maps;
  double bbox_diagonal = 0.0;
  std::shared_ptr<const Bvh> bvh;

  std::size_t view_count() const { return cameras.size(); }
  /// View indices sorted by camera id; every reduction over views runs in this order.
  std::vector<int> id_order() const;
  /// Index of the camera with the given id; throws if absent.
  int view_index(int camera_id) const;
  /// Self-intersection offset for secondary rays.
  double ray_epsilon() const { return 1e-4 * bbox_diagonal; }
  bool has_clip_masks() const;
};

/// Builds the BVH, renders depth maps and fills bbox_diagonal after cameras,
/// images and mesh are set. Validates every invariant first.
void finalize_scene(MultiViewScene& scene);

// ---------------------------------------------------------------------------
// Scene bundles: cameras.json, mesh.ply, images/NNN.pfm,
// optional clipmask/NNN.pgm (+ per-channel clipmask/NNN.ppm), lights.json.

MultiViewScene load_scene_bundle(const std::filesystem::path& dir);
void save_scene_bundle(const std::filesystem::path& dir, const MultiViewScene& scene,
                       const std::vector<AreaLight>& lights = {});

std::vector<Camera> read_cameras_json(const std::filesystem::path& path);
void write_cameras_json(const std::filesystem::path& path, const std::vector<Camera>& cameras);
Camera camera_from_json_text(const std::string& text);

std::vector<AreaLight> read_lights_json(const std::filesystem::path& path);
void write_lights_json(const std::filesystem::path& path, const std::vector<AreaLight>& lights);

/// "NNN" zero-padded view file stem.
std::string view_stem(int index);

}  // namespace relight
