#pragma once

#include "relight/raytrace.hpp"
#include "relight/scene.hpp"

#include <array>
#include <functional>
#include <optional>
#include <vector>

namespace relight::oracle {

// Desk-scale ground truth. Rooms are axis-aligned boxes [0, X] x [0, Y] x [0, Z]
// with z up.

struct Material {
  Rgb rho = Rgb::Constant(0.5f);
  float k_s = 0.0f;          // probability of the specular lobe
  bool mirror = true;        // perfect mirror, otherwise cosine-power lobe
  double exponent = 200.0;   // rough lobe sharpness
  Rgb emission = Rgb::Zero();

  void validate() const;
};

struct BoxObject {
  Vec3 center = Vec3::Zero();
  Vec3 half_extent = Vec3::Constant(0.25);
  double yaw_deg = 0.0;  // rotation about +z
  int material = 0;
};

struct SphereObject {
  Vec3 center = Vec3::Zero();
  double radius = 0.25;
  int material = 0;
  int subdivisions = 3;
};

/// Emitting quad facing edge_u x edge_v; added to the mesh and to the light list.
struct EmitterPanel {
  Vec3 origin = Vec3::Zero();
  Vec3 edge_u = Vec3::UnitX();
  Vec3 edge_v = Vec3::UnitY();
  Rgb emission = Rgb::Ones();
};

struct CameraRig {
  int ring_count = 8;
  double ring_radius = 1.0;   // around the room center, horizontal
  double ring_height = 1.4;
  Vec3 target = Vec3::Zero(); // zero = room center at ring height - 0.3
  bool up_down = true;        // one camera looking at the ceiling, one at the floor
  bool cube = false;          // six axis-aligned cameras at the room center
  int width = 64, height = 48;
  double fov_x_deg = 90.0;
};

enum Face { kXMin = 0, kXMax, kYMin, kYMax, kZMin, kZMax };

struct ProceduralSceneSpec {
  Vec3 room = Vec3(4.0, 3.0, 2.5);
  std::array<bool, 6> walls{true, true, true, true, true, true};
  std::array<int, 6> wall_material{0, 0, 0, 0, 0, 0};
  double tessellation = 0.25;  // target quad edge in meters
  std::vector<Material> materials{Material{}};
  std::vector<BoxObject> boxes;
  std::vector<SphereObject> spheres;
  std::vector<EmitterPanel> emitters;
  CameraRig rig;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Scene geometry and cameras plus GT shading data. `scene.images` are empty
/// until images are rendered and finalize_scene is called.
struct OracleScene {
  MultiViewScene scene;
  std::vector<Material> materials;
  std::vector<int> triangle_material;
  std::vector<AreaLight> lights;  // one per emitter panel
  Vec3 room = Vec3::Zero();
};

OracleScene gen_procedural_scene(const ProceduralSceneSpec& spec);

/// Unit icosphere with the given subdivision level.
TriangleMesh icosphere(int subdivisions);

/// Builds the BVH for the oracle geometry (independent of scene.images).
std::shared_ptr<const Bvh> build_bvh(const OracleScene& o);

/// View-independent emitted radiance used for cheap, multi-view consistent inputs.
using RadianceField = std::function<Rgb(const Hit&)>;
Rgb procedural_texture(const Vec3& x);
RgbImage render_radiance_field(const Bvh& bvh, const Camera& camera, const RadianceField& field);

struct GtOptions {
  int spp = 64;
  int max_depth = 8;
  std::uint64_t seed = 0;
  bool split = true;  // false: everything goes to `diffuse`
};

struct GtRender {
  RgbImage diffuse;  // paths whose every scattering vertex was diffuse
  RgbImage vdep;     // paths with at least one specular vertex
};

GtRender render_ground_truth(const OracleScene& o, const Bvh& bvh, const Camera& camera, const GtOptions& options = {});

/// Fills scene.images from a renderer and finalizes the scene.
void attach_images(OracleScene& o, const std::vector<RgbImage>& images);
void render_gt_images(OracleScene& o, const GtOptions& options = {});
void render_field_images(OracleScene& o, const RadianceField& field);

/// Irradiance at a surface point by midpoint quadrature over (theta, phi),
/// using the estimator's view-selection rule. nullopt when no cell reprojects.
std::optional<Rgb> brute_force_irradiance(const MultiViewScene& scene, const Vec3& point, const Vec3& normal,
                                          int exclude_view, int theta_res = 64, int phi_res = 256,
                                          double tol = kVisibilityTolerance);

/// Clamped per-vertex noise (<= vertex_noise x bbox diagonal) followed by greedy
/// shortest-edge collapse until the triangle count drops by `decimation`.
TriangleMesh degrade_mesh(const TriangleMesh& mesh, double vertex_noise, double decimation, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Presets used by tests, examples and the oracle-gen command.

/// Closed box seen by a cube rig plus ring cameras; every image constant `radiance`.
OracleScene furnace_scene(int width, int height, float radiance = 0.5f);
/// Room with two boxes; images from procedural_texture.
OracleScene two_box_scene(int width, int height, int ring_count = 8);
/// Diffuse room of reflectance rho lit by one ceiling panel; GT images.
OracleScene lambertian_box_scene(int width, int height, const Rgb& rho, const GtOptions& gt);
/// Room with a mirror floor and textured walls and ceiling; images from procedural_texture.
OracleScene mirror_box_scene(int width, int height, int ring_count = 8);

ProceduralSceneSpec preset_spec(const std::string& name);

}  // namespace relight::oracle
