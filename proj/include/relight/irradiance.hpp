#pragma once

#include "relight/common.hpp"
#include "relight/image.hpp"
#include "relight/raytrace.hpp"
#include "relight/scene.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace relight::irradiance {

// Irradiance everywhere in this module is E(x) = integral of L_i cos(theta) over
// the hemisphere, so the stored pseudo-albedo I / E equals rho / pi for a
// Lambertian surface of reflectance rho. Source and added irradiance share this
// convention.

using NormalMap = Image<Eigen::Vector3f>;

struct SourceIrradiance {
  RgbImage e_src;
  /// Same samples with clipped input pixels contributing zero radiance.
  RgbImage e_src_nc;
  /// 1 where the primary ray hit and at least one sample reprojected.
  MaskImage valid;
};

struct SourceOptions {
  int spp = 128;
  std::uint64_t seed = 0;
  double visibility_tol = kVisibilityTolerance;
};

/// Selected input view for a point reached along `direction`: the visible view
/// j != exclude whose camera-to-point vector is best aligned with `direction`
/// (lowest camera id on ties).
struct ViewSample {
  int view = -1;
  Vec2 pixel = Vec2::Zero();
};
std::optional<ViewSample> select_view(const MultiViewScene& scene, const Vec3& point, const Vec3& direction,
                                      int exclude_view, double tol = kVisibilityTolerance);

/// True when the pixel containing `pixel` is flagged as clipped in any channel.
bool sample_is_clipped(const RadianceImage& img, const Vec2& pixel);

SourceIrradiance estimate_source_irradiance(const MultiViewScene& scene, int view, const SourceOptions& options = {});

struct DenoiseOptions {
  double spatial_sigma = 4.0;       // pixels
  double depth_sigma_rel = 0.02;    // relative depth difference
  double normal_sigma_deg = 25.0;
  int radius = 8;                   // window half-size in pixels
};

/// Per-pixel shading normal map (zero vector where nothing was hit).
NormalMap normal_map(const GBuffer& gbuffer);

/// Cross-bilateral filter guided by depth and normals. Pixels with infinite
/// depth are left unchanged and never contribute.
RgbImage denoise_irradiance(const RgbImage& e, const FloatImage& depth, const NormalMap& normals,
                            const DenoiseOptions& options = {});

// ---------------------------------------------------------------------------
// Clipped light sources

struct VoxelKey {
  int x = 0, y = 0, z = 0;
  auto operator<=>(const VoxelKey&) const = default;
};
VoxelKey voxel_of(const Vec3& p, double voxel_size);

struct LightCluster {
  int id = 0;
  double voxel_size = 0.02;
  std::vector<VoxelKey> voxels;  // sorted
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  Rgb alpha = Rgb::Zero();

  bool contains_voxel(const VoxelKey& k) const;
};

/// Voxels whose reprojecting input pixels are at least clip_fraction clipped,
/// grouped by iterative merging of intersecting bounding spheres.
std::vector<LightCluster> detect_light_clusters(const MultiViewScene& scene, double voxel_size = 0.02,
                                                double clip_fraction = 0.5);

/// Builds a cluster from explicit voxels (sphere = enclosing sphere of the voxel cubes).
LightCluster make_cluster(int id, std::vector<VoxelKey> voxels, double voxel_size);

/// Irradiance from the cluster treated as a unit-emittance source: directions are
/// sampled inside the cone of its bounding sphere and count when the first hit
/// lies in one of its voxels.
RgbImage cluster_irradiance(const MultiViewScene& scene, int view, const LightCluster& cluster, int spp = 128,
                            std::uint64_t seed = 0);

struct ClickPoint {
  int view = 0;
  int x = 0, y = 0;
};
struct AlbedoClickSet {
  std::vector<std::vector<ClickPoint>> groups;
  void validate(const MultiViewScene* scene = nullptr) const;
};
AlbedoClickSet read_clicks_json(const std::filesystem::path& path);
void write_clicks_json(const std::filesystem::path& path, const AlbedoClickSet& clicks);

/// Values observed at one clicked pixel.
struct ClickObservation {
  int group = 0;
  Rgb image = Rgb::Zero();
  Rgb e_nc = Rgb::Zero();
  std::vector<Rgb> e_cluster;  // one entry per cluster
};

struct ClippedLightSolution {
  std::vector<Rgb> alpha;  // per cluster
  std::vector<Rgb> beta;   // per click group, 1 / albedo
  Rgb residual = Rgb::Zero();
  Rgb condition = Rgb::Zero();  // 2-norm condition number per channel
};

class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, double condition) : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// Per channel, solves E_nc(p) + sum_l alpha_l E_l(p) - beta_P I(p) = 0 over all
/// clicked points by non-negative least squares.
ClippedLightSolution solve_clipped_lights(std::span<const ClickObservation> observations, int cluster_count,
                                          int group_count);

/// Map-level entry point: gathers observations at the clicked pixels.
/// e_cluster is indexed [cluster][view].
ClippedLightSolution solve_clipped_lights(const std::vector<RgbImage>& e_src_nc,
                                          const std::vector<std::vector<RgbImage>>& e_cluster,
                                          const std::vector<RgbImage>& images, const AlbedoClickSet& clicks);

/// E_src = E_nc + sum_l alpha_l E_l for one view.
RgbImage combine_source_irradiance(const RgbImage& e_nc, const std::vector<const RgbImage*>& e_cluster,
                                   const std::vector<Rgb>& alpha);

// ---------------------------------------------------------------------------
// Albedo mesh, added and removed irradiance

/// 1e-4 x median of all positive E_src values (per-channel samples).
float irradiance_floor(const std::vector<RgbImage>& e_src);

struct AlbedoOptions {
  double visibility_tol = kVisibilityTolerance;
  /// Division guard; <= 0 selects irradiance_floor(e_src).
  float epsilon = 0.0f;
};

/// Copy of the scene mesh with per-vertex pseudo-albedo and seen flags.
TriangleMesh build_albedo_mesh(const MultiViewScene& scene, const std::vector<RgbImage>& e_src,
                               const AlbedoOptions& options = {});

struct WeightedLight {
  AreaLight light;
  double weight = 1.0;
};

struct AddedOptions {
  int spp = 16;
  int max_depth = 5;  // 1 = direct only
  std::uint64_t seed = 0;
  bool denoise = true;
  DenoiseOptions denoise_options{};
};

/// Path-traced irradiance due to the weighted lights on the albedo mesh (the
/// BVH's mesh must carry albedo), with next-event estimation at every vertex.
/// Light sampling streams are keyed by light id, so the result is linear in
/// the weights for a fixed seed.
RgbImage render_added_irradiance(const Bvh& albedo_bvh, std::span<const WeightedLight> lights, const Camera& camera,
                                 const AddedOptions& options = {});
RgbImage compute_added_irradiance(const Bvh& albedo_bvh, const AreaLight& light, const Camera& camera,
                                  const AddedOptions& options = {});

RgbImage removed_irradiance(const RgbImage& e_src, double alpha_dim);

/// All diffuse lighting maps of a scene, aligned with scene.cameras.
struct IrradianceSet {
  std::vector<RgbImage> e_src;
  std::vector<RgbImage> e_src_nc;
  std::vector<std::vector<RgbImage>> e_cluster;      // [cluster][view]
  std::map<int, std::vector<RgbImage>> e_add;        // light id -> per view
  std::vector<MaskImage> e_valid;                    // per view; empty = all valid
  float epsilon = 0.0f;                              // pseudo-albedo division guard
};

}  // namespace relight::irradiance
