#pragma once

#include "relight/irradiance.hpp"
#include "relight/mirror.hpp"
#include "relight/raytrace.hpp"
#include "relight/scene.hpp"

#include <array>
#include <span>
#include <vector>

namespace relight::reproject {

/// Input view i resampled into the novel camera's frame through its geometry.
struct WarpedView {
  RgbImage value;
  MaskImage valid;
  FloatImage source_depth;               // depth of x in view i
  Image<Eigen::Vector2f> source_pixel;   // continuous coordinates in view i
};

WarpedView warp_view(const MultiViewScene& scene, int view, const Camera& novel, double tol = kVisibilityTolerance);

/// The four blending weights for one view at surface point x with normal n.
std::array<double, 4> heuristic_weights(const Vec3& c_new, const Vec3& c_i, const Vec3& x, const Vec3& n,
                                        double eps_d);

/// Positions (into a list sorted by descending luminance) chosen for the
/// highest / second highest / lower median / lowest composites.
std::array<int, 4> rank_positions(int count);

/// View order by descending luminance; equal luminance keeps ascending camera id.
std::vector<int> rank_by_luminance(std::span<const float> luminance, std::span<const int> camera_ids);

struct CompositeSet {
  std::array<RgbImage, 8> image;    // I1..I8
  std::array<RgbImage, 8> mirror;   // M1..M8
  RgbImage e_src, e_add, e_rem;
  FloatImage disparity;
  irradiance::NormalMap normal;     // camera space
  FloatImage view_cos;
  FloatImage refl_ratio;
  MaskImage valid;                  // at least one view passed the depth test
};

struct CompositeOptions {
  double visibility_tol = kVisibilityTolerance;
  bool images = true;      // I/M composites
  bool irradiance = true;  // E composites (requires an irradiance set)
  bool extras = true;
};

/// All novel-view composites in one gather pass. `source_mirrors` holds one
/// mirror image per input view; when empty the M composites stay zero. Views
/// are reduced in camera-id order so the result does not depend on the order
/// of scene.cameras.
CompositeSet build_composites(const MultiViewScene& scene, const std::vector<RgbImage>& source_mirrors,
                              const irradiance::IrradianceSet* irr, const LightingEdit& edit, const Camera& novel,
                              const GBuffer& gbuffer, const mirror::MirrorTrace& trace,
                              const CompositeOptions& options = {});
CompositeSet build_composites(const MultiViewScene& scene, const std::vector<RgbImage>& source_mirrors,
                              const irradiance::IrradianceSet* irr, const LightingEdit& edit, const Camera& novel,
                              const CompositeOptions& options = {});

/// Min-max normalized inverse depth over finite pixels; a degenerate range maps to 0.
FloatImage normalized_disparity(const FloatImage& depth);

struct FlowMap {
  Image<Eigen::Vector2f> flow;  // pixels, B position minus A pixel center
  MaskImage valid;
};

/// Optical flow from input view a to input view b through the scene geometry.
FlowMap compute_flow(const MultiViewScene& scene, int view_a, int view_b, double tol = kVisibilityTolerance);

}  // namespace relight::reproject
