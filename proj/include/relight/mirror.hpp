#pragma once

#include "relight/irradiance.hpp"
#include "relight/raytrace.hpp"
#include "relight/scene.hpp"

#include <functional>
#include <vector>

namespace relight::mirror {

/// Pseudo-albedo clamp used when relighting input views.
inline constexpr float kMaxPseudoAlbedo = 4.0f;

/// Primary and first mirror-bounce geometry for every pixel of a camera.
struct MirrorTrace {
  int width = 0, height = 0;
  Vec3 eye = Vec3::Zero();
  std::vector<std::uint8_t> has_primary;
  std::vector<std::uint8_t> has_reflection;
  std::vector<Vec3> x;          // primary hit
  std::vector<Vec3> normal;     // shading normal facing the camera
  std::vector<Vec3> direction;  // mirror direction at x
  std::vector<Vec3> y;          // reflected hit
};

MirrorTrace trace_mirror(const MultiViewScene& scene, const Camera& camera, const GBuffer& gbuffer);

struct MirrorMap {
  RgbImage value;
  MaskImage valid;
  Image<int> view;                  // selected view index, -1 when invalid
  Image<Eigen::Vector2f> sample;    // continuous pixel coordinates in that view
};

/// Fetches the value of view j at continuous pixel coordinates.
using ViewSampler = std::function<Rgb(int view, const Vec2& pixel)>;

/// Shared selection procedure: among all views that see y, the one whose
/// camera-to-y direction best aligns with the mirror direction (lowest id on ties).
MirrorMap resolve_mirror(const MultiViewScene& scene, const MirrorTrace& trace, const ViewSampler& sampler,
                         double tol = kVisibilityTolerance);

MirrorMap compute_source_mirror(const MultiViewScene& scene, int view, double tol = kVisibilityTolerance);

/// Sum over edited lights of weight x E_add for one view (zero map without lights).
RgbImage weighted_added_irradiance(const irradiance::IrradianceSet& irr, const LightingEdit& edit, int view);

/// clamp(I / max(E_src, eps), 0, A_max) x (E_add + E_src - alpha_dim E_src) at one pixel.
Rgb pseudo_relit_pixel(const Rgb& image, const Rgb& e_src, const Rgb& e_add, float alpha_dim, float eps);

/// Whole relit view; pixels whose irradiance is invalid are 0.
RgbImage pseudo_relit_view(const MultiViewScene& scene, const irradiance::IrradianceSet& irr, const LightingEdit& edit,
                           int view);

/// Mirror image for `camera` sampled from the pseudo-relit input views. The
/// relit value is evaluated at each bilinear tap, so the result equals sampling
/// from fully materialized relit views.
MirrorMap compute_target_mirror(const MultiViewScene& scene, const irradiance::IrradianceSet& irr,
                                const LightingEdit& edit, const Camera& camera, double tol = kVisibilityTolerance);
MirrorMap compute_target_mirror(const MultiViewScene& scene, const irradiance::IrradianceSet& irr,
                                const LightingEdit& edit, const Camera& camera, const MirrorTrace& trace,
                                double tol = kVisibilityTolerance);

}  // namespace relight::mirror
