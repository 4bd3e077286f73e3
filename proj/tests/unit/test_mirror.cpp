#include "relight/mirror.hpp"
#include "relight/oracle.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace relight;
using namespace relight::mirror;

namespace {

/// Brute-force view choice: every view, visibility test, best aligned direction,
/// lowest camera id on exact ties.
int brute_force_view(const MultiViewScene& s, const Vec3& y, const Vec3& dir) {
  int best = -1;
  double best_dot = -kInf;
  for (std::size_t j = 0; j < s.view_count(); ++j) {
    if (!visible(s, y, static_cast<int>(j))) continue;
    const double d = (y - s.cameras[j].center()).normalized().dot(dir);
    if (d > best_dot || (d == best_dot && s.cameras[j].id < s.cameras[best].id)) {
      best_dot = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

bool flat_floor_triangle(const TriangleMesh& m, std::uint32_t t) {
  for (auto v : m.triangles[t])
    if (std::abs(m.vertices[v].z()) > 1e-12 || (m.normals[v] - Vec3::UnitZ()).norm() > 1e-12) return false;
  return true;
}

irradiance::IrradianceSet unit_irradiance(const MultiViewScene& s) {
  irradiance::IrradianceSet irr;
  for (const Camera& c : s.cameras) irr.e_src.emplace_back(c.width, c.height, Rgb::Ones());
  irr.epsilon = 1e-6f;
  return irr;
}

}  // namespace

TEST(SourceMirror, PlanarFloorMatchesAnalyticReflection) {
  const oracle::OracleScene o = oracle::mirror_box_scene(40, 30, 6);
  const MultiViewScene& s = o.scene;
  const int view = 0;
  const Camera& cam = s.cameras[view];
  const MirrorMap m = compute_source_mirror(s, view);
  const Vec3 eye = cam.center();
  const Vec3 mirrored_eye(eye.x(), eye.y(), -eye.z());

  int checked = 0, agree = 0;
  for (int py = 0; py < cam.height; ++py)
    for (int px = 0; px < cam.width; ++px) {
      const Ray r = cam.primary_ray(px, py);
      const auto primary = fixtures::brute_force_hit(s.mesh, r);
      if (!primary || !flat_floor_triangle(s.mesh, primary->first)) continue;
      const Vec3 x = r.origin + primary->second * r.direction;
      const Vec3 dir = (x - mirrored_eye).normalized();
      const auto second = fixtures::brute_force_hit(s.mesh, spawn_ray(x, dir, s.ray_epsilon()));
      ASSERT_TRUE(second) << "closed room";
      const Vec3 y = x + (s.ray_epsilon() + second->second) * dir;
      const int j = brute_force_view(s, y, dir);
      ++checked;
      if (j < 0) {
        agree += !m.valid(px, py);
        continue;
      }
      const auto p = s.cameras[j].project(y);
      ASSERT_TRUE(p);
      const Rgb expected = sample_bilinear(s.images[j].pixels, *p);
      if (m.valid(px, py) && m.view(px, py) == j && (m.value(px, py) - expected).abs().maxCoeff() <= 1e-4f) ++agree;
    }
  ASSERT_GT(checked, cam.width * cam.height / 4);
  EXPECT_GE(agree, 0.99 * checked) << agree << " / " << checked;
}

TEST(SourceMirror, EscapingRayIsInvalid) {
  auto spec = oracle::preset_spec("mirror");
  spec.walls[oracle::kZMax] = false;
  spec.rig.width = 32;
  spec.rig.height = 24;
  spec.rig.ring_count = 6;
  oracle::OracleScene o = oracle::gen_procedural_scene(spec);
  oracle::render_field_images(o, [](const Hit& h) { return oracle::procedural_texture(h.position); });
  const MultiViewScene& s = o.scene;
  // The downward-looking camera: floor reflections leave through the open ceiling.
  const int view = static_cast<int>(s.view_count()) - 1;
  const Camera& cam = s.cameras[view];
  const MirrorMap m = compute_source_mirror(s, view);
  int escaped = 0;
  for (int py = 0; py < cam.height; ++py)
    for (int px = 0; px < cam.width; ++px) {
      const Ray r = cam.primary_ray(px, py);
      const auto primary = fixtures::brute_force_hit(s.mesh, r);
      if (!primary || !flat_floor_triangle(s.mesh, primary->first)) continue;
      const Vec3 x = r.origin + primary->second * r.direction;
      const Vec3 dir = reflect(r.direction, Vec3::UnitZ());
      if (fixtures::brute_force_hit(s.mesh, spawn_ray(x, dir, s.ray_epsilon()))) continue;
      ++escaped;
      EXPECT_FALSE(m.valid(px, py));
      EXPECT_TRUE((m.value(px, py) == 0.0f).all());
      EXPECT_EQ(m.view(px, py), -1);
    }
  EXPECT_GT(escaped, 0);
}

TEST(SourceMirror, ConstantImagesGiveConstant) {
  oracle::OracleScene o = oracle::gen_procedural_scene([] {
    auto spec = oracle::preset_spec("mirror");
    spec.rig.width = 24;
    spec.rig.height = 18;
    return spec;
  }());
  const Rgb c(0.2f, 0.4f, 0.7f);
  std::vector<RgbImage> imgs;
  for (const Camera& cam : o.scene.cameras) imgs.emplace_back(cam.width, cam.height, c);
  oracle::attach_images(o, imgs);
  int valid = 0;
  for (std::size_t v = 0; v < o.scene.view_count(); ++v) {
    const MirrorMap m = compute_source_mirror(o.scene, static_cast<int>(v));
    for (std::size_t i = 0; i < m.value.size(); ++i) {
      if (!m.valid[i]) {
        EXPECT_TRUE((m.value[i] == 0.0f).all());
        continue;
      }
      ++valid;
      EXPECT_NEAR((m.value[i] - c).abs().maxCoeff(), 0.0f, 1e-6f);
    }
  }
  EXPECT_GT(valid, 0);
}

TEST(PseudoRelit, PixelArithmetic) {
  const Rgb out = pseudo_relit_pixel(Rgb::Constant(0.6f), Rgb::Constant(0.3f), Rgb::Constant(0.15f), 1.0f, 1e-6f);
  EXPECT_NEAR(out[0], 0.3f, 1e-6f);
  // No-op edit reproduces the image.
  const Rgb img(0.11f, 0.52f, 0.93f), e(0.4f, 0.9f, 1.3f);
  const Rgb same = pseudo_relit_pixel(img, e, Rgb::Zero(), 0.0f, 1e-6f);
  EXPECT_NEAR((same - img).abs().maxCoeff(), 0.0f, 1e-6f);
  EXPECT_TRUE((pseudo_relit_pixel(img, e, Rgb::Zero(), 1.0f, 1e-6f) == 0.0f).all());
  // Albedo clamp.
  const Rgb bright = pseudo_relit_pixel(Rgb::Constant(10.0f), Rgb::Constant(1.0f), Rgb::Zero(), 0.0f, 1e-6f);
  EXPECT_EQ(bright[0], kMaxPseudoAlbedo);
  // Division guard.
  const Rgb dark = pseudo_relit_pixel(Rgb::Constant(1e-3f), Rgb::Zero(), Rgb::Constant(1.0f), 0.0f, 0.01f);
  EXPECT_NEAR(dark[0], 0.1f, 1e-6f);
}

TEST(PseudoRelit, ViewSkipsInvalidIrradiance) {
  oracle::OracleScene o = oracle::mirror_box_scene(16, 12, 6);
  irradiance::IrradianceSet irr = unit_irradiance(o.scene);
  irr.e_valid.assign(o.scene.view_count(), MaskImage(16, 12, 1));
  irr.e_valid[0](3, 4) = 0;
  const RgbImage out = pseudo_relit_view(o.scene, irr, {}, 0);
  EXPECT_TRUE((out(3, 4) == 0.0f).all());
  EXPECT_NEAR((out(5, 5) - o.scene.images[0].pixels(5, 5)).abs().maxCoeff(), 0.0f, 1e-6f);
  LightingEdit missing;
  missing.light_weights[9] = 1.0;
  EXPECT_THROW(pseudo_relit_view(o.scene, irr, missing, 0), Error);
}

TEST(TargetMirror, NoopEditAtInputCameraEqualsSource) {
  const oracle::OracleScene o = oracle::mirror_box_scene(32, 24, 6);
  const irradiance::IrradianceSet irr = unit_irradiance(o.scene);
  for (int v : {0, 3}) {
    const MirrorMap src = compute_source_mirror(o.scene, v);
    const MirrorMap tgt = compute_target_mirror(o.scene, irr, {}, o.scene.cameras[v]);
    for (std::size_t i = 0; i < src.value.size(); ++i) {
      ASSERT_EQ(src.valid[i], tgt.valid[i]);
      EXPECT_EQ(src.view[i], tgt.view[i]);
      EXPECT_NEAR((src.value[i] - tgt.value[i]).abs().maxCoeff(), 0.0f, 1e-6f);
    }
  }
}

TEST(TargetMirror, FullDimmingGivesZero) {
  const oracle::OracleScene o = oracle::mirror_box_scene(24, 18, 6);
  const irradiance::IrradianceSet irr = unit_irradiance(o.scene);
  LightingEdit edit;
  edit.alpha_dim = 1.0;
  const MirrorMap tgt = compute_target_mirror(o.scene, irr, edit, o.scene.cameras[1]);
  int valid = 0;
  for (std::size_t i = 0; i < tgt.value.size(); ++i) {
    valid += tgt.valid[i];
    EXPECT_TRUE((tgt.value[i] == 0.0f).all());
  }
  EXPECT_GT(valid, 0);
}

TEST(TargetMirror, EqualsMaterializeThenSample) {
  const oracle::OracleScene o = oracle::mirror_box_scene(32, 24, 6);
  const MultiViewScene& s = o.scene;
  irradiance::IrradianceSet irr;
  std::mt19937 rng(3);
  std::uniform_real_distribution<float> u(0.05f, 1.5f);
  for (const Camera& c : s.cameras) {
    RgbImage e(c.width, c.height), a(c.width, c.height);
    for (std::size_t i = 0; i < e.size(); ++i) {
      e[i] = Rgb(u(rng), u(rng), u(rng));
      a[i] = Rgb(u(rng), 0.2f * u(rng), u(rng));
    }
    irr.e_src.push_back(e);
    irr.e_add[5].push_back(a);
  }
  irr.epsilon = 0.01f;
  LightingEdit edit;
  edit.alpha_dim = 0.4;
  edit.light_weights[5] = 0.8;

  std::vector<RgbImage> relit;
  for (std::size_t j = 0; j < s.view_count(); ++j) relit.push_back(pseudo_relit_view(s, irr, edit, static_cast<int>(j)));

  const Camera novel = Camera::look_at(99, 40, 30, 80.0, Vec3(1.7, 1.2, 1.3), Vec3(2.3, 1.8, 0.0));
  const MirrorMap tgt = compute_target_mirror(s, irr, edit, novel);
  int valid = 0;
  for (int y = 0; y < novel.height; ++y)
    for (int x = 0; x < novel.width; ++x) {
      if (!tgt.valid(x, y)) continue;
      ++valid;
      const Rgb expected = sample_bilinear(relit[tgt.view(x, y)], tgt.sample(x, y).cast<double>());
      EXPECT_NEAR((tgt.value(x, y) - expected).abs().maxCoeff(), 0.0f, 1e-5f * (1.0f + expected.abs().maxCoeff()));
    }
  EXPECT_GT(valid, novel.width * novel.height / 4);
}
