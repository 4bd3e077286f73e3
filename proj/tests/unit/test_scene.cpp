#include "relight/io.hpp"
#include "relight/raytrace.hpp"
#include "relight/scene.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

using namespace relight;
namespace fs = std::filesystem;

namespace {

MultiViewScene minimal_scene(int cameras) {
  MultiViewScene s;
  s.mesh.vertices = {{-1, -1, 0}, {1, -1, 0}, {0, 1, 0}};
  s.mesh.normals.assign(3, Vec3(0, 0, 1));
  s.mesh.triangles = {{0, 1, 2}};
  for (int i = 0; i < cameras; ++i)
    s.cameras.push_back(Camera::look_at(i, 8 + i, 6, 60.0, Vec3(0.1 * i, 0, 2), Vec3::Zero(), Vec3::UnitY()));
  fixtures::fill_images(s, Rgb(0.25f, 0.5f, 0.75f));
  return s;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Camera, ProjectUnprojectRoundTrip) {
  const Camera c = Camera::look_at(0, 64, 48, 75.0, Vec3(0.3, -2, 1.2), Vec3(0.5, 0.5, 0.8));
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> px(0.0, 64.0), py(0.0, 48.0), pd(0.1, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p(px(rng), py(rng));
    const double d = pd(rng);
    const Vec3 x = c.unproject(p, d);
    EXPECT_NEAR(c.depth_of(x), d, 1e-9 * d);
    const auto q = c.project(x);
    ASSERT_TRUE(q);
    EXPECT_LT((*q - p).norm(), 1e-4);
  }
}

TEST(Camera, PointBehindDoesNotProject) {
  const Camera c = Camera::look_at(0, 8, 8, 90.0, Vec3::Zero(), Vec3(0, 1, 0));
  EXPECT_FALSE(c.project(Vec3(0, -1, 0)));
}

TEST(Camera, LookAtConventions) {
  // Looking along +y with z up: a point above the target lands in the upper half (y down).
  const Camera c = Camera::look_at(0, 10, 10, 90.0, Vec3::Zero(), Vec3(0, 1, 0));
  EXPECT_NEAR(c.rotation.determinant(), 1.0, 1e-12);
  const auto up = c.project(Vec3(0, 1, 0.2));
  ASSERT_TRUE(up);
  EXPECT_LT(up->y(), 5.0);
  const auto right = c.project(Vec3(0.2, 1, 0));
  EXPECT_GT(right->x(), 5.0);
  EXPECT_NEAR(c.center().norm(), 0.0, 1e-12);
}

TEST(Camera, RejectsReflection) {
  Camera c = Camera::look_at(7, 8, 8, 90.0, Vec3::Zero(), Vec3(0, 0, 1));
  c.rotation.row(0) *= -1.0;
  const std::string msg = message_of([&] { c.validate(); });
  EXPECT_NE(msg.find("invalid rotation"), std::string::npos);
  EXPECT_NE(msg.find("7"), std::string::npos);
}

TEST(DetectClipped, Examples) {
  RgbImage img(3, 1, Rgb::Zero());
  img(0, 0) = Rgb(1.0f, 0.2f, 0.2f);
  img(1, 0) = Rgb(0.99f, 0.0f, 0.98f);
  const MaskImage m = detect_clipped(img, 1.0);
  EXPECT_EQ(m(0, 0), 0b001);
  EXPECT_EQ(m(1, 0), 0b001);
  EXPECT_EQ(m(2, 0), 0);

  const MaskImage zero = detect_clipped(RgbImage(4, 4, Rgb::Zero()), 1.0);
  for (auto b : zero.data()) EXPECT_EQ(b, 0);
  EXPECT_THROW(detect_clipped(img, 0.0), Error);
}

TEST(DetectClipped, ThresholdPartition) {
  const double white = 3.0;
  RgbImage img(64, 64);
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 3.5f);
  for (auto& p : img.data()) p = Rgb(u(rng), u(rng), u(rng));
  const MaskImage m = detect_clipped(img, white);
  const float bound = static_cast<float>(0.99 * white);
  for (std::size_t i = 0; i < img.size(); ++i)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(((m[i] >> c) & 1) != 0, img[i][c] >= bound);
}

TEST(Mesh, ValidateRejectsBadInput) {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  m.normals.assign(3, Vec3(0, 0, 1));
  m.triangles = {{0, 1, 2}};
  EXPECT_THROW(m.validate(), ValidationError);
  EXPECT_EQ(m.remove_degenerate(), 1u);
  m.triangles = {{0, 1, 5}};
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(Lights, Validation) {
  AreaLight l;
  l.edge_v = l.edge_u;
  EXPECT_THROW(l.validate(), ValidationError);
  LightingEdit e;
  e.alpha_dim = 1.5;
  EXPECT_THROW(e.validate(), ValidationError);
  e.alpha_dim = 0.5;
  e.light_weights[1] = -1;
  EXPECT_THROW(e.validate(), ValidationError);
  EXPECT_TRUE(LightingEdit{}.is_noop());
}

TEST(Bundle, MinimalLoadHasDepthMaps) {
  const fs::path dir = fixtures::temp_dir("bundle_min");
  MultiViewScene s = minimal_scene(2);
  save_scene_bundle(dir, s);
  const MultiViewScene loaded = load_scene_bundle(dir);
  ASSERT_EQ(loaded.depth_maps.size(), 2u);
  for (int i = 0; i < 2; ++i) EXPECT_TRUE(loaded.depth_maps[i].same_shape(loaded.cameras[i].width, loaded.cameras[i].height));
  // Center pixel of camera 0 looks straight down at the triangle 2 m away.
  EXPECT_NEAR(loaded.depth_maps[0](4, 3), 2.0, 0.05);
  EXPECT_GT(loaded.bbox_diagonal, 0.0);
}

TEST(Bundle, CountMismatch) {
  const fs::path dir = fixtures::temp_dir("bundle_count");
  MultiViewScene s = minimal_scene(2);
  save_scene_bundle(dir, s);
  fs::remove(dir / "images" / "001.pfm");
  // Two cameras with one image: the missing view is reported, whether as
  // a count mismatch or as the missing file.
  MultiViewScene one = minimal_scene(2);
  one.images.pop_back();
  EXPECT_NE(message_of([&] { finalize_scene(one); }).find("count mismatch"), std::string::npos);
  EXPECT_THROW(load_scene_bundle(dir), Error);
}

TEST(Bundle, InvalidRotationNamesCamera) {
  const fs::path dir = fixtures::temp_dir("bundle_rot");
  MultiViewScene s = minimal_scene(2);
  save_scene_bundle(dir, s);
  auto cams = io::read_json(dir / "cameras.json");
  auto& r = cams[1]["rotation"];
  for (int k = 0; k < 3; ++k) r[k] = -r[k].get<double>();
  io::write_json(dir / "cameras.json", cams);
  const std::string msg = message_of([&] { load_scene_bundle(dir); });
  EXPECT_NE(msg.find("invalid rotation"), std::string::npos);
  EXPECT_NE(msg.find("camera 1"), std::string::npos);
}

TEST(Bundle, MissingFile) {
  const fs::path dir = fixtures::temp_dir("bundle_missing");
  EXPECT_NE(message_of([&] { load_scene_bundle(dir); }).find("missing file"), std::string::npos);
}

TEST(Bundle, RoundTripIsLossless) {
  const fs::path a = fixtures::temp_dir("bundle_rt_a");
  const fs::path b = fixtures::temp_dir("bundle_rt_b");
  MultiViewScene s = minimal_scene(3);
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> u(0.0f, 4.0f);
  for (auto& img : s.images) {
    for (auto& p : img.pixels.data()) p = Rgb(u(rng), u(rng), u(rng));
    img.clip_mask = detect_clipped(img.pixels, 3.9);
  }
  s.mesh.albedo.assign(3, Rgb(0.1f, 0.2f, 0.3f));
  std::vector<AreaLight> lights(1);
  lights[0].id = 4;
  lights[0].origin = Vec3(0.5, 0.25, 1.0);
  lights[0].emittance = Rgb(2.0f, 1.0f, 0.5f);
  save_scene_bundle(a, s, lights);
  const MultiViewScene l1 = load_scene_bundle(a);
  save_scene_bundle(b, l1, read_lights_json(a / "lights.json"));
  const MultiViewScene l2 = load_scene_bundle(b);

  ASSERT_EQ(l2.view_count(), s.view_count());
  for (std::size_t i = 0; i < s.view_count(); ++i) {
    EXPECT_TRUE(identical(l2.images[i].pixels, s.images[i].pixels));
    EXPECT_EQ(l2.images[i].clip_mask, s.images[i].clip_mask);
    EXPECT_EQ(l2.cameras[i].rotation, s.cameras[i].rotation);
    EXPECT_EQ(l2.cameras[i].translation, s.cameras[i].translation);
    EXPECT_EQ(l2.cameras[i].fx, s.cameras[i].fx);
    EXPECT_EQ(l2.cameras[i].cx, s.cameras[i].cx);
    EXPECT_EQ(l2.depth_maps[i], l1.depth_maps[i]);
  }
  for (std::size_t v = 0; v < 3; ++v) {
    EXPECT_EQ(l2.mesh.vertices[v].cast<float>(), s.mesh.vertices[v].cast<float>());
    EXPECT_TRUE((l2.mesh.albedo[v] == s.mesh.albedo[v]).all());
  }
  const auto lr = read_lights_json(b / "lights.json");
  ASSERT_EQ(lr.size(), 1u);
  EXPECT_EQ(lr[0].id, 4);
  EXPECT_EQ(lr[0].origin, lights[0].origin);
  EXPECT_TRUE((lr[0].emittance == lights[0].emittance).all());
}

TEST(Pfm, RoundTripAndRowOrder) {
  const fs::path dir = fixtures::temp_dir("pfm");
  RgbImage img(3, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) img(x, y) = Rgb(float(x), float(y), 0.5f);
  io::write_pfm(dir / "a.pfm", img);
  EXPECT_TRUE(identical(io::read_pfm(dir / "a.pfm"), img));

  // The first stored row is the bottom image row.
  const std::string bytes = io::read_text(dir / "a.pfm");
  ASSERT_EQ(bytes.substr(0, 7), "PF\n3 2\n");
  const std::size_t payload = bytes.find('\n', 7) + 1;
  EXPECT_LT(std::stod(bytes.substr(7, payload - 8)), 0.0);  // little endian
  ASSERT_EQ(bytes.size() - payload, 3u * 2u * 3u * sizeof(float));
  float first[3];
  std::memcpy(first, bytes.data() + payload, sizeof(first));
  EXPECT_EQ(first[1], 1.0f);

  std::ofstream(dir / "bad.pfm", std::ios::binary) << "PX\n1 1\n-1\n";
  EXPECT_THROW(io::read_pfm(dir / "bad.pfm"), FormatError);
  std::ofstream(dir / "short.pfm", std::ios::binary) << "PF\n4 4\n-1\nabc";
  EXPECT_THROW(io::read_pfm(dir / "short.pfm"), FormatError);
}

TEST(Ply, RoundTrip) {
  const fs::path dir = fixtures::temp_dir("ply");
  TriangleMesh m = fixtures::grid_mesh(3);
  m.albedo.assign(m.vertex_count(), Rgb(0.5f, 0.25f, 0.125f));
  m.albedo_seen.assign(m.vertex_count(), 1);
  m.albedo_seen[2] = 0;
  io::write_ply(dir / "m.ply", m);
  const TriangleMesh r = io::read_ply(dir / "m.ply");
  EXPECT_EQ(r.triangles, m.triangles);
  ASSERT_EQ(r.vertex_count(), m.vertex_count());
  for (std::size_t i = 0; i < m.vertex_count(); ++i) {
    EXPECT_EQ(r.vertices[i].cast<float>(), m.vertices[i].cast<float>());
    EXPECT_TRUE((r.albedo[i] == m.albedo[i]).all());
  }
  EXPECT_EQ(r.albedo_seen, m.albedo_seen);
}

TEST(Pgm, PerChannelMaskRoundTrip) {
  const fs::path dir = fixtures::temp_dir("pgm");
  MaskImage bits(4, 2, 0);
  bits(1, 0) = 0b101;
  bits(3, 1) = 0b010;
  io::write_ppm_mask(dir / "m.ppm", bits);
  EXPECT_EQ(io::read_ppm_mask(dir / "m.ppm"), bits);
  MaskImage g(4, 2, 0);
  g(2, 1) = 255;
  io::write_pgm(dir / "m.pgm", g);
  EXPECT_EQ(io::read_pgm(dir / "m.pgm"), g);
}
