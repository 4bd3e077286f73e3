#include "relight/scene.hpp"

#include "relight/io.hpp"
#include "relight/raytrace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace relight {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Camera

std::optional<Vec2> Camera::project(const Vec3& world) const {
  const Vec3 pc = to_camera(world);
  if (!(pc.z() > 0.0)) return std::nullopt;
  return Vec2(fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy);
}

Vec3 Camera::unproject(const Vec2& pixel, double depth) const {
  const Vec3 pc((pixel.x() - cx) / fx * depth, (pixel.y() - cy) / fy * depth, depth);
  return rotation.transpose() * (pc - translation);
}

Vec3 Camera::direction(const Vec2& pixel) const {
  const Vec3 pc((pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0);
  return (rotation.transpose() * pc).normalized();
}

Ray Camera::primary_ray(int x, int y) const { return Ray{center(), direction(Vec2(x + 0.5, y + 0.5)), 0.0, kInf}; }

void Camera::validate() const {
  const std::string who = "camera " + std::to_string(id) + ": ";
  if (width <= 0 || height <= 0) throw ValidationError(who + "nonpositive resolution");
  if (!(fx > 0 && fy > 0)) throw ValidationError(who + "focal lengths must be positive");
  if (!rotation.allFinite() || !translation.allFinite()) throw ValidationError(who + "non-finite pose");
  const double orth = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (orth > 1e-6 || std::abs(rotation.determinant() - 1.0) > 1e-6)
    throw ValidationError(who + "invalid rotation (must be orthonormal with det = +1)");
}

Camera Camera::look_at(int id, int width, int height, double fov_x_deg, const Vec3& eye, const Vec3& target,
                       const Vec3& up) {
  Camera c;
  c.id = id;
  c.width = width;
  c.height = height;
  c.fx = c.fy = 0.5 * width / std::tan(0.5 * fov_x_deg * kPi / 180.0);
  c.cx = 0.5 * width;
  c.cy = 0.5 * height;
  const Vec3 f = (target - eye).normalized();
  Vec3 hint = up;
  if (std::abs(f.dot(hint.normalized())) > 0.999) hint = std::abs(f.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 right = f.cross(hint).normalized();
  const Vec3 down = f.cross(right);
  c.rotation.row(0) = right.transpose();
  c.rotation.row(1) = down.transpose();
  c.rotation.row(2) = f.transpose();
  c.translation = -c.rotation * eye;
  return c;
}

// ---------------------------------------------------------------------------
// Images, meshes, lights

void RadianceImage::validate(const Camera& owner) const {
  const std::string who = "image of camera " + std::to_string(owner.id) + ": ";
  if (!pixels.same_shape(owner.width, owner.height)) throw ValidationError(who + "resolution does not match camera");
  if (!clip_mask.empty() && !clip_mask.same_shape(pixels)) throw ValidationError(who + "clip mask resolution mismatch");
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const Rgb& p = pixels[i];
    if (!p.allFinite() || (p < 0.0f).any())
      throw ValidationError(who + "pixel " + std::to_string(i) + " is negative or non-finite");
  }
}

MaskImage detect_clipped(const RgbImage& raw, double white_level) {
  if (!(white_level > 0)) throw Error("white_level must be positive");
  const float bound = static_cast<float>(0.99 * white_level);
  MaskImage mask(raw.width(), raw.height(), 0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::uint8_t bits = 0;
    for (int c = 0; c < 3; ++c)
      if (raw[i][c] >= bound) bits |= static_cast<std::uint8_t>(1u << c);
    mask[i] = bits;
  }
  return mask;
}

double TriangleMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

Eigen::AlignedBox3d TriangleMesh::bounds() const {
  Eigen::AlignedBox3d box;
  for (const Vec3& v : vertices) box.extend(v);
  return box;
}

void TriangleMesh::validate() const {
  if (normals.size() != vertices.size()) throw ValidationError("mesh: normal count does not match vertex count");
  if (!albedo.empty() && albedo.size() != vertices.size())
    throw ValidationError("mesh: albedo count does not match vertex count");
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!vertices[i].allFinite()) throw ValidationError("mesh: vertex " + std::to_string(i) + " is not finite");
    if (std::abs(normals[i].norm() - 1.0) > 1e-4)
      throw ValidationError("mesh: normal of vertex " + std::to_string(i) + " is not unit length");
    if (!albedo.empty() && (!albedo[i].allFinite() || (albedo[i] < 0.0f).any()))
      throw ValidationError("mesh: albedo of vertex " + std::to_string(i) + " is negative or non-finite");
  }
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (auto idx : triangles[t])
      if (idx >= vertices.size()) throw ValidationError("mesh: triangle " + std::to_string(t) + " index out of range");
    if (!(triangle_area(t) > 0.0)) throw ValidationError("mesh: triangle " + std::to_string(t) + " is degenerate");
  }
}

std::size_t TriangleMesh::remove_degenerate() {
  const std::size_t before = triangles.size();
  std::size_t k = 0;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
    if (!(triangle_area(t) > 0.0)) continue;
    triangles[k++] = tri;
  }
  triangles.resize(k);
  return before - k;
}

void TriangleMesh::recompute_normals() {
  std::vector<Vec3> acc(vertices.size(), Vec3::Zero());
  for (const auto& t : triangles) {
    const Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
    for (auto i : t) acc[i] += n;
  }
  normals.resize(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const double len = acc[i].norm();
    normals[i] = len > 0 ? Vec3(acc[i] / len) : Vec3::UnitZ();
  }
}

void AreaLight::validate() const {
  const std::string who = "light " + std::to_string(id) + ": ";
  if (!(edge_u.cross(edge_v).norm() > 0)) throw ValidationError(who + "edges are parallel or zero");
  if (!emittance.allFinite() || (emittance < 0.0f).any()) throw ValidationError(who + "emittance must be >= 0");
}

bool LightingEdit::is_noop() const {
  if (alpha_dim != 0.0) return false;
  return std::all_of(light_weights.begin(), light_weights.end(), [](const auto& kv) { return kv.second == 0.0; });
}

void LightingEdit::validate() const {
  if (!(alpha_dim >= 0.0 && alpha_dim <= 1.0)) throw ValidationError("edit: alpha_dim must lie in [0, 1]");
  for (const auto& [id, w] : light_weights)
    if (!std::isfinite(w) || w < 0)
      throw ValidationError("edit: weight of light " + std::to_string(id) + " must be finite and >= 0");
}

// ---------------------------------------------------------------------------
// Scene

std::vector<int> MultiViewScene::id_order() const {
  std::vector<int> order(cameras.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cameras[a].id < cameras[b].id; });
  return order;
}

int MultiViewScene::view_index(int camera_id) const {
  for (std::size_t i = 0; i < cameras.size(); ++i)
    if (cameras[i].id == camera_id) return static_cast<int>(i);
  throw Error("no camera with id " + std::to_string(camera_id));
}

bool MultiViewScene::has_clip_masks() const {
  return std::any_of(images.begin(), images.end(), [](const RadianceImage& im) { return !im.clip_mask.empty(); });
}

void finalize_scene(MultiViewScene& scene) {
  if (scene.cameras.size() != scene.images.size())
    throw ValidationError("camera/image count mismatch: " + std::to_string(scene.cameras.size()) + " cameras, " +
                          std::to_string(scene.images.size()) + " images");
  std::vector<int> ids;
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    scene.cameras[i].validate();
    scene.images[i].validate(scene.cameras[i]);
    ids.push_back(scene.cameras[i].id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw ValidationError("duplicate camera id");
  scene.mesh.validate();
  scene.bvh = std::make_shared<const Bvh>(scene.mesh);
  scene.bbox_diagonal = scene.mesh.bbox_diagonal();
  scene.depth_maps.clear();
  for (const Camera& cam : scene.cameras) scene.depth_maps.push_back(render_depth(*scene.bvh, cam));
}

// ---------------------------------------------------------------------------
// JSON records

namespace {

json camera_to_json(const Camera& c) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(c.rotation(i, j));
  return json{{"id", c.id},         {"width", c.width},    {"height", c.height},
              {"fx", c.fx},         {"fy", c.fy},          {"cx", c.cx},
              {"cy", c.cy},         {"rotation", r},       {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}}};
}

Camera camera_from_json(const json& j) {
  Camera c;
  try {
    c.id = j.at("id").get<int>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    const auto& r = j.at("rotation");
    if (r.size() != 9) throw FormatError("camera " + std::to_string(c.id) + ": rotation must have 9 entries");
    for (int i = 0; i < 9; ++i) c.rotation(i / 3, i % 3) = r.at(i).get<double>();
    const auto& t = j.at("translation");
    if (t.size() != 3) throw FormatError("camera " + std::to_string(c.id) + ": translation must have 3 entries");
    for (int i = 0; i < 3; ++i) c.translation[i] = t.at(i).get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("camera record: ") + e.what());
  }
  return c;
}

json light_to_json(const AreaLight& l) {
  auto v3 = [](const Vec3& v) { return json{v.x(), v.y(), v.z()}; };
  return json{{"id", l.id},
              {"origin", v3(l.origin)},
              {"edge_u", v3(l.edge_u)},
              {"edge_v", v3(l.edge_v)},
              {"emittance", {l.emittance[0], l.emittance[1], l.emittance[2]}},
              {"two_sided", l.two_sided}};
}

AreaLight light_from_json(const json& j) {
  AreaLight l;
  try {
    auto v3 = [](const json& a) { return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()); };
    l.id = j.at("id").get<int>();
    l.origin = v3(j.at("origin"));
    l.edge_u = v3(j.at("edge_u"));
    l.edge_v = v3(j.at("edge_v"));
    if (j.contains("emittance")) {
      const auto& e = j.at("emittance");
      if (e.is_number()) l.emittance = Rgb::Constant(e.get<float>());
      else l.emittance = Rgb(e.at(0).get<float>(), e.at(1).get<float>(), e.at(2).get<float>());
    }
    l.two_sided = j.value("two_sided", false);
  } catch (const json::exception& e) {
    throw FormatError(std::string("light record: ") + e.what());
  }
  l.validate();
  return l;
}

}  // namespace

std::vector<Camera> read_cameras_json(const fs::path& path) {
  const json j = io::read_json(path);
  const json& arr = j.is_object() && j.contains("cameras") ? j.at("cameras") : j;
  if (!arr.is_array()) throw FormatError(path.string() + ": expected an array of cameras");
  std::vector<Camera> cams;
  for (const auto& rec : arr) cams.push_back(camera_from_json(rec));
  return cams;
}

void write_cameras_json(const fs::path& path, const std::vector<Camera>& cameras) {
  json arr = json::array();
  for (const auto& c : cameras) arr.push_back(camera_to_json(c));
  io::write_json(path, arr);
}

Camera camera_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("camera JSON: ") + e.what());
  }
  if (j.is_array()) {
    if (j.size() != 1) throw FormatError("camera JSON: expected a single camera record");
    j = j.at(0);
  }
  Camera c = camera_from_json(j);
  c.validate();
  return c;
}

std::vector<AreaLight> read_lights_json(const fs::path& path) {
  const json j = io::read_json(path);
  const json& arr = j.is_object() && j.contains("lights") ? j.at("lights") : j;
  if (!arr.is_array()) throw FormatError(path.string() + ": expected an array of lights");
  std::vector<AreaLight> lights;
  for (const auto& rec : arr) lights.push_back(light_from_json(rec));
  return lights;
}

void write_lights_json(const fs::path& path, const std::vector<AreaLight>& lights) {
  json arr = json::array();
  for (const auto& l : lights) arr.push_back(light_to_json(l));
  io::write_json(path, arr);
}

std::string view_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", index);
  return buf;
}

// ---------------------------------------------------------------------------
// Bundles

MultiViewScene load_scene_bundle(const fs::path& dir) {
  const fs::path cams_path = dir / "cameras.json";
  const fs::path mesh_path = dir / "mesh.ply";
  if (!fs::exists(cams_path)) throw Error("missing file: " + cams_path.string());
  if (!fs::exists(mesh_path)) throw Error("missing file: " + mesh_path.string());
  MultiViewScene scene;
  scene.cameras = read_cameras_json(cams_path);
  scene.mesh = io::read_ply(mesh_path);

  std::size_t image_count = 0;
  if (fs::exists(dir / "images"))
    for (const auto& e : fs::directory_iterator(dir / "images"))
      if (e.path().extension() == ".pfm") ++image_count;
  if (image_count != scene.cameras.size())
    throw ValidationError("camera/image count mismatch: " + std::to_string(scene.cameras.size()) + " cameras, " +
                          std::to_string(image_count) + " images");
  for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
    const std::string stem = view_stem(static_cast<int>(i));
    const fs::path img = dir / "images" / (stem + ".pfm");
    if (!fs::exists(img)) throw Error("missing file: " + img.string());
    RadianceImage ri;
    ri.pixels = io::read_pfm(img);
    const fs::path ppm = dir / "clipmask" / (stem + ".ppm");
    const fs::path pgm = dir / "clipmask" / (stem + ".pgm");
    if (fs::exists(ppm)) {
      ri.clip_mask = io::read_ppm_mask(ppm);
    } else if (fs::exists(pgm)) {
      MaskImage any = io::read_pgm(pgm);
      for (auto& v : any.data()) v = v ? 0x7 : 0;
      ri.clip_mask = std::move(any);
    }
    scene.images.push_back(std::move(ri));
  }
  finalize_scene(scene);
  return scene;
}

void save_scene_bundle(const fs::path& dir, const MultiViewScene& scene, const std::vector<AreaLight>& lights) {
  fs::create_directories(dir / "images");
  write_cameras_json(dir / "cameras.json", scene.cameras);
  io::write_ply(dir / "mesh.ply", scene.mesh);
  for (std::size_t i = 0; i < scene.images.size(); ++i) {
    const std::string stem = view_stem(static_cast<int>(i));
    io::write_pfm(dir / "images" / (stem + ".pfm"), scene.images[i].pixels);
    const MaskImage& bits = scene.images[i].clip_mask;
    if (bits.empty()) continue;
    MaskImage any(bits.width(), bits.height());
    for (std::size_t k = 0; k < bits.size(); ++k) any[k] = bits[k] ? 255 : 0;
    io::write_pgm(dir / "clipmask" / (stem + ".pgm"), any);
    io::write_ppm_mask(dir / "clipmask" / (stem + ".ppm"), bits);
  }
  if (!lights.empty()) write_lights_json(dir / "lights.json", lights);
}

}  // namespace relight
