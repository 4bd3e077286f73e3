#include "relight/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <random>
#include <set>

namespace relight::oracle {

void Material::validate() const {
  if (!rho.allFinite() || (rho < 0.0f).any()) throw ValidationError("material: rho must be >= 0");
  if (!(k_s >= 0.0f && k_s <= 1.0f)) throw ValidationError("material: k_s must lie in [0, 1]");
  if (((1.0f - k_s) * rho > 1.0f).any()) throw ValidationError("material: diffuse reflectance exceeds 1");
  if (!emission.allFinite() || (emission < 0.0f).any()) throw ValidationError("material: emission must be >= 0");
  if (!mirror && !(exponent > 0)) throw ValidationError("material: rough lobe exponent must be positive");
}

void ProceduralSceneSpec::validate() const {
  if (!(room.minCoeff() > 0)) throw ValidationError("scene spec: room dimensions must be positive");
  if (!(tessellation > 0)) throw ValidationError("scene spec: tessellation must be positive");
  if (materials.empty()) throw ValidationError("scene spec: at least one material is required");
  for (const auto& m : materials) m.validate();
  auto check_material = [&](int m, const std::string& who) {
    if (m < 0 || m >= static_cast<int>(materials.size())) throw ValidationError("scene spec: " + who + " material out of range");
  };
  for (int f = 0; f < 6; ++f) check_material(wall_material[f], "wall");
  for (const auto& b : boxes) {
    check_material(b.material, "box");
    if (!(b.half_extent.minCoeff() > 0)) throw ValidationError("scene spec: box extents must be positive");
  }
  for (const auto& s : spheres) {
    check_material(s.material, "sphere");
    if (!(s.radius > 0)) throw ValidationError("scene spec: sphere radius must be positive");
  }
  const int cams = (rig.cube ? 6 : 0) + rig.ring_count + (rig.up_down ? 2 : 0);
  if (cams < 8) throw ValidationError("scene spec: at least 8 cameras are required");
  if (rig.width <= 0 || rig.height <= 0) throw ValidationError("scene spec: camera resolution must be positive");
}

// ---------------------------------------------------------------------------
// Geometry generation

namespace {

Vec3 round_to_float(const Vec3& v) { return v.cast<float>().cast<double>(); }

struct Builder {
  TriangleMesh mesh;
  std::vector<int> material;

  // Grid of nu x nv quads over origin + s*eu + t*ev facing `normal`.
  void quad_grid(const Vec3& origin, const Vec3& eu, const Vec3& ev, int nu, int nv, const Vec3& normal, int mat) {
    const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
    const Vec3 n = round_to_float(normal.normalized());
    for (int j = 0; j <= nv; ++j)
      for (int i = 0; i <= nu; ++i) {
        mesh.vertices.push_back(round_to_float(origin + eu * (double(i) / nu) + ev * (double(j) / nv)));
        mesh.normals.push_back(n);
      }
    const bool flip = eu.cross(ev).dot(normal) < 0;
    auto id = [&](int i, int j) { return base + static_cast<std::uint32_t>(j * (nu + 1) + i); };
    for (int j = 0; j < nv; ++j)
      for (int i = 0; i < nu; ++i) {
        std::array<std::uint32_t, 3> a{id(i, j), id(i + 1, j), id(i + 1, j + 1)};
        std::array<std::uint32_t, 3> b{id(i, j), id(i + 1, j + 1), id(i, j + 1)};
        if (flip) {
          std::swap(a[1], a[2]);
          std::swap(b[1], b[2]);
        }
        mesh.triangles.push_back(a);
        mesh.triangles.push_back(b);
        material.push_back(mat);
        material.push_back(mat);
      }
  }
};

int cells(double length, double tess) { return std::max(1, static_cast<int>(std::lround(length / tess))); }

}  // namespace

TriangleMesh icosphere(int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<std::uint32_t, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                                 {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                                 {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                                 {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      const auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(v.size() - 1);
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<std::uint32_t, 3>> next;
    for (const auto& tri : f) {
      const auto a = midpoint(tri[0], tri[1]), b = midpoint(tri[1], tri[2]), c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f.swap(next);
  }
  TriangleMesh m;
  m.vertices = v;
  m.normals = v;
  m.triangles = f;
  return m;
}

OracleScene gen_procedural_scene(const ProceduralSceneSpec& spec) {
  spec.validate();
  OracleScene o;
  o.room = spec.room;
  o.materials = spec.materials;
  Builder b;
  const double X = spec.room.x(), Y = spec.room.y(), Z = spec.room.z();
  const double tess = spec.tessellation;

  struct FaceDef {
    Vec3 origin, eu, ev, normal;
  };
  const std::array<FaceDef, 6> faces = {{
      {{0, 0, 0}, {0, Y, 0}, {0, 0, Z}, {1, 0, 0}},
      {{X, 0, 0}, {0, Y, 0}, {0, 0, Z}, {-1, 0, 0}},
      {{0, 0, 0}, {X, 0, 0}, {0, 0, Z}, {0, 1, 0}},
      {{0, Y, 0}, {X, 0, 0}, {0, 0, Z}, {0, -1, 0}},
      {{0, 0, 0}, {X, 0, 0}, {0, Y, 0}, {0, 0, 1}},
      {{0, 0, Z}, {X, 0, 0}, {0, Y, 0}, {0, 0, -1}},
  }};
  for (int fi = 0; fi < 6; ++fi) {
    if (!spec.walls[fi]) continue;
    const auto& f = faces[fi];
    b.quad_grid(f.origin, f.eu, f.ev, cells(f.eu.norm(), tess), cells(f.ev.norm(), tess), f.normal,
                spec.wall_material[fi]);
  }

  for (const auto& box : spec.boxes) {
    const Mat3 R = Eigen::AngleAxisd(box.yaw_deg * kPi / 180.0, Vec3::UnitZ()).toRotationMatrix();
    const Vec3 h = box.half_extent;
    for (int axis = 0; axis < 3; ++axis) {
      for (int sign : {-1, 1}) {
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        Vec3 n = Vec3::Zero();
        n[axis] = sign;
        Vec3 origin = -h;
        origin[axis] = sign * h[axis];
        Vec3 eu = Vec3::Zero(), ev = Vec3::Zero();
        eu[a1] = 2 * h[a1];
        ev[a2] = 2 * h[a2];
        b.quad_grid(box.center + R * origin, R * eu, R * ev, cells(eu.norm(), tess), cells(ev.norm(), tess), R * n,
                    box.material);
      }
    }
  }

  for (const auto& s : spec.spheres) {
    const TriangleMesh unit = icosphere(s.subdivisions);
    const auto base = static_cast<std::uint32_t>(b.mesh.vertices.size());
    for (std::size_t i = 0; i < unit.vertices.size(); ++i) {
      b.mesh.vertices.push_back(round_to_float(s.center + s.radius * unit.vertices[i]));
      b.mesh.normals.push_back(round_to_float(unit.normals[i]));
    }
    for (const auto& t : unit.triangles) {
      b.mesh.triangles.push_back({base + t[0], base + t[1], base + t[2]});
      b.material.push_back(s.material);
    }
  }

  for (std::size_t k = 0; k < spec.emitters.size(); ++k) {
    const auto& e = spec.emitters[k];
    Material m;
    m.rho = Rgb::Zero();
    m.emission = e.emission;
    o.materials.push_back(m);
    const Vec3 n = e.edge_u.cross(e.edge_v);
    b.quad_grid(e.origin, e.edge_u, e.edge_v, 1, 1, n, static_cast<int>(o.materials.size()) - 1);
    AreaLight light;
    light.id = static_cast<int>(k);
    light.origin = round_to_float(e.origin);
    light.edge_u = round_to_float(e.origin + e.edge_u) - light.origin;
    light.edge_v = round_to_float(e.origin + e.edge_v) - light.origin;
    light.emittance = e.emission;
    o.lights.push_back(light);
  }

  // Unit-length normals after float rounding, within validation tolerance.
  for (auto& n : b.mesh.normals) n = round_to_float(n.normalized());
  o.scene.mesh = std::move(b.mesh);
  o.triangle_material = std::move(b.material);

  const CameraRig& rig = spec.rig;
  const Vec3 center(X / 2, Y / 2, Z / 2);
  const Vec3 target = rig.target.isZero() ? Vec3(X / 2, Y / 2, rig.ring_height - 0.3) : rig.target;
  int id = 0;
  auto add = [&](const Vec3& eye, const Vec3& at, const Vec3& up) {
    o.scene.cameras.push_back(Camera::look_at(id++, rig.width, rig.height, rig.fov_x_deg, eye, at, up));
  };
  if (rig.cube) {
    add(center, center + Vec3::UnitX(), Vec3::UnitZ());
    add(center, center - Vec3::UnitX(), Vec3::UnitZ());
    add(center, center + Vec3::UnitY(), Vec3::UnitZ());
    add(center, center - Vec3::UnitY(), Vec3::UnitZ());
    add(center, center + Vec3::UnitZ(), Vec3::UnitY());
    add(center, center - Vec3::UnitZ(), Vec3::UnitY());
  }
  for (int i = 0; i < rig.ring_count; ++i) {
    const double a = 2.0 * kPi * i / rig.ring_count;
    const Vec3 eye(X / 2 + rig.ring_radius * std::cos(a), Y / 2 + rig.ring_radius * std::sin(a), rig.ring_height);
    add(eye, target, Vec3::UnitZ());
  }
  if (rig.up_down) {
    const Vec3 eye(X / 2, Y / 2, rig.ring_height);
    add(eye, Vec3(X / 2, Y / 2, Z), Vec3::UnitY());
    add(eye, Vec3(X / 2, Y / 2, 0), Vec3::UnitY());
  }
  o.scene.mesh.validate();
  return o;
}

std::shared_ptr<const Bvh> build_bvh(const OracleScene& o) { return std::make_shared<const Bvh>(o.scene.mesh); }

// ---------------------------------------------------------------------------
// Image synthesis

Rgb procedural_texture(const Vec3& x) {
  const double r = 0.5 + 0.2 * std::sin(2.1 * x.x() + 0.3) * std::cos(1.7 * x.y()) + 0.15 * std::sin(2.9 * x.z() + x.x());
  const double g = 0.5 + 0.2 * std::cos(1.9 * x.y() + 0.8) * std::sin(1.3 * x.z()) + 0.15 * std::cos(2.3 * x.x() - x.z());
  const double b = 0.5 + 0.2 * std::sin(1.5 * x.z() + 1.1) * std::cos(2.5 * x.x()) + 0.15 * std::sin(2.7 * x.y());
  return Rgb(static_cast<float>(r), static_cast<float>(g), static_cast<float>(b));
}

RgbImage render_radiance_field(const Bvh& bvh, const Camera& camera, const RadianceField& field) {
  RgbImage img(camera.width, camera.height, Rgb::Zero());
  parallel_for(camera.height, [&](int y) {
    for (int x = 0; x < camera.width; ++x)
      if (const auto h = bvh.intersect(camera.primary_ray(x, y))) img(x, y) = field(*h);
  });
  return img;
}

GtRender render_ground_truth(const OracleScene& o, const Bvh& bvh, const Camera& camera, const GtOptions& options) {
  if (options.spp < 1 || options.max_depth < 1) throw Error("render_ground_truth: spp and max_depth must be >= 1");
  if (o.triangle_material.size() != bvh.mesh().triangles.size())
    throw Error("render_ground_truth: material table does not match mesh");
  GtRender out;
  out.diffuse = RgbImage(camera.width, camera.height, Rgb::Zero());
  out.vdep = RgbImage(camera.width, camera.height, Rgb::Zero());
  const double eps = 1e-4 * bvh.mesh().bbox_diagonal();

  parallel_for(camera.height, [&](int py) {
    for (int px = 0; px < camera.width; ++px) {
      Eigen::Array3d diffuse = Eigen::Array3d::Zero(), vdep = Eigen::Array3d::Zero();
      const std::size_t pix = static_cast<std::size_t>(py) * camera.width + px;
      for (int s = 0; s < options.spp; ++s) {
        auto rng = SampleStream::keyed(options.seed, camera.id, pix, s);
        Ray ray = camera.primary_ray(px, py);
        Eigen::Array3d throughput = Eigen::Array3d::Ones();
        bool specular_path = false;
        bool count_emission = true;
        for (int depth = 0; depth < options.max_depth; ++depth) {
          const auto hit = bvh.intersect(ray);
          if (!hit) break;
          const Material& m = o.materials[o.triangle_material[hit->triangle]];
          Eigen::Array3d& sink = (specular_path && options.split) ? vdep : diffuse;
          if (count_emission && hit->geometric_normal.dot(ray.direction) < 0)
            sink += throughput * m.emission.cast<double>();
          const Vec3 n = facing_normal(hit->normal, ray.direction);
          const Eigen::Array3d diffuse_brdf = (1.0 - m.k_s) * m.rho.cast<double>() / kPi;
          if ((diffuse_brdf > 0).any()) {
            for (const auto& L : o.lights) {
              const Vec2 u = rng.next2();
              const Vec3 q = L.origin + u.x() * L.edge_u + u.y() * L.edge_v;
              const Vec3 to = q - hit->position;
              const double d2 = to.squaredNorm();
              const double d = std::sqrt(d2);
              const Vec3 dir = to / d;
              const double cos_x = dir.dot(n);
              const double cos_l = -dir.dot(L.normal());
              if (cos_x <= 0 || cos_l <= 0) continue;
              if (bvh.occluded(Ray{hit->position + eps * dir, dir, 0.0, d - 2 * eps})) continue;
              sink += throughput * diffuse_brdf * L.emittance.cast<double>() * (cos_x * cos_l * L.area() / d2);
            }
          }
          const double pick = rng.next();
          const Vec2 u = rng.next2();
          Vec3 dir;
          if (pick < m.k_s) {
            const Vec3 r = reflect(ray.direction, n).normalized();
            if (m.mirror) {
              dir = r;
            } else {
              const double cos_t = std::pow(u.x(), 1.0 / (m.exponent + 1.0));
              const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
              const double phi = 2.0 * kPi * u.y();
              dir = Frame(r).to_world(Vec3(sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t));
              if (dir.dot(n) <= 0) break;
            }
            specular_path = true;
            count_emission = true;
          } else {
            if (m.k_s >= 1.0f) break;
            dir = Frame(n).to_world(sample_cosine_hemisphere(u));
            throughput *= m.rho.cast<double>();
            count_emission = false;
          }
          if ((throughput <= 0).all()) break;
          ray = spawn_ray(hit->position, dir, eps);
        }
      }
      out.diffuse[pix] = (diffuse / options.spp).cast<float>();
      out.vdep[pix] = (vdep / options.spp).cast<float>();
    }
  });
  return out;
}

void attach_images(OracleScene& o, const std::vector<RgbImage>& images) {
  if (images.size() != o.scene.cameras.size()) throw Error("attach_images: one image per camera required");
  o.scene.images.clear();
  for (const auto& img : images) {
    RadianceImage r;
    r.pixels = img;
    o.scene.images.push_back(std::move(r));
  }
  finalize_scene(o.scene);
}

void render_gt_images(OracleScene& o, const GtOptions& options) {
  const auto bvh = build_bvh(o);
  std::vector<RgbImage> images;
  for (const auto& cam : o.scene.cameras) {
    GtOptions opt = options;
    opt.split = false;
    images.push_back(render_ground_truth(o, *bvh, cam, opt).diffuse);
  }
  attach_images(o, images);
}

void render_field_images(OracleScene& o, const RadianceField& field) {
  const auto bvh = build_bvh(o);
  std::vector<RgbImage> images;
  for (const auto& cam : o.scene.cameras) images.push_back(render_radiance_field(*bvh, cam, field));
  attach_images(o, images);
}

// ---------------------------------------------------------------------------
// Quadrature oracle

std::optional<Rgb> brute_force_irradiance(const MultiViewScene& scene, const Vec3& point, const Vec3& normal,
                                          int exclude_view, int theta_res, int phi_res, double tol) {
  const Frame frame(normal.normalized());
  const double eps = scene.ray_epsilon();
  const double dt = 0.5 * kPi / theta_res, dp = 2.0 * kPi / phi_res;
  Eigen::Array3d sum = Eigen::Array3d::Zero();
  double wsum = 0.0;
  for (int i = 0; i < theta_res; ++i) {
    const double theta = (i + 0.5) * dt;
    const double w = std::cos(theta) * std::sin(theta);
    for (int j = 0; j < phi_res; ++j) {
      const double phi = (j + 0.5) * dp;
      const Vec3 dir = frame.to_world(
          Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)));
      const auto y = scene.bvh->intersect(Ray{point + eps * dir, dir, 0.0, kInf});
      if (!y) continue;
      int best = -1;
      double best_dot = -kInf;
      Vec2 best_px;
      for (std::size_t v = 0; v < scene.cameras.size(); ++v) {
        if (static_cast<int>(v) == exclude_view) continue;
        const auto p = visible_projection(scene, y->position, static_cast<int>(v), tol);
        if (!p) continue;
        const double d = (y->position - scene.cameras[v].center()).normalized().dot(dir);
        if (best < 0 || d > best_dot || (d == best_dot && scene.cameras[v].id < scene.cameras[best].id)) {
          best = static_cast<int>(v);
          best_dot = d;
          best_px = *p;
        }
      }
      if (best < 0) continue;
      sum += w * sample_bilinear(scene.images[best].pixels, best_px).cast<double>();
      wsum += w;
    }
  }
  if (wsum <= 0) return std::nullopt;
  return (kPi * sum / wsum).cast<float>();
}

// ---------------------------------------------------------------------------
// Mesh degradation

TriangleMesh degrade_mesh(const TriangleMesh& mesh, double vertex_noise, double decimation, std::uint64_t seed) {
  if (!(vertex_noise >= 0)) throw Error("degrade_mesh: vertex_noise must be >= 0");
  if (!(decimation >= 0 && decimation < 1)) throw Error("degrade_mesh: decimation must lie in [0, 1)");
  TriangleMesh out = mesh;
  if (vertex_noise == 0 && decimation == 0) return out;
  out.albedo.clear();
  out.albedo_seen.clear();

  if (vertex_noise > 0) {
    const double bound = vertex_noise * mesh.bbox_diagonal();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 0.5 * bound);
    for (auto& v : out.vertices) {
      Vec3 d(gauss(rng), gauss(rng), gauss(rng));
      const double len = d.norm();
      if (len > bound) d *= bound / len;
      v += d;
    }
  }

  if (decimation > 0) {
    const std::size_t target =
        static_cast<std::size_t>(std::lround((1.0 - decimation) * static_cast<double>(out.triangles.size())));
    std::vector<std::vector<std::uint32_t>> incident(out.vertices.size());
    for (std::uint32_t t = 0; t < out.triangles.size(); ++t)
      for (auto v : out.triangles[t]) incident[v].push_back(t);
    std::vector<std::uint8_t> tri_alive(out.triangles.size(), 1), vert_alive(out.vertices.size(), 1);
    std::vector<std::uint32_t> version(out.vertices.size(), 0);
    std::size_t alive = out.triangles.size();

    struct Edge {
      double length;
      std::uint32_t a, b, va, vb;
      bool operator>(const Edge& o) const {
        if (length != o.length) return length > o.length;
        return std::tie(a, b) > std::tie(o.a, o.b);
      }
    };
    std::priority_queue<Edge, std::vector<Edge>, std::greater<>> queue;
    auto push_edges_of = [&](std::uint32_t v) {
      for (auto t : incident[v]) {
        if (!tri_alive[t]) continue;
        for (auto w : out.triangles[t]) {
          if (w == v) continue;
          const auto a = std::min(v, w), b = std::max(v, w);
          queue.push({(out.vertices[a] - out.vertices[b]).norm(), a, b, version[a], version[b]});
        }
      }
    };
    for (std::uint32_t v = 0; v < out.vertices.size(); ++v) push_edges_of(v);

    while (alive > target && !queue.empty()) {
      const Edge e = queue.top();
      queue.pop();
      if (!vert_alive[e.a] || !vert_alive[e.b] || version[e.a] != e.va || version[e.b] != e.vb) continue;
      // Collapse b into a at the edge midpoint.
      out.vertices[e.a] = 0.5 * (out.vertices[e.a] + out.vertices[e.b]);
      vert_alive[e.b] = 0;
      ++version[e.a];
      for (auto t : incident[e.b]) {
        if (!tri_alive[t]) continue;
        auto& tri = out.triangles[t];
        for (auto& v : tri)
          if (v == e.b) v = e.a;
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
          tri_alive[t] = 0;
          --alive;
        } else {
          incident[e.a].push_back(t);
        }
      }
      incident[e.b].clear();
      push_edges_of(e.a);
    }

    std::vector<std::array<std::uint32_t, 3>> kept;
    std::set<std::array<std::uint32_t, 3>> seen;
    for (std::size_t t = 0; t < out.triangles.size(); ++t) {
      if (!tri_alive[t]) continue;
      auto key = out.triangles[t];
      std::sort(key.begin(), key.end());
      if (!seen.insert(key).second) continue;
      kept.push_back(out.triangles[t]);
    }
    // Compact vertices.
    std::vector<std::int64_t> remap(out.vertices.size(), -1);
    TriangleMesh compact;
    for (auto& tri : kept)
      for (auto& v : tri) {
        if (remap[v] < 0) {
          remap[v] = static_cast<std::int64_t>(compact.vertices.size());
          compact.vertices.push_back(out.vertices[v]);
        }
        v = static_cast<std::uint32_t>(remap[v]);
      }
    compact.triangles = std::move(kept);
    out = std::move(compact);
  }
  out.remove_degenerate();
  out.recompute_normals();
  return out;
}

// ---------------------------------------------------------------------------
// Presets

ProceduralSceneSpec preset_spec(const std::string& name) {
  ProceduralSceneSpec s;
  if (name == "furnace") {
    s.room = Vec3(3.0, 3.0, 3.0);
    s.tessellation = 0.5;
    s.rig.cube = true;
    s.rig.ring_count = 2;
    s.rig.ring_radius = 0.5;
    s.rig.ring_height = 1.5;
    s.rig.up_down = false;
    s.rig.fov_x_deg = 110.0;
  } else if (name == "two_box") {
    s.room = Vec3(4.0, 3.0, 2.5);
    BoxObject a;
    a.center = Vec3(1.2, 0.9, 0.35);
    a.half_extent = Vec3(0.35, 0.3, 0.35);
    a.yaw_deg = 20.0;
    BoxObject b;
    b.center = Vec3(2.9, 2.1, 0.5);
    b.half_extent = Vec3(0.3, 0.3, 0.5);
    b.yaw_deg = -15.0;
    s.boxes = {a, b};
    s.rig.ring_radius = 1.0;
    s.rig.ring_height = 1.6;
  } else if (name == "lambertian") {
    s.room = Vec3(3.0, 3.0, 2.5);
    s.tessellation = 0.2;
    s.materials[0].rho = Rgb(0.6f, 0.3f, 0.3f);
    EmitterPanel e;
    e.origin = Vec3(0.9, 0.9, 2.49);
    e.edge_u = Vec3(0.0, 1.2, 0.0);
    e.edge_v = Vec3(1.2, 0.0, 0.0);
    e.emission = Rgb::Constant(1.25f);
    s.emitters = {e};
    s.rig.ring_radius = 0.9;
    // The cube views see every wall point; ring views alone miss the upper walls.
    s.rig.cube = true;
    s.rig.fov_x_deg = 110.0;
  } else if (name == "mirror") {
    s.room = Vec3(4.0, 3.0, 2.5);
    Material floor;
    floor.rho = Rgb::Constant(0.8f);
    floor.k_s = 1.0f;
    s.materials.push_back(floor);
    s.wall_material[kZMin] = 1;
    s.rig.ring_radius = 1.0;
    s.rig.ring_height = 1.5;
  } else {
    throw Error("unknown preset '" + name + "'");
  }
  return s;
}

namespace {

ProceduralSceneSpec sized(ProceduralSceneSpec s, int width, int height) {
  s.rig.width = width;
  s.rig.height = height;
  return s;
}

}  // namespace

OracleScene furnace_scene(int width, int height, float radiance) {
  OracleScene o = gen_procedural_scene(sized(preset_spec("furnace"), width, height));
  std::vector<RgbImage> images(o.scene.cameras.size(), RgbImage(width, height, Rgb::Constant(radiance)));
  attach_images(o, images);
  return o;
}

OracleScene two_box_scene(int width, int height, int ring_count) {
  auto spec = sized(preset_spec("two_box"), width, height);
  spec.rig.ring_count = ring_count;
  OracleScene o = gen_procedural_scene(spec);
  render_field_images(o, [](const Hit& h) { return procedural_texture(h.position); });
  return o;
}

OracleScene lambertian_box_scene(int width, int height, const Rgb& rho, const GtOptions& gt) {
  auto spec = sized(preset_spec("lambertian"), width, height);
  spec.materials[0].rho = rho;
  OracleScene o = gen_procedural_scene(spec);
  render_gt_images(o, gt);
  return o;
}

OracleScene mirror_box_scene(int width, int height, int ring_count) {
  auto spec = sized(preset_spec("mirror"), width, height);
  spec.rig.ring_count = ring_count;
  OracleScene o = gen_procedural_scene(spec);
  render_field_images(o, [](const Hit& h) { return procedural_texture(h.position); });
  return o;
}

}  // namespace relight::oracle
