#include "relight/irradiance.hpp"

#include "relight/io.hpp"
#include "relight/nnls.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace relight::irradiance {

namespace {

constexpr std::uint64_t kBounceTag = 0xb0b0;
constexpr std::uint64_t kLightTag = 0x119e7;

std::size_t pixel_index(const Camera& cam, int x, int y) { return static_cast<std::size_t>(y) * cam.width + x; }

}  // namespace

std::optional<ViewSample> select_view(const MultiViewScene& scene, const Vec3& point, const Vec3& direction,
                                      int exclude_view, double tol) {
  std::optional<ViewSample> best;
  double best_dot = -kInf;
  int best_id = 0;
  for (std::size_t j = 0; j < scene.cameras.size(); ++j) {
    if (static_cast<int>(j) == exclude_view) continue;
    const auto p = visible_projection(scene, point, static_cast<int>(j), tol);
    if (!p) continue;
    const Camera& cam = scene.cameras[j];
    const double d = (point - cam.center()).normalized().dot(direction);
    if (!best || d > best_dot || (d == best_dot && cam.id < best_id)) {
      best = ViewSample{static_cast<int>(j), *p};
      best_dot = d;
      best_id = cam.id;
    }
  }
  return best;
}

bool sample_is_clipped(const RadianceImage& img, const Vec2& pixel) {
  if (img.clip_mask.empty()) return false;
  const int x = std::clamp(static_cast<int>(pixel.x()), 0, img.width() - 1);
  const int y = std::clamp(static_cast<int>(pixel.y()), 0, img.height() - 1);
  return img.clip_mask(x, y) != 0;
}

SourceIrradiance estimate_source_irradiance(const MultiViewScene& scene, int view, const SourceOptions& options) {
  if (options.spp < 1) throw Error("estimate_source_irradiance: spp must be >= 1");
  const Camera& cam = scene.cameras.at(view);
  const GBuffer gb = render_gbuffer(*scene.bvh, cam);
  SourceIrradiance out;
  out.e_src = RgbImage(cam.width, cam.height, Rgb::Zero());
  out.e_src_nc = RgbImage(cam.width, cam.height, Rgb::Zero());
  out.valid = MaskImage(cam.width, cam.height, 0);
  const double eps = scene.ray_epsilon();
  const Vec3 eye = cam.center();

  parallel_for(cam.height, [&](int y) {
    for (int x = 0; x < cam.width; ++x) {
      const auto& hit = gb.at(x, y);
      if (!hit) continue;
      const Vec3 n = facing_normal(hit->normal, hit->position - eye);
      const Frame frame(n);
      const std::size_t pix = pixel_index(cam, x, y);
      Eigen::Array3d sum = Eigen::Array3d::Zero(), sum_nc = Eigen::Array3d::Zero();
      int count = 0;
      for (int s = 0; s < options.spp; ++s) {
        auto stream = SampleStream::keyed(options.seed, cam.id, pix, s);
        const Vec3 dir = frame.to_world(sample_cosine_hemisphere(stream.next2()));
        const auto second = scene.bvh->intersect(spawn_ray(hit->position, dir, eps));
        if (!second) continue;
        const auto pick = select_view(scene, second->position, dir, view, options.visibility_tol);
        if (!pick) continue;
        const RadianceImage& img = scene.images[pick->view];
        const Eigen::Array3d value = sample_bilinear(img.pixels, pick->pixel).cast<double>();
        sum += value;
        if (!sample_is_clipped(img, pick->pixel)) sum_nc += value;
        ++count;
      }
      if (count == 0) continue;
      out.e_src[pix] = (kPi * sum / count).cast<float>();
      out.e_src_nc[pix] = (kPi * sum_nc / count).cast<float>();
      out.valid[pix] = 1;
    }
  });
  return out;
}

NormalMap normal_map(const GBuffer& gbuffer) {
  NormalMap nm(gbuffer.width, gbuffer.height, Eigen::Vector3f::Zero());
  for (int y = 0; y < gbuffer.height; ++y)
    for (int x = 0; x < gbuffer.width; ++x)
      if (const auto& h = gbuffer.at(x, y)) nm(x, y) = h->normal.cast<float>();
  return nm;
}

RgbImage denoise_irradiance(const RgbImage& e, const FloatImage& depth, const NormalMap& normals,
                            const DenoiseOptions& options) {
  if (!e.same_shape(depth) || !e.same_shape(normals)) throw Error("denoise_irradiance: maps are not aligned");
  const int r = options.radius;
  const int w = r * 2 + 1;
  std::vector<double> spatial(static_cast<std::size_t>(w) * w);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      spatial[static_cast<std::size_t>(dy + r) * w + (dx + r)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * options.spatial_sigma * options.spatial_sigma));
  const double normal_sigma = options.normal_sigma_deg * kPi / 180.0;
  const double inv_2ns2 = 1.0 / (2.0 * normal_sigma * normal_sigma);

  RgbImage out = e;
  parallel_for(e.height(), [&](int y) {
    for (int x = 0; x < e.width(); ++x) {
      const float dp = depth(x, y);
      if (!std::isfinite(dp)) continue;
      const Eigen::Vector3f np = normals(x, y);
      const double dsig = options.depth_sigma_rel * dp;
      const double inv_2ds2 = 1.0 / (2.0 * dsig * dsig);
      Eigen::Array3d acc = Eigen::Array3d::Zero();
      double wsum = 0.0;
      for (int qy = std::max(0, y - r); qy <= std::min(e.height() - 1, y + r); ++qy) {
        for (int qx = std::max(0, x - r); qx <= std::min(e.width() - 1, x + r); ++qx) {
          const float dq = depth(qx, qy);
          if (!std::isfinite(dq)) continue;
          const double dd = dq - dp;
          const double cosang = std::clamp(static_cast<double>(np.dot(normals(qx, qy))), -1.0, 1.0);
          const double ang = std::acos(cosang);
          const double wgt = spatial[static_cast<std::size_t>(qy - y + r) * w + (qx - x + r)] *
                             std::exp(-dd * dd * inv_2ds2 - ang * ang * inv_2ns2);
          acc += wgt * e(qx, qy).cast<double>();
          wsum += wgt;
        }
      }
      if (wsum > 0) out(x, y) = (acc / wsum).cast<float>();
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Clusters

VoxelKey voxel_of(const Vec3& p, double voxel_size) {
  return {static_cast<int>(std::floor(p.x() / voxel_size)), static_cast<int>(std::floor(p.y() / voxel_size)),
          static_cast<int>(std::floor(p.z() / voxel_size))};
}

bool LightCluster::contains_voxel(const VoxelKey& k) const { return std::binary_search(voxels.begin(), voxels.end(), k); }

namespace {

struct Sphere {
  Vec3 center;
  double radius;
};

Sphere enclose(const Sphere& a, const Sphere& b) {
  const Vec3 d = b.center - a.center;
  const double dist = d.norm();
  if (dist + b.radius <= a.radius) return a;
  if (dist + a.radius <= b.radius) return b;
  const double r = 0.5 * (dist + a.radius + b.radius);
  const Vec3 c = a.center + d / dist * (r - a.radius);
  return {c, r};
}

Sphere voxel_sphere(const VoxelKey& k, double s) {
  const Vec3 c((k.x + 0.5) * s, (k.y + 0.5) * s, (k.z + 0.5) * s);
  return {c, 0.5 * std::sqrt(3.0) * s};
}

struct KeyHash {
  std::size_t operator()(const VoxelKey& k) const { return hash_combine(0, k.x, k.y, k.z); }
};

}  // namespace

LightCluster make_cluster(int id, std::vector<VoxelKey> voxels, double voxel_size) {
  if (voxels.empty()) throw Error("make_cluster: empty voxel set");
  std::sort(voxels.begin(), voxels.end());
  voxels.erase(std::unique(voxels.begin(), voxels.end()), voxels.end());
  LightCluster c;
  c.id = id;
  c.voxel_size = voxel_size;
  Sphere s = voxel_sphere(voxels.front(), voxel_size);
  for (const auto& k : voxels) s = enclose(s, voxel_sphere(k, voxel_size));
  c.voxels = std::move(voxels);
  c.center = s.center;
  c.radius = s.radius;
  return c;
}

std::vector<LightCluster> detect_light_clusters(const MultiViewScene& scene, double voxel_size, double clip_fraction) {
  struct Tally {
    int total = 0;
    int clipped = 0;
  };
  std::unordered_map<VoxelKey, Tally, KeyHash> tally;
  for (std::size_t v = 0; v < scene.cameras.size(); ++v) {
    const RadianceImage& img = scene.images[v];
    if (img.clip_mask.empty()) continue;
    const GBuffer gb = render_gbuffer(*scene.bvh, scene.cameras[v]);
    for (int y = 0; y < gb.height; ++y)
      for (int x = 0; x < gb.width; ++x) {
        const auto& h = gb.at(x, y);
        if (!h) continue;
        Tally& t = tally[voxel_of(h->position, voxel_size)];
        ++t.total;
        if (img.clip_mask(x, y)) ++t.clipped;
      }
  }
  std::vector<VoxelKey> marked;
  for (const auto& [k, t] : tally)
    if (t.total > 0 && t.clipped >= clip_fraction * t.total) marked.push_back(k);
  std::sort(marked.begin(), marked.end());
  if (marked.empty()) return {};

  // Each marked voxel seeds a cluster; merge while any two bounding spheres intersect.
  struct Group {
    std::vector<VoxelKey> voxels;
    Sphere sphere;
  };
  std::vector<Group> groups;
  groups.reserve(marked.size());
  for (const auto& k : marked) groups.push_back({{k}, voxel_sphere(k, voxel_size)});
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < groups.size() && !merged; ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        const double d = (groups[i].sphere.center - groups[j].sphere.center).norm();
        if (d > groups[i].sphere.radius + groups[j].sphere.radius) continue;
        // Absorb every group intersecting i in this sweep before rescanning.
        for (std::size_t k = j; k < groups.size();) {
          const double dk = (groups[i].sphere.center - groups[k].sphere.center).norm();
          if (dk <= groups[i].sphere.radius + groups[k].sphere.radius) {
            groups[i].sphere = enclose(groups[i].sphere, groups[k].sphere);
            groups[i].voxels.insert(groups[i].voxels.end(), groups[k].voxels.begin(), groups[k].voxels.end());
            groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(k));
          } else {
            ++k;
          }
        }
        merged = true;
        break;
      }
    }
  }

  std::vector<LightCluster> clusters;
  for (auto& g : groups) {
    LightCluster c;
    c.id = static_cast<int>(clusters.size());
    c.voxel_size = voxel_size;
    std::sort(g.voxels.begin(), g.voxels.end());
    c.voxels = std::move(g.voxels);
    c.center = g.sphere.center;
    c.radius = g.sphere.radius;
    clusters.push_back(std::move(c));
  }
  return clusters;
}

RgbImage cluster_irradiance(const MultiViewScene& scene, int view, const LightCluster& cluster, int spp,
                            std::uint64_t seed) {
  if (spp < 1) throw Error("cluster_irradiance: spp must be >= 1");
  const Camera& cam = scene.cameras.at(view);
  const GBuffer gb = render_gbuffer(*scene.bvh, cam);
  RgbImage out(cam.width, cam.height, Rgb::Zero());
  const double eps = scene.ray_epsilon();
  const Vec3 eye = cam.center();

  parallel_for(cam.height, [&](int y) {
    for (int x = 0; x < cam.width; ++x) {
      const auto& hit = gb.at(x, y);
      if (!hit) continue;
      const Vec3 n = facing_normal(hit->normal, hit->position - eye);
      const Vec3 to_center = cluster.center - hit->position;
      const double dist = to_center.norm();
      const bool inside = dist <= cluster.radius;
      const double cos_max = inside ? -1.0 : std::sqrt(std::max(0.0, 1.0 - std::pow(cluster.radius / dist, 2)));
      const double solid_angle = 2.0 * kPi * (1.0 - cos_max);
      const Frame frame(inside ? n : Vec3(to_center / dist));
      const std::size_t pix = pixel_index(cam, x, y);
      double sum = 0.0;
      for (int s = 0; s < spp; ++s) {
        auto stream = SampleStream::keyed(seed, cam.id, pix, s, static_cast<std::uint64_t>(cluster.id), kLightTag);
        const Vec3 dir = frame.to_world(sample_uniform_cone(stream.next2(), cos_max));
        const double cos_theta = dir.dot(n);
        if (cos_theta <= 0) continue;
        const auto h = scene.bvh->intersect(spawn_ray(hit->position, dir, eps));
        if (!h || !cluster.contains_voxel(voxel_of(h->position, cluster.voxel_size))) continue;
        sum += cos_theta;
      }
      out(x, y) = Rgb::Constant(static_cast<float>(sum * solid_angle / spp));
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Click groups and the light-level solve

void AlbedoClickSet::validate(const MultiViewScene* scene) const {
  if (groups.empty()) throw ValidationError("clicks: at least one group is required");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() < 2) throw ValidationError("clicks: group " + std::to_string(g) + " needs >= 2 points");
    if (!scene) continue;
    for (const auto& p : groups[g]) {
      if (p.view < 0 || p.view >= static_cast<int>(scene->view_count()))
        throw ValidationError("clicks: group " + std::to_string(g) + " references unknown view");
      const Camera& c = scene->cameras[p.view];
      if (p.x < 0 || p.y < 0 || p.x >= c.width || p.y >= c.height)
        throw ValidationError("clicks: group " + std::to_string(g) + " pixel out of range");
    }
  }
}

AlbedoClickSet read_clicks_json(const std::filesystem::path& path) {
  const auto j = io::read_json(path);
  AlbedoClickSet set;
  try {
    for (const auto& g : j.at("groups")) {
      std::vector<ClickPoint> pts;
      for (const auto& p : g.at("points"))
        pts.push_back({p.at("view").get<int>(), p.at("x").get<int>(), p.at("y").get<int>()});
      set.groups.push_back(std::move(pts));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return set;
}

void write_clicks_json(const std::filesystem::path& path, const AlbedoClickSet& clicks) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : clicks.groups) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : g) pts.push_back({{"view", p.view}, {"x", p.x}, {"y", p.y}});
    groups.push_back({{"points", pts}});
  }
  io::write_json(path, {{"groups", groups}});
}

ClippedLightSolution solve_clipped_lights(std::span<const ClickObservation> observations, int cluster_count,
                                          int group_count) {
  if (observations.empty()) throw Error("solve_clipped_lights: no observations");
  const Eigen::Index rows = static_cast<Eigen::Index>(observations.size());
  const Eigen::Index cols = cluster_count + group_count;
  ClippedLightSolution sol;
  sol.alpha.assign(static_cast<std::size_t>(cluster_count), Rgb::Zero());
  sol.beta.assign(static_cast<std::size_t>(group_count), Rgb::Zero());
  for (int c = 0; c < 3; ++c) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXd b(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const ClickObservation& o = observations[static_cast<std::size_t>(r)];
      if (static_cast<int>(o.e_cluster.size()) != cluster_count)
        throw Error("solve_clipped_lights: observation cluster count mismatch");
      if (o.group < 0 || o.group >= group_count) throw Error("solve_clipped_lights: bad group index");
      for (int l = 0; l < cluster_count; ++l) A(r, l) = o.e_cluster[static_cast<std::size_t>(l)][c];
      A(r, cluster_count + o.group) = -o.image[c];
      b[r] = -o.e_nc[c];
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    const double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
    const double cond = smin > 0 ? smax / smin : kInf;
    if (rows < cols || !(smin > 1e-12 * std::max(1.0, smax))) {
      throw IllConditionedError("solve_clipped_lights: ill-conditioned system in channel " + std::to_string(c) +
                                    " (rows " + std::to_string(rows) + ", unknowns " + std::to_string(cols) +
                                    ", sigma_max " + std::to_string(smax) + ", sigma_min " + std::to_string(smin) +
                                    ")",
                                cond);
    }
    const NnlsResult res = solve_nnls(A, b);
    for (int l = 0; l < cluster_count; ++l) sol.alpha[static_cast<std::size_t>(l)][c] = static_cast<float>(res.x[l]);
    for (int g = 0; g < group_count; ++g)
      sol.beta[static_cast<std::size_t>(g)][c] = static_cast<float>(res.x[cluster_count + g]);
    sol.residual[c] = static_cast<float>(res.residual_norm);
    sol.condition[c] = static_cast<float>(cond);
  }
  return sol;
}

ClippedLightSolution solve_clipped_lights(const std::vector<RgbImage>& e_src_nc,
                                          const std::vector<std::vector<RgbImage>>& e_cluster,
                                          const std::vector<RgbImage>& images, const AlbedoClickSet& clicks) {
  clicks.validate();
  std::vector<ClickObservation> obs;
  for (std::size_t g = 0; g < clicks.groups.size(); ++g) {
    for (const auto& p : clicks.groups[g]) {
      if (p.view < 0 || p.view >= static_cast<int>(images.size()) || p.view >= static_cast<int>(e_src_nc.size()))
        throw ValidationError("clicks: unknown view " + std::to_string(p.view));
      const RgbImage& img = images[static_cast<std::size_t>(p.view)];
      if (p.x < 0 || p.y < 0 || p.x >= img.width() || p.y >= img.height())
        throw ValidationError("clicks: pixel out of range in view " + std::to_string(p.view));
      ClickObservation o;
      o.group = static_cast<int>(g);
      o.image = img(p.x, p.y);
      o.e_nc = e_src_nc[static_cast<std::size_t>(p.view)](p.x, p.y);
      for (const auto& cl : e_cluster) o.e_cluster.push_back(cl.at(static_cast<std::size_t>(p.view))(p.x, p.y));
      obs.push_back(std::move(o));
    }
  }
  return solve_clipped_lights(obs, static_cast<int>(e_cluster.size()), static_cast<int>(clicks.groups.size()));
}

RgbImage combine_source_irradiance(const RgbImage& e_nc, const std::vector<const RgbImage*>& e_cluster,
                                   const std::vector<Rgb>& alpha) {
  if (e_cluster.size() != alpha.size()) throw Error("combine_source_irradiance: cluster/alpha count mismatch");
  RgbImage out = e_nc;
  for (std::size_t l = 0; l < e_cluster.size(); ++l) {
    if (!e_cluster[l]->same_shape(e_nc)) throw Error("combine_source_irradiance: map size mismatch");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha[l] * (*e_cluster[l])[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Albedo mesh

float irradiance_floor(const std::vector<RgbImage>& e_src) {
  std::vector<float> values;
  for (const auto& img : e_src)
    for (const auto& p : img.data())
      for (int c = 0; c < 3; ++c)
        if (p[c] > 0) values.push_back(p[c]);
  if (values.empty()) return 1e-8f;
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return std::max(1e-12f, 1e-4f * *mid);
}

TriangleMesh build_albedo_mesh(const MultiViewScene& scene, const std::vector<RgbImage>& e_src,
                               const AlbedoOptions& options) {
  if (e_src.size() != scene.view_count()) throw Error("build_albedo_mesh: need one E_src map per view");
  const float eps = options.epsilon > 0 ? options.epsilon : irradiance_floor(e_src);
  const double eps_d = 1e-4 * scene.bbox_diagonal;
  const std::vector<int> order = scene.id_order();
  TriangleMesh out = scene.mesh;
  out.albedo.assign(out.vertices.size(), Rgb::Zero());
  out.albedo_seen.assign(out.vertices.size(), 0);

  parallel_for(static_cast<int>(out.vertices.size()), [&](int v) {
    const Vec3& p = out.vertices[v];
    Eigen::Array3d acc = Eigen::Array3d::Zero();
    double wsum = 0;
    for (int i : order) {
      const auto proj = visible_projection(scene, p, i, options.visibility_tol);
      if (!proj) continue;
      const RgbImage& img = scene.images[i].pixels;
      const RgbImage& e = e_src[i];
      const BilinearTaps t = bilinear_taps(img.width(), img.height(), *proj);
      auto ratio = [&](int x, int y) -> Eigen::Array3d {
        return (img(x, y) / e(x, y).max(eps)).cast<double>();
      };
      const Eigen::Array3d s = (1.0 - t.wy) * ((1.0 - t.wx) * ratio(t.x0, t.y0) + t.wx * ratio(t.x1, t.y0)) +
                               t.wy * ((1.0 - t.wx) * ratio(t.x0, t.y1) + t.wx * ratio(t.x1, t.y1));
      const double w = 1.0 / std::max((scene.cameras[i].center() - p).norm(), eps_d);
      acc += w * s;
      wsum += w;
    }
    if (wsum > 0) {
      out.albedo[v] = (acc / wsum).cast<float>();
      out.albedo_seen[v] = 1;
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Added irradiance

RgbImage render_added_irradiance(const Bvh& bvh, std::span<const WeightedLight> lights, const Camera& camera,
                                 const AddedOptions& options) {
  if (options.spp < 1 || options.max_depth < 1) throw Error("render_added_irradiance: spp and max_depth must be >= 1");
  const TriangleMesh& mesh = bvh.mesh();
  if (mesh.albedo.size() != mesh.vertices.size()) throw Error("render_added_irradiance: mesh carries no albedo");
  for (const auto& wl : lights) {
    wl.light.validate();
    if (!(wl.weight >= 0) || !std::isfinite(wl.weight)) throw Error("render_added_irradiance: bad light weight");
  }
  const GBuffer gb = render_gbuffer(bvh, camera);
  const double eps = 1e-4 * mesh.bbox_diagonal();
  const Vec3 eye = camera.center();
  RgbImage out(camera.width, camera.height, Rgb::Zero());

  auto albedo_at = [&](const Hit& h) -> Eigen::Array3d {
    const auto& t = mesh.triangles[h.triangle];
    return ((1.0 - h.u - h.v) * mesh.albedo[t[0]].cast<double>() + h.u * mesh.albedo[t[1]].cast<double>() +
            h.v * mesh.albedo[t[2]].cast<double>());
  };

  parallel_for(camera.height, [&](int y) {
    for (int x = 0; x < camera.width; ++x) {
      const auto& first = gb.at(x, y);
      if (!first) continue;
      const std::size_t pix = pixel_index(camera, x, y);
      Eigen::Array3d total = Eigen::Array3d::Zero();
      for (int s = 0; s < options.spp; ++s) {
        Vec3 pos = first->position;
        Vec3 n = facing_normal(first->normal, first->position - eye);
        Eigen::Array3d throughput = Eigen::Array3d::Ones();
        for (int depth = 0; depth < options.max_depth; ++depth) {
          for (const auto& wl : lights) {
            if (wl.weight == 0.0) continue;
            const AreaLight& L = wl.light;
            auto ls = SampleStream::keyed(options.seed, camera.id, pix, s, depth, static_cast<std::uint64_t>(L.id),
                                          kLightTag);
            const Vec2 u = ls.next2();
            const Vec3 q = L.origin + u.x() * L.edge_u + u.y() * L.edge_v;
            const Vec3 to = q - pos;
            const double dist2 = to.squaredNorm();
            const double dist = std::sqrt(dist2);
            const Vec3 dir = to / dist;
            const double cos_x = dir.dot(n);
            if (cos_x <= 0) continue;
            const double cl = L.normal().dot(-dir);
            const double cos_l = L.two_sided ? std::abs(cl) : std::max(0.0, cl);
            if (cos_l <= 0) continue;
            if (bvh.occluded(Ray{pos + eps * dir, dir, 0.0, dist - 2 * eps})) continue;
            total += throughput * wl.weight * L.emittance.cast<double>() * (cos_x * cos_l * L.area() / dist2);
          }
          if (depth + 1 == options.max_depth) break;
          auto bs = SampleStream::keyed(options.seed, camera.id, pix, s, depth, kBounceTag);
          const Vec3 dir = Frame(n).to_world(sample_cosine_hemisphere(bs.next2()));
          const auto h = bvh.intersect(spawn_ray(pos, dir, eps));
          if (!h) break;
          throughput *= kPi * albedo_at(*h);
          if ((throughput <= 0.0).all()) break;
          pos = h->position;
          n = facing_normal(h->normal, dir);
        }
      }
      out[pix] = (total / options.spp).cast<float>();
    }
  });
  if (!options.denoise) return out;
  return denoise_irradiance(out, gb.depth, normal_map(gb), options.denoise_options);
}

RgbImage compute_added_irradiance(const Bvh& albedo_bvh, const AreaLight& light, const Camera& camera,
                                  const AddedOptions& options) {
  const WeightedLight wl{light, 1.0};
  return render_added_irradiance(albedo_bvh, std::span<const WeightedLight>(&wl, 1), camera, options);
}

RgbImage removed_irradiance(const RgbImage& e_src, double alpha_dim) {
  if (!(alpha_dim >= 0.0 && alpha_dim <= 1.0)) throw Error("removed_irradiance: alpha_dim must lie in [0, 1]");
  RgbImage out = e_src;
  const float a = static_cast<float>(alpha_dim);
  for (auto& p : out.data()) p *= a;
  return out;
}

}  // namespace relight::irradiance
