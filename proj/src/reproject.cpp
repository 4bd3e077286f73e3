#include "relight/reproject.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace relight::reproject {

WarpedView warp_view(const MultiViewScene& scene, int view, const Camera& novel, double tol) {
  const GBuffer gb = render_gbuffer(*scene.bvh, novel);
  WarpedView w;
  w.value = RgbImage(novel.width, novel.height, Rgb::Zero());
  w.valid = MaskImage(novel.width, novel.height, 0);
  w.source_depth = FloatImage(novel.width, novel.height, 0.0f);
  w.source_pixel = Image<Eigen::Vector2f>(novel.width, novel.height, Eigen::Vector2f::Zero());
  const Camera& src = scene.cameras.at(view);
  parallel_for(novel.height, [&](int y) {
    for (int x = 0; x < novel.width; ++x) {
      const auto& hit = gb.at(x, y);
      if (!hit) continue;
      const auto p = visible_projection(scene, hit->position, view, tol);
      if (!p) continue;
      const std::size_t i = w.value.index(x, y);
      w.value[i] = sample_bilinear(scene.images[view].pixels, *p);
      w.valid[i] = 1;
      w.source_depth[i] = static_cast<float>(src.depth_of(hit->position));
      w.source_pixel[i] = p->cast<float>();
    }
  });
  return w;
}

std::array<double, 4> heuristic_weights(const Vec3& c_new, const Vec3& c_i, const Vec3& x, const Vec3& n,
                                        double eps_d) {
  const double eps2 = eps_d * eps_d;
  const Vec3 to_i = c_i - x;
  const double dist_i = to_i.norm();
  std::array<double, 4> w{};
  w[0] = 1.0 / std::max((c_new - c_i).squaredNorm(), eps2);
  const Vec3 a = c_new - x;
  const double la = a.norm();
  const double d = (la > 0 && dist_i > 0) ? a.dot(to_i) / (la * dist_i) : 0.0;
  w[1] = d * d;
  w[2] = 1.0 / std::max(dist_i * dist_i, eps2);
  const double facing = std::max(0.0, to_i.dot(n));
  w[3] = dist_i > 0 ? std::expm1(facing / (0.1 * dist_i)) : 0.0;
  return w;
}

std::array<int, 4> rank_positions(int count) {
  if (count <= 0) return {-1, -1, -1, -1};
  // Two views: the maximum fills both upper slots, the minimum both lower ones.
  if (count == 2) return {0, 0, 1, 1};
  const int lower_median_asc = (count - 1) / 2;
  return {0, std::min(1, count - 1), count - 1 - lower_median_asc, count - 1};
}

std::vector<int> rank_by_luminance(std::span<const float> luminance, std::span<const int> camera_ids) {
  std::vector<int> order(luminance.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (luminance[a] != luminance[b]) return luminance[a] > luminance[b];
    return camera_ids[a] < camera_ids[b];
  });
  return order;
}

FloatImage normalized_disparity(const FloatImage& depth) {
  FloatImage out(depth.width(), depth.height(), 0.0f);
  double lo = kInf, hi = -kInf;
  for (float d : depth.data())
    if (std::isfinite(d) && d > 0) {
      lo = std::min(lo, 1.0 / d);
      hi = std::max(hi, 1.0 / d);
    }
  // Floating-point jitter on a constant-depth frame counts as degenerate.
  if (!(hi > lo) || hi - lo <= 1e-6 * hi) return out;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    const float d = depth[i];
    if (std::isfinite(d) && d > 0) out[i] = static_cast<float>((1.0 / d - lo) / (hi - lo));
  }
  return out;
}

namespace {

struct Candidate {
  int view;
  Rgb image;
  Rgb mirror;
  float lum;
  std::array<double, 4> w;
};

Rgb weighted_mean(const std::vector<Candidate>& c, int k, bool use_mirror) {
  Eigen::Array3d acc = Eigen::Array3d::Zero();
  double wsum = 0;
  for (const auto& e : c) {
    acc += e.w[k] * (use_mirror ? e.mirror : e.image).cast<double>();
    wsum += e.w[k];
  }
  if (wsum > 0) return (acc / wsum).cast<float>();
  // Every weight vanished (e.g. all views back-facing for w4): plain mean.
  acc.setZero();
  for (const auto& e : c) acc += (use_mirror ? e.mirror : e.image).cast<double>();
  return (acc / static_cast<double>(c.size())).cast<float>();
}

}  // namespace

CompositeSet build_composites(const MultiViewScene& scene, const std::vector<RgbImage>& source_mirrors,
                              const irradiance::IrradianceSet* irr, const LightingEdit& edit, const Camera& novel,
                              const CompositeOptions& options) {
  const GBuffer gb = render_gbuffer(*scene.bvh, novel);
  const mirror::MirrorTrace tr = mirror::trace_mirror(scene, novel, gb);
  return build_composites(scene, source_mirrors, irr, edit, novel, gb, tr, options);
}

CompositeSet build_composites(const MultiViewScene& scene, const std::vector<RgbImage>& source_mirrors,
                              const irradiance::IrradianceSet* irr, const LightingEdit& edit, const Camera& novel,
                              const GBuffer& gbuffer, const mirror::MirrorTrace& trace,
                              const CompositeOptions& options) {
  edit.validate();
  const int W = novel.width, H = novel.height;
  if (!gbuffer.depth.same_shape(W, H) || trace.width != W || trace.height != H)
    throw Error("build_composites: gbuffer/trace do not match the novel camera");
  const bool have_mirrors = !source_mirrors.empty();
  if (have_mirrors && source_mirrors.size() != scene.view_count())
    throw Error("build_composites: need one source mirror per view");
  if (options.irradiance && !irr) throw Error("build_composites: irradiance composites need an irradiance set");
  if (irr && options.irradiance && irr->e_src.size() != scene.view_count())
    throw Error("build_composites: irradiance set does not match scene");

  struct AddTerm {
    float weight;
    const std::vector<RgbImage>* maps;
  };
  std::vector<AddTerm> add_terms;
  if (options.irradiance) {
    for (const auto& [id, w] : edit.light_weights) {
      if (w == 0.0) continue;
      const auto it = irr->e_add.find(id);
      if (it == irr->e_add.end()) throw Error("no added irradiance for light " + std::to_string(id));
      add_terms.push_back({static_cast<float>(w), &it->second});
    }
  }

  CompositeSet out;
  for (int k = 0; k < 8; ++k) {
    out.image[k] = RgbImage(W, H, Rgb::Zero());
    out.mirror[k] = RgbImage(W, H, Rgb::Zero());
  }
  out.e_src = out.e_add = out.e_rem = RgbImage(W, H, Rgb::Zero());
  out.disparity = FloatImage(W, H, 0.0f);
  out.normal = irradiance::NormalMap(W, H, Eigen::Vector3f::Zero());
  out.view_cos = FloatImage(W, H, 0.0f);
  out.refl_ratio = FloatImage(W, H, 0.0f);
  out.valid = MaskImage(W, H, 0);

  const std::vector<int> order = scene.id_order();
  const Vec3 c_new = novel.center();
  const double eps_d = 1e-4 * scene.bbox_diagonal;
  const float alpha = static_cast<float>(edit.alpha_dim);
  std::vector<Vec3> centers(scene.view_count());
  for (std::size_t i = 0; i < centers.size(); ++i) centers[i] = scene.cameras[i].center();

  parallel_for(H, [&](int py) {
    std::vector<Candidate> cands;
    std::vector<float> lums;
    std::vector<int> ids;
    cands.reserve(order.size());
    for (int px = 0; px < W; ++px) {
      const std::size_t idx = static_cast<std::size_t>(py) * W + px;
      if (!trace.has_primary[idx]) continue;
      const Vec3& x = trace.x[idx];
      const Vec3& n = trace.normal[idx];

      cands.clear();
      Eigen::Array3d e_src = Eigen::Array3d::Zero(), e_add = Eigen::Array3d::Zero(), e_rem = Eigen::Array3d::Zero();
      double e_wsum = 0;
      for (int i : order) {
        const auto p = visible_projection(scene, x, i, options.visibility_tol);
        if (!p) continue;
        if (options.images) {
          Candidate c;
          c.view = i;
          c.image = sample_bilinear(scene.images[i].pixels, *p);
          c.mirror = have_mirrors ? sample_bilinear(source_mirrors[i], *p) : Rgb::Zero();
          c.lum = luminance(c.image);
          c.w = heuristic_weights(c_new, centers[i], x, n, eps_d);
          cands.push_back(c);
        }
        if (options.irradiance) {
          if (!irr->e_valid.empty()) {
            int qx, qy;
            if (nearest_pixel(irr->e_valid[i].width(), irr->e_valid[i].height(), *p, qx, qy) &&
                !irr->e_valid[i](qx, qy))
              continue;
          }
          const double w = 1.0 / std::max((c_new - centers[i]).norm(), eps_d);
          const Rgb es = sample_bilinear(irr->e_src[i], *p);
          Rgb ea = Rgb::Zero();
          for (const auto& t : add_terms) ea += t.weight * sample_bilinear((*t.maps)[i], *p);
          e_src += w * es.cast<double>();
          e_rem += w * (alpha * es).cast<double>();
          e_add += w * ea.cast<double>();
          e_wsum += w;
        }
        if (!options.images) out.valid[idx] = 1;
      }

      if (e_wsum > 0) {
        out.e_src[idx] = (e_src / e_wsum).cast<float>();
        out.e_add[idx] = (e_add / e_wsum).cast<float>();
        out.e_rem[idx] = (e_rem / e_wsum).cast<float>();
      }

      if (!cands.empty()) {
        out.valid[idx] = 1;
        for (int k = 0; k < 4; ++k) {
          out.image[k][idx] = weighted_mean(cands, k, false);
          out.mirror[k][idx] = weighted_mean(cands, k, true);
        }
        lums.clear();
        ids.clear();
        for (const auto& c : cands) {
          lums.push_back(c.lum);
          ids.push_back(scene.cameras[c.view].id);
        }
        const auto ranked = rank_by_luminance(lums, ids);
        const auto pos = rank_positions(static_cast<int>(cands.size()));
        for (int k = 0; k < 4; ++k) {
          const Candidate& c = cands[ranked[pos[k]]];
          out.image[4 + k][idx] = c.image;
          out.mirror[4 + k][idx] = c.mirror;
        }
      }

      if (options.extras) {
        out.normal[idx] = (novel.rotation * n).cast<float>();
        const Vec3 to_cam = c_new - x;
        const double dist_cam = to_cam.norm();
        out.view_cos[idx] = static_cast<float>(std::clamp(n.dot(to_cam) / dist_cam, 0.0, 1.0));
        out.refl_ratio[idx] = trace.has_reflection[idx]
                                  ? static_cast<float>(std::clamp((trace.y[idx] - x).norm() / dist_cam, 0.0, 10.0))
                                  : 10.0f;
      }
    }
  });
  if (options.extras) out.disparity = normalized_disparity(gbuffer.depth);
  return out;
}

FlowMap compute_flow(const MultiViewScene& scene, int view_a, int view_b, double tol) {
  const Camera& a = scene.cameras.at(view_a);
  scene.cameras.at(view_b);
  const GBuffer gb = render_gbuffer(*scene.bvh, a);
  FlowMap f;
  f.flow = Image<Eigen::Vector2f>(a.width, a.height, Eigen::Vector2f::Zero());
  f.valid = MaskImage(a.width, a.height, 0);
  parallel_for(a.height, [&](int y) {
    for (int x = 0; x < a.width; ++x) {
      const auto& hit = gb.at(x, y);
      if (!hit) continue;
      const auto p = visible_projection(scene, hit->position, view_b, tol);
      if (!p) continue;
      f.flow(x, y) = Eigen::Vector2f(static_cast<float>(p->x() - (x + 0.5)), static_cast<float>(p->y() - (y + 0.5)));
      f.valid(x, y) = 1;
    }
  });
  return f;
}

}  // namespace relight::reproject
