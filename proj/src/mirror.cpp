#include "relight/mirror.hpp"

#include <algorithm>
#include <cmath>

namespace relight::mirror {

MirrorTrace trace_mirror(const MultiViewScene& scene, const Camera& camera, const GBuffer& gbuffer) {
  if (!gbuffer.depth.same_shape(camera.width, camera.height)) throw Error("trace_mirror: gbuffer size mismatch");
  MirrorTrace tr;
  tr.width = camera.width;
  tr.height = camera.height;
  tr.eye = camera.center();
  const std::size_t n = static_cast<std::size_t>(tr.width) * tr.height;
  tr.has_primary.assign(n, 0);
  tr.has_reflection.assign(n, 0);
  tr.x.assign(n, Vec3::Zero());
  tr.normal.assign(n, Vec3::Zero());
  tr.direction.assign(n, Vec3::Zero());
  tr.y.assign(n, Vec3::Zero());
  const double eps = scene.ray_epsilon();
  parallel_for(tr.height, [&](int py) {
    for (int px = 0; px < tr.width; ++px) {
      const std::size_t i = static_cast<std::size_t>(py) * tr.width + px;
      const auto& hit = gbuffer.hits[i];
      if (!hit) continue;
      const Vec3 view_dir = (hit->position - tr.eye).normalized();
      const Vec3 nrm = facing_normal(hit->normal, view_dir);
      const Vec3 r = reflect(view_dir, nrm).normalized();
      tr.has_primary[i] = 1;
      tr.x[i] = hit->position;
      tr.normal[i] = nrm;
      tr.direction[i] = r;
      if (const auto second = scene.bvh->intersect(spawn_ray(hit->position, r, eps))) {
        tr.has_reflection[i] = 1;
        tr.y[i] = second->position;
      }
    }
  });
  return tr;
}

MirrorMap resolve_mirror(const MultiViewScene& scene, const MirrorTrace& trace, const ViewSampler& sampler,
                         double tol) {
  MirrorMap m;
  m.value = RgbImage(trace.width, trace.height, Rgb::Zero());
  m.valid = MaskImage(trace.width, trace.height, 0);
  m.view = Image<int>(trace.width, trace.height, -1);
  m.sample = Image<Eigen::Vector2f>(trace.width, trace.height, Eigen::Vector2f::Zero());
  parallel_for(trace.height, [&](int py) {
    for (int px = 0; px < trace.width; ++px) {
      const std::size_t i = static_cast<std::size_t>(py) * trace.width + px;
      if (!trace.has_reflection[i]) continue;
      const auto pick = irradiance::select_view(scene, trace.y[i], trace.direction[i], -1, tol);
      if (!pick) continue;
      const Rgb v = sampler(pick->view, pick->pixel);
      m.value[i] = v.max(0.0f);
      m.valid[i] = 1;
      m.view[i] = pick->view;
      m.sample[i] = pick->pixel.cast<float>();
    }
  });
  return m;
}

MirrorMap compute_source_mirror(const MultiViewScene& scene, int view, double tol) {
  const Camera& cam = scene.cameras.at(view);
  const GBuffer gb = render_gbuffer(*scene.bvh, cam);
  const MirrorTrace tr = trace_mirror(scene, cam, gb);
  return resolve_mirror(
      scene, tr, [&](int j, const Vec2& p) { return sample_bilinear(scene.images[j].pixels, p); }, tol);
}

namespace {

struct AddTerm {
  double weight;
  const std::vector<RgbImage>* maps;
};

std::vector<AddTerm> add_terms(const irradiance::IrradianceSet& irr, const LightingEdit& edit) {
  std::vector<AddTerm> terms;
  for (const auto& [id, w] : edit.light_weights) {
    if (w == 0.0) continue;
    const auto it = irr.e_add.find(id);
    if (it == irr.e_add.end()) throw Error("no added irradiance for light " + std::to_string(id));
    terms.push_back({w, &it->second});
  }
  return terms;
}

Rgb added_at(const std::vector<AddTerm>& terms, int view, std::size_t idx) {
  Rgb sum = Rgb::Zero();
  for (const auto& t : terms) sum += static_cast<float>(t.weight) * (*t.maps)[view][idx];
  return sum;
}

bool irradiance_valid(const irradiance::IrradianceSet& irr, int view, std::size_t idx) {
  if (!std::isfinite(irr.e_src[view][idx].sum())) return false;
  return irr.e_valid.empty() || irr.e_valid[view][idx] != 0;
}

float floor_of(const irradiance::IrradianceSet& irr) {
  return irr.epsilon > 0 ? irr.epsilon : irradiance::irradiance_floor(irr.e_src);
}

}  // namespace

RgbImage weighted_added_irradiance(const irradiance::IrradianceSet& irr, const LightingEdit& edit, int view) {
  const auto terms = add_terms(irr, edit);
  RgbImage out(irr.e_src.at(view).width(), irr.e_src.at(view).height(), Rgb::Zero());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = added_at(terms, view, i);
  return out;
}

Rgb pseudo_relit_pixel(const Rgb& image, const Rgb& e_src, const Rgb& e_add, float alpha_dim, float eps) {
  const Rgb albedo = (image / e_src.max(eps)).max(0.0f).min(kMaxPseudoAlbedo);
  return albedo * (e_add + e_src - alpha_dim * e_src);
}

RgbImage pseudo_relit_view(const MultiViewScene& scene, const irradiance::IrradianceSet& irr, const LightingEdit& edit,
                           int view) {
  edit.validate();
  const auto terms = add_terms(irr, edit);
  const float eps = floor_of(irr);
  const RgbImage& img = scene.images.at(view).pixels;
  RgbImage out(img.width(), img.height(), Rgb::Zero());
  const float a = static_cast<float>(edit.alpha_dim);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!irradiance_valid(irr, view, i)) continue;
    out[i] = pseudo_relit_pixel(img[i], irr.e_src[view][i], added_at(terms, view, i), a, eps);
  }
  return out;
}

MirrorMap compute_target_mirror(const MultiViewScene& scene, const irradiance::IrradianceSet& irr,
                                const LightingEdit& edit, const Camera& camera, double tol) {
  const GBuffer gb = render_gbuffer(*scene.bvh, camera);
  return compute_target_mirror(scene, irr, edit, camera, trace_mirror(scene, camera, gb), tol);
}

MirrorMap compute_target_mirror(const MultiViewScene& scene, const irradiance::IrradianceSet& irr,
                                const LightingEdit& edit, const Camera& camera, const MirrorTrace& trace,
                                double tol) {
  edit.validate();
  if (irr.e_src.size() != scene.view_count()) throw Error("compute_target_mirror: irradiance set does not match scene");
  if (!(trace.width == camera.width && trace.height == camera.height))
    throw Error("compute_target_mirror: trace does not match camera");
  const auto terms = add_terms(irr, edit);
  const float eps = floor_of(irr);
  const float a = static_cast<float>(edit.alpha_dim);
  auto relit = [&](int j, int x, int y) -> Rgb {
    const std::size_t idx = irr.e_src[j].index(x, y);
    if (!irradiance_valid(irr, j, idx)) return Rgb::Zero();
    return pseudo_relit_pixel(scene.images[j].pixels[idx], irr.e_src[j][idx], added_at(terms, j, idx), a, eps);
  };
  return resolve_mirror(
      scene, trace,
      [&](int j, const Vec2& p) -> Rgb {
        const Camera& c = scene.cameras[j];
        const BilinearTaps t = bilinear_taps(c.width, c.height, p);
        const Rgb top = relit(j, t.x0, t.y0) * (1.0f - t.wx) + relit(j, t.x1, t.y0) * t.wx;
        const Rgb bottom = relit(j, t.x0, t.y1) * (1.0f - t.wx) + relit(j, t.x1, t.y1) * t.wx;
        return top * (1.0f - t.wy) + bottom * t.wy;
      },
      tol);
}

}  // namespace relight::mirror
