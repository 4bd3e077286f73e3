// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "relight/featurepack.hpp"
#include "relight/irradiance.hpp"
#include "relight/mirror.hpp"
#include "relight/oracle.hpp"
#include "relight/pipeline.hpp"
#include "relight/reproject.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>
#include <thread>

using namespace relight;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) { return fixtures::percentile(std::move(v), 0.5); }

/// Relative error of an RGB estimate, summed over channels.
double rgb_relative_error(const Rgb& a, const Rgb& b) {
  return (a - b).abs().sum() / std::max(static_cast<double>(b.abs().sum()), 1e-12);
}

bool emitter_triangle(const oracle::OracleScene& o, std::uint32_t t) {
  return (o.materials[o.triangle_material[t]].emission > 0).any();
}

irradiance::IrradianceSet denoised_source_irradiance(const MultiViewScene& s, int spp, std::uint64_t seed) {
  irradiance::IrradianceSet irr;
  irradiance::SourceOptions opt;
  opt.spp = spp;
  opt.seed = seed;
  for (std::size_t v = 0; v < s.view_count(); ++v) {
    const auto est = irradiance::estimate_source_irradiance(s, static_cast<int>(v), opt);
    const GBuffer gb = render_gbuffer(*s.bvh, s.cameras[v]);
    irr.e_src.push_back(irradiance::denoise_irradiance(est.e_src, gb.depth, irradiance::normal_map(gb)));
    irr.e_valid.push_back(est.valid);
  }
  irr.epsilon = irradiance::irradiance_floor(irr.e_src);
  return irr;
}

// ---------------------------------------------------------------------------

Outcome furnace() {
  const auto o = oracle::furnace_scene(256, 192, 0.5f);
  irradiance::SourceOptions opt;
  opt.spp = 128;
  const auto t0 = std::chrono::steady_clock::now();
  const auto e = irradiance::estimate_source_irradiance(o.scene, 0, opt);
  const double secs = seconds_since(t0);
  double worst = 0;
  bool all_valid = true;
  for (std::size_t i = 0; i < e.e_src.size(); ++i) {
    all_valid = all_valid && e.valid[i];
    for (int c = 0; c < 3; ++c) worst = std::max(worst, fixtures::relative_error(e.e_src[i][c], kPi * 0.5));
  }
  return {all_valid && worst < 1e-5 && secs < 30.0,
          fmt("max rel err %.3g (< 1e-5), 256x192 @128 spp in %.2f s (< 30 s, %d threads)", worst, secs,
              thread_count())};
}

Outcome quadrature() {
  const auto o = oracle::two_box_scene(64, 48, 8);
  const MultiViewScene& s = o.scene;
  irradiance::SourceOptions opt;
  opt.spp = 128;
  opt.seed = 11;
  std::vector<double> errs;
  for (int view : {1, 5}) {
    const auto est = irradiance::estimate_source_irradiance(s, view, opt);
    const GBuffer gb = render_gbuffer(*s.bvh, s.cameras[view]);
    const RgbImage e = irradiance::denoise_irradiance(est.e_src, gb.depth, irradiance::normal_map(gb));
    for (int y = 2; y < gb.height; y += 4)
      for (int x = 2; x < gb.width; x += 4) {
        const auto& h = gb.at(x, y);
        if (!h || !est.valid(x, y)) continue;
        const auto ref = oracle::brute_force_irradiance(s, h->position, h->normal, view, 64, 256);
        if (!ref) continue;
        errs.push_back(rgb_relative_error(e(x, y), *ref));
      }
  }
  const double med = median(errs), p95 = fixtures::percentile(errs, 0.95);
  return {errs.size() > 100 && med < 0.02 && p95 < 0.10,
          fmt("median %.4f (< 0.02), p95 %.4f (< 0.10) over %zu pixels", med, p95, errs.size())};
}

Outcome albedo_round_trip() {
  const Rgb rho(0.6f, 0.3f, 0.3f);
  const auto o = oracle::lambertian_box_scene(48, 36, rho, {256, 8, 21, true});
  const MultiViewScene& s = o.scene;
  const irradiance::IrradianceSet irr = denoised_source_irradiance(s, 512, 5);
  const TriangleMesh m = irradiance::build_albedo_mesh(s, irr.e_src);

  std::vector<std::uint8_t> on_emitter(m.vertex_count(), 0);
  for (std::uint32_t t = 0; t < m.triangle_count(); ++t)
    if (emitter_triangle(o, t))
      for (auto v : m.triangles[t]) on_emitter[v] = 1;
  const Rgb target = rho / static_cast<float>(kPi);
  std::vector<double> vert;
  for (std::size_t v = 0; v < m.vertex_count(); ++v) {
    if (!m.albedo_seen[v] || on_emitter[v]) continue;
    for (int c = 0; c < 3; ++c) vert.push_back(fixtures::relative_error(m.albedo[v][c], target[c]));
  }

  std::vector<double> pix;
  for (std::size_t view = 0; view < s.view_count(); ++view) {
    const GBuffer gb = render_gbuffer(*s.bvh, s.cameras[view]);
    for (int y = 0; y < gb.height; ++y)
      for (int x = 0; x < gb.width; ++x) {
        const auto& h = gb.at(x, y);
        if (!h || emitter_triangle(o, h->triangle) || !irr.e_valid[view](x, y)) continue;
        const auto& tri = m.triangles[h->triangle];
        const Rgb a = static_cast<float>(1 - h->u - h->v) * m.albedo[tri[0]] +
                      static_cast<float>(h->u) * m.albedo[tri[1]] + static_cast<float>(h->v) * m.albedo[tri[2]];
        const Rgb pred = a * irr.e_src[view](x, y);
        const Rgb gt = s.images[view].pixels(x, y);
        for (int c = 0; c < 3; ++c) pix.push_back(fixtures::relative_error(pred[c], gt[c]));
      }
  }
  const double mv = median(vert), mp = median(pix);
  return {!vert.empty() && !pix.empty() && mv < 0.05 && mp < 0.05,
          fmt("vertex albedo median %.4f (< 0.05, %zu samples), re-render median %.4f (< 0.05)", mv, vert.size(), mp)};
}

Outcome solver() {
  using irradiance::ClickObservation;
  std::vector<ClickObservation> fx(2);
  fx[0] = {0, Rgb::Constant(0.4f), Rgb::Constant(0.2f), {Rgb::Constant(0.3f)}};
  fx[1] = {0, Rgb::Constant(0.05f), Rgb::Constant(0.1f), {Rgb::Zero()}};
  const auto sol = irradiance::solve_clipped_lights(fx, 1, 1);
  double fixture_err = 0;
  for (int c = 0; c < 3; ++c)
    fixture_err = std::max({fixture_err, std::abs(sol.alpha[0][c] - 2.0), std::abs(1.0 / sol.beta[0][c] - 0.5)});

  // Random instances: two click groups of four points, one cluster; noise on the observed image.
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> ratio;
  int failed = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const double alpha = 0.5 + 3.0 * u(rng);
    const double albedo[2] = {0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng)};
    std::vector<ClickObservation> obs;
    for (int g = 0; g < 2; ++g)
      for (int k = 0; k < 4; ++k) {
        const double enc = 0.05 + 0.5 * u(rng), el = 0.8 * u(rng);
        ClickObservation o;
        o.group = g;
        o.e_nc = Rgb::Constant(static_cast<float>(enc));
        o.e_cluster = {Rgb::Constant(static_cast<float>(el))};
        o.image = Rgb::Constant(static_cast<float>(albedo[g] * (enc + alpha * el) * (1.0 + noise(rng))));
        obs.push_back(o);
      }
    try {
      ratio.push_back(irradiance::solve_clipped_lights(obs, 1, 2).alpha[0][0] / alpha);
    } catch (const irradiance::IllConditionedError&) {
      ++failed;
    }
  }
  const double med = median(ratio);
  return {fixture_err < 1e-6 && failed == 0 && std::abs(med - 1.0) < 0.10,
          fmt("fixture max err %.2g (< 1e-6); noisy median alpha/truth %.4f (within 0.10), %d ill-conditioned",
              fixture_err, med, failed)};
}

/// True when any bilinear tap of the relit view at p was guarded by epsilon or the albedo clamp.
bool clamped_taps(const MultiViewScene& s, const irradiance::IrradianceSet& irr, int j, const Vec2& p) {
  const RgbImage& img = s.images[j].pixels;
  const BilinearTaps t = bilinear_taps(img.width(), img.height(), p);
  for (int y : {t.y0, t.y1})
    for (int x : {t.x0, t.x1}) {
      const Rgb e = irr.e_src[j](x, y);
      if ((e < irr.epsilon).any() || (img(x, y) / e.max(irr.epsilon) > mirror::kMaxPseudoAlbedo).any()) return true;
    }
  return false;
}

Outcome mirror_identity(const oracle::OracleScene& o, const irradiance::IrradianceSet& irr) {
  const MultiViewScene& s = o.scene;
  double worst = 0;
  int compared = 0, clamped = 0, mismatched_validity = 0, nonzero = 0, valid_dim = 0;
  for (int v : {0, 4, static_cast<int>(s.view_count()) - 1}) {
    const mirror::MirrorMap src = mirror::compute_source_mirror(s, v);
    const mirror::MirrorMap tgt = mirror::compute_target_mirror(s, irr, {}, s.cameras[v]);
    for (int y = 0; y < src.value.height(); ++y)
      for (int x = 0; x < src.value.width(); ++x) {
        if (src.valid(x, y) != tgt.valid(x, y)) ++mismatched_validity;
        if (!src.valid(x, y)) continue;
        if (clamped_taps(s, irr, src.view(x, y), src.sample(x, y).cast<double>())) {
          ++clamped;
          continue;
        }
        ++compared;
        worst = std::max(worst, static_cast<double>((src.value(x, y) - tgt.value(x, y)).abs().maxCoeff()));
      }
    LightingEdit dim;
    dim.alpha_dim = 1.0;
    const mirror::MirrorMap off = mirror::compute_target_mirror(s, irr, dim, s.cameras[v]);
    for (std::size_t i = 0; i < off.value.size(); ++i) {
      valid_dim += off.valid[i];
      nonzero += !(off.value[i] == 0.0f).all();
    }
  }
  return {compared > 0 && worst <= 1e-6 && mismatched_validity == 0 && nonzero == 0 && valid_dim > 0,
          fmt("no-op max |diff| %.2g (<= 1e-6) over %d pixels, %d clamped excluded; full dim nonzero %d of %d valid",
              worst, compared, clamped, nonzero, valid_dim)};
}

struct BruteHit {
  Vec3 position, normal;
};

std::optional<BruteHit> brute_hit(const TriangleMesh& m, const Ray& r) {
  std::optional<BruteHit> best;
  double best_t = kInf;
  for (const auto& tri : m.triangles) {
    const Vec3& p0 = m.vertices[tri[0]];
    const TriangleRecord rec{p0, m.vertices[tri[1]] - p0, m.vertices[tri[2]] - p0};
    double t, u, v;
    if (!intersect_triangle(rec, r, t, u, v) || !(t > r.t_min && t < r.t_max) || t >= best_t) continue;
    best_t = t;
    const Vec3 n = ((1 - u - v) * m.normals[tri[0]] + u * m.normals[tri[1]] + v * m.normals[tri[2]]).normalized();
    best = BruteHit{r.origin + t * r.direction, n};
  }
  return best;
}

Outcome mirror_correctness(const oracle::OracleScene& o, irradiance::IrradianceSet irr) {
  const MultiViewScene& s = o.scene;
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> u(0.0f, 0.8f);
  for (const Camera& c : s.cameras) {
    RgbImage a(c.width, c.height);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = Rgb(u(rng), u(rng), u(rng));
    irr.e_add[2].push_back(a);
  }
  LightingEdit edit;
  edit.alpha_dim = 0.35;
  edit.light_weights[2] = 0.9;
  std::vector<RgbImage> relit;
  for (std::size_t j = 0; j < s.view_count(); ++j)
    relit.push_back(mirror::pseudo_relit_view(s, irr, edit, static_cast<int>(j)));

  const Camera novel = Camera::look_at(99, 48, 36, 80.0, Vec3(1.3, 0.8, 1.4), Vec3(2.4, 1.9, 0.0));
  const mirror::MirrorMap tgt = mirror::compute_target_mirror(s, irr, edit, novel);
  const Vec3 eye = novel.center();
  int considered = 0, agree = 0;
  for (int py = 0; py < novel.height; ++py)
    for (int px = 0; px < novel.width; ++px) {
      int view = -1;
      Rgb expected = Rgb::Zero();
      if (const auto x = brute_hit(s.mesh, novel.primary_ray(px, py))) {
        const Vec3 d = (x->position - eye).normalized();
        const Vec3 n = x->normal.dot(d) > 0 ? Vec3(-x->normal) : x->normal;
        const Vec3 r = reflect(d, n).normalized();
        if (const auto y = brute_hit(s.mesh, spawn_ray(x->position, r, s.ray_epsilon()))) {
          double best = -kInf;
          for (int j : s.id_order()) {
            if (!visible(s, y->position, j)) continue;
            const double a = (y->position - s.cameras[j].center()).normalized().dot(r);
            if (a > best) {
              best = a;
              view = j;
            }
          }
          if (view >= 0) {
            const auto p = s.cameras[view].project(y->position);
            expected = sample_bilinear(relit[view], *p).max(0.0f);
          }
        }
      }
      if (view < 0 && !tgt.valid(px, py)) continue;
      ++considered;
      if (view >= 0 && tgt.valid(px, py) && tgt.view(px, py) == view &&
          (tgt.value(px, py) - expected).abs().maxCoeff() <= 1e-5f * (1.0f + expected.abs().maxCoeff()))
        ++agree;
    }
  const double frac = considered ? static_cast<double>(agree) / considered : 0.0;
  return {considered > novel.width * novel.height / 4 && frac >= 0.99,
          fmt("%d / %d valid pixels agree (%.4f >= 0.99)", agree, considered, frac)};
}

std::vector<RgbImage> random_maps(const MultiViewScene& s, std::uint64_t seed) {
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::uniform_real_distribution<float> u(0.0f, 2.0f);
  std::vector<RgbImage> out;
  for (const Camera& c : s.cameras) {
    RgbImage m(c.width, c.height);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = Rgb(u(rng), u(rng), u(rng));
    out.push_back(m);
  }
  return out;
}

template <typename T>
bool same_bytes(const Image<T>& a, const Image<T>& b) {
  return a.width() == b.width() && a.height() == b.height() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(T)) == 0;
}

bool composites_identical(const reproject::CompositeSet& a, const reproject::CompositeSet& b) {
  bool ok = same_bytes(a.e_src, b.e_src) && same_bytes(a.e_add, b.e_add) && same_bytes(a.e_rem, b.e_rem) &&
            same_bytes(a.disparity, b.disparity) && same_bytes(a.normal, b.normal) &&
            same_bytes(a.view_cos, b.view_cos) && same_bytes(a.refl_ratio, b.refl_ratio) && a.valid == b.valid;
  for (int k = 0; k < 8; ++k) ok = ok && same_bytes(a.image[k], b.image[k]) && same_bytes(a.mirror[k], b.mirror[k]);
  return ok;
}

Outcome composite_invariants() {
  const auto o = oracle::two_box_scene(48, 36, 8);
  const MultiViewScene& s = o.scene;
  const std::vector<RgbImage> mirrors = random_maps(s, 4);
  irradiance::IrradianceSet irr;
  irr.e_src = random_maps(s, 5);
  irr.e_add[1] = random_maps(s, 6);
  LightingEdit edit;
  edit.alpha_dim = 0.3;
  edit.light_weights[1] = 0.6;
  const Camera novel = Camera::look_at(77, 48, 36, 85.0, Vec3(1.6, 0.9, 1.5), Vec3(2.2, 1.7, 0.3));
  const reproject::CompositeSet c = reproject::build_composites(s, mirrors, &irr, edit, novel);

  std::vector<reproject::WarpedView> warps;
  for (std::size_t v = 0; v < s.view_count(); ++v) warps.push_back(reproject::warp_view(s, static_cast<int>(v), novel));
  int hull_px = 0, hull_bad = 0, rank_px = 0, rank_bad = 0;
  for (int y = 0; y < novel.height; ++y)
    for (int x = 0; x < novel.width; ++x) {
      if (!c.valid(x, y)) continue;
      Rgb lo = Rgb::Constant(kInf), hi = Rgb::Constant(-kInf), mlo = lo, mhi = hi;
      int views = 0;
      for (std::size_t v = 0; v < warps.size(); ++v) {
        if (!warps[v].valid(x, y)) continue;
        ++views;
        const Rgb val = warps[v].value(x, y);
        const Rgb m = sample_bilinear(mirrors[v], warps[v].source_pixel(x, y).cast<double>());
        lo = lo.min(val);
        hi = hi.max(val);
        mlo = mlo.min(m);
        mhi = mhi.max(m);
      }
      ++hull_px;
      bool inside = views > 0;
      // Mirror taps are rebuilt from float-stored sample coordinates, hence the looser bound.
      const float mtol = 1e-5f * (1.0f + mhi.abs().maxCoeff());
      for (int k = 0; k < 4; ++k) {
        inside = inside && (c.image[k](x, y) >= lo - 1e-6f).all() && (c.image[k](x, y) <= hi + 1e-6f).all();
        inside = inside && (c.mirror[k](x, y) >= mlo - mtol).all() && (c.mirror[k](x, y) <= mhi + mtol).all();
      }
      hull_bad += !inside;
      if (views >= 4) {
        ++rank_px;
        for (int k = 4; k < 7; ++k)
          if (luminance(c.image[k](x, y)) < luminance(c.image[k + 1](x, y))) {
            ++rank_bad;
            break;
          }
      }
    }

  std::vector<int> perm(s.view_count());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(13));
  MultiViewScene p;
  p.mesh = s.mesh;
  irradiance::IrradianceSet pirr;
  std::vector<RgbImage> pmirrors;
  for (int v : perm) {
    p.cameras.push_back(s.cameras[v]);
    p.images.push_back(s.images[v]);
    pirr.e_src.push_back(irr.e_src[v]);
    pirr.e_add[1].push_back(irr.e_add.at(1)[v]);
    pmirrors.push_back(mirrors[v]);
  }
  finalize_scene(p);
  const bool perm_ok = composites_identical(c, reproject::build_composites(p, pmirrors, &pirr, edit, novel));
  return {hull_px > 0 && rank_px > 0 && hull_bad == 0 && rank_bad == 0 && perm_ok,
          fmt("rank order violations %d / %d pixels with >= 4 views; hull violations %d / %d; permutation %s",
              rank_bad, rank_px, hull_bad, hull_px, perm_ok ? "bit-identical" : "DIFFERS")};
}

Outcome channel_budget() {
  std::vector<std::string> expected;
  for (const char* group : {"I", "M"})
    for (int k = 1; k <= 8; ++k)
      for (const char* ch : {"R", "G", "B"}) expected.push_back(group + std::to_string(k) + "." + ch);
  for (const char* g : {"Mtgt", "Esrc", "Eadd", "Erem"})
    for (const char* ch : {"R", "G", "B"}) expected.push_back(std::string(g) + "." + ch);
  for (const char* n : {"disparity", "normal.x", "normal.y", "normal.z", "view_cos", "refl_ratio"}) expected.push_back(n);

  const auto o = oracle::two_box_scene(32, 24, 6);
  irradiance::IrradianceSet irr;
  irr.e_src = random_maps(o.scene, 1);
  const Camera novel = Camera::look_at(50, 32, 24, 85.0, Vec3(1.6, 0.9, 1.5), Vec3(2.2, 1.7, 0.3));
  const auto comps = reproject::build_composites(o.scene, random_maps(o.scene, 2), &irr, {}, novel);
  const featurepack::FeatureStack stack = featurepack::pack_features(comps, RgbImage(32, 24, Rgb::Constant(0.4f)));
  const bool layout = stack.channels() == 66 && stack.names == expected &&
                      std::equal(expected.begin(), expected.end(), featurepack::channel_names().begin());

  const fs::path dir = fixtures::temp_dir("acceptance_ften");
  featurepack::write_tensor(dir / "s.ften", stack);
  const featurepack::FeatureStack back = featurepack::read_tensor(dir / "s.ften");
  const bool bits = back.names == stack.names && back.width == stack.width && back.height == stack.height &&
                    back.data.size() == stack.data.size() &&
                    std::memcmp(back.data.data(), stack.data.data(), stack.data.size() * sizeof(float)) == 0 &&
                    featurepack::serialize_tensor(back) == featurepack::serialize_tensor(stack);

  double worst = 0;
  for (int e = -10; e <= 4; ++e)
    for (int k = 0; k < 16; ++k) {
      const double x = std::ldexp(1.0 + k / 16.0, e);
      worst = std::max(worst, std::abs(featurepack::inverse_tonemap(featurepack::tonemap(x)) - x));
    }
  return {layout && bits && worst < 1e-6,
          fmt("%d channels, order %s; FTEN round trip %s; tonemap round-trip max err %.2g (< 1e-6)",
              stack.channels(), layout ? "matches" : "WRONG", bits ? "bit-exact" : "DIFFERS", worst)};
}

Outcome superposition() {
  const auto o = oracle::furnace_scene(32, 24);
  TriangleMesh m = o.scene.mesh;
  m.albedo.assign(m.vertex_count(), Rgb(0.2f, 0.15f, 0.1f));
  m.albedo_seen.assign(m.vertex_count(), 1);
  const Bvh bvh(m);
  auto panel = [](int id, const Vec3& c, double side) {
    AreaLight l;
    l.id = id;
    l.origin = c - Vec3(side / 2, side / 2, 0);
    l.edge_u = Vec3(0, side, 0);
    l.edge_v = Vec3(side, 0, 0);
    l.emittance = Rgb::Constant(3.0f);
    return l;
  };
  const AreaLight l1 = panel(1, Vec3(1.0, 1.5, 2.9), 0.3), l2 = panel(2, Vec3(2.0, 1.0, 2.9), 0.4);
  irradiance::AddedOptions opt;
  opt.spp = 8;
  opt.seed = 31;
  double worst = 0;
  for (int v : {0, 5}) {
    const Camera& cam = o.scene.cameras[v];
    const RgbImage e1 = irradiance::compute_added_irradiance(bvh, l1, cam, opt);
    const RgbImage e2 = irradiance::compute_added_irradiance(bvh, l2, cam, opt);
    const std::vector<irradiance::WeightedLight> both{{l1, 0.3}, {l2, 0.7}};
    const RgbImage e = irradiance::render_added_irradiance(bvh, both, cam, opt);
    for (std::size_t i = 0; i < e.size(); ++i)
      worst = std::max(worst, static_cast<double>((e[i] - (0.3f * e1[i] + 0.7f * e2[i])).abs().maxCoeff()));
  }
  return {worst <= 1e-6, fmt("max |E(0.3,0.7) - (0.3 E1 + 0.7 E2)| = %.2g (<= 1e-6)", worst)};
}

Outcome throughput() {
  // 30 ring cameras plus the up and down views.
  const auto o = oracle::two_box_scene(128, 96, 30);
  pipeline::PreparedScene prep;
  prep.scene = o.scene;
  const int n = static_cast<int>(prep.scene.view_count());
  prep.irr.e_src = random_maps(prep.scene, 3);
  prep.irr.e_add[1] = random_maps(prep.scene, 4);
  prep.irr.epsilon = irradiance::irradiance_floor(prep.irr.e_src);
  for (int v = 0; v < n; ++v) prep.source_mirrors.push_back(mirror::compute_source_mirror(prep.scene, v).value);
  LightingEdit edit;
  edit.alpha_dim = 0.5;
  edit.light_weights[1] = 0.8;
  const Camera novel = Camera::look_at(100, 512, 384, 85.0, Vec3(1.7, 1.0, 1.5), Vec3(2.2, 1.7, 0.3));
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = pipeline::render_feature_stack(prep, novel, edit);
  const double secs = seconds_since(t0);
  return {n == 32 && r.stack.channels() == 66 && secs < 5.0,
          fmt("512x384 over %d views in %.2f s (< 5 s, %d threads, %u hardware threads)", n, secs, thread_count(),
              std::thread::hardware_concurrency())};
}

}  // namespace

int main() {
  int failures = 0;
  auto run = [&](const char* name, const std::function<Outcome()>& fn) {
    Outcome r;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      r = fn();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failures += !r.pass;
    std::printf("%s %-22s %s [%.1f s]\n", r.pass ? "PASS" : "FAIL", name, r.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };

  run("furnace_irradiance", furnace);
  run("quadrature_agreement", quadrature);
  run("albedo_round_trip", albedo_round_trip);
  run("clipped_light_solver", solver);
  {
    const auto mbox = oracle::mirror_box_scene(48, 36, 6);
    const irradiance::IrradianceSet irr = denoised_source_irradiance(mbox.scene, 32, 2);
    run("target_mirror_identity", [&] { return mirror_identity(mbox, irr); });
    run("mirror_correctness", [&] { return mirror_correctness(mbox, irr); });
  }
  run("composite_invariants", composite_invariants);
  run("channel_budget", channel_budget);
  run("superposition", superposition);
  run("throughput", throughput);

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
