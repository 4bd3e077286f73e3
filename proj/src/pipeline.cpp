#include "relight/pipeline.hpp"

#include "relight/geomproc.hpp"
#include "relight/io.hpp"
#include "relight/oracle.hpp"
#include "relight/reproject.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

namespace relight::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json RunReport::to_json() const { return {{"written", written}, {"skipped", skipped}}; }

namespace {

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_json(const json& j) { return hex64(fnv1a(j.dump())); }

std::string bundle_hash(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("scene directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    h = fnv1a(f.generic_string(), h);
    h = fnv1a(io::read_text(dir / f), h);
  }
  return hex64(h);
}

fs::path sidecar_of(const fs::path& p) { return fs::path(p.string() + ".json"); }

/// Up-to-date checks and sidecar bookkeeping for one output directory.
class Store {
 public:
  Store(fs::path root, bool force, RunReport& report) : root_(std::move(root)), force_(force), report_(report) {}

  fs::path path(const std::string& rel) const { return root_ / rel; }

  bool fresh(const std::string& rel, const std::string& hash) const {
    if (force_) return false;
    return recorded_hash(rel) == hash && fs::exists(path(rel));
  }

  std::string recorded_hash(const std::string& rel) const {
    const fs::path s = sidecar_of(path(rel));
    if (!fs::exists(s) || !fs::exists(path(rel))) return {};
    try {
      return io::read_json(s).value("input_hash", std::string{});
    } catch (const std::exception&) {
      return {};
    }
  }

  void commit(const std::string& rel, const std::string& hash, json info) {
    info["input_hash"] = hash;
    info["version"] = kVersion;
    io::write_json(sidecar_of(path(rel)), info);
    report_.written.push_back(rel);
  }
  void skip(const std::string& rel) { report_.skipped.push_back(rel); }

 private:
  fs::path root_;
  bool force_;
  RunReport& report_;
};

std::vector<int> select_views(const JobConfig& job, const MultiViewScene& scene) {
  std::vector<int> views = job.views;
  if (views.empty())
    for (std::size_t i = 0; i < scene.view_count(); ++i) views.push_back(static_cast<int>(i));
  for (int v : views)
    if (v < 0 || v >= static_cast<int>(scene.view_count()))
      throw ValidationError("view index " + std::to_string(v) + " out of range");
  return views;
}

void write_mask255(const fs::path& p, const MaskImage& m) {
  MaskImage out(m.width(), m.height(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 255 : 0;
  io::write_pgm(p, out);
}

std::string src_rel(int v) { return "irradiance/" + view_stem(v) + "_src.pfm"; }
std::string src_nc_rel(int v) { return "irradiance/" + view_stem(v) + "_src_nc.pfm"; }
std::string valid_rel(int v) { return "irradiance/" + view_stem(v) + "_valid.pgm"; }
std::string combined_rel(int v) { return "irradiance/" + view_stem(v) + "_src_combined.pfm"; }
std::string cluster_rel(int v, int k) { return "irradiance/" + view_stem(v) + "_cluster_" + std::to_string(k) + ".pfm"; }
std::string add_rel(int v, int id) { return "irradiance/" + view_stem(v) + "_add_" + std::to_string(id) + ".pfm"; }
std::string mirror_rel(int v) { return "mirror/" + view_stem(v) + ".pfm"; }
std::string mirror_valid_rel(int v) { return "mirror/" + view_stem(v) + "_valid.pgm"; }

/// Bundle scene with the processed mesh in place (mesh_hash identifies it).
struct ProcessedScene {
  MultiViewScene scene;
  std::string mesh_hash;
};

ProcessedScene load_processed(const JobConfig& job, Store& store) {
  ProcessedScene p;
  p.scene = load_scene_bundle(job.scene);
  const std::string rel = "mesh_processed.ply";
  p.mesh_hash = store.recorded_hash(rel);
  if (p.mesh_hash.empty()) throw Error("missing " + store.path(rel).string() + "; run preprocess first");
  p.scene.mesh = io::read_ply(store.path(rel));
  finalize_scene(p.scene);
  return p;
}

/// E_src for a view: the clipped-light combined map when solve-lights produced one.
std::string preferred_src_rel(const Store& store, int v) {
  return store.recorded_hash(combined_rel(v)).empty() ? src_rel(v) : combined_rel(v);
}

json cluster_to_json(const irradiance::LightCluster& c) {
  json voxels = json::array();
  for (const auto& k : c.voxels) voxels.push_back({k.x, k.y, k.z});
  return {{"id", c.id},
          {"voxel_size", c.voxel_size},
          {"center", {c.center.x(), c.center.y(), c.center.z()}},
          {"radius", c.radius},
          {"voxels", voxels}};
}

irradiance::LightCluster cluster_from_json(const json& j) {
  irradiance::LightCluster c;
  c.id = j.at("id").get<int>();
  c.voxel_size = j.at("voxel_size").get<double>();
  const auto& ce = j.at("center");
  c.center = Vec3(ce[0].get<double>(), ce[1].get<double>(), ce[2].get<double>());
  c.radius = j.at("radius").get<double>();
  for (const auto& v : j.at("voxels")) c.voxels.push_back({v[0].get<int>(), v[1].get<int>(), v[2].get<int>()});
  std::sort(c.voxels.begin(), c.voxels.end());
  return c;
}

std::vector<irradiance::LightCluster> read_clusters(const fs::path& p) {
  std::vector<irradiance::LightCluster> out;
  try {
    for (const auto& j : io::read_json(p).at("clusters")) out.push_back(cluster_from_json(j));
  } catch (const json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
  return out;
}

json rgb_json(const Rgb& c) { return json::array({c[0], c[1], c[2]}); }

/// Builds (or reuses) albedo_mesh.ply when every view has an E_src map.
void update_albedo_mesh(const JobConfig& job, Store& store, const ProcessedScene& ps) {
  std::vector<std::string> used;
  for (std::size_t v = 0; v < ps.scene.view_count(); ++v) {
    const std::string rel = preferred_src_rel(store, static_cast<int>(v));
    const std::string h = store.recorded_hash(rel);
    if (h.empty()) return;
    used.push_back(rel + ":" + h);
  }
  const std::string rel = "albedo_mesh.ply";
  const std::string hash = hash_json({{"mesh", ps.mesh_hash}, {"e_src", used}, {"tol", job.visibility_tol}});
  if (store.fresh(rel, hash)) {
    store.skip(rel);
    return;
  }
  std::vector<RgbImage> e_src;
  for (std::size_t v = 0; v < ps.scene.view_count(); ++v)
    e_src.push_back(io::read_pfm(store.path(preferred_src_rel(store, static_cast<int>(v)))));
  irradiance::AlbedoOptions opt;
  opt.visibility_tol = job.visibility_tol;
  const TriangleMesh albedo = irradiance::build_albedo_mesh(ps.scene, e_src, opt);
  io::write_ply(store.path(rel), albedo);
  std::size_t unseen = 0;
  for (auto s : albedo.albedo_seen) unseen += s == 0;
  store.commit(rel, hash, {{"kind", "albedo_mesh"}, {"unseen_vertices", unseen}});
}

}  // namespace

// ---------------------------------------------------------------------------

RunReport preprocess(const JobConfig& job) {
  RunReport report;
  Store store(job.out, job.force, report);
  const int spp = job.spp > 0 ? job.spp : 128;
  if (job.smooth_iters < 0) throw ValidationError("smooth-iters must be >= 0");

  MultiViewScene scene = load_scene_bundle(job.scene);
  const std::string b_hash = bundle_hash(job.scene);
  const std::string mesh_hash =
      hash_json({{"bundle", b_hash}, {"smooth_iters", job.smooth_iters}, {"snap_planes", job.snap_planes}});
  const std::string mesh_rel = "mesh_processed.ply";
  if (store.fresh(mesh_rel, mesh_hash)) {
    scene.mesh = io::read_ply(store.path(mesh_rel));
    store.skip(mesh_rel);
  } else {
    TriangleMesh m = geomproc::smooth_normals(scene.mesh, job.smooth_iters, 0.5);
    if (job.snap_planes) m = geomproc::snap_planes(m);
    io::write_ply(store.path(mesh_rel), m);
    // Reload so in-memory and on-disk meshes agree bit for bit.
    scene.mesh = io::read_ply(store.path(mesh_rel));
    store.commit(mesh_rel, mesh_hash,
                 {{"kind", "mesh"}, {"smooth_iters", job.smooth_iters}, {"snap_planes", job.snap_planes}});
  }
  finalize_scene(scene);
  const ProcessedScene ps{scene, mesh_hash};
  const std::vector<int> views = select_views(job, scene);

  for (int v : views) {
    const std::string stem = view_stem(v);
    const json base = {{"mesh", mesh_hash}, {"view", v}};

    const std::string depth_rel = "depth/" + stem + ".pfm";
    const std::string depth_hash = hash_json(base);
    if (store.fresh(depth_rel, depth_hash)) {
      store.skip(depth_rel);
    } else {
      io::write_pfm(store.path(depth_rel), scene.depth_maps[v]);
      store.commit(depth_rel, depth_hash, {{"kind", "depth"}, {"view", scene.cameras[v].id}});
    }

    const std::string src_hash =
        hash_json({{"base", base}, {"seed", job.seed}, {"spp", spp}, {"tol", job.visibility_tol}, {"kind", "src"}});
    if (store.fresh(src_rel(v), src_hash) && store.fresh(src_nc_rel(v), src_hash) &&
        store.fresh(valid_rel(v), src_hash)) {
      store.skip(src_rel(v));
      store.skip(src_nc_rel(v));
      store.skip(valid_rel(v));
    } else {
      irradiance::SourceOptions opt;
      opt.spp = spp;
      opt.seed = job.seed;
      opt.visibility_tol = job.visibility_tol;
      const auto est = irradiance::estimate_source_irradiance(scene, v, opt);
      const GBuffer gb = render_gbuffer(*scene.bvh, scene.cameras[v]);
      const auto normals = irradiance::normal_map(gb);
      const json info = {{"kind", "src"}, {"view", scene.cameras[v].id}, {"seed", job.seed}, {"spp", spp}};
      io::write_pfm(store.path(src_rel(v)), irradiance::denoise_irradiance(est.e_src, gb.depth, normals));
      store.commit(src_rel(v), src_hash, info);
      io::write_pfm(store.path(src_nc_rel(v)), irradiance::denoise_irradiance(est.e_src_nc, gb.depth, normals));
      store.commit(src_nc_rel(v), src_hash, info);
      write_mask255(store.path(valid_rel(v)), est.valid);
      store.commit(valid_rel(v), src_hash, info);
    }

    const std::string mirror_hash = hash_json({{"base", base}, {"tol", job.visibility_tol}, {"kind", "mirror"}});
    if (store.fresh(mirror_rel(v), mirror_hash) && store.fresh(mirror_valid_rel(v), mirror_hash)) {
      store.skip(mirror_rel(v));
      store.skip(mirror_valid_rel(v));
    } else {
      const auto m = mirror::compute_source_mirror(scene, v, job.visibility_tol);
      io::write_pfm(store.path(mirror_rel(v)), m.value);
      store.commit(mirror_rel(v), mirror_hash, {{"kind", "mirror"}, {"view", scene.cameras[v].id}});
      write_mask255(store.path(mirror_valid_rel(v)), m.valid);
      store.commit(mirror_valid_rel(v), mirror_hash, {{"kind", "mirror_valid"}, {"view", scene.cameras[v].id}});
    }
  }

  if (scene.has_clip_masks()) {
    const std::string rel = "clusters.json";
    const std::string hash = hash_json({{"mesh", mesh_hash}, {"kind", "clusters"}});
    std::vector<irradiance::LightCluster> clusters;
    if (store.fresh(rel, hash)) {
      clusters = read_clusters(store.path(rel));
      store.skip(rel);
    } else {
      clusters = irradiance::detect_light_clusters(scene);
      json arr = json::array();
      for (const auto& c : clusters) arr.push_back(cluster_to_json(c));
      io::write_json(store.path(rel), {{"clusters", arr}});
      store.commit(rel, hash, {{"kind", "clusters"}});
    }
    for (const auto& c : clusters) {
      for (int v : views) {
        const std::string crel = cluster_rel(v, c.id);
        const std::string chash = hash_json(
            {{"clusters", hash}, {"cluster", c.id}, {"view", v}, {"seed", job.seed}, {"spp", spp}, {"kind", "cluster"}});
        if (store.fresh(crel, chash)) {
          store.skip(crel);
          continue;
        }
        const RgbImage raw = irradiance::cluster_irradiance(scene, v, c, spp, job.seed);
        const GBuffer gb = render_gbuffer(*scene.bvh, scene.cameras[v]);
        io::write_pfm(store.path(crel), irradiance::denoise_irradiance(raw, gb.depth, irradiance::normal_map(gb)));
        store.commit(crel, chash, {{"kind", "cluster"}, {"cluster", c.id}, {"view", scene.cameras[v].id}});
      }
    }
  }

  update_albedo_mesh(job, store, ps);
  return report;
}

RunReport solve_lights(const JobConfig& job, const fs::path& clicks_path) {
  RunReport report;
  Store store(job.out, job.force, report);
  const ProcessedScene ps = load_processed(job, store);
  const MultiViewScene& scene = ps.scene;
  if (!fs::exists(store.path("clusters.json"))) throw Error("no clusters.json; run preprocess on a scene with clip masks");
  const auto clusters = read_clusters(store.path("clusters.json"));
  if (clusters.empty()) throw Error("no light clusters were detected");
  const auto clicks = irradiance::read_clicks_json(clicks_path);
  clicks.validate(&scene);

  std::vector<std::string> inputs{io::read_text(clicks_path)};
  std::vector<RgbImage> e_nc, images;
  std::vector<std::vector<RgbImage>> e_cluster(clusters.size());
  for (std::size_t v = 0; v < scene.view_count(); ++v) {
    const int vi = static_cast<int>(v);
    const std::string h = store.recorded_hash(src_nc_rel(vi));
    if (h.empty()) throw Error("missing " + src_nc_rel(vi) + "; run preprocess on all views");
    inputs.push_back(h);
    e_nc.push_back(io::read_pfm(store.path(src_nc_rel(vi))));
    images.push_back(scene.images[v].pixels);
    for (std::size_t k = 0; k < clusters.size(); ++k) {
      const std::string rel = cluster_rel(vi, clusters[k].id);
      const std::string ch = store.recorded_hash(rel);
      if (ch.empty()) throw Error("missing " + rel + "; run preprocess on all views");
      inputs.push_back(ch);
      e_cluster[k].push_back(io::read_pfm(store.path(rel)));
    }
  }
  const std::string hash = hash_json({{"inputs", inputs}, {"kind", "solve"}});
  const std::string rel = "lights_solved.json";
  irradiance::ClippedLightSolution sol;
  if (store.fresh(rel, hash)) {
    store.skip(rel);
    const json j = io::read_json(store.path(rel));
    for (const auto& c : j.at("clusters")) {
      const auto& a = c.at("alpha");
      sol.alpha.push_back(Rgb(a[0].get<float>(), a[1].get<float>(), a[2].get<float>()));
    }
  } else {
    sol = irradiance::solve_clipped_lights(e_nc, e_cluster, images, clicks);
    json cl = json::array(), beta = json::array();
    for (std::size_t k = 0; k < clusters.size(); ++k) cl.push_back({{"id", clusters[k].id}, {"alpha", rgb_json(sol.alpha[k])}});
    for (const auto& b : sol.beta) beta.push_back(rgb_json(b));
    io::write_json(store.path(rel), {{"clusters", cl},
                                     {"beta", beta},
                                     {"residual", rgb_json(sol.residual)},
                                     {"condition", rgb_json(sol.condition)}});
    store.commit(rel, hash, {{"kind", "lights_solved"}});
  }

  for (std::size_t v = 0; v < scene.view_count(); ++v) {
    const int vi = static_cast<int>(v);
    const std::string crel = combined_rel(vi);
    const std::string chash = hash_json({{"solve", hash}, {"view", vi}, {"kind", "src_combined"}});
    if (store.fresh(crel, chash)) {
      store.skip(crel);
      continue;
    }
    std::vector<const RgbImage*> maps;
    for (auto& per_view : e_cluster) maps.push_back(&per_view[v]);
    io::write_pfm(store.path(crel), irradiance::combine_source_irradiance(e_nc[v], maps, sol.alpha));
    store.commit(crel, chash, {{"kind", "src_combined"}, {"view", scene.cameras[v].id}});
  }
  update_albedo_mesh(job, store, ps);
  return report;
}

RunReport add_light(const JobConfig& job, const fs::path& lights_file, int light_id) {
  RunReport report;
  Store store(job.out, job.force, report);
  const ProcessedScene ps = load_processed(job, store);
  const std::string albedo_hash = store.recorded_hash("albedo_mesh.ply");
  if (albedo_hash.empty()) throw Error("missing albedo_mesh.ply; run preprocess on all views first");
  std::vector<AreaLight> lights = read_lights_json(lights_file);
  if (light_id >= 0) {
    std::erase_if(lights, [&](const AreaLight& l) { return l.id != light_id; });
    if (lights.empty()) throw Error("light " + std::to_string(light_id) + " not found in " + lights_file.string());
  }
  for (const auto& l : lights) l.validate();

  // Registry of every light ever added, keyed by id.
  std::map<int, AreaLight> registry;
  if (fs::exists(store.path("lights.json")))
    for (const auto& l : read_lights_json(store.path("lights.json"))) registry[l.id] = l;
  for (const auto& l : lights) registry[l.id] = l;
  std::vector<AreaLight> all;
  for (const auto& [id, l] : registry) all.push_back(l);
  write_lights_json(store.path("lights.json"), all);

  const int spp = job.spp > 0 ? job.spp : 16;
  const TriangleMesh albedo = io::read_ply(store.path("albedo_mesh.ply"));
  const Bvh bvh(albedo);
  const std::vector<int> views = select_views(job, ps.scene);
  for (const auto& l : lights) {
    for (int v : views) {
      const std::string rel = add_rel(v, l.id);
      const json lj = {{"origin", {l.origin.x(), l.origin.y(), l.origin.z()}},
                       {"u", {l.edge_u.x(), l.edge_u.y(), l.edge_u.z()}},
                       {"v", {l.edge_v.x(), l.edge_v.y(), l.edge_v.z()}},
                       {"e", rgb_json(l.emittance)},
                       {"two_sided", l.two_sided}};
      const std::string hash = hash_json(
          {{"albedo", albedo_hash}, {"light", lj}, {"view", v}, {"seed", job.seed}, {"spp", spp}, {"kind", "add"}});
      if (store.fresh(rel, hash)) {
        store.skip(rel);
        continue;
      }
      irradiance::AddedOptions opt;
      opt.spp = spp;
      opt.seed = job.seed;
      io::write_pfm(store.path(rel), irradiance::compute_added_irradiance(bvh, l, ps.scene.cameras[v], opt));
      store.commit(rel, hash,
                   {{"kind", "add"}, {"light", l.id}, {"view", ps.scene.cameras[v].id}, {"seed", job.seed}, {"spp", spp}});
    }
  }
  return report;
}

PreparedScene load_prepared(const JobConfig& job, const LightingEdit& edit) {
  RunReport scratch;
  Store store(job.out, false, scratch);
  ProcessedScene ps = load_processed(job, store);
  PreparedScene p;
  std::vector<std::string> hashes{ps.mesh_hash};
  const std::size_t n = ps.scene.view_count();
  auto need = [&](const std::string& rel) {
    const std::string h = store.recorded_hash(rel);
    if (h.empty()) throw Error("missing " + store.path(rel).string() + "; run preprocess first");
    hashes.push_back(h);
    return store.path(rel);
  };
  for (std::size_t v = 0; v < n; ++v) {
    const int vi = static_cast<int>(v);
    p.irr.e_src.push_back(io::read_pfm(need(preferred_src_rel(store, vi))));
    p.irr.e_src_nc.push_back(io::read_pfm(need(src_nc_rel(vi))));
    p.irr.e_valid.push_back(io::read_pgm(need(valid_rel(vi))));
    p.source_mirrors.push_back(io::read_pfm(need(mirror_rel(vi))));
  }
  for (const auto& [id, w] : edit.light_weights) {
    if (w == 0.0) continue;
    auto& maps = p.irr.e_add[id];
    for (std::size_t v = 0; v < n; ++v) {
      const std::string rel = add_rel(static_cast<int>(v), id);
      if (store.recorded_hash(rel).empty())
        throw Error("missing added irradiance for light " + std::to_string(id) + "; run add-light first");
      maps.push_back(io::read_pfm(need(rel)));
    }
  }
  p.irr.epsilon = irradiance::irradiance_floor(p.irr.e_src);
  p.scene = std::move(ps.scene);
  p.input_hash = hash_json(hashes);
  return p;
}

RenderedFeatures render_feature_stack(const PreparedScene& prepared, const Camera& novel, const LightingEdit& edit,
                                      const nlohmann::json& metadata, double tol) {
  novel.validate();
  edit.validate();
  const MultiViewScene& scene = prepared.scene;
  const GBuffer gb = render_gbuffer(*scene.bvh, novel);
  const mirror::MirrorTrace trace = mirror::trace_mirror(scene, novel, gb);
  RenderedFeatures r;
  r.target_mirror = mirror::compute_target_mirror(scene, prepared.irr, edit, novel, trace, tol);
  reproject::CompositeOptions opt;
  opt.visibility_tol = tol;
  r.composites = reproject::build_composites(scene, prepared.source_mirrors, &prepared.irr, edit, novel, gb, trace, opt);
  r.stack = featurepack::pack_features(r.composites, r.target_mirror.value, metadata);
  return r;
}

namespace {

json camera_json(const Camera& c) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(c.rotation(i, j));
  return {{"id", c.id}, {"width", c.width}, {"height", c.height}, {"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx},
          {"cy", c.cy}, {"rotation", r}, {"translation", {c.translation.x(), c.translation.y(), c.translation.z()}}};
}

json edit_json(const LightingEdit& e) {
  json w = json::object();
  for (const auto& [id, v] : e.light_weights) w[std::to_string(id)] = v;
  return {{"alpha_dim", e.alpha_dim}, {"light_weights", w}};
}

}  // namespace

RunReport render_features(const JobConfig& job, const RenderRequest& request) {
  RunReport report;
  Store store(job.out, job.force, report);
  const PreparedScene prepared = load_prepared(job, request.edit);
  const json meta = {{"novel_camera", camera_json(request.novel)},
                     {"edit", edit_json(request.edit)},
                     {"seed", job.seed},
                     {"version", kVersion}};
  const std::string rel = "features/" + request.name + ".ften";
  const std::string hash =
      hash_json({{"inputs", prepared.input_hash}, {"meta", meta}, {"tol", job.visibility_tol}, {"previews", request.previews}});
  if (store.fresh(rel, hash)) {
    store.skip(rel);
    return report;
  }
  const RenderedFeatures r = render_feature_stack(prepared, request.novel, request.edit, meta, job.visibility_tol);
  if (request.previews) {
    auto preview = [&](const std::string& suffix, const RgbImage& img) {
      const std::string prel = "features/" + request.name + "_" + suffix + ".pfm";
      io::write_pfm(store.path(prel), img);
      report.written.push_back(prel);
    };
    for (int k = 0; k < 8; ++k) preview("I" + std::to_string(k + 1), r.composites.image[k]);
    preview("Mtgt", r.target_mirror.value);
    preview("Esrc", r.composites.e_src);
    preview("Eadd", r.composites.e_add);
    preview("Erem", r.composites.e_rem);
  }
  featurepack::write_tensor(store.path(rel), r.stack);
  store.commit(rel, hash, {{"kind", "features"}, {"channels", r.stack.channels()}, {"layout_hash", featurepack::layout_hash()}});
  return report;
}

RunReport oracle_gen(const fs::path& out, const OracleGenOptions& options) {
  RunReport report;
  Store store(out, false, report);
  const json params = {{"preset", options.preset}, {"width", options.width}, {"height", options.height},
                       {"spp", options.spp},       {"seed", options.seed},   {"version", kVersion}};
  const std::string hash = hash_json(params);
  const std::string rel = "cameras.json";
  if (store.fresh(rel, hash)) {
    store.skip(rel);
    return report;
  }
  oracle::ProceduralSceneSpec spec = oracle::preset_spec(options.preset);
  spec.rig.width = options.width;
  spec.rig.height = options.height;
  spec.seed = options.seed;
  oracle::OracleScene o = oracle::gen_procedural_scene(spec);
  json materials = json::array();
  for (const auto& m : o.materials)
    materials.push_back({{"rho", rgb_json(m.rho)},
                         {"k_s", m.k_s},
                         {"mirror", m.mirror},
                         {"exponent", m.exponent},
                         {"emission", rgb_json(m.emission)}});
  if (!o.lights.empty()) {
    const auto bvh = oracle::build_bvh(o);
    oracle::GtOptions gt;
    gt.spp = options.spp;
    gt.seed = options.seed;
    std::vector<RgbImage> images;
    for (std::size_t v = 0; v < o.scene.cameras.size(); ++v) {
      const auto r = oracle::render_ground_truth(o, *bvh, o.scene.cameras[v], gt);
      RgbImage total = r.diffuse;
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += r.vdep[i];
      images.push_back(total);
      const std::string stem = view_stem(static_cast<int>(v));
      io::write_pfm(out / "gt" / (stem + "_diffuse.pfm"), r.diffuse);
      io::write_pfm(out / "gt" / (stem + "_vdep.pfm"), r.vdep);
    }
    oracle::attach_images(o, images);
    io::write_json(out / "gt" / "materials.json",
                   {{"materials", materials}, {"triangle_material", o.triangle_material}});
  } else {
    oracle::render_field_images(o, [](const Hit& h) { return oracle::procedural_texture(h.position); });
  }
  save_scene_bundle(out, o.scene, o.lights);
  store.commit(rel, hash, params);
  return report;
}

RunReport flow(const JobConfig& job, std::vector<std::pair<int, int>> pairs) {
  RunReport report;
  Store store(job.out, job.force, report);
  MultiViewScene scene = load_scene_bundle(job.scene);
  std::string mesh_hash = store.recorded_hash("mesh_processed.ply");
  if (!mesh_hash.empty()) {
    scene.mesh = io::read_ply(store.path("mesh_processed.ply"));
    finalize_scene(scene);
  } else {
    mesh_hash = bundle_hash(job.scene);
  }
  if (pairs.empty())
    for (std::size_t v = 0; v + 1 < scene.view_count(); ++v) pairs.emplace_back(static_cast<int>(v), static_cast<int>(v + 1));
  for (const auto& [a, b] : pairs) {
    if (a < 0 || b < 0 || a >= static_cast<int>(scene.view_count()) || b >= static_cast<int>(scene.view_count()))
      throw ValidationError("flow pair " + std::to_string(a) + ":" + std::to_string(b) + " out of range");
    const std::string rel = "flow/" + view_stem(a) + "_" + view_stem(b) + ".pfm";
    const std::string hash = hash_json({{"mesh", mesh_hash}, {"a", a}, {"b", b}, {"tol", job.visibility_tol}});
    if (store.fresh(rel, hash)) {
      store.skip(rel);
      continue;
    }
    const auto f = reproject::compute_flow(scene, a, b, job.visibility_tol);
    RgbImage packed(f.flow.width(), f.flow.height(), Rgb::Zero());
    for (std::size_t i = 0; i < packed.size(); ++i)
      packed[i] = Rgb(f.flow[i].x(), f.flow[i].y(), f.valid[i] ? 1.0f : 0.0f);
    io::write_pfm(store.path(rel), packed);
    store.commit(rel, hash, {{"kind", "flow"}, {"a", scene.cameras[a].id}, {"b", scene.cameras[b].id}});
  }
  return report;
}

std::map<int, double> parse_light_weights(const std::string& text) {
  std::map<int, double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError("light weight '" + item + "' is not of the form id:weight");
    try {
      out[std::stoi(item.substr(0, colon))] = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw ValidationError("light weight '" + item + "' is not numeric");
    }
  }
  return out;
}

Camera resolve_novel_camera(const fs::path& scene_dir, const std::string& spec) {
  if (!spec.empty() && std::all_of(spec.begin(), spec.end(), [](unsigned char c) { return std::isdigit(c); })) {
    const auto cams = read_cameras_json(scene_dir / "cameras.json");
    const auto idx = static_cast<std::size_t>(std::stoul(spec));
    if (idx >= cams.size()) throw ValidationError("novel camera index " + spec + " out of range");
    return cams[idx];
  }
  if (fs::exists(spec)) return camera_from_json_text(io::read_text(spec));
  return camera_from_json_text(spec);
}

}  // namespace relight::pipeline
