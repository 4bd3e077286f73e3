// relight: command-line driver for the relighting feature pipeline.

#include "relight/common.hpp"
#include "relight/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <sstream>

namespace {

using relight::pipeline::JobConfig;
using relight::pipeline::RunReport;

std::vector<int> parse_views(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw relight::ValidationError("bad view index '" + item + "'");
    }
  }
  return out;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw relight::ValidationError("bad flow pair '" + item + "' (expected a:b)");
    out.emplace_back(std::stoi(item.substr(0, colon)), std::stoi(item.substr(colon + 1)));
  }
  return out;
}

void fail(const std::string& type, const std::string& message) {
  std::cerr << nlohmann::json{{"error", {{"type", type}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relighting feature pipeline"};
  app.require_subcommand(1);

  JobConfig job;
  std::string views;
  int threads = 0;
  std::string scene_dir, out_dir;
  auto common = [&](CLI::App* sub, bool needs_scene) {
    auto* s = sub->add_option("--scene", scene_dir, "Scene bundle directory");
    if (needs_scene) s->required();
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--seed", job.seed, "Global seed");
    sub->add_option("--spp", job.spp, "Samples per pixel (command default when 0)");
    sub->add_option("--views", views, "Comma-separated view indices (default: all)");
    sub->add_option("--threads", threads, "Worker threads (default: RELIGHT_THREADS or all cores)");
    sub->add_option("--visibility-tol", job.visibility_tol, "Relative depth tolerance");
    sub->add_flag("--force", job.force, "Recompute up-to-date artifacts");
  };

  auto* pre = app.add_subcommand("preprocess", "Depth, source irradiance, mirrors, clusters and albedo mesh");
  common(pre, true);
  pre->add_option("--smooth-iters", job.smooth_iters, "Laplacian normal smoothing iterations");
  pre->add_flag("--snap-planes", job.snap_planes, "Snap normals of RANSAC planes");

  std::string clicks;
  auto* solve = app.add_subcommand("solve-lights", "Recover clipped light intensities from albedo clicks");
  common(solve, true);
  solve->add_option("--clicks", clicks, "clicks.json")->required();

  std::string lights_file;
  int light_id = -1;
  auto* add = app.add_subcommand("add-light", "Added irradiance per view for new area lights");
  common(add, true);
  add->add_option("--lights", lights_file, "lights.json with the lights to add")->required();
  add->add_option("--light-id", light_id, "Only this light id");

  std::string novel_spec, weights, name = "novel";
  double alpha_dim = 0.0;
  bool no_previews = false;
  auto* render = app.add_subcommand("render-features", "Novel-view feature stack (.ften)");
  common(render, true);
  render->add_option("--novel-camera", novel_spec, "cameras.json index, camera JSON file or JSON text")->required();
  render->add_option("--alpha-dim", alpha_dim, "Fraction of the original lighting removed");
  render->add_option("--lights", lights_file, "Lights file; every light gets weight 1 unless --light-weights");
  render->add_option("--light-weights", weights, "id:weight,...");
  render->add_option("--name", name, "Output name under features/");
  render->add_flag("--no-previews", no_previews, "Skip preview PFMs");

  relight::pipeline::OracleGenOptions og;
  auto* gen = app.add_subcommand("oracle-gen", "Write a procedural oracle scene bundle");
  gen->add_option("--out", out_dir, "Bundle directory")->required();
  gen->add_option("--preset", og.preset, "furnace | two_box | lambertian | mirror");
  gen->add_option("--width", og.width);
  gen->add_option("--height", og.height);
  gen->add_option("--spp", og.spp, "Ground-truth samples per pixel");
  gen->add_option("--seed", og.seed);
  gen->add_option("--threads", threads);

  std::string pairs;
  auto* fl = app.add_subcommand("flow", "Ground-truth optical flow between views");
  common(fl, true);
  fl->add_option("--pairs", pairs, "a:b,... view index pairs (default: consecutive)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    fail("usage", e.what());
    return 2;
  }

  try {
    if (threads > 0) relight::set_thread_count(threads);
    job.scene = scene_dir;
    job.out = out_dir;
    job.views = parse_views(views);
    RunReport report;
    if (pre->parsed()) {
      report = relight::pipeline::preprocess(job);
    } else if (solve->parsed()) {
      report = relight::pipeline::solve_lights(job, clicks);
    } else if (add->parsed()) {
      report = relight::pipeline::add_light(job, lights_file, light_id);
    } else if (render->parsed()) {
      relight::pipeline::RenderRequest req;
      req.novel = relight::pipeline::resolve_novel_camera(job.scene, novel_spec);
      req.edit.alpha_dim = alpha_dim;
      if (!lights_file.empty())
        for (const auto& l : relight::read_lights_json(lights_file)) req.edit.light_weights[l.id] = 1.0;
      if (!weights.empty()) req.edit.light_weights = relight::pipeline::parse_light_weights(weights);
      req.edit.validate();
      req.name = name;
      req.previews = !no_previews;
      report = relight::pipeline::render_features(job, req);
    } else if (gen->parsed()) {
      report = relight::pipeline::oracle_gen(out_dir, og);
    } else if (fl->parsed()) {
      report = relight::pipeline::flow(job, parse_pairs(pairs));
    }
    std::cout << report.to_json().dump() << "\n";
    return 0;
  } catch (const relight::ValidationError& e) {
    fail("validation", e.what());
  } catch (const relight::FormatError& e) {
    fail("format", e.what());
  } catch (const relight::Error& e) {
    fail("error", e.what());
  } catch (const std::exception& e) {
    fail("internal", e.what());
  }
  return 1;
}
