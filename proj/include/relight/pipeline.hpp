#pragma once

#include "relight/featurepack.hpp"
#include "relight/irradiance.hpp"
#include "relight/mirror.hpp"
#include "relight/scene.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace relight::pipeline {

// Output layout under JobConfig::out:
//   mesh_processed.ply, albedo_mesh.ply, clusters.json, lights.json, lights_solved.json
//   depth/NNN.pfm
//   irradiance/NNN_src.pfm, NNN_src_nc.pfm, NNN_valid.pgm, NNN_cluster_K.pfm,
//              NNN_src_combined.pfm, NNN_add_<light id>.pfm
//   mirror/NNN.pfm, NNN_valid.pgm
//   features/<name>.ften (+ preview PFMs)
//   flow/A_B.pfm (dx, dy, validity)
// Every artifact has a sidecar <artifact>.json with the hash of its inputs.

inline constexpr const char* kVersion = "0.1.0";

struct JobConfig {
  std::filesystem::path scene;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int spp = 0;                    // 0 selects the command default
  std::vector<int> views;         // empty = all views
  int smooth_iters = 3;
  bool snap_planes = false;
  double visibility_tol = kVisibilityTolerance;
  bool force = false;             // ignore up-to-date artifacts
};

struct RunReport {
  std::vector<std::string> written;
  std::vector<std::string> skipped;
  nlohmann::json to_json() const;
};

RunReport preprocess(const JobConfig& job);
RunReport solve_lights(const JobConfig& job, const std::filesystem::path& clicks);
/// E_add maps for the lights in `lights_file` (all of them when light_id < 0).
RunReport add_light(const JobConfig& job, const std::filesystem::path& lights_file, int light_id = -1);

struct RenderRequest {
  Camera novel;
  LightingEdit edit;
  std::string name = "novel";
  bool previews = true;
};
RunReport render_features(const JobConfig& job, const RenderRequest& request);

struct OracleGenOptions {
  std::string preset = "two_box";
  int width = 64, height = 48;
  int spp = 64;
  std::uint64_t seed = 0;
};
RunReport oracle_gen(const std::filesystem::path& out, const OracleGenOptions& options);

/// Flow maps for (a, b) view-index pairs; empty = consecutive pairs.
RunReport flow(const JobConfig& job, std::vector<std::pair<int, int>> pairs);

// ---------------------------------------------------------------------------
// In-memory pieces shared by the commands and by benchmarks.

/// Processed scene with every precomputed map needed for online rendering.
struct PreparedScene {
  MultiViewScene scene;
  irradiance::IrradianceSet irr;
  std::vector<RgbImage> source_mirrors;
  /// Combined hash of every artifact that was loaded.
  std::string input_hash;
};

/// Loads the bundle, the processed mesh and the maps written by preprocess /
/// solve-lights / add-light for the lights the edit uses.
PreparedScene load_prepared(const JobConfig& job, const LightingEdit& edit);

struct RenderedFeatures {
  featurepack::FeatureStack stack;
  reproject::CompositeSet composites;
  mirror::MirrorMap target_mirror;
};

/// Online stage: geometry buffers, target mirror, composites and packing.
RenderedFeatures render_feature_stack(const PreparedScene& prepared, const Camera& novel, const LightingEdit& edit,
                                      const nlohmann::json& metadata = nlohmann::json::object(),
                                      double tol = kVisibilityTolerance);

/// Parses "id:w,id:w".
std::map<int, double> parse_light_weights(const std::string& text);
/// Novel camera from a cameras.json index ("3") or a JSON camera record / file.
Camera resolve_novel_camera(const std::filesystem::path& scene_dir, const std::string& spec);

}  // namespace relight::pipeline
