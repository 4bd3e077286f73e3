#pragma once

#include "relight/reproject.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace relight::featurepack {

inline constexpr double kDefaultMu = 64.0;
inline constexpr int kChannelCount = 66;
inline constexpr std::uint32_t kFtenVersion = 1;

/// log(1 + mu x) / log(1 + mu); throws on negative or non-finite input.
double tonemap(double x, double mu = kDefaultMu);
/// ((1 + mu)^y - 1) / mu.
double inverse_tonemap(double y, double mu = kDefaultMu);

/// Fixed network input layout.
const std::array<std::string, kChannelCount>& channel_names();
/// FNV-1a over the names joined by '\n'; changes whenever the layout does.
std::uint64_t layout_hash();

struct FeatureStack {
  int height = 0, width = 0;
  std::vector<std::string> names;
  std::vector<float> data;  // channel-major planes, row-major within a plane
  nlohmann::json metadata = nlohmann::json::object();

  int channels() const { return static_cast<int>(names.size()); }
  float* plane(int c) { return data.data() + static_cast<std::size_t>(c) * width * height; }
  const float* plane(int c) const { return data.data() + static_cast<std::size_t>(c) * width * height; }
  float at(int c, int x, int y) const { return plane(c)[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const FeatureStack& o) const;
};

/// Tonemaps radiance maps, keeps irradiance linear and extras raw.
FeatureStack pack_features(const reproject::CompositeSet& composites, const RgbImage& target_mirror,
                           const nlohmann::json& metadata = nlohmann::json::object(), double mu = kDefaultMu);

void write_tensor(const std::filesystem::path& path, const FeatureStack& stack);
FeatureStack read_tensor(const std::filesystem::path& path);
std::string serialize_tensor(const FeatureStack& stack);
FeatureStack parse_tensor(const std::string& bytes);

}  // namespace relight::featurepack
