#pragma once

#include "relight/image.hpp"
#include "relight/scene.hpp"

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace relight::io {

// PFM: "PF" (RGB) or "Pf" (gray), negative scale = little-endian, rows stored
// bottom-to-top. Reading a gray file into RGB replicates the channel.
RgbImage read_pfm(const std::filesystem::path& path);
FloatImage read_pfm_gray(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const RgbImage& img);
void write_pfm(const std::filesystem::path& path, const FloatImage& img);

// Binary 8-bit PGM (P5) / PPM (P6).
MaskImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const MaskImage& img);
/// Per-channel mask: returns bits (c set when channel c byte is nonzero).
MaskImage read_ppm_mask(const std::filesystem::path& path);
void write_ppm_mask(const std::filesystem::path& path, const MaskImage& bits);

// Binary little-endian PLY. Vertex properties x y z nx ny nz, optional float
// ar ag ab (albedo) and uchar seen; faces as "list uchar int vertex_indices".
TriangleMesh read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh);

nlohmann::json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace relight::io
