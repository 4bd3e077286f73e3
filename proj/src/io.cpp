#include "relight/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace relight::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "payload I/O assumes a little-endian host");

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { atomic_write(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Netpbm-style headers

namespace {

class Cursor {
 public:
  Cursor(const std::string& bytes, fs::path path) : bytes_(bytes), path_(std::move(path)) {}

  std::string token() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
    if (start == pos_) throw FormatError(path_.string() + ": truncated header");
    return bytes_.substr(start, pos_ - start);
  }
  /// Consumes exactly one whitespace byte that terminates a header.
  void end_header() {
    if (pos_ >= bytes_.size()) throw FormatError(path_.string() + ": truncated header");
    ++pos_;
  }
  std::size_t pos() const { return pos_; }
  const fs::path& path() const { return path_; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
  fs::path path_;
};

int parse_dim(const std::string& tok, const fs::path& path) {
  try {
    const int v = std::stoi(tok);
    if (v <= 0) throw FormatError(path.string() + ": nonpositive dimension");
    return v;
  } catch (const std::logic_error&) {
    throw FormatError(path.string() + ": bad dimension '" + tok + "'");
  }
}

struct PfmData {
  int width, height, channels;
  std::vector<float> values;  // top-to-bottom, interleaved
};

PfmData read_pfm_any(const fs::path& path) {
  const std::string bytes = read_text(path);
  Cursor cur(bytes, path);
  const std::string magic = cur.token();
  int channels = 0;
  if (magic == "PF") channels = 3;
  else if (magic == "Pf") channels = 1;
  else throw FormatError(path.string() + ": bad magic");
  PfmData d;
  d.channels = channels;
  d.width = parse_dim(cur.token(), path);
  d.height = parse_dim(cur.token(), path);
  const double scale = std::stod(cur.token());
  cur.end_header();
  const bool little = scale < 0;
  const std::size_t count = static_cast<std::size_t>(d.width) * d.height * channels;
  if (bytes.size() - cur.pos() < count * 4) throw FormatError(path.string() + ": truncated payload");
  d.values.resize(count);
  const std::size_t row = static_cast<std::size_t>(d.width) * channels;
  for (int y = 0; y < d.height; ++y) {
    const char* src = bytes.data() + cur.pos() + static_cast<std::size_t>(d.height - 1 - y) * row * 4;
    std::memcpy(d.values.data() + static_cast<std::size_t>(y) * row, src, row * 4);
  }
  if (!little) {
    for (float& v : d.values) {
      std::uint32_t u = std::bit_cast<std::uint32_t>(v);
      v = std::bit_cast<float>(__builtin_bswap32(u));
    }
  }
  return d;
}

std::string pfm_bytes(int width, int height, int channels, const float* top_down) {
  std::ostringstream out;
  out << (channels == 3 ? "PF" : "Pf") << "\n" << width << " " << height << "\n-1.0\n";
  std::string s = out.str();
  const std::size_t row = static_cast<std::size_t>(width) * channels * 4;
  const std::size_t header = s.size();
  s.resize(header + row * height);
  for (int y = 0; y < height; ++y) {
    std::memcpy(s.data() + header + static_cast<std::size_t>(height - 1 - y) * row,
                reinterpret_cast<const char*>(top_down) + static_cast<std::size_t>(y) * row, row);
  }
  return s;
}

}  // namespace

RgbImage read_pfm(const fs::path& path) {
  PfmData d = read_pfm_any(path);
  RgbImage img(d.width, d.height);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (d.channels == 3) img[i] = Rgb(d.values[3 * i], d.values[3 * i + 1], d.values[3 * i + 2]);
    else img[i] = Rgb::Constant(d.values[i]);
  }
  return img;
}

FloatImage read_pfm_gray(const fs::path& path) {
  PfmData d = read_pfm_any(path);
  if (d.channels != 1) throw FormatError(path.string() + ": expected single-channel PFM");
  FloatImage img(d.width, d.height);
  img.data() = std::move(d.values);
  return img;
}

void write_pfm(const fs::path& path, const RgbImage& img) {
  std::vector<float> flat(img.size() * 3);
  for (std::size_t i = 0; i < img.size(); ++i)
    for (int c = 0; c < 3; ++c) flat[3 * i + c] = img[i][c];
  atomic_write(path, pfm_bytes(img.width(), img.height(), 3, flat.data()));
}

void write_pfm(const fs::path& path, const FloatImage& img) {
  atomic_write(path, pfm_bytes(img.width(), img.height(), 1, img.data().data()));
}

namespace {

std::pair<MaskImage, int> read_netpbm8(const fs::path& path, const char* expect) {
  const std::string bytes = read_text(path);
  Cursor cur(bytes, path);
  const std::string magic = cur.token();
  if (magic != expect) throw FormatError(path.string() + ": bad magic");
  const int channels = magic == "P6" ? 3 : 1;
  const int w = parse_dim(cur.token(), path);
  const int h = parse_dim(cur.token(), path);
  const int maxval = parse_dim(cur.token(), path);
  if (maxval > 255) throw FormatError(path.string() + ": 16-bit netpbm unsupported");
  cur.end_header();
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - cur.pos() < count) throw FormatError(path.string() + ": truncated payload");
  MaskImage img(w * channels, h);
  std::memcpy(img.data().data(), bytes.data() + cur.pos(), count);
  return {std::move(img), channels};
}

}  // namespace

MaskImage read_pgm(const fs::path& path) { return read_netpbm8(path, "P5").first; }

void write_pgm(const fs::path& path, const MaskImage& img) {
  std::ostringstream out;
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::string s = out.str();
  s.append(reinterpret_cast<const char*>(img.data().data()), img.size());
  atomic_write(path, s);
}

MaskImage read_ppm_mask(const fs::path& path) {
  auto [raw, channels] = read_netpbm8(path, "P6");
  const int w = raw.width() / 3;
  MaskImage bits(w, raw.height());
  for (int y = 0; y < raw.height(); ++y)
    for (int x = 0; x < w; ++x) {
      std::uint8_t b = 0;
      for (int c = 0; c < 3; ++c)
        if (raw(3 * x + c, y)) b |= static_cast<std::uint8_t>(1u << c);
      bits(x, y) = b;
    }
  return bits;
}

void write_ppm_mask(const fs::path& path, const MaskImage& bits) {
  std::ostringstream out;
  out << "P6\n" << bits.width() << " " << bits.height() << "\n255\n";
  std::string s = out.str();
  for (std::size_t i = 0; i < bits.size(); ++i)
    for (int c = 0; c < 3; ++c) s.push_back(static_cast<char>((bits[i] >> c) & 1u ? 255 : 0));
  atomic_write(path, s);
}

// ---------------------------------------------------------------------------
// PLY

namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

PlyType parse_ply_type(const std::string& t, const fs::path& path) {
  if (t == "char" || t == "int8") return PlyType::Int8;
  if (t == "uchar" || t == "uint8") return PlyType::UInt8;
  if (t == "short" || t == "int16") return PlyType::Int16;
  if (t == "ushort" || t == "uint16") return PlyType::UInt16;
  if (t == "int" || t == "int32") return PlyType::Int32;
  if (t == "uint" || t == "uint32") return PlyType::UInt32;
  if (t == "float" || t == "float32") return PlyType::Float32;
  if (t == "double" || t == "float64") return PlyType::Float64;
  throw FormatError(path.string() + ": unknown PLY type " + t);
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

double ply_read(PlyType t, const char* p) {
  switch (t) {
    case PlyType::Int8: return static_cast<double>(*reinterpret_cast<const std::int8_t*>(p));
    case PlyType::UInt8: return static_cast<double>(*reinterpret_cast<const std::uint8_t*>(p));
    case PlyType::Int16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
    case PlyType::UInt16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
    case PlyType::Int32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
    case PlyType::UInt32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
    case PlyType::Float32: { float v; std::memcpy(&v, p, 4); return v; }
    case PlyType::Float64: { double v; std::memcpy(&v, p, 8); return v; }
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

}  // namespace

TriangleMesh read_ply(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) throw FormatError(path.string() + ": truncated header");
    std::string line = bytes.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next_line() != "ply") throw FormatError(path.string() + ": bad magic");
  std::vector<PlyElement> elements;
  for (;;) {
    std::istringstream ls(next_line());
    std::string kw;
    ls >> kw;
    if (kw == "end_header") break;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "binary_little_endian") throw FormatError(path.string() + ": only binary_little_endian PLY supported");
    } else if (kw == "element") {
      PlyElement e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (kw == "property") {
      if (elements.empty()) throw FormatError(path.string() + ": property before element");
      PlyProperty p;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = parse_ply_type(ct, path);
        p.type = parse_ply_type(it, path);
      } else {
        p.type = parse_ply_type(t, path);
        ls >> p.name;
      }
      elements.back().props.push_back(p);
    }
  }

  TriangleMesh mesh;
  auto need = [&](std::size_t n) {
    if (bytes.size() - pos < n) throw FormatError(path.string() + ": truncated payload");
  };
  for (const PlyElement& e : elements) {
    if (e.name == "vertex") {
      mesh.vertices.resize(e.count);
      mesh.normals.assign(e.count, Vec3::Zero());
      bool has_normals = false, has_albedo = false, has_seen = false;
      for (const auto& p : e.props) {
        if (p.name == "nx") has_normals = true;
        if (p.name == "ar") has_albedo = true;
        if (p.name == "seen") has_seen = true;
      }
      if (has_albedo) mesh.albedo.assign(e.count, Rgb::Zero());
      if (has_seen) mesh.albedo_seen.assign(e.count, 1);
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const auto& p : e.props) {
          if (p.is_list) throw FormatError(path.string() + ": list property on vertex");
          need(ply_size(p.type));
          const double v = ply_read(p.type, bytes.data() + pos);
          pos += ply_size(p.type);
          if (p.name == "x") mesh.vertices[i].x() = v;
          else if (p.name == "y") mesh.vertices[i].y() = v;
          else if (p.name == "z") mesh.vertices[i].z() = v;
          else if (p.name == "nx") mesh.normals[i].x() = v;
          else if (p.name == "ny") mesh.normals[i].y() = v;
          else if (p.name == "nz") mesh.normals[i].z() = v;
          else if (p.name == "ar") mesh.albedo[i][0] = static_cast<float>(v);
          else if (p.name == "ag") mesh.albedo[i][1] = static_cast<float>(v);
          else if (p.name == "ab") mesh.albedo[i][2] = static_cast<float>(v);
          else if (p.name == "seen") mesh.albedo_seen[i] = static_cast<std::uint8_t>(v);
        }
      }
      if (!has_normals) mesh.normals.clear();
    } else {
      const bool is_face = e.name == "face";
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const auto& p : e.props) {
          if (!p.is_list) {
            need(ply_size(p.type));
            pos += ply_size(p.type);
            continue;
          }
          need(ply_size(p.count_type));
          const auto n = static_cast<std::size_t>(ply_read(p.count_type, bytes.data() + pos));
          pos += ply_size(p.count_type);
          need(n * ply_size(p.type));
          std::vector<std::uint32_t> idx(n);
          for (std::size_t k = 0; k < n; ++k) {
            idx[k] = static_cast<std::uint32_t>(ply_read(p.type, bytes.data() + pos));
            pos += ply_size(p.type);
          }
          if (is_face && (p.name == "vertex_indices" || p.name == "vertex_index")) {
            for (std::size_t k = 1; k + 1 < n; ++k) mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
          }
        }
      }
    }
  }
  if (mesh.normals.empty() && !mesh.vertices.empty()) mesh.recompute_normals();
  return mesh;
}

void write_ply(const fs::path& path, const TriangleMesh& mesh) {
  const bool albedo = !mesh.albedo.empty();
  const bool seen = albedo && !mesh.albedo_seen.empty();
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\n";
  h << "element vertex " << mesh.vertices.size() << "\n";
  for (const char* p : {"x", "y", "z", "nx", "ny", "nz"}) h << "property float " << p << "\n";
  if (albedo)
    for (const char* p : {"ar", "ag", "ab"}) h << "property float " << p << "\n";
  if (seen) h << "property uchar seen\n";
  h << "element face " << mesh.triangles.size() << "\n";
  h << "property list uchar int vertex_indices\nend_header\n";
  std::string s = h.str();
  auto put = [&s](const auto& v) { s.append(reinterpret_cast<const char*>(&v), sizeof(v)); };
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    for (int c = 0; c < 3; ++c) put(static_cast<float>(mesh.vertices[i][c]));
    for (int c = 0; c < 3; ++c) put(static_cast<float>(mesh.normals[i][c]));
    if (albedo)
      for (int c = 0; c < 3; ++c) put(mesh.albedo[i][c]);
    if (seen) put(mesh.albedo_seen[i]);
  }
  for (const auto& t : mesh.triangles) {
    put(static_cast<std::uint8_t>(3));
    for (int c = 0; c < 3; ++c) put(static_cast<std::int32_t>(t[c]));
  }
  atomic_write(path, s);
}

}  // namespace relight::io
