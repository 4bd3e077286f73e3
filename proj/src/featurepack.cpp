#include "relight/featurepack.hpp"

#include "relight/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace relight::featurepack {

static_assert(std::endian::native == std::endian::little, "FTEN writer assumes a little-endian host");

double tonemap(double x, double mu) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw Error("tonemap: input must be finite and >= 0, got " + std::to_string(x));
  return std::log1p(mu * x) / std::log1p(mu);
}

double inverse_tonemap(double y, double mu) { return std::expm1(y * std::log1p(mu)) / mu; }

const std::array<std::string, kChannelCount>& channel_names() {
  static const auto names = [] {
    std::array<std::string, kChannelCount> n;
    int k = 0;
    const char* rgb[] = {"R", "G", "B"};
    auto triple = [&](const std::string& base) {
      for (const char* c : rgb) n[k++] = base + "." + c;
    };
    for (int i = 1; i <= 8; ++i) triple("I" + std::to_string(i));
    for (int i = 1; i <= 8; ++i) triple("M" + std::to_string(i));
    triple("Mtgt");
    triple("Esrc");
    triple("Eadd");
    triple("Erem");
    n[k++] = "disparity";
    n[k++] = "normal.x";
    n[k++] = "normal.y";
    n[k++] = "normal.z";
    n[k++] = "view_cos";
    n[k++] = "refl_ratio";
    return n;
  }();
  return names;
}

std::uint64_t layout_hash() {
  std::string joined;
  for (const auto& n : channel_names()) joined += n + "\n";
  return fnv1a(joined);
}

bool FeatureStack::operator==(const FeatureStack& o) const {
  return height == o.height && width == o.width && names == o.names && data.size() == o.data.size() &&
         std::memcmp(data.data(), o.data.data(), data.size() * sizeof(float)) == 0 && metadata == o.metadata;
}

FeatureStack pack_features(const reproject::CompositeSet& cs, const RgbImage& target_mirror,
                           const nlohmann::json& metadata, double mu) {
  const int W = target_mirror.width(), H = target_mirror.height();
  auto check = [&](const auto& img, const char* what) {
    if (!img.same_shape(W, H)) throw Error(std::string("pack_features: resolution mismatch in ") + what);
  };
  for (int k = 0; k < 8; ++k) {
    check(cs.image[k], "I composites");
    check(cs.mirror[k], "M composites");
  }
  check(cs.e_src, "E_src");
  check(cs.e_add, "E_add");
  check(cs.e_rem, "E_rem");
  check(cs.disparity, "disparity");
  check(cs.normal, "normal");
  check(cs.view_cos, "view_cos");
  check(cs.refl_ratio, "refl_ratio");

  FeatureStack s;
  s.width = W;
  s.height = H;
  const auto& names = channel_names();
  s.names.assign(names.begin(), names.end());
  s.data.assign(static_cast<std::size_t>(kChannelCount) * W * H, 0.0f);
  s.metadata = metadata;
  s.metadata["mu"] = mu;
  s.metadata["layout_hash"] = layout_hash();

  const std::size_t n = static_cast<std::size_t>(W) * H;
  int c = 0;
  auto put_rgb = [&](const RgbImage& img, bool tonemapped) {
    for (int ch = 0; ch < 3; ++ch, ++c) {
      float* dst = s.plane(c);
      for (std::size_t i = 0; i < n; ++i) {
        const float v = img[i][ch];
        dst[i] = tonemapped ? static_cast<float>(tonemap(std::max(0.0f, v), mu)) : v;
      }
    }
  };
  auto put_scalar = [&](const FloatImage& img) {
    std::memcpy(s.plane(c++), img.data().data(), n * sizeof(float));
  };
  for (int k = 0; k < 8; ++k) put_rgb(cs.image[k], true);
  for (int k = 0; k < 8; ++k) put_rgb(cs.mirror[k], true);
  put_rgb(target_mirror, true);
  put_rgb(cs.e_src, false);
  put_rgb(cs.e_add, false);
  put_rgb(cs.e_rem, false);
  put_scalar(cs.disparity);
  for (int a = 0; a < 3; ++a, ++c) {
    float* dst = s.plane(c);
    for (std::size_t i = 0; i < n; ++i) dst[i] = cs.normal[i][a];
  }
  put_scalar(cs.view_cos);
  put_scalar(cs.refl_ratio);
  for (float v : s.data)
    if (!std::isfinite(v)) throw Error("pack_features: non-finite value in feature stack");
  return s;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }

class Reader {
 public:
  explicit Reader(const std::string& b) : bytes_(b) {}
  const char* take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("FTEN: truncated payload");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4), 4);
    return v;
  }
  std::string cstring() {
    const std::size_t end = bytes_.find('\0', pos_);
    if (end == std::string::npos) throw FormatError("FTEN: truncated payload");
    std::string s = bytes_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_tensor(const FeatureStack& s) {
  if (s.data.size() != static_cast<std::size_t>(s.channels()) * s.width * s.height)
    throw Error("serialize_tensor: data size does not match shape");
  std::string out = "FTEN";
  put_u32(out, kFtenVersion);
  put_u32(out, static_cast<std::uint32_t>(s.height));
  put_u32(out, static_cast<std::uint32_t>(s.width));
  put_u32(out, static_cast<std::uint32_t>(s.channels()));
  for (const auto& n : s.names) {
    if (n.find('\0') != std::string::npos) throw Error("serialize_tensor: channel name contains NUL");
    out += n;
    out.push_back('\0');
  }
  out.append(reinterpret_cast<const char*>(s.data.data()), s.data.size() * sizeof(float));
  const std::string meta = s.metadata.dump();
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  return out;
}

FeatureStack parse_tensor(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "FTEN", 4) != 0) throw FormatError("FTEN: bad magic");
  r.take(4);
  const std::uint32_t version = r.u32();
  if (version != kFtenVersion) throw FormatError("FTEN: unsupported version " + std::to_string(version));
  FeatureStack s;
  s.height = static_cast<int>(r.u32());
  s.width = static_cast<int>(r.u32());
  const std::uint32_t c = r.u32();
  if (s.height < 0 || s.width < 0) throw FormatError("FTEN: bad shape");
  for (std::uint32_t i = 0; i < c; ++i) s.names.push_back(r.cstring());
  const std::size_t count = static_cast<std::size_t>(c) * s.width * s.height;
  if (count > bytes.size() / sizeof(float)) throw FormatError("FTEN: truncated payload");
  s.data.resize(count);
  std::memcpy(s.data.data(), r.take(count * sizeof(float)), count * sizeof(float));
  const std::uint32_t meta_len = r.u32();
  const char* meta = r.take(meta_len);
  if (!r.done()) throw FormatError("FTEN: trailing bytes after metadata");
  try {
    s.metadata = nlohmann::json::parse(std::string(meta, meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("FTEN: bad metadata: ") + e.what());
  }
  return s;
}

void write_tensor(const std::filesystem::path& path, const FeatureStack& stack) {
  io::atomic_write(path, serialize_tensor(stack));
}

FeatureStack read_tensor(const std::filesystem::path& path) {
  try {
    return parse_tensor(io::read_text(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace relight::featurepack
