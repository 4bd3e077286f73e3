#include "relight/featurepack.hpp"
#include "relight/irradiance.hpp"
#include "relight/mirror.hpp"
#include "relight/nnls.hpp"
#include "relight/oracle.hpp"
#include "relight/pipeline.hpp"
#include "relight/scene.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace relight;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

FloatArray to_numpy(const RgbImage& img) {
  FloatArray a({img.height(), img.width(), 3});
  std::memcpy(a.mutable_data(), img.data().data(), img.size() * sizeof(Rgb));
  return a;
}

RgbImage from_numpy(const FloatArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw Error("expected an (H, W, 3) float array");
  RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::memcpy(img.data().data(), a.data(), img.size() * sizeof(Rgb));
  return img;
}

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_python(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

/// Scene handle shared by oracle presets and loaded bundles.
struct PyScene {
  MultiViewScene scene;
};

PyScene make_preset(const std::string& name, int width, int height, int spp, std::uint64_t seed) {
  if (name == "furnace") return {oracle::furnace_scene(width, height).scene};
  if (name == "two_box") return {oracle::two_box_scene(width, height).scene};
  if (name == "mirror") return {oracle::mirror_box_scene(width, height).scene};
  if (name == "lambertian") {
    oracle::GtOptions gt;
    gt.spp = spp;
    gt.seed = seed;
    return {oracle::lambertian_box_scene(width, height, Rgb(0.6f, 0.3f, 0.3f), gt).scene};
  }
  throw Error("unknown preset '" + name + "'");
}

pipeline::JobConfig job_of(const std::filesystem::path& scene, const std::filesystem::path& out, std::uint64_t seed,
                           int spp, std::vector<int> views) {
  pipeline::JobConfig job;
  job.scene = scene;
  job.out = out;
  job.seed = seed;
  job.spp = spp;
  job.views = std::move(views);
  return job;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Relighting feature pipeline core";
  m.attr("__version__") = pipeline::kVersion;
  py::register_exception<Error>(m, "RelightError", PyExc_RuntimeError);

  m.def("set_threads", &set_thread_count, py::arg("n"));
  m.def("tonemap", py::vectorize([](double x, double mu) { return featurepack::tonemap(x, mu); }), py::arg("x"),
        py::arg("mu") = featurepack::kDefaultMu);
  m.def("inverse_tonemap", py::vectorize([](double y, double mu) { return featurepack::inverse_tonemap(y, mu); }),
        py::arg("y"), py::arg("mu") = featurepack::kDefaultMu);
  m.def("channel_names", [] {
    const auto& n = featurepack::channel_names();
    return std::vector<std::string>(n.begin(), n.end());
  });
  m.def("layout_hash", &featurepack::layout_hash);

  m.def(
      "read_tensor",
      [](const std::filesystem::path& path) {
        const auto s = featurepack::read_tensor(path);
        FloatArray a({s.channels(), s.height, s.width});
        std::memcpy(a.mutable_data(), s.data.data(), s.data.size() * sizeof(float));
        return py::make_tuple(a, s.names, to_python(s.metadata));
      },
      py::arg("path"), "Returns (array[C, H, W], names, metadata).");
  m.def(
      "write_tensor",
      [](const std::filesystem::path& path, const FloatArray& a, const std::vector<std::string>& names,
         const py::object& metadata) {
        if (a.ndim() != 3) throw Error("expected a (C, H, W) array");
        if (static_cast<std::size_t>(a.shape(0)) != names.size()) throw Error("one name per channel required");
        featurepack::FeatureStack s;
        s.height = static_cast<int>(a.shape(1));
        s.width = static_cast<int>(a.shape(2));
        s.names = names;
        s.data.assign(a.data(), a.data() + a.size());
        s.metadata = metadata.is_none() ? nlohmann::json::object() : from_python(metadata);
        featurepack::write_tensor(path, s);
      },
      py::arg("path"), py::arg("data"), py::arg("names"), py::arg("metadata") = py::none());

  m.def(
      "solve_nnls",
      [](const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
        const auto r = solve_nnls(A, b);
        return py::make_tuple(r.x, r.residual_norm);
      },
      py::arg("A"), py::arg("b"));

  py::class_<PyScene>(m, "Scene")
      .def_static("preset", &make_preset, py::arg("name"), py::arg("width") = 64, py::arg("height") = 48,
                  py::arg("spp") = 64, py::arg("seed") = 0)
      .def_static(
          "load", [](const std::filesystem::path& dir) { return PyScene{load_scene_bundle(dir)}; }, py::arg("path"))
      .def("save", [](const PyScene& s, const std::filesystem::path& dir) { save_scene_bundle(dir, s.scene); })
      .def_property_readonly("view_count", [](const PyScene& s) { return s.scene.view_count(); })
      .def_property_readonly("bbox_diagonal", [](const PyScene& s) { return s.scene.bbox_diagonal; })
      .def("image", [](const PyScene& s, int v) { return to_numpy(s.scene.images.at(v).pixels); }, py::arg("view"))
      .def(
          "set_image",
          [](PyScene& s, int v, const FloatArray& a) {
            s.scene.images.at(v).pixels = from_numpy(a);
            s.scene.images.at(v).validate(s.scene.cameras.at(v));
          },
          py::arg("view"), py::arg("pixels"))
      .def(
          "source_irradiance",
          [](const PyScene& s, int v, int spp, std::uint64_t seed, bool denoise) {
            irradiance::SourceOptions opt;
            opt.spp = spp;
            opt.seed = seed;
            RgbImage e;
            {
              py::gil_scoped_release release;
              e = irradiance::estimate_source_irradiance(s.scene, v, opt).e_src;
              if (denoise) {
                const GBuffer gb = render_gbuffer(*s.scene.bvh, s.scene.cameras[v]);
                e = irradiance::denoise_irradiance(e, gb.depth, irradiance::normal_map(gb));
              }
            }
            return to_numpy(e);
          },
          py::arg("view"), py::arg("spp") = 128, py::arg("seed") = 0, py::arg("denoise") = false)
      .def(
          "source_mirror",
          [](const PyScene& s, int v) {
            mirror::MirrorMap mm;
            {
              py::gil_scoped_release release;
              mm = mirror::compute_source_mirror(s.scene, v);
            }
            py::array_t<std::uint8_t> valid({mm.valid.height(), mm.valid.width()});
            std::memcpy(valid.mutable_data(), mm.valid.data().data(), mm.valid.size());
            return py::make_tuple(to_numpy(mm.value), valid);
          },
          py::arg("view"))
      .def(
          "depth",
          [](const PyScene& s, int v) {
            const FloatImage& d = s.scene.depth_maps.at(v);
            FloatArray a({d.height(), d.width()});
            std::memcpy(a.mutable_data(), d.data().data(), d.size() * sizeof(float));
            return a;
          },
          py::arg("view"));

  m.def(
      "preprocess",
      [](const std::filesystem::path& scene, const std::filesystem::path& out, std::uint64_t seed, int spp,
         std::vector<int> views, int smooth_iters, bool snap_planes) {
        auto job = job_of(scene, out, seed, spp, std::move(views));
        job.smooth_iters = smooth_iters;
        job.snap_planes = snap_planes;
        py::gil_scoped_release release;
        return pipeline::preprocess(job).to_json().dump();
      },
      py::arg("scene"), py::arg("out"), py::arg("seed") = 0, py::arg("spp") = 0, py::arg("views") = std::vector<int>{},
      py::arg("smooth_iters") = 3, py::arg("snap_planes") = false);
  m.def(
      "solve_lights",
      [](const std::filesystem::path& scene, const std::filesystem::path& out, const std::filesystem::path& clicks) {
        return pipeline::solve_lights(job_of(scene, out, 0, 0, {}), clicks).to_json().dump();
      },
      py::arg("scene"), py::arg("out"), py::arg("clicks"));
  m.def(
      "add_light",
      [](const std::filesystem::path& scene, const std::filesystem::path& out, const std::filesystem::path& lights,
         int light_id, std::uint64_t seed, int spp) {
        py::gil_scoped_release release;
        return pipeline::add_light(job_of(scene, out, seed, spp, {}), lights, light_id).to_json().dump();
      },
      py::arg("scene"), py::arg("out"), py::arg("lights"), py::arg("light_id") = -1, py::arg("seed") = 0,
      py::arg("spp") = 0);
  m.def(
      "render_features",
      [](const std::filesystem::path& scene, const std::filesystem::path& out, const std::string& novel_camera,
         double alpha_dim, std::map<int, double> light_weights, const std::string& name) {
        pipeline::RenderRequest req;
        req.novel = pipeline::resolve_novel_camera(scene, novel_camera);
        req.edit.alpha_dim = alpha_dim;
        req.edit.light_weights = std::move(light_weights);
        req.name = name;
        py::gil_scoped_release release;
        return pipeline::render_features(job_of(scene, out, 0, 0, {}), req).to_json().dump();
      },
      py::arg("scene"), py::arg("out"), py::arg("novel_camera"), py::arg("alpha_dim") = 0.0,
      py::arg("light_weights") = std::map<int, double>{}, py::arg("name") = "novel");
  m.def(
      "oracle_gen",
      [](const std::filesystem::path& out, const std::string& preset, int width, int height, int spp,
         std::uint64_t seed) {
        pipeline::OracleGenOptions o;
        o.preset = preset;
        o.width = width;
        o.height = height;
        o.spp = spp;
        o.seed = seed;
        py::gil_scoped_release release;
        return pipeline::oracle_gen(out, o).to_json().dump();
      },
      py::arg("out"), py::arg("preset") = "two_box", py::arg("width") = 64, py::arg("height") = 48,
      py::arg("spp") = 64, py::arg("seed") = 0);
  m.def(
      "flow",
      [](const std::filesystem::path& scene, const std::filesystem::path& out,
         std::vector<std::pair<int, int>> pairs) {
        py::gil_scoped_release release;
        return pipeline::flow(job_of(scene, out, 0, 0, {}), std::move(pairs)).to_json().dump();
      },
      py::arg("scene"), py::arg("out"), py::arg("pairs") = std::vector<std::pair<int, int>>{});
}
