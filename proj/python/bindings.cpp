// Python bindings for the mvgeom core. Grids cross the boundary as numpy
// arrays: feature grids as float32 (H, W, C), latent videos as float64
// (N, H, W, C).
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mvgeom/attention.hpp"
#include "mvgeom/camera.hpp"
#include "mvgeom/config.hpp"
#include "mvgeom/depthmesh.hpp"
#include "mvgeom/errors.hpp"
#include "mvgeom/featurefield.hpp"
#include "mvgeom/gridio.hpp"
#include "mvgeom/metrics.hpp"
#include "mvgeom/pipeline.hpp"
#include "mvgeom/rasterizer.hpp"
#include "mvgeom/scheduler.hpp"
#include "mvgeom/synthscene.hpp"

#include <algorithm>

namespace py = pybind11;
using namespace mvgeom;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;

FeatureGrid to_grid(const F32& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw DomainError("expected an (H, W) or (H, W, C) array");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  return FeatureGrid(h, w, c, std::vector<float>(a.data(), a.data() + a.size()));
}

F32 from_grid(const FeatureGrid& g) {
  F32 out({g.height(), g.width(), g.channels()});
  std::copy(g.data().begin(), g.data().end(), out.mutable_data());
  return out;
}

LatentVideo to_video(const F64& a) {
  if (a.ndim() != 4) throw DomainError("expected an (N, H, W, C) array");
  LatentVideo v;
  const auto n = a.shape(0), h = a.shape(1), w = a.shape(2), c = a.shape(3);
  const std::size_t frame = static_cast<std::size_t>(h * w * c);
  for (py::ssize_t i = 0; i < n; ++i) {
    const double* p = a.data() + i * frame;
    v.frames.emplace_back(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c),
                          std::vector<double>(p, p + frame));
  }
  return v;
}

F64 from_video(const LatentVideo& v) {
  if (v.frames.empty()) return F64(std::vector<py::ssize_t>{0, 0, 0, 0});
  const auto& f0 = v.frames.front();
  F64 out({static_cast<py::ssize_t>(v.size()), static_cast<py::ssize_t>(f0.height()),
           static_cast<py::ssize_t>(f0.width()), static_cast<py::ssize_t>(f0.channels())});
  double* dst = out.mutable_data();
  for (const auto& f : v.frames) dst = std::copy(f.data().begin(), f.data().end(), dst);
  return out;
}

TokenBlock to_tokens(const F64& a) {
  if (a.ndim() != 4) throw DomainError("expected an (N, H, W, C) array");
  TokenBlock t(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
               static_cast<int>(a.shape(3)));
  std::copy(a.data(), a.data() + a.size(), t.data().begin());
  return t;
}

F64 from_tokens(const TokenBlock& t) {
  F64 out({t.frames(), t.height(), t.width(), t.channels()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

CameraPose make_camera(const Mat3& k, const Mat3& rotation, const Vec3& translation, int width, int height) {
  CameraPose cam;
  cam.intrinsics = {k(0, 0), k(1, 1), k(0, 2), k(1, 2), width, height};
  cam.pose = {rotation, translation};
  cam.validate();
  return cam;
}

py::dict render_dict(const RenderOutput& r) {
  py::dict d;
  d["features"] = from_grid(r.features);
  d["mask"] = from_grid(r.mask);
  d["depth"] = from_grid(r.depth_buffer);
  return d;
}

}  // namespace

PYBIND11_MODULE(_mvgeom, m) {
  m.doc() = "Depth-mesh warping, rasterization and diffusion sampling utilities";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<CameraPose>(m, "Camera")
      .def(py::init(&make_camera), py::arg("K"), py::arg("R"), py::arg("T"), py::arg("width"), py::arg("height"))
      .def_property_readonly("K", [](const CameraPose& c) { return c.intrinsics.matrix(); })
      .def_property_readonly("R", [](const CameraPose& c) { return c.pose.rotation; })
      .def_property_readonly("T", [](const CameraPose& c) { return c.pose.translation; })
      .def_property_readonly("width", [](const CameraPose& c) { return c.intrinsics.width; })
      .def_property_readonly("height", [](const CameraPose& c) { return c.intrinsics.height; })
      .def("unproject", [](const CameraPose& c, double u, double v, double depth) { return unproject(u, v, depth, c); },
           py::arg("u"), py::arg("v"), py::arg("depth"))
      .def("project",
           [](const CameraPose& c, const Vec3& p) -> std::optional<std::tuple<double, double, double>> {
             const auto pr = project(p, c);
             if (!pr) return std::nullopt;
             return std::make_tuple(pr->u, pr->v, pr->z);
           },
           py::arg("point"), "(u, v, z) or None when the point is behind the camera")
      .def("__repr__", [](const CameraPose& c) { return "Camera(" + format_camera_line(c) + ")"; });

  m.def("axis_angle", &axis_angle, py::arg("axis"), py::arg("angle"));
  m.def("look_at_rotation", &look_at_rotation, py::arg("eye"), py::arg("target"), py::arg("up"));
  m.def("read_trajectory", py::overload_cast<const std::string&>(&read_trajectory), py::arg("path"));
  m.def("write_trajectory", py::overload_cast<const std::string&, const std::vector<CameraPose>&>(&write_trajectory),
        py::arg("path"), py::arg("cameras"));

  m.def("read_grid", [](const std::string& path) { return from_grid(read_grid(path)); }, py::arg("path"));
  m.def("write_grid", [](const F32& a, const std::string& path) { write_grid(to_grid(a), path); }, py::arg("grid"),
        py::arg("path"));

  py::class_<AnchorFeatureMesh>(m, "AnchorMesh")
      .def_property_readonly("vertices",
                             [](const AnchorFeatureMesh& mesh) {
                               Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor> v(mesh.vertices.size(), 3);
                               for (std::size_t i = 0; i < mesh.vertices.size(); ++i) v.row(i) = mesh.vertices[i];
                               return v;
                             })
      .def_property_readonly("triangles",
                             [](const AnchorFeatureMesh& mesh) {
                               py::array_t<std::int32_t> t({static_cast<py::ssize_t>(mesh.triangles.size()),
                                                            py::ssize_t{3}});
                               auto* dst = t.mutable_data();
                               for (const auto& tri : mesh.triangles) dst = std::copy(tri.begin(), tri.end(), dst);
                               return t;
                             })
      .def_property_readonly("source_camera", [](const AnchorFeatureMesh& mesh) { return mesh.source_pose; });

  m.def("align_depth", [](const F32& raw, double d_med) { return from_grid(align_depth(to_grid(raw), d_med)); },
        py::arg("raw"), py::arg("d_med"));
  m.def("depth_gradient_magnitude", [](const F32& d) { return from_grid(depth_gradient_magnitude(to_grid(d))); },
        py::arg("depth"));
  m.def("build_anchor_mesh",
        [](const F32& features, const F32& depth, const CameraPose& cam, double zeta) {
          return build_anchor_mesh(to_grid(features), to_grid(depth), cam, zeta);
        },
        py::arg("features"), py::arg("depth"), py::arg("camera"), py::arg("zeta") = kDefaultDiscontinuityThreshold);
  m.def("depth_candidates", &depth_candidates, py::arg("d_med"), py::arg("count") = 21, py::arg("range") = 0.4);

  m.def("render",
        [](const AnchorFeatureMesh& mesh, const CameraPose& cam, int h, int w) {
          return render_dict(render(mesh, cam, h, w));
        },
        py::arg("mesh"), py::arg("camera"), py::arg("height"), py::arg("width"),
        "Z-buffered rasterization; returns dict(features, mask, depth)");
  m.def("render_bruteforce",
        [](const AnchorFeatureMesh& mesh, const CameraPose& cam, int h, int w) {
          return render_dict(render_bruteforce(mesh, cam, h, w));
        },
        py::arg("mesh"), py::arg("camera"), py::arg("height"), py::arg("width"));

  py::class_<DiffusionSchedule>(m, "DiffusionSchedule")
      .def_static("linear", &DiffusionSchedule::linear, py::arg("beta_start") = 1e-4, py::arg("beta_end") = 2e-2,
                  py::arg("train_steps") = 1000, py::arg("sampler_steps") = 50)
      .def_property_readonly("alpha_bars", &DiffusionSchedule::alpha_bars)
      .def_property_readonly("sampler_steps", &DiffusionSchedule::sampler_steps)
      .def("alpha_bar", &DiffusionSchedule::alpha_bar, py::arg("t"))
      .def("timestep_at", &DiffusionSchedule::timestep_at, py::arg("step"));
  m.def("ddpm_forward",
        [](const F64& x0, double alpha_bar, const F64& noise) {
          return from_video(ddpm_forward(to_video(x0), alpha_bar, to_video(noise)));
        },
        py::arg("x0"), py::arg("alpha_bar"), py::arg("noise"));
  m.def("predict_x0",
        [](const F64& xt, const F64& eps, double alpha_bar) {
          return from_video(predict_x0(to_video(xt), to_video(eps), alpha_bar));
        },
        py::arg("x_t"), py::arg("eps_hat"), py::arg("alpha_bar"));
  m.def("ddim_step",
        [](const F64& xt, const F64& eps, int t, int t_prev, const DiffusionSchedule& s) {
          return from_video(ddim_step(to_video(xt), to_video(eps), t, t_prev, s));
        },
        py::arg("x_t"), py::arg("eps_hat"), py::arg("t"), py::arg("t_prev"), py::arg("schedule"));

  py::class_<AttentionParams>(m, "AttentionParams")
      .def_static("random", &AttentionParams::random, py::arg("channels"), py::arg("seed"), py::arg("scale") = 1.0)
      .def_static("identity", &AttentionParams::identity, py::arg("channels"));
  m.def("stt_attention",
        [](const F64& x, int field, const AttentionParams& p) { return from_tokens(stt_attention(to_tokens(x), field, p)); },
        py::arg("tokens"), py::arg("field"), py::arg("params"));
  m.def("temporal_attention_1d",
        [](const F64& x, const AttentionParams& p) { return from_tokens(temporal_attention_1d(to_tokens(x), p)); },
        py::arg("tokens"), py::arg("params"));
  m.def("dense_attention",
        [](const F64& x, const AttentionParams& p) { return from_tokens(dense_attention(to_tokens(x), p)); },
        py::arg("tokens"), py::arg("params"));
  m.def("field_at_step",
        [](long long step, int start, int end, long long per_doubling) {
          return field_at_step({start, end, per_doubling}, step);
        },
        py::arg("train_step"), py::arg("start_resolution") = 1, py::arg("end_resolution") = 64,
        py::arg("steps_per_doubling") = 10000);

  m.def("composite_weights",
        [](const std::vector<double>& sigmas, const std::vector<double>& deltas) {
          return composite_weights(sigmas, deltas);
        },
        py::arg("sigmas"), py::arg("deltas"));

  m.def("rotation_angle", &rotation_angle, py::arg("Ra"), py::arg("Rb"));
  m.def("camera_pose_accuracy",
        [](const std::vector<Mat3>& generated, const std::vector<std::optional<Mat3>>& estimated, bool failed) {
          PoseSequencePair pair;
          pair.reconstruction_failed = failed;
          for (const auto& r : generated) pair.generated.push_back({r, Vec3::Zero()});
          for (const auto& r : estimated) {
            pair.estimated.push_back(r ? std::optional<RigidPose>(RigidPose{*r, Vec3::Zero()}) : std::nullopt);
          }
          return camera_pose_accuracy(pair);
        },
        py::arg("generated"), py::arg("estimated"), py::arg("failed") = false,
        "Mean of 1 - angle/pi over frames; None entries score 0");
  m.def("masked_reprojection_error",
        [](const F32& frame, const F32& gt, const F32& mask) {
          return masked_reprojection_error(to_grid(frame), to_grid(gt), to_grid(mask));
        },
        py::arg("frame"), py::arg("gt"), py::arg("mask"));

  py::class_<SceneSpec>(m, "Scene")
      .def_static("from_config_text",
                  [](const std::string& text, const std::string& base_dir) {
                    return SceneSpec::from_config(Config::parse(text, base_dir));
                  },
                  py::arg("text"), py::arg("base_dir") = ".")
      .def_static("from_config_file",
                  [](const std::string& path) { return SceneSpec::from_config(Config::load(path)); }, py::arg("path"))
      .def("poses", &SceneSpec::make_poses)
      .def("render",
           [](const SceneSpec& s, const CameraPose& cam, int h, int w) {
             const GroundTruthRender r = render_ground_truth(s, cam, h, w);
             py::dict d;
             d["features"] = from_grid(r.features);
             d["depth"] = from_grid(r.depth);
             d["primitive"] = from_grid(r.primitive);
             return d;
           },
           py::arg("camera"), py::arg("height"), py::arg("width"))
      .def("visible_from",
           [](const SceneSpec& s, const CameraPose& cam, const Vec3& p, double tol) {
             return visible_from(s, cam, p, tol);
           },
           py::arg("camera"), py::arg("point"), py::arg("tol") = 1e-6);

  m.def("run_scene",
        [](const std::string& config_path, bool trace) {
          const SceneSetup setup = SceneSetup::from_config(Config::load(config_path));
          InferenceResult result;
          {
            py::gil_scoped_release release;
            result = setup.run(trace);
          }
          py::dict d;
          d["latents"] = from_video(result.latents);
          d["targets"] = from_video(setup.targets);
          d["poses"] = setup.poses;
          d["d_med"] = result.search ? py::cast(result.search->d_med) : py::none();
          if (trace) {
            py::list steps;
            for (const auto& st : result.trace) {
              py::dict s;
              s["step"] = st.step;
              s["timestep"] = st.timestep;
              s["replaced"] = st.replaced;
              s["completed"] = st.completed;
              s["d_med"] = st.d_med;
              py::list masks;
              for (const auto& mk : st.masks) masks.append(mk.size() ? py::object(from_grid(mk)) : py::none());
              s["masks"] = masks;
              steps.append(s);
            }
            d["trace"] = steps;
          }
          return d;
        },
        py::arg("config_path"), py::arg("trace") = false,
        "Run the sampler on the synthetic scene described by a config file");
}
