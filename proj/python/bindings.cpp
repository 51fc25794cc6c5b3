#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "udepth/dataset.hpp"
#include "udepth/ensemble.hpp"
#include "udepth/metrics.hpp"
#include "udepth/photometry.hpp"
#include "udepth/trainer.hpp"

namespace py = pybind11;
using namespace udepth;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> flat(const Array& a) { return {a.data(), a.data() + a.size()}; }

void need_2d(const Array& a, const char* what) {
  if (a.ndim() != 2) throw std::invalid_argument(std::string(what) + " must be a 2-D array");
}

template <class G>
G grid_of(const Array& a, const char* what) {
  need_2d(a, what);
  return G(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), flat(a));
}

UncMap unc_of(const Array& a, UncKind kind, const char* what) {
  need_2d(a, what);
  return UncMap(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), kind, flat(a));
}

Mask mask_of(const std::optional<Array>& a, int w, int h) {
  if (!a) return full_mask(w, h);
  need_2d(*a, "mask");
  Mask m(static_cast<int>(a->shape(1)), static_cast<int>(a->shape(0)));
  for (py::ssize_t i = 0; i < a->size(); ++i) m[i] = a->data()[i] != 0.0;
  return m;
}

Image image_of(const Array& a) {
  if (a.ndim() == 2) return Image(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), 1, flat(a));
  if (a.ndim() != 3) throw std::invalid_argument("image must be HxW or HxWxC");
  return Image(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), static_cast<int>(a.shape(2)), flat(a));
}

template <class G>
py::array_t<double> to_array(const G& g) {
  py::array_t<double> out({g.height(), g.width()});
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < g.size(); ++i) p[i] = static_cast<double>(g[i]);
  return out;
}

py::array_t<double> image_array(const Image& img) {
  py::array_t<double> out({img.height(), img.width(), img.channels()});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

py::dict ensemble_dict(const EnsembleOutput& e) {
  py::dict d;
  d["depth"] = to_array(e.depth);
  d["var_a"] = to_array(e.var_a);
  d["var_e"] = to_array(e.var_e);
  d["var_t"] = to_array(e.var_t);
  d["seeds"] = e.seeds;
  return d;
}

py::dict render(std::uint64_t seed, int width, int height, int frames, double step_mm, bool shifted, int jobs) {
  SceneParams p;
  p.seed = seed;
  LightModel l;
  if (shifted) apply_domain_shift(DomainShift{}, p, l);
  Dataset d;
  {
    py::gil_scoped_release release;
    d = render_dataset(p, l, default_intrinsics(width, height), width, height, frames, step_mm, jobs);
  }
  py::list images, depths, valid, specular;
  for (int f = 0; f < frames; ++f) {
    images.append(image_array(d.images[f]));
    depths.append(to_array(d.depths[f]));
    valid.append(to_array(d.valid[f]));
    specular.append(to_array(d.specular[f]));
  }
  py::dict out;
  out["images"] = images;
  out["depths"] = depths;
  out["valid"] = valid;
  out["specular"] = specular;
  const CameraIntrinsics K = default_intrinsics(width, height);
  out["intrinsics"] = py::make_tuple(K.fx(), K.fy(), K.cx(), K.cy());
  return out;
}

py::dict fuse_members(const std::vector<Array>& depths, const std::vector<Array>& sigmas,
                      std::optional<std::vector<std::uint64_t>> seeds) {
  if (depths.size() != sigmas.size()) throw std::invalid_argument("depths and sigmas differ in length");
  std::vector<MemberPrediction> members;
  for (std::size_t k = 0; k < depths.size(); ++k) {
    members.push_back({seeds ? seeds->at(k) : k, grid_of<DepthMap>(depths[k], "depth"),
                       unc_of(sigmas[k], UncKind::Std, "sigma")});
  }
  return ensemble_dict(fuse(members));
}

py::dict metrics(const Array& gt, const Array& pred, const std::optional<Array>& mask, const std::string& denominator) {
  RelativeDenominator denom;
  if (denominator == "prediction") {
    denom = RelativeDenominator::Prediction;
  } else if (denominator == "ground-truth") {
    denom = RelativeDenominator::GroundTruth;
  } else {
    throw std::invalid_argument("denominator must be 'prediction' or 'ground-truth'");
  }
  const DepthMap g = grid_of<DepthMap>(gt, "gt");
  const DepthMetrics m = depth_metrics(g, grid_of<DepthMap>(pred, "pred"), mask_of(mask, g.width(), g.height()), denom);
  py::dict d;
  d["abs_rel"] = m.abs_rel;
  d["sq_rel"] = m.sq_rel;
  d["rmse"] = m.rmse;
  d["rmse_log"] = m.rmse_log;
  d["delta1"] = m.delta1;
  d["delta2"] = m.delta2;
  d["delta3"] = m.delta3;
  return d;
}

py::dict calibration(const Array& gt, const Array& pred, const Array& sigma, const std::optional<Array>& mask) {
  const DepthMap g = grid_of<DepthMap>(gt, "gt");
  const CalibrationCurve c = calibration_curve(g, grid_of<DepthMap>(pred, "pred"), unc_of(sigma, UncKind::Std, "sigma"),
                                               mask_of(mask, g.width(), g.height()), default_p_grid());
  const Auce a = auce(c);
  py::dict d;
  d["p"] = c.p;
  d["coverage"] = c.coverage;
  d["auce_signed"] = a.signed_area;
  d["auce_abs"] = a.absolute_area;
  return d;
}

py::dict fit(const std::string& regime_name_, const Array& image, const std::optional<Array>& labels,
             const std::optional<Array>& mask, const std::optional<Array>& teacher_sigma, int members, int steps,
             int grid, std::uint64_t seed, int jobs) {
  const Regime regime = parse_regime(regime_name_);
  if (regime == Regime::SelfSupervised) throw std::invalid_argument("use fit_scene for self-supervised training");
  TrainBundle b;
  b.image = image_of(image);
  if (labels) b.labels = grid_of<DepthMap>(*labels, "labels");
  if (mask) b.mask = mask_of(mask, b.width(), b.height());
  if (teacher_sigma) b.teacher_sigma = unc_of(*teacher_sigma, UncKind::Std, "teacher_sigma");
  TrainConfig cfg = recommended_config(regime);
  if (steps > 0) cfg.steps = steps;
  if (grid > 0) cfg.grid_w = cfg.grid_h = grid;
  std::vector<TrainedMember> trained;
  {
    py::gil_scoped_release release;
    trained = train_ensemble(regime, b, cfg, members, seed, jobs);
  }
  std::vector<MemberPrediction> preds;
  for (const auto& m : trained) {
    FieldOutput o = forward(m.field, b.width(), b.height());
    preds.push_back({m.field.seed, std::move(o.depth), std::move(o.sigma)});
  }
  return ensemble_dict(fuse(preds));
}

py::dict fit_scene(std::uint64_t scene_seed, int width, int height, int frames, int target, int members, int steps,
                   int grid, std::uint64_t seed, int jobs) {
  SceneParams p;
  p.seed = scene_seed;
  const Regime regime = Regime::SelfSupervised;
  TrainConfig cfg = recommended_config(regime);
  if (steps > 0) cfg.steps = steps;
  if (grid > 0) cfg.grid_w = cfg.grid_h = grid;
  Dataset d;
  std::vector<TrainedMember> trained;
  {
    py::gil_scoped_release release;
    d = render_dataset(p, LightModel{}, default_intrinsics(width, height), width, height, frames, kDefaultStepMm, jobs);
    trained = train_ensemble(regime, selfsup_bundle(d, target), cfg, members, seed, jobs);
  }
  std::vector<DepthOnlyMember> preds;
  for (const auto& m : trained) preds.push_back({m.field.seed, forward(m.field, width, height).depth});
  py::dict out = ensemble_dict(selfsup_fuse(preds));
  out["gt"] = to_array(d.depths[target]);
  out["valid"] = to_array(d.valid[target]);
  return out;
}

}  // namespace

PYBIND11_MODULE(_udepth, m) {
  m.doc() = "Uncertainty-aware monocular depth on synthetic colonoscopy scenes";

  m.def("regimes", &regime_names);
  m.def("normal_quantile", &normal_quantile, py::arg("p"));
  m.def(
      "ssim",
      [](const Array& a, const Array& b) { return to_array(ssim_map(image_of(a), image_of(b), PhotometricConfig{})); },
      py::arg("a"), py::arg("b"), "Per-pixel SSIM with a 3x3 box window.");
  m.def("render", &render, py::arg("seed"), py::arg("width") = 64, py::arg("height") = 64, py::arg("frames") = 12,
        py::arg("step_mm") = kDefaultStepMm, py::arg("shifted") = false, py::arg("jobs") = 1);
  m.def("fuse", &fuse_members, py::arg("depths"), py::arg("sigmas"), py::arg("seeds") = py::none());
  m.def("depth_metrics", &metrics, py::arg("gt"), py::arg("pred"), py::arg("mask") = py::none(),
        py::arg("denominator") = "prediction");
  m.def("calibration", &calibration, py::arg("gt"), py::arg("pred"), py::arg("sigma"), py::arg("mask") = py::none());
  m.def("fit", &fit, py::arg("regime"), py::arg("image"), py::arg("labels") = py::none(), py::arg("mask") = py::none(),
        py::arg("teacher_sigma") = py::none(), py::arg("members") = 5, py::arg("steps") = 0, py::arg("grid") = 0,
        py::arg("seed") = 0, py::arg("jobs") = 1);
  m.def("fit_scene", &fit_scene, py::arg("scene_seed"), py::arg("width") = 64, py::arg("height") = 64,
        py::arg("frames") = 12, py::arg("target") = 5, py::arg("members") = 5, py::arg("steps") = 0,
        py::arg("grid") = 0, py::arg("seed") = 0, py::arg("jobs") = 1);

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const NumericError& e) {
      PyErr_SetString(PyExc_ArithmeticError, e.what());
    }
  });
}
