#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "udepth/dataset.hpp"
#include "udepth/ensemble.hpp"
#include "udepth/metrics.hpp"
#include "udepth/pfm.hpp"
#include "udepth/random.hpp"
#include "udepth/serialize.hpp"

using namespace udepth;
namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { Int, Real, Text, Bool };

// Command-line values that override keys of the JSON run configuration.
class Overrides {
 public:
  void option(CLI::App* app, const std::string& name, std::vector<std::string> pointers, Kind kind,
              const std::string& help) {
    auto b = std::make_unique<Binding>();
    b->pointers = std::move(pointers);
    b->kind = kind;
    if (kind == Kind::Bool) {
      b->opt = app->add_flag(name, b->flag, help);
    } else {
      b->opt = app->add_option(name, b->raw, help);
      b->opt->type_name(kind == Kind::Int ? "INT" : kind == Kind::Real ? "REAL" : "TEXT");
    }
    bindings_.push_back(std::move(b));
  }

  void apply(Json& cfg) const {
    for (const auto& b : bindings_) {
      if (b->opt->count() == 0) continue;
      const Json v = convert(*b);
      for (const auto& p : b->pointers) cfg[Json::json_pointer(p)] = v;
    }
  }

 private:
  struct Binding {
    std::vector<std::string> pointers;
    Kind kind = Kind::Text;
    CLI::Option* opt = nullptr;
    std::string raw;
    bool flag = false;
  };

  static Json convert(const Binding& b) {
    const std::string& s = b.raw;
    std::size_t used = 0;
    try {
      switch (b.kind) {
        case Kind::Int: {
          const long long v = std::stoll(s, &used);
          if (used != s.size()) break;
          return v;
        }
        case Kind::Real: {
          const double v = std::stod(s, &used);
          if (used != s.size()) break;
          return v;
        }
        case Kind::Bool:
          return b.flag;
        case Kind::Text:
          return s;
      }
    } catch (const std::exception&) {
    }
    throw UsageError("invalid value '" + s + "' for " + b.opt->get_name());
  }

  std::vector<std::unique_ptr<Binding>> bindings_;
};

struct Command {
  CLI::App* app = nullptr;
  Overrides flags;
  std::string config_path;
};

void add_config(Command& c) {
  c.app->add_option("--config", c.config_path, "JSON run configuration or an emitted manifest");
}

// defaults <- config file <- flags.
Json resolve(const Command& c, Json defaults) {
  if (!c.config_path.empty()) {
    Json file = read_json(c.config_path);
    if (file.contains("config")) file = file["config"];
    if (!file.is_object()) throw UsageError("configuration must be a JSON object");
    defaults.merge_patch(file);
  }
  c.flags.apply(defaults);
  return defaults;
}

template <class T>
T value(const Json& cfg, const char* key) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) throw UsageError(std::string("missing required setting '") + key + "'");
  try {
    return cfg.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError(std::string("bad value for '") + key + "'");
  }
}

std::string text(const Json& cfg, const char* key) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) return {};
  return value<std::string>(cfg, key);
}

Json manifest(const char* command, const Json& cfg) {
  return Json{{"tool", "udepth"}, {"command", command}, {"config", cfg}};
}

std::string member_file(const char* stem, std::size_t i, const char* ext) {
  char name[64];
  std::snprintf(name, sizeof name, "%s_%02zu.%s", stem, i, ext);
  return name;
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << body;
  if (!out) throw UsageError("failed writing " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + dir.string());
}

// ---- synth ----

Json synth_defaults() {
  return Json{{"out", nullptr},  {"seed", 0},          {"frames", 12},
              {"width", 64},     {"height", 64},       {"step_mm", kDefaultStepMm},
              {"jobs", 1},       {"scene", to_json(SceneParams{})}, {"light", to_json(LightModel{})}};
}

int cmd_synth(const Command& c) {
  Json cfg = resolve(c, synth_defaults());
  const fs::path out = value<std::string>(cfg, "out");
  const int frames = value<int>(cfg, "frames");
  if (frames < 3) throw UsageError("--frames must be at least 3: self-supervision needs (previous, target, posterior) triplets");
  const int width = value<int>(cfg, "width"), height = value<int>(cfg, "height");
  if (width < 2 || height < 2) throw UsageError("image size must be at least 2x2");
  SceneParams scene;
  update_from_json(cfg["scene"], scene);
  scene.seed = value<std::uint64_t>(cfg, "seed");
  LightModel light;
  update_from_json(cfg["light"], light);
  scene.validate();
  light.validate();
  cfg["scene"] = to_json(scene);
  cfg["light"] = to_json(light);

  const CameraIntrinsics K = default_intrinsics(width, height);
  const Dataset data = render_dataset(scene, light, K, width, height, frames, value<double>(cfg, "step_mm"),
                                      value<int>(cfg, "jobs"));
  make_dir(out);
  write_dataset(data, out);
  Json m = manifest("synth", cfg);
  Json list = Json::array();
  for (int i = 0; i < frames; ++i) list.push_back(i);
  m["frames"] = list;
  m["intrinsics"] = to_json(K);
  write_json(out / "manifest.json", m);
  std::cout << "wrote " << frames << " frames to " << out.string() << "\n";
  return 0;
}

// ---- train ----

Json train_defaults() {
  return Json{{"data", nullptr},
              {"out", nullptr},
              {"regime", nullptr},
              {"members", 5},
              {"seed", 0},
              {"target", -1},
              {"source_offset", kDefaultSourceOffset},
              {"teacher", nullptr},
              {"jobs", 1},
              {"sfm", {{"hole_fraction", 0.3}, {"noise_rel", 0.05}, {"scale", 0.7}}},
              {"pose_noise", {{"rotation", 0.0}, {"translation", 0.0}}}};
}

TrainBundle build_bundle(Regime regime, const Dataset& data, const Json& cfg, int target) {
  switch (regime) {
    case Regime::SupervisedGT:
      return supervised_bundle(data, target);
    case Regime::SupervisedSfM: {
      TrainBundle b = supervised_bundle(data, target);
      const Json& s = cfg.at("sfm");
      const SfmLabels sfm = simulate_sfm_labels(
          data.depths[target], derive_seed(value<std::uint64_t>(cfg, "seed"), "sfm"),
          value<double>(s, "hole_fraction"), value<double>(s, "noise_rel"), value<double>(s, "scale"));
      b.labels = sfm.depth;
      b.mask = mask_and(sfm.mask, data.valid[target]);
      return b;
    }
    case Regime::SelfSupervised: {
      TrainBundle b = selfsup_bundle(data, target, value<int>(cfg, "source_offset"));
      const Json& pn = cfg.at("pose_noise");
      const double rot = value<double>(pn, "rotation"), trans = value<double>(pn, "translation");
      if (rot > 0.0 || trans > 0.0) {
        for (std::size_t k = 0; k < b.target_to_source.size(); ++k) {
          const auto seed = derive_seed(value<std::uint64_t>(cfg, "seed"), "pose-" + std::to_string(k));
          b.target_to_source[k] = perturb_pose(b.target_to_source[k], seed, rot, trans);
        }
      }
      return b;
    }
    case Regime::PlainStudent:
    case Regime::UncertainStudent: {
      const std::string teacher = text(cfg, "teacher");
      if (teacher.empty()) {
        throw UsageError(std::string(regime_name(regime)) + " needs --teacher pointing at fused teacher maps");
      }
      const fs::path dir = teacher;
      if (!fs::exists(dir / "depth.pfm") || !fs::exists(dir / "var_t.pfm")) {
        throw UsageError("teacher directory " + dir.string() + " lacks depth.pfm / var_t.pfm");
      }
      TrainBundle b;
      b.image = data.images[target];
      b.labels = read_depth_pfm(dir / "depth.pfm");
      b.mask = data.valid[target];
      if (regime == Regime::UncertainStudent) {
        b.teacher_sigma = read_unc_pfm(dir / "var_t.pfm", UncKind::Variance).to_std();
      }
      return b;
    }
  }
  throw UsageError("unknown regime");
}

int cmd_train(const Command& c) {
  Json cfg = resolve(c, train_defaults());
  const Regime regime = parse_regime(value<std::string>(cfg, "regime"));
  TrainConfig tc = recommended_config(regime);
  if (cfg.contains("train")) update_from_json(cfg["train"], tc);
  const std::uint64_t seed = value<std::uint64_t>(cfg, "seed");
  tc.seed = seed;
  tc.validate();
  cfg["train"] = to_json(tc);

  const fs::path data_dir = value<std::string>(cfg, "data");
  const fs::path out = value<std::string>(cfg, "out");
  const int members = value<int>(cfg, "members");
  if (members < 1) throw UsageError("--members must be at least 1");
  const Dataset data = read_dataset(data_dir);
  int target = value<int>(cfg, "target");
  if (target < 0) target = data.frames() / 2;
  if (target >= data.frames()) throw UsageError("target frame outside the dataset");
  cfg["target"] = target;

  const TrainBundle bundle = build_bundle(regime, data, cfg, target);
  const auto trained = train_ensemble(regime, bundle, tc, members, seed, value<int>(cfg, "jobs"));

  make_dir(out);
  Json m = manifest("train", cfg);
  m["regime"] = regime_name(regime);
  m["width"] = data.width();
  m["height"] = data.height();
  Json list = Json::array();
  double seconds = 0.0;
  for (std::size_t i = 0; i < trained.size(); ++i) {
    const auto& t = trained[i];
    const std::string field = member_file("member", i, "json"), loss = member_file("loss", i, "csv");
    write_json(out / field, to_json(t.field));
    std::string csv = "step,loss\r\n";
    for (std::size_t s = 0; s < t.report.loss.size(); ++s) {
      csv += std::to_string(s) + "," + format_double(t.report.loss[s]) + "\r\n";
    }
    write_text(out / loss, csv);
    list.push_back(Json{{"seed", t.field.seed}, {"field", field}, {"loss", loss}});
    seconds += t.report.wall_seconds;
  }
  m["members"] = list;
  write_json(out / "manifest.json", m);
  std::cout << "trained " << members << " " << regime_name(regime) << " member(s) in " << seconds
            << " s; final loss of member 0: " << trained.front().report.loss.back() << "\n";
  return 0;
}

// ---- fuse ----

int cmd_fuse(const Command& c) {
  Json cfg = resolve(c, Json{{"model", nullptr}, {"out", nullptr}});
  const fs::path model = value<std::string>(cfg, "model");
  const fs::path out = value<std::string>(cfg, "out");
  const Json trained = read_json(model / "manifest.json");
  const Regime regime = parse_regime(value<std::string>(trained, "regime"));
  const int w = value<int>(trained, "width"), h = value<int>(trained, "height");
  const Json members = trained.at("members");
  if (!members.is_array() || members.empty()) throw UsageError("model manifest lists no members");

  EnsembleOutput fused;
  if (regime == Regime::SelfSupervised) {
    std::vector<DepthOnlyMember> preds;
    for (const auto& e : members) {
      const DepthField f = field_from_json(read_json(model / value<std::string>(e, "field")));
      preds.push_back({f.seed, forward(f, w, h).depth});
    }
    fused = selfsup_fuse(preds);
  } else {
    std::vector<MemberPrediction> preds;
    for (const auto& e : members) {
      const DepthField f = field_from_json(read_json(model / value<std::string>(e, "field")));
      FieldOutput o = forward(f, w, h);
      preds.push_back({f.seed, std::move(o.depth), std::move(o.sigma)});
    }
    fused = fuse(preds);
  }

  make_dir(out);
  write_pfm(fused.depth, out / "depth.pfm");
  write_pfm(fused.var_a, out / "var_a.pfm");
  write_pfm(fused.var_e, out / "var_e.pfm");
  write_pfm(fused.var_t, out / "var_t.pfm");
  write_json(out / "ensemble.json", Json{{"members", fused.members()},
                                         {"seeds", fused.seeds},
                                         {"regime", regime_name(regime)},
                                         {"uncertainty", "variance"}});
  write_json(out / "manifest.json", manifest("fuse", cfg));
  std::cout << "fused " << fused.members() << " members into " << out.string() << "\n";
  return 0;
}

// ---- eval / calib ----

Json compare_defaults() {
  return Json{{"gt", nullptr},  {"pred", nullptr},        {"mask", nullptr},
              {"var", nullptr}, {"sigma", nullptr},       {"median_scale", false},
              {"out", nullptr}, {"denominator", "prediction"}};
}

struct Comparison {
  DepthMap gt, pred;
  Mask mask;
  std::optional<UncMap> sigma;
  double scale = 1.0;
};

Comparison load_comparison(const Json& cfg) {
  Comparison c;
  c.gt = read_depth_pfm(value<std::string>(cfg, "gt"));
  c.pred = read_depth_pfm(value<std::string>(cfg, "pred"));
  const std::string mask = text(cfg, "mask"), var = text(cfg, "var"), sigma = text(cfg, "sigma");
  c.mask = mask.empty() ? full_mask(c.gt.width(), c.gt.height()) : read_mask_pfm(mask);
  if (!var.empty() && !sigma.empty()) throw UsageError("give either --var or --sigma, not both");
  if (!var.empty()) c.sigma = read_unc_pfm(var, UncKind::Variance).to_std();
  if (!sigma.empty()) c.sigma = read_unc_pfm(sigma, UncKind::Std);
  if (!c.pred.same_shape(c.gt) || !c.mask.same_shape(c.gt) || (c.sigma && !c.sigma->same_shape(c.gt))) {
    throw UsageError("map dimensions do not match");
  }
  if (value<bool>(cfg, "median_scale")) {
    c.scale = scale_correction(c.gt, c.pred, c.mask);
    std::vector<double> p(c.pred.values());
    for (double& v : p) v *= c.scale;
    c.pred = DepthMap(c.pred.width(), c.pred.height(), p);
    if (c.sigma) {
      std::vector<double> s(c.sigma->values());
      for (double& v : s) v *= c.scale;
      c.sigma = UncMap(c.gt.width(), c.gt.height(), UncKind::Std, s);
    }
  }
  return c;
}

void write_sidecar(const Json& cfg, const char* command, double scale) {
  const std::string out = text(cfg, "out");
  if (out.empty()) return;
  Json m = manifest(command, cfg);
  m["scale"] = scale;
  write_json(out + ".manifest.json", m);
}

int cmd_eval(const Command& c) {
  const Json cfg = resolve(c, compare_defaults());
  const std::string denom_name = value<std::string>(cfg, "denominator");
  RelativeDenominator denom;
  if (denom_name == "prediction") {
    denom = RelativeDenominator::Prediction;
  } else if (denom_name == "ground-truth") {
    denom = RelativeDenominator::GroundTruth;
  } else {
    throw UsageError("--denominator must be 'prediction' or 'ground-truth'");
  }
  const Comparison cmp = load_comparison(cfg);
  const DepthMetrics m = depth_metrics(cmp.gt, cmp.pred, cmp.mask, denom);
  std::string row = format_double(m.abs_rel) + "," + format_double(m.sq_rel) + "," + format_double(m.rmse) + "," +
                    format_double(m.rmse_log) + "," + format_double(m.delta1) + "," + format_double(m.delta2) +
                    "," + format_double(m.delta3) + ",";
  if (cmp.sigma) {
    const Auce a = auce(calibration_curve(cmp.gt, cmp.pred, *cmp.sigma, cmp.mask, default_p_grid()));
    row += format_double(a.signed_area) + "," + format_double(a.absolute_area);
  } else {
    row += ",";
  }
  const std::string csv = "abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,auce_signed,auce_abs\r\n" + row + "\r\n";
  const std::string out = text(cfg, "out");
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_text(out, csv);
  }
  write_sidecar(cfg, "eval", cmp.scale);
  return 0;
}

int cmd_calib(const Command& c) {
  const Json cfg = resolve(c, compare_defaults());
  const Comparison cmp = load_comparison(cfg);
  if (!cmp.sigma) throw UsageError("calib needs --var or --sigma");
  const CalibrationCurve curve = calibration_curve(cmp.gt, cmp.pred, *cmp.sigma, cmp.mask, default_p_grid());
  const Auce a = auce(curve);
  std::string csv = "p,coverage\r\n";
  for (std::size_t k = 0; k < curve.p.size(); ++k) {
    csv += format_double(curve.p[k]) + "," + format_double(curve.coverage[k]) + "\r\n";
  }
  const std::string out = text(cfg, "out");
  if (!out.empty()) write_text(out, csv);
  std::cout << "auce_signed " << format_double(a.signed_area) << "\nauce_abs " << format_double(a.absolute_area)
            << "\n";
  write_sidecar(cfg, "calib", cmp.scale);
  return 0;
}

void add_compare_flags(Command& c) {
  add_config(c);
  c.flags.option(c.app, "--gt", {"/gt"}, Kind::Text, "ground-truth depth PFM");
  c.flags.option(c.app, "--pred", {"/pred"}, Kind::Text, "predicted depth PFM");
  c.flags.option(c.app, "--mask", {"/mask"}, Kind::Text, "validity mask PFM (nonzero = valid)");
  c.flags.option(c.app, "--var", {"/var"}, Kind::Text, "predictive variance PFM");
  c.flags.option(c.app, "--sigma", {"/sigma"}, Kind::Text, "predictive standard deviation PFM");
  c.flags.option(c.app, "--median-scale", {"/median_scale"}, Kind::Bool, "apply the median scale correction first");
  c.flags.option(c.app, "--out", {"/out"}, Kind::Text, "output CSV (stdout if omitted)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"udepth: ensemble depth and uncertainty workbench on synthetic colon scenes"};
  app.require_subcommand(1);

  Command synth{app.add_subcommand("synth", "render a synthetic colon sequence")};
  add_config(synth);
  synth.flags.option(synth.app, "--out", {"/out"}, Kind::Text, "output dataset directory");
  synth.flags.option(synth.app, "--seed", {"/seed"}, Kind::Int, "scene seed");
  synth.flags.option(synth.app, "--frames", {"/frames"}, Kind::Int, "number of frames (>= 3)");
  synth.flags.option(synth.app, "--width", {"/width"}, Kind::Int, "image width");
  synth.flags.option(synth.app, "--height", {"/height"}, Kind::Int, "image height");
  synth.flags.option(synth.app, "--step-mm", {"/step_mm"}, Kind::Real, "camera advance per frame (mm)");
  synth.flags.option(synth.app, "--jobs", {"/jobs"}, Kind::Int, "worker threads");

  Command train{app.add_subcommand("train", "fit an ensemble of depth fields")};
  add_config(train);
  train.flags.option(train.app, "--data", {"/data"}, Kind::Text, "dataset directory");
  train.flags.option(train.app, "--out", {"/out"}, Kind::Text, "output model directory");
  train.flags.option(train.app, "--regime", {"/regime"}, Kind::Text,
                     "one of supervised-gt, supervised-sfm, self-supervised, plain-student, uncertain-student");
  train.flags.option(train.app, "--members", {"/members"}, Kind::Int, "ensemble size");
  train.flags.option(train.app, "--seed", {"/seed"}, Kind::Int, "base seed (member i uses seed + i)");
  train.flags.option(train.app, "--target", {"/target"}, Kind::Int, "target frame (default: middle)");
  train.flags.option(train.app, "--source-offset", {"/source_offset"}, Kind::Int, "self-supervised source offset");
  train.flags.option(train.app, "--teacher", {"/teacher"}, Kind::Text, "fused teacher directory for student regimes");
  train.flags.option(train.app, "--steps", {"/train/steps"}, Kind::Int, "gradient steps");
  train.flags.option(train.app, "--lr", {"/train/learning_rate"}, Kind::Real, "log-depth step size");
  train.flags.option(train.app, "--sigma-lr", {"/train/sigma_learning_rate"}, Kind::Real, "log-sigma step size");
  train.flags.option(train.app, "--grid", {"/train/grid_w", "/train/grid_h"}, Kind::Int, "field grid size");
  train.flags.option(train.app, "--lambda-u", {"/train/lambda_u"}, Kind::Real, "smoothness weight");
  train.flags.option(train.app, "--sfm-holes", {"/sfm/hole_fraction"}, Kind::Real, "simulated SfM hole fraction");
  train.flags.option(train.app, "--sfm-noise", {"/sfm/noise_rel"}, Kind::Real, "simulated SfM relative noise");
  train.flags.option(train.app, "--sfm-scale", {"/sfm/scale"}, Kind::Real, "simulated SfM global scale");
  train.flags.option(train.app, "--pose-noise-rot", {"/pose_noise/rotation"}, Kind::Real, "pose rotation noise (rad)");
  train.flags.option(train.app, "--pose-noise-trans", {"/pose_noise/translation"}, Kind::Real,
                     "pose translation noise (mm)");
  train.flags.option(train.app, "--jobs", {"/jobs"}, Kind::Int, "worker threads");

  Command fuse_cmd{app.add_subcommand("fuse", "fuse ensemble members into depth and variance maps")};
  add_config(fuse_cmd);
  fuse_cmd.flags.option(fuse_cmd.app, "--model", {"/model"}, Kind::Text, "trained model directory");
  fuse_cmd.flags.option(fuse_cmd.app, "--out", {"/out"}, Kind::Text, "output directory");

  Command eval{app.add_subcommand("eval", "depth metrics and AUCE as one CSV row")};
  add_compare_flags(eval);
  eval.flags.option(eval.app, "--denominator", {"/denominator"}, Kind::Text,
                    "relative error denominator: prediction or ground-truth");

  Command calib{app.add_subcommand("calib", "calibration curve CSV and AUCE")};
  add_compare_flags(calib);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth.app) return cmd_synth(synth);
    if (*train.app) return cmd_train(train);
    if (*fuse_cmd.app) return cmd_fuse(fuse_cmd);
    if (*eval.app) return cmd_eval(eval);
    if (*calib.app) return cmd_calib(calib);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const LossError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
