// Python bindings for the mad core. Vectors cross as numpy arrays, point sets
// as (n, d) arrays and structured records as plain dicts.
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mad/analysis.hpp"
#include "mad/error.hpp"
#include "mad/model_io.hpp"
#include "mad/models.hpp"
#include "mad/nnscore.hpp"
#include "mad/sampler.hpp"
#include "mad/synthdata.hpp"
#include "mad/validate.hpp"
#include "mad/xscore.hpp"

namespace py = pybind11;
using namespace mad;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Mat points_to_mat(const std::vector<Vec>& pts) {
  const Eigen::Index d = pts.empty() ? 0 : pts.front().size();
  Mat out(static_cast<Eigen::Index>(pts.size()), d);
  for (std::size_t i = 0; i < pts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return out;
}

std::vector<Vec> mat_to_points(const Mat& m) {
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) pts.push_back(m.row(i).transpose());
  return pts;
}

DerivativeMode parse_derivative(const std::string& name) {
  if (name == "fd") return DerivativeMode::kForwardDifference;
  if (name == "analytic") return DerivativeMode::kAnalyticIfAvailable;
  throw_bad_input("derivative must be fd or analytic", {{"derivative", name}});
}

SamplerMode parse_mode(const std::string& name) {
  if (name == "standard") return SamplerMode::kStandard;
  if (name == "mad") return SamplerMode::kMad;
  throw_bad_input("mode must be standard or mad", {{"mode", name}});
}

MadParams make_params(double a, double b, double p, double delta, double m_guard) {
  MadParams m;
  m.a = a;
  m.b = b;
  m.p = p;
  m.delta = delta;
  m.m_guard = m_guard;
  m.validate();
  return m;
}

/// Model is a std::variant, which pybind11 would otherwise convert member by member.
struct PyModel {
  Model m;
};

struct PyOracle {
  std::shared_ptr<ScoreOracle> oracle;
};

PyOracle oracle_from_model(const PyModel& m) { return {std::make_shared<AnalyticOracle>(m.m)}; }

py::dict trajectory_dict(const Trajectory& t) {
  std::vector<double> times, gammas, ms;
  for (const auto& s : t.steps) {
    times.push_back(s.t);
    gammas.push_back(s.gamma);
    ms.push_back(s.m);
  }
  py::dict d;
  d["mode"] = sampler_mode_name(t.mode);
  d["seed"] = t.seed;
  d["iterates"] = points_to_mat(t.iterates);
  d["t"] = times;
  d["gamma"] = gammas;
  d["m"] = ms;
  return d;
}

}  // namespace

PYBIND11_MODULE(pymad, mod) {
  mod.doc() = "Manifold attracted diffusion: extended-score inference for diffusion models";

  static py::exception<Error> mad_error(mod, "MadError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = mad_error;
      py::object inst = err(e.what());
      inst.attr("code") = error_code_name(e.kind());
      inst.attr("context") = to_py(e.context());
      PyErr_SetObject(err.ptr(), inst.ptr());
    }
  });

  py::class_<PyModel>(mod, "Model")
      .def_static("from_json", [](const py::object& j) { return PyModel{model_from_json(from_py(j))}; })
      .def_static("load", [](const std::string& path) { return PyModel{load_model(path)}; }, py::arg("path"))
      .def_static("dirac", [](const Mat& atoms, std::vector<double> weights) {
        if (weights.empty()) weights.assign(static_cast<std::size_t>(atoms.rows()), 1.0 / static_cast<double>(atoms.rows()));
        if (weights.size() != static_cast<std::size_t>(atoms.rows())) throw_bad_input("one weight per atom");
        std::vector<DiracAtom> list;
        for (Eigen::Index i = 0; i < atoms.rows(); ++i) {
          list.push_back({weights[static_cast<std::size_t>(i)], atoms.row(i).transpose()});
        }
        return PyModel{DiracMixture(list)};
      }, py::arg("atoms"), py::arg("weights") = std::vector<double>{})
      .def_property_readonly("dim", [](const PyModel& m) { return model_dim(m.m); })
      .def_property_readonly("kind", [](const PyModel& m) { return std::string(model_kind(m.m)); })
      .def("to_json", [](const PyModel& m) { return to_py(model_to_json(m.m)); })
      .def("save", [](const PyModel& m, const std::string& path) { save_model(path, m.m); }, py::arg("path"))
      .def("score", [](const PyModel& m, double sigma, const Vec& x) { return smoothed_score(m.m, sigma * sigma, x); },
           py::arg("sigma"), py::arg("x"), "Score of the model smoothed with N(0, sigma^2 I).")
      .def("extended_score", [](const PyModel& m, double gamma, const Vec& x) { return extended_score(m.m, gamma, x); },
           py::arg("gamma"), py::arg("x"))
      .def("extended_score_limit", [](const PyModel& m, const Vec& x) { return extended_score_limit(m.m, x); },
           py::arg("x"))
      .def("modes", [](const PyModel& m) { return points_to_mat(model_modes(m.m)); })
      .def("sample", [](const PyModel& m, int count, std::uint64_t seed) {
        return points_to_mat(sample_model(m.m, count, seed));
      }, py::arg("count"), py::arg("seed") = 0);

  py::class_<PyOracle>(mod, "Oracle")
      .def_static("from_model", &oracle_from_model, py::arg("model"))
      .def_static("from_checkpoint", [](const std::string& path) {
        return PyOracle{std::make_shared<DenoiserOracle>(load_checkpoint(path).net)};
      }, py::arg("path"))
      .def_property_readonly("dim", [](const PyOracle& o) { return o.oracle->dim(); })
      .def("score", [](const PyOracle& o, double sigma, const Vec& x) { return checked_evaluate(*o.oracle, sigma, x); },
           py::arg("sigma"), py::arg("x"))
      .def("h_gamma", [](const PyOracle& o, double sigma, double gamma, const Vec& x, const std::string& derivative,
                         double delta) { return h_gamma(*o.oracle, sigma, gamma, x, parse_derivative(derivative), delta); },
           py::arg("sigma"), py::arg("gamma"), py::arg("x"), py::arg("derivative") = "fd", py::arg("delta") = 1e-4);

  mod.def("build_model", [](const py::object& spec) { return PyModel{build_model(dataset_spec_from_json(from_py(spec)))}; },
          py::arg("spec"), "Analytic model of a dataset spec dict.");
  mod.def("sample_dataset", [](const py::object& spec) { return points_to_mat(sample_dataset(dataset_spec_from_json(from_py(spec)))); },
          py::arg("spec"));
  mod.def("default_dataset_spec", [](const std::string& kind) {
    DatasetSpec s;
    s.kind = parse_dataset_kind(kind);
    return to_py(dataset_spec_to_json(s));
  }, py::arg("kind") = "fig1_line_mixture");

  mod.def("solve_gamma", [](double t, double a, double b, double p) { return solve_gamma(make_params(a, b, p, 1e-4, 1e-6), t); },
          py::arg("t"), py::arg("a") = 1.0, py::arg("b") = 1.0, py::arg("p") = 1.0,
          "The gamma > 0 with a gamma^(2/p) + b gamma = t^2.");
  mod.def("correction_factor", &correction_factor, py::arg("gamma"), py::arg("b"), py::arg("t"), py::arg("m_guard") = 1e-6);
  mod.def("edm_schedule", [](int steps, double sigma_min, double sigma_max, double rho) {
    const auto s = TimeSchedule::edm(steps, sigma_min, sigma_max, rho);
    return std::vector<double>(s.times().begin(), s.times().end());
  }, py::arg("steps") = 40, py::arg("sigma_min") = 0.002, py::arg("sigma_max") = 80.0, py::arg("rho") = 7.0);

  mod.def("sample", [](const PyOracle& o, const std::string& mode, int n, std::uint64_t seed, double a, double b, double p,
                       double delta, double m_guard, int steps, double sigma_min, double sigma_max, double rho,
                       const std::string& derivative, int threads) {
    BatchRequest req;
    req.mode = parse_mode(mode);
    req.params = make_params(a, b, p, delta, m_guard);
    req.base_seed = seed;
    req.count = n;
    req.threads = threads;
    req.options.derivative = parse_derivative(derivative);
    req.options.record_scores = false;
    const auto schedule = TimeSchedule::edm(steps, sigma_min, sigma_max, rho);
    std::vector<Trajectory> batch;
    {
      py::gil_scoped_release release;
      batch = sample_batch(*o.oracle, schedule, req);
    }
    std::vector<Vec> ends;
    for (const auto& t : batch) ends.push_back(t.endpoint());
    return points_to_mat(ends);
  }, py::arg("oracle"), py::arg("mode") = "mad", py::arg("n") = 1, py::arg("seed") = 0, py::arg("a") = 1.0,
     py::arg("b") = 1.0, py::arg("p") = 1.0, py::arg("delta") = 1e-4, py::arg("m_guard") = 1e-6, py::arg("steps") = 40,
     py::arg("sigma_min") = 0.002, py::arg("sigma_max") = 80.0, py::arg("rho") = 7.0, py::arg("derivative") = "fd",
     py::arg("threads") = 0, "Endpoints of n trajectories as an (n, d) array; trajectory k uses seed + k.");

  mod.def("trajectory", [](const PyOracle& o, const std::string& mode, std::uint64_t seed, double a, double b, double p,
                           double delta, int steps, const std::string& derivative) {
    SamplerOptions opt;
    opt.derivative = parse_derivative(derivative);
    opt.record_scores = false;
    const auto schedule = TimeSchedule::edm(steps, 0.002, 80.0, 7.0);
    const auto t = parse_mode(mode) == SamplerMode::kStandard
                       ? sample_standard(*o.oracle, schedule, seed, opt)
                       : sample_mad(*o.oracle, schedule, make_params(a, b, p, delta, 1e-6), seed, opt);
    return trajectory_dict(t);
  }, py::arg("oracle"), py::arg("mode") = "mad", py::arg("seed") = 0, py::arg("a") = 1.0, py::arg("b") = 1.0,
     py::arg("p") = 1.0, py::arg("delta") = 1e-4, py::arg("steps") = 40, py::arg("derivative") = "fd");

  mod.def("analyze", [](const Mat& points, const PyModel* model) {
    return to_py(analyze_endpoints(mat_to_points(points), model ? &model->m : nullptr, std::nullopt));
  }, py::arg("points"), py::arg("model") = nullptr);

  mod.def("train", [](const Mat& data, int iterations, int batch_size, std::vector<int> hidden, std::uint64_t seed,
                      double learning_rate, const std::string& out) {
    TrainConfig cfg;
    cfg.iterations = iterations;
    cfg.batch_size = batch_size;
    cfg.hidden = std::move(hidden);
    cfg.seed = seed;
    cfg.learning_rate = learning_rate;
    TrainResult r;
    {
      py::gil_scoped_release release;
      r = train_denoiser(cfg, mat_to_points(data));
    }
    if (!out.empty()) save_checkpoint(out, *r.net);
    std::vector<double> losses;
    for (const auto& rec : r.curve) losses.push_back(rec.loss);
    PyOracle o{std::make_shared<DenoiserOracle>(r.net)};
    return py::make_tuple(o, losses);
  }, py::arg("data"), py::arg("iterations") = 4000, py::arg("batch_size") = 256,
     py::arg("hidden") = std::vector<int>{128, 128, 128}, py::arg("seed") = 0, py::arg("learning_rate") = 2e-3,
     py::arg("out") = "", "Train the MLP denoiser; returns (oracle, loss curve).");

  mod.def("validate", [](std::uint64_t seed, double perturbation) {
    ValidationOptions o;
    o.seed = seed;
    o.perturbation = perturbation;
    return to_py(run_validation(o).to_json());
  }, py::arg("seed") = ValidationOptions{}.seed, py::arg("perturbation") = 0.0);
}
