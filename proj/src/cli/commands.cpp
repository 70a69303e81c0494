#include "mad/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mad/analysis.hpp"
#include "mad/csv.hpp"
#include "mad/error.hpp"
#include "mad/model_io.hpp"
#include "mad/nnscore.hpp"
#include "mad/sampler.hpp"
#include "mad/svg.hpp"
#include "mad/synthdata.hpp"
#include "mad/validate.hpp"
#include "mad/xscore.hpp"

namespace mad {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Shared flag groups.

struct SamplerFlags {
  MadParams params;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;
  int steps = 40;
  int n = 512;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string derivative = "fd";

  void add(CLI::App* app) {
    app->add_option("--a", params.a, "gamma schedule scale a")->capture_default_str();
    app->add_option("--b", params.b, "gamma schedule scale b")->capture_default_str();
    app->add_option("--p", params.p, "gamma schedule exponent p")->capture_default_str();
    app->add_option("--delta", params.delta, "relative finite-difference step")->capture_default_str();
    app->add_option("--m-guard", params.m_guard, "smallest allowed correction denominator")->capture_default_str();
    app->add_option("--sigma-min", sigma_min)->capture_default_str();
    app->add_option("--sigma-max", sigma_max)->capture_default_str();
    app->add_option("--rho", rho)->capture_default_str();
    app->add_option("--steps", steps, "number of steps N")->capture_default_str();
    app->add_option("--n", n, "number of trajectories")->capture_default_str();
    app->add_option("--seed", seed, "trajectory k uses seed + k")->capture_default_str();
    app->add_option("--threads", threads, "worker threads (0: MAD_THREADS or all cores)")->capture_default_str();
    app->add_option("--derivative", derivative, "sigma derivative: fd or analytic")
        ->check(CLI::IsMember({"fd", "analytic"}))
        ->capture_default_str();
  }

  TimeSchedule schedule() const { return TimeSchedule::edm(steps, sigma_min, sigma_max, rho); }

  BatchRequest request(SamplerMode mode) const {
    if (n < 1) throw_bad_input("--n must be >= 1", {{"n", n}});
    BatchRequest r;
    r.mode = mode;
    r.params = params;
    r.base_seed = seed;
    r.count = n;
    r.threads = threads;
    r.options.derivative =
        derivative == "analytic" ? DerivativeMode::kAnalyticIfAvailable : DerivativeMode::kForwardDifference;
    r.options.record_scores = false;
    return r;
  }

  json to_json() const {
    return {{"a", params.a},         {"b", params.b},         {"p", params.p},
            {"delta", params.delta}, {"m_guard", params.m_guard}, {"sigma_min", sigma_min},
            {"sigma_max", sigma_max}, {"rho", rho},           {"steps", steps},
            {"n", n},                {"seed", seed},          {"derivative", derivative}};
  }
};

struct SpecFlags {
  DatasetSpec spec;
  std::string kind = "fig1_line_mixture";
  std::string manifold = "line";

  void add(CLI::App* app, bool with_count) {
    app->add_option("--kind", kind, "fig1_line_mixture, fig2a_tilted, fig2b_radial or manifold_noisy")
        ->capture_default_str();
    if (with_count) app->add_option("--count", spec.count, "number of points")->capture_default_str();
    app->add_option("--data-seed", spec.seed, "seed of the random model or data")->capture_default_str();
    app->add_option("--components", spec.components)->capture_default_str();
    app->add_option("--mean-box", spec.mean_box)->capture_default_str();
    app->add_option("--centers", spec.centers)->capture_default_str();
    app->add_option("--center-box", spec.center_box)->capture_default_str();
    app->add_option("--radius", spec.radius)->capture_default_str();
    app->add_option("--radial-variance", spec.radial_variance)->capture_default_str();
    app->add_option("--min-spacing", spec.min_spacing)->capture_default_str();
    app->add_option("--quadrature-points", spec.quadrature_points)->capture_default_str();
    app->add_option("--manifold", manifold, "line or circle")->capture_default_str();
    app->add_option("--ambient-dim", spec.ambient_dim)->capture_default_str();
    app->add_option("--noise-std", spec.noise_std)->capture_default_str();
    app->add_option("--half-length", spec.half_length)->capture_default_str();
    app->add_option("--manifold-radius", spec.manifold_radius)->capture_default_str();
  }

  DatasetSpec resolve() {
    spec.kind = parse_dataset_kind(kind);
    spec.manifold = parse_manifold_kind(manifold);
    spec.validate();
    return spec;
  }
};

/// Where scores come from, plus whatever reference geometry is known.
struct OracleSetup {
  std::shared_ptr<ScoreOracle> oracle;
  std::optional<Model> model;
  std::optional<ReferenceSet> manifold;
  std::vector<Vec> background;  // reference samples for plots
  json snapshot;
};

struct OracleFlags {
  std::string model_path;
  std::string checkpoint_path;
  std::string spec_path;

  void add(CLI::App* app) {
    auto* m = app->add_option("--model", model_path, "model JSON");
    auto* c = app->add_option("--checkpoint", checkpoint_path, "denoiser checkpoint JSON");
    m->excludes(c);
    app->add_option("--dataset-spec", spec_path, "dataset spec JSON; a manifold_noisy spec adds manifold distances");
  }

  OracleSetup load() const {
    OracleSetup s;
    if (model_path.empty() == checkpoint_path.empty()) throw_bad_input("give exactly one of --model or --checkpoint");
    if (!model_path.empty()) {
      s.model = load_model(model_path);
      s.oracle = std::make_shared<AnalyticOracle>(*s.model);
      s.snapshot["model"] = model_path;
      s.background = sample_model(*s.model, 20000, 1);
    } else {
      Checkpoint ck = load_checkpoint(checkpoint_path);
      s.oracle = std::make_shared<DenoiserOracle>(ck.net);
      s.snapshot["checkpoint"] = checkpoint_path;
    }
    if (!spec_path.empty()) {
      const DatasetSpec spec = dataset_spec_from_json(read_json_file(spec_path));
      s.snapshot["dataset_spec"] = dataset_spec_to_json(spec);
      if (spec.kind == DatasetKind::kManifoldNoisy) s.manifold = manifold_reference(spec);
      if (s.background.empty()) {
        DatasetSpec plot = spec;
        plot.count = std::min(plot.count, 20000);
        s.background = sample_dataset(plot);
      }
    }
    return s;
  }
};

SamplerMode parse_mode(const std::string& mode) {
  if (mode == "standard") return SamplerMode::kStandard;
  if (mode == "mad") return SamplerMode::kMad;
  throw_bad_input("mode must be standard or mad", {{"mode", mode}});
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw_bad_input("cannot create output directory", {{"path", dir}});
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::pair<double, double> m_extremes(const std::vector<Trajectory>& batch) {
  double lo = 1.0, hi = 1.0;
  bool first = true;
  for (const auto& t : batch) {
    for (const auto& s : t.steps) {
      if (first) lo = hi = s.m, first = false;
      lo = std::min(lo, s.m);
      hi = std::max(hi, s.m);
    }
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Subcommands.

struct SampleCmd {
  SamplerFlags sampler;
  OracleFlags source;
  std::string mode = "mad";
  std::string out_dir = "mad_out";
  int trajectories = 0;
  bool svg = false;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("sample", "run standard or MAD inference");
    sampler.add(app);
    source.add(app);
    app->add_option("--mode", mode, "standard or mad")->capture_default_str();
    app->add_option("--out-dir", out_dir)->capture_default_str();
    app->add_option("--trajectories", trajectories, "write per-step CSVs for the first K trajectories")
        ->capture_default_str();
    app->add_flag("--svg", svg, "also write an endpoint scatter plot");
    app->callback([this] { run(); });
  }

  void run() {
    const SamplerMode m = parse_mode(mode);
    if (m == SamplerMode::kMad) sampler.params.validate();
    const TimeSchedule schedule = sampler.schedule();
    const OracleSetup setup = source.load();
    ensure_dir(out_dir);

    json config = sampler.to_json();
    config["mode"] = mode;
    config["source"] = setup.snapshot;

    const auto batch = sample_batch(*setup.oracle, schedule, sampler.request(m));
    const auto pts = endpoints(batch);
    write_points_csv(join(out_dir, "endpoints.csv"), pts, config);
    for (int k = 0; k < std::min(trajectories, static_cast<int>(batch.size())); ++k) {
      char name[64];
      std::snprintf(name, sizeof name, "trajectory_%04d.csv", k);
      write_trajectory_csv(join(out_dir, name), batch[static_cast<std::size_t>(k)], config);
    }
    json summary = analyze_endpoints(pts, setup.model ? &*setup.model : nullptr, setup.manifold);
    const auto [lo, hi] = m_extremes(batch);
    summary["m_min"] = lo;
    summary["m_max"] = hi;
    write_json_file(join(out_dir, "summary.json"), {{"schema_version", 1}, {"config", config}, {"summary", summary}});
    if (svg) {
      SvgOptions o;
      o.title = mode + " endpoints";
      write_scatter_svg(join(out_dir, "endpoints.svg"), pts, setup.background, o);
    }
    std::cout << summary.dump(2) << '\n';
  }
};

struct SweepCmd {
  SamplerFlags sampler;
  OracleFlags source;
  std::vector<double> a_grid = {0.5, 1.0, 2.0};
  std::vector<double> b_grid = {1.0, 5.0, 20.0};
  std::vector<double> p_grid = {1.3, 2.0, 8.0};
  std::string out_dir = "mad_sweep";

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("sweep", "MAD over an (a, b, p) grid plus a standard baseline");
    sampler.add(app);
    source.add(app);
    app->add_option("--a-grid", a_grid)->delimiter(',')->capture_default_str();
    app->add_option("--b-grid", b_grid)->delimiter(',')->capture_default_str();
    app->add_option("--p-grid", p_grid)->delimiter(',')->capture_default_str();
    app->add_option("--out-dir", out_dir)->capture_default_str();
    app->callback([this] { run(); });
  }

  static std::string cell(const json& j, const char* a, const char* b = nullptr) {
    const json* v = &j;
    if (!v->contains(a)) return "";
    v = &(*v)[a];
    if (b) {
      if (!v->contains(b)) return "";
      v = &(*v)[b];
    }
    return v->is_number() ? format_double(v->get<double>()) : "";
  }

  void run() {
    if (a_grid.empty() || b_grid.empty() || p_grid.empty()) throw_bad_input("sweep grids must be nonempty");
    const TimeSchedule schedule = sampler.schedule();
    const OracleSetup setup = source.load();
    ensure_dir(out_dir);
    json config = sampler.to_json();
    config["a_grid"] = a_grid;
    config["b_grid"] = b_grid;
    config["p_grid"] = p_grid;
    config["source"] = setup.snapshot;

    json rows = json::array();
    auto run_cell = [&](SamplerMode mode, std::optional<MadParams> p) {
      json row = {{"mode", sampler_mode_name(mode)}};
      SamplerFlags f = sampler;
      if (p) {
        f.params = *p;
        row["a"] = p->a;
        row["b"] = p->b;
        row["p"] = p->p;
      }
      try {
        if (p) p->validate();
        const auto batch = sample_batch(*setup.oracle, schedule, f.request(mode));
        row["status"] = "ok";
        row["summary"] = analyze_endpoints(endpoints(batch), setup.model ? &*setup.model : nullptr, setup.manifold);
        const auto [lo, hi] = m_extremes(batch);
        row["m_min"] = lo;
        row["m_max"] = hi;
      } catch (const Error& e) {
        row["status"] = "failed";
        row["error"] = e.to_json();
      }
      rows.push_back(std::move(row));
    };

    run_cell(SamplerMode::kStandard, std::nullopt);
    for (double a : a_grid) {
      for (double b : b_grid) {
        for (double pv : p_grid) {
          MadParams p = sampler.params;
          p.a = a;
          p.b = b;
          p.p = pv;
          run_cell(SamplerMode::kMad, p);
        }
      }
    }

    write_json_file(join(out_dir, "sweep.json"), {{"schema_version", 1}, {"config", config}, {"rows", rows}});
    std::ofstream csv(join(out_dir, "sweep.csv"));
    if (!csv) throw_bad_input("cannot write sweep.csv", {{"path", out_dir}});
    csv << "# mad-csv schema_version=" << kCsvSchemaVersion << ' ' << config.dump() << '\n';
    csv << "mode,a,b,p,status,m_min,m_max,off_axis_ms,along_axis_ms,ring_rms,manifold_rms,basin_std_x0\n";
    for (const auto& r : rows) {
      std::string basin;
      if (r.contains("summary") && r["summary"].contains("basins")) {
        for (const auto& b : r["summary"]["basins"]) {
          if (!basin.empty()) basin += ';';
          basin += b["std"].is_array() ? format_double(b["std"][0].get<double>()) : "";
        }
      }
      const json empty = json::object();
      const json& s = r.contains("summary") ? r["summary"] : empty;
      csv << r["mode"].get<std::string>() << ',' << cell(r, "a") << ',' << cell(r, "b") << ',' << cell(r, "p") << ','
          << r["status"].get<std::string>() << ',' << cell(r, "m_min") << ',' << cell(r, "m_max") << ','
          << cell(s, "axis", "off_axis_ms") << ',' << cell(s, "axis", "along_axis_ms") << ','
          << cell(s, "ring_rms") << ',' << cell(s, "manifold_rms") << ',' << basin << '\n';
    }
    std::cout << "wrote " << rows.size() << " rows to " << out_dir << '\n';
  }
};

struct TrainCmd {
  TrainConfig train;
  std::string data_path;
  std::string spec_path;
  std::string out = "checkpoint.json";
  std::string log = "train_log.csv";
  int validation_draws = 4096;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("train", "train the MLP denoiser on a point set");
    auto* d = app->add_option("--data", data_path, "points CSV");
    auto* s = app->add_option("--dataset-spec", spec_path, "dataset spec JSON to sample from");
    d->excludes(s);
    app->add_option("--iterations", train.iterations)->capture_default_str();
    app->add_option("--batch", train.batch_size)->capture_default_str();
    app->add_option("--lr", train.learning_rate)->capture_default_str();
    app->add_option("--final-lr-fraction", train.final_lr_fraction)->capture_default_str();
    app->add_option("--sigma-min", train.sigma_min, "lower end of the training noise range")->capture_default_str();
    app->add_option("--sigma-max", train.sigma_max, "upper end of the training noise range")->capture_default_str();
    app->add_option("--hidden", train.hidden, "hidden widths")->delimiter(',')->capture_default_str();
    app->add_option("--seed", train.seed)->capture_default_str();
    app->add_option("--validation-draws", validation_draws)->capture_default_str();
    app->add_option("--out", out, "checkpoint path")->capture_default_str();
    app->add_option("--log", log, "training log CSV")->capture_default_str();
    app->callback([this] { run(); });
  }

  void run() {
    train.validate();
    if (data_path.empty() == spec_path.empty()) throw_bad_input("give exactly one of --data or --dataset-spec");
    std::vector<Vec> data;
    json config = {{"iterations", train.iterations}, {"batch", train.batch_size}, {"lr", train.learning_rate},
                   {"final_lr_fraction", train.final_lr_fraction}, {"sigma_min", train.sigma_min},
                   {"sigma_max", train.sigma_max}, {"hidden", train.hidden}, {"seed", train.seed}};
    if (!data_path.empty()) {
      data = read_points_csv(data_path);
      config["data"] = data_path;
    } else {
      const DatasetSpec spec = dataset_spec_from_json(read_json_file(spec_path));
      data = sample_dataset(spec);
      config["dataset_spec"] = dataset_spec_to_json(spec);
    }
    TrainResult result;
    try {
      result = train_denoiser(train, data);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kNumerical) std::cerr << "training log up to failure is not written\n";
      throw;
    }
    const double vloss = validation_loss(*result.net, data, validation_draws, train.seed + 1);
    config["validation_draws"] = validation_draws;
    save_checkpoint(out, *result.net, vloss, config);
    write_train_log_csv(log, result.curve, config);
    std::cout << json{{"checkpoint", out}, {"validation_loss", vloss},
                      {"final_loss", result.curve.empty() ? 0.0 : result.curve.back().loss}}
                     .dump(2)
              << '\n';
  }
};

struct ModelCmd {
  SpecFlags spec;
  std::string out = "model.json";

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("model", "write the model JSON of a figure dataset");
    spec.add(app, false);
    app->add_option("--out", out)->capture_default_str();
    app->callback([this] { run(); });
  }

  void run() {
    save_model(out, build_model(spec.resolve()));
    std::cout << out << '\n';
  }
};

struct DatasetCmd {
  SpecFlags spec;
  std::string out = "data.csv";
  std::string spec_out;
  std::string svg;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("dataset", "sample a dataset to CSV");
    spec.add(app, true);
    app->add_option("--out", out)->capture_default_str();
    app->add_option("--spec-out", spec_out, "also write the spec JSON here");
    app->add_option("--svg", svg, "also write a scatter plot here");
    app->callback([this] { run(); });
  }

  void run() {
    const DatasetSpec s = spec.resolve();
    const json snapshot = dataset_spec_to_json(s);
    const auto pts = sample_dataset(s);
    write_points_csv(out, pts, snapshot);
    if (!spec_out.empty()) write_json_file(spec_out, snapshot);
    if (!svg.empty()) write_scatter_svg(svg, pts, {}, SvgOptions{.title = dataset_kind_name(s.kind)});
    std::cout << out << '\n';
  }
};

struct ValidateCmd {
  std::string out;
  double perturb = 0.0;
  std::uint64_t seed = ValidationOptions{}.seed;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("validate", "cross-check closed forms against brute-force oracles");
    app->add_option("--out", out, "report JSON path");
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--perturb", perturb, "test hook: offset added to library values (also MAD_VALIDATE_PERTURB)");
    app->callback([this] { run(); });
  }

  void run() {
    ValidationOptions o;
    o.seed = seed;
    o.perturbation = perturb;
    if (const char* env = std::getenv("MAD_VALIDATE_PERTURB"); env && perturb == 0.0) o.perturbation = std::atof(env);
    const ValidationReport report = run_validation(o);
    const json j = report.to_json();
    if (!out.empty()) write_json_file(out, j);
    for (const auto& c : report.checks) {
      std::printf("%-4s %-48s error=%-12.4g tol=%g\n", c.passed ? "ok" : "FAIL", c.name.c_str(), c.error, c.tolerance);
    }
    if (!report.passed()) {
      json failed = json::array();
      for (const auto& c : report.checks) {
        if (!c.passed) failed.push_back(c.name);
      }
      throw Error(ErrorKind::kValidation, "oracle cross-checks failed", {{"failed", failed}});
    }
  }
};

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Manifold attracted diffusion: extended-score inference on toy models"};
  app.require_subcommand(1);
  SampleCmd sample;
  SweepCmd sweep;
  TrainCmd train;
  ModelCmd model;
  DatasetCmd dataset;
  ValidateCmd validate;
  model.add(app);
  dataset.add(app);
  sample.add(app);
  train.add(app);
  sweep.add(app);
  validate.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const Error err(ErrorKind::kBadInput, e.what(), {{"argument_error", e.get_name()}});
    std::cerr << err.to_json().dump() << '\n';
    return exit_code(ErrorKind::kBadInput);
  } catch (const Error& e) {
    std::cerr << e.to_json().dump() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    const Error err(ErrorKind::kNumerical, e.what());
    std::cerr << err.to_json().dump() << '\n';
    return exit_code(ErrorKind::kNumerical);
  }
  return 0;
}

}  // namespace mad
