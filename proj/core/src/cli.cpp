#include "sbx/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sbx/calibrate.hpp"
#include "sbx/config.hpp"
#include "sbx/design.hpp"
#include "sbx/errors.hpp"
#include "sbx/estimate.hpp"
#include "sbx/evaluate.hpp"
#include "sbx/generate.hpp"
#include "sbx/panel_io.hpp"
#include "sbx/params.hpp"

namespace sbx {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kExitCodeHelp =
    "Exit codes: 0 success; 2 usage or config schema error; 3 data/validation error; "
    "4 estimation error (e.g. not identified); 5 I/O error; 1 other failure.";

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError:
      return 2;
    case ErrorCode::NotIdentified:
    case ErrorCode::SingleCluster:
      return 4;
    case ErrorCode::IoError:
      return 5;
    default:
      return 3;
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << content;
}

void write_manifest(const std::string& path, const std::string& command, json config,
                    std::vector<std::string> outputs) {
  json m{{"tool", "sbx"},
         {"version", kVersion},
         {"command", command},
         {"config", std::move(config)},
         {"outputs", std::move(outputs)}};
  write_text_file(path, m.dump(2) + "\n");
}

std::string design_label(const AssignmentSchedule& schedule) {
  if (schedule.design == DesignKind::FixedPods) return "fixed_pods";
  if (schedule.block_length_days == 1) return "daily_sb";
  if (schedule.block_length_days == 7) return "weekly_sb";
  return "switchback_" + std::to_string(schedule.block_length_days) + "d";
}

int resolve_n_days(const GeneratorParams& params, int requested) {
  if (requested > 0) return requested;
  if (params.shock_factor.size() > 0) return static_cast<int>(params.shock_factor.size());
  return 366;
}

struct CalibrateArgs {
  std::string input, out;
  int harmonics = 3;
  double period = 365.25;
};

void cmd_calibrate(const CalibrateArgs& a) {
  std::cerr << "[sbx] calibrating on '" << a.input << "'\n";
  const PanelDataset panel = load_panel_file(a.input);
  const CalibrationResult result = calibrate(panel, a.harmonics, a.period);
  for (const auto& d : result.diagnostics) std::cerr << "[sbx] diagnostic: " << d << '\n';
  save_params_file(result.params, a.out);
  write_manifest(a.out + ".manifest.json", "calibrate",
                 json{{"input", a.input},
                      {"out", a.out},
                      {"harmonics", a.harmonics},
                      {"period", a.period}},
                 {a.out});
  std::cerr << "[sbx] wrote '" << a.out << "' (" << result.params.n_units() << " units)\n";
}

struct GenerateArgs {
  std::string params_path, out;
  bool builtin = false;
  std::string regime = "baseline";
  int n_units = 0, n_days = 0;
  std::uint64_t seed = 0;
  double c_seas = -1.0, c_shock = -1.0, c_ar = -1.0;  // <0: keep regime value
};

void cmd_generate(const GenerateArgs& a) {
  if (a.params_path.empty() && !a.builtin)
    throw Error(ErrorCode::SchemaError, "provide a params file or --builtin");
  if (!a.params_path.empty() && a.builtin)
    throw Error(ErrorCode::SchemaError, "params file and --builtin are mutually exclusive");
  const GeneratorParams params =
      a.builtin ? default_generator_params() : load_params_file(a.params_path);

  Perturbations perturb = make_regime(regime_from_name(a.regime));
  if (a.c_seas >= 0.0) perturb.c_seas = a.c_seas;
  if (a.c_shock >= 0.0) perturb.c_shock = a.c_shock;
  if (a.c_ar >= 0.0) perturb.c_ar = a.c_ar;

  const int n = a.n_units > 0 ? a.n_units : static_cast<int>(params.n_units());
  const int days = resolve_n_days(params, a.n_days);
  std::cerr << "[sbx] generating " << n << " x " << days << " panel, regime " << a.regime
            << ", seed " << a.seed << '\n';
  const PanelDataset panel = generate_panel(params, n, days, perturb, a.seed);
  save_panel_file(panel, a.out);
  write_manifest(a.out + ".manifest.json", "generate",
                 json{{"params", a.builtin ? "<builtin>" : a.params_path},
                      {"regime", a.regime},
                      {"n_units", n},
                      {"n_days", days},
                      {"seed", a.seed},
                      {"perturbations",
                       {{"c_seas", perturb.c_seas},
                        {"c_shock", perturb.c_shock},
                        {"c_ar", perturb.c_ar}}},
                      {"out", a.out}},
                 {a.out});
}

struct SimulateArgs {
  std::string config_path;
  // optional command-line overrides
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
  std::optional<std::string> regime;
  std::optional<std::string> horizons;
  std::optional<double> delta;
  std::optional<double> alpha;
};

void cmd_simulate(const SimulateArgs& a) {
  RunConfig cfg = load_config_file(a.config_path);
  if (a.seed) cfg.plan.master_seed = *a.seed;
  if (a.jobs) cfg.plan.jobs = *a.jobs;
  if (a.out_dir) cfg.out_dir = *a.out_dir;
  if (a.regime) cfg.plan.regime = regime_from_name(*a.regime);
  if (a.delta) cfg.plan.uplift_delta = *a.delta;
  if (a.alpha) {
    if (!(*a.alpha > 0.0 && *a.alpha < 1.0))
      throw Error(ErrorCode::SchemaError, "field 'alpha': must lie in (0, 1)");
    cfg.plan.alpha = *a.alpha;
  }
  if (a.horizons) {
    cfg.plan.horizons_weeks.clear();
    std::stringstream ss(*a.horizons);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const int w = std::stoi(tok);
      if (w < 2 || w % 2 != 0)
        throw Error(ErrorCode::SchemaError, "field 'horizons': must be even and >= 2");
      cfg.plan.horizons_weeks.push_back(w);
    }
    if (cfg.plan.horizons_weeks.empty())
      throw Error(ErrorCode::SchemaError, "field 'horizons': empty list");
  }

  PanelSource source;
  if (!cfg.panel_path.empty()) {
    source = make_fixed_source(load_panel_file(cfg.panel_path));
  } else {
    const GeneratorParams params =
        cfg.use_default_params ? default_generator_params() : load_params_file(cfg.params_path);
    const int n = cfg.generator.n_units > 0 ? cfg.generator.n_units
                                            : static_cast<int>(params.n_units());
    const int days = resolve_n_days(params, cfg.generator.n_days);
    if (cfg.perturb_override)
      source = make_synthetic_source(params, n, days, *cfg.perturb_override);
    else
      source = make_synthetic_source(params, n, days, cfg.plan.regime);
  }

  fs::create_directories(cfg.out_dir);
  std::vector<std::string> outputs;
  auto emit = [&](const EvaluationReport& report, const std::string& stem) {
    const std::string base = (fs::path(cfg.out_dir) / stem).string();
    write_text_file(base + ".json", report_to_json(report) + "\n");
    write_text_file(base + ".csv", report_to_csv(report));
    write_text_file(base + ".txt", report_to_text(report));
    outputs.push_back(base + ".json");
    outputs.push_back(base + ".csv");
    outputs.push_back(base + ".txt");
  };

  if (cfg.run_aa) {
    std::cerr << "[sbx] running A/A suite: " << cfg.plan.designs.size() << " designs x "
              << cfg.plan.horizons_weeks.size() << " horizons, "
              << cfg.plan.n_dataset_reps * cfg.plan.n_splits_per_dataset << " dataset-splits\n";
    emit(run_aa_suite(source, cfg.plan), "aa_report");
  }
  if (cfg.run_ab) {
    std::cerr << "[sbx] running A/B suite (delta=" << cfg.plan.uplift_delta << ")\n";
    emit(run_ab_suite(source, cfg.plan), "ab_report");
  }

  write_manifest((fs::path(cfg.out_dir) / "manifest.json").string(), "simulate",
                 json::parse(config_to_json(cfg)), outputs);
  std::cerr << "[sbx] reports written to '" << cfg.out_dir << "'\n";
}

struct AnalyzeArgs {
  std::string panel_path, schedule_path, out;
};

void cmd_analyze(const AnalyzeArgs& a) {
  const PanelDataset panel = load_panel_file(a.panel_path);
  std::ifstream in(a.schedule_path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + a.schedule_path + "'");
  const AssignmentSchedule schedule = read_schedule_csv(in, panel);
  const TwfeFit fit = twfe_fit(panel, schedule);
  const std::string report =
      fit_report_json(fit, design_label(schedule), static_cast<int>(schedule.n_days()));
  if (a.out.empty()) {
    std::cout << report << '\n';
  } else {
    write_text_file(a.out, report + "\n");
    write_manifest(a.out + ".manifest.json", "analyze",
                   json{{"panel", a.panel_path}, {"schedule", a.schedule_path}, {"out", a.out}},
                   {a.out});
  }
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{std::string("switchback experiment design and analysis toolkit\n") +
               kExitCodeHelp};
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit generator parameters to a panel CSV");
  cal_cmd->add_option("input", cal.input, "panel CSV (raw records or unit panel)")->required();
  cal_cmd->add_option("-o,--out", cal.out, "output params JSON")->required();
  cal_cmd->add_option("-K,--harmonics", cal.harmonics, "Fourier harmonics (default 3)");
  cal_cmd->add_option("--period", cal.period, "seasonal period in days (default 365.25)");
  cal_cmd->callback([&] { cmd_calibrate(cal); });

  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "Sample a synthetic panel from params");
  gen_cmd->add_option("params", gen.params_path, "generator params JSON");
  gen_cmd->add_flag("--builtin", gen.builtin, "use the shipped default parameters");
  gen_cmd->add_option("--regime", gen.regime,
                      "baseline|more-shocks|more-seasonality|more-ar1");
  gen_cmd->add_option("-N,--units", gen.n_units, "unit count (default: calibrated count)");
  gen_cmd->add_option("-T,--days", gen.n_days, "day count (default: calibration window)");
  gen_cmd->add_option("--seed", gen.seed, "random seed");
  gen_cmd->add_option("--c-seas", gen.c_seas, "override seasonality multiplier");
  gen_cmd->add_option("--c-shock", gen.c_shock, "override common-shock multiplier");
  gen_cmd->add_option("--c-ar", gen.c_ar, "override AR persistence multiplier");
  gen_cmd->add_option("-o,--out", gen.out, "output panel CSV")->required();
  gen_cmd->callback([&] { cmd_generate(gen); });

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the Monte Carlo evaluation suites");
  sim_cmd->add_option("config", sim.config_path, "run config JSON")->required();
  sim_cmd->add_option("--seed", sim.seed, "override master seed");
  sim_cmd->add_option("--jobs", sim.jobs, "worker thread cap (0 = all cores)");
  sim_cmd->add_option("--out-dir", sim.out_dir, "override output directory");
  sim_cmd->add_option("--regime", sim.regime, "override regime");
  sim_cmd->add_option("--horizons", sim.horizons, "override horizons, e.g. 2,8,16");
  sim_cmd->add_option("--delta", sim.delta, "override uplift delta");
  sim_cmd->add_option("--alpha", sim.alpha, "override significance level");
  sim_cmd->callback([&] { cmd_simulate(sim); });

  AnalyzeArgs ana;
  auto* ana_cmd = app.add_subcommand("analyze", "Single TWFE fit of a panel and schedule");
  ana_cmd->add_option("panel", ana.panel_path, "panel CSV")->required();
  ana_cmd->add_option("schedule", ana.schedule_path, "schedule CSV (unit,date,treated)")
      ->required();
  ana_cmd->add_option("-o,--out", ana.out, "write report JSON here instead of stdout");
  ana_cmd->callback([&] { cmd_analyze(ana); });

  std::vector<const char*> argv;
  argv.push_back("sbx");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "[sbx] error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "[sbx] error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace sbx
