// Batch front door: run configs in, delimited reports out.
//
// Exit codes: 0 success, 2 configuration error, 3 validation refusal (a
// precondition of the method is violated; the message quotes it), 4 numerical
// failure.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lmtp/lmtp.hpp"

namespace fs = std::filesystem;
using namespace lmtp;

namespace {

struct CliArgs {
  std::string config;
  std::string output_override;
  int threads = 0;  // 0 = all available; the engine is sequential either way
  bool verbose = false;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PanelDataset materialize(const RunConfig& cfg) {
  if (cfg.data_path) return PanelDataset::load_csv(*cfg.data_path, cfg.schema);
  return sample_dgp(*cfg.dgp, cfg.n, mix_key(cfg.seed, 0xda7a));
}

Policy gated_policy(const std::string& text, const RunConfig& cfg) {
  const Policy p = parse_policy_spec(text, cfg.exposure_kind(), cfg.policy_seed);
  const PolicyValidation v = validate_policy_requirements(p, cfg.exposure_kind());
  if (!v.pass) {
    std::string msg = "policy fails the technical requirements for valid estimation";
    for (const auto& r : v.reasons) msg += "\n  - " + r;
    throw validation_error(msg);
  }
  return p;
}

std::string out_path(const RunConfig& cfg, const std::string& file) {
  fs::create_directories(cfg.output);
  return (fs::path(cfg.output) / file).string();
}

void run_estimate(const RunConfig& cfg, const CliArgs& args) {
  const PanelDataset data = materialize(cfg);
  const Policy policy_a = gated_policy(cfg.policy_text, cfg);
  std::vector<LabeledEstimate> rows;

  bool need_ratios = false;
  for (EstimatorKind k : cfg.estimators)
    if (k != EstimatorKind::GComp) need_ratios = true;

  auto run_policy = [&](const std::string& label, const Policy& pol)
      -> std::map<std::string, Estimate> {
    std::map<std::string, Estimate> by_name;
    RatioEstimates ratios;
    if (need_ratios) {
      ratios = estimate_ratios(data, pol, cfg.nuisance);
      if (label == "a")
        write_positivity_csv(out_path(cfg, "positivity.csv"), positivity_report(ratios));
    }
    for (EstimatorKind k : cfg.estimators) {
      Estimate e = run_estimator(k, data, pol, cfg.nuisance,
                                 need_ratios ? &ratios : nullptr, cfg.horizon);
      by_name[e.estimator] = e;
      rows.push_back({label, std::move(e)});
    }
    return by_name;
  };

  const auto est_a = run_policy("a", policy_a);
  if (cfg.policy_b_text) {
    const Policy policy_b = gated_policy(*cfg.policy_b_text, cfg);
    const auto est_b = run_policy("b", policy_b);
    for (const auto& [name, ea] : est_a) {
      if (ea.influence.empty()) continue;
      const Estimate c = contrast(ea, est_b.at(name), cfg.contrast);
      rows.push_back({"a-vs-b", c});
    }
  }
  write_estimates_csv(out_path(cfg, "estimates.csv"), rows);
  write_provenance_csv(out_path(cfg, "provenance.csv"), cfg.nuisance,
                       data.validation().notes);
  if (args.verbose)
    for (const auto& r : rows)
      std::cout << r.policy << " " << r.estimate.estimator << " "
                << format_value(r.estimate.psi) << " (se "
                << format_value(r.estimate.se) << ")\n";
}

void run_simulate(const RunConfig& cfg, const CliArgs& args) {
  if (!cfg.dgp) throw config_error("simulate requires a dgp source");
  const Policy policy = gated_policy(cfg.policy_text, cfg);
  const auto cells =
      run_scenario_matrix(*cfg.dgp, policy, cfg.scenarios, cfg.n, cfg.replicates,
                          cfg.estimators, cfg.nuisance, cfg.seed, kNaN, cfg.oracle_mc_reps);
  write_scenarios_csv(out_path(cfg, "scenarios.csv"), cells);
  if (args.verbose)
    for (const auto& c : cells)
      std::cout << c.scenario << " " << c.estimator << " bias "
                << format_value(c.bias) << " coverage " << format_value(c.coverage)
                << "\n";
}

void run_survival(const RunConfig& cfg, const CliArgs& args) {
  const PanelDataset data = materialize(cfg);
  if (!data.is_survival())
    throw config_error("survival command requires survival outcome columns");
  if (!data.has_censoring())
    throw config_error("survival command requires a censoring column");
  EstimatorKind kind = cfg.estimators.front();
  const Policy policy_a = gated_policy(cfg.policy_text, cfg);
  const SurvivalCurve curve_a =
      survival_curves(data, policy_a, kind, cfg.nuisance, cfg.band_replicates);
  write_curve_csv(out_path(cfg, "curve_a.csv"), curve_a);
  if (cfg.policy_b_text) {
    const Policy policy_b = gated_policy(*cfg.policy_b_text, cfg);
    const SurvivalCurve curve_b =
        survival_curves(data, policy_b, kind, cfg.nuisance, cfg.band_replicates);
    write_curve_csv(out_path(cfg, "curve_b.csv"), curve_b);
    std::vector<LabeledEstimate> rows;
    const std::size_t last = curve_a.horizons.size() - 1;
    rows.push_back({"a", curve_a.horizons[last]});
    rows.push_back({"b", curve_b.horizons[last]});
    rows.push_back(
        {"a-vs-b", contrast(curve_a.horizons[last], curve_b.horizons[last], cfg.contrast)});
    write_estimates_csv(out_path(cfg, "contrast.csv"), rows);
  }
  if (args.verbose)
    std::cout << "wrote " << curve_a.horizons.size() << " horizon rows\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"longitudinal modified treatment policy engine"};
  app.require_subcommand(1);
  CliArgs args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "path to the run configuration file")
        ->required();
    sub->add_option("--threads", args.threads, "worker thread cap (0 = all cores)");
    sub->add_option("--output", args.output_override, "override the output directory");
    sub->add_flag("--verbose", args.verbose, "print a summary to stdout");
  };
  CLI::App* est = app.add_subcommand("estimate", "estimate E[Y(d)] and contrasts");
  CLI::App* sim = app.add_subcommand("simulate", "run a scenario matrix on a known DGP");
  CLI::App* sur = app.add_subcommand("survival", "incidence curves with simultaneous bands");
  add_common(est);
  add_common(sim);
  add_common(sur);

  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  std::string command;
  try {
    RunMode mode = RunMode::Estimate;
    if (sim->parsed()) { mode = RunMode::Simulate; command = "simulate"; }
    else if (sur->parsed()) { mode = RunMode::Survival; command = "survival"; }
    else command = "estimate";
    if (args.threads < 0) throw config_error("--threads must be nonnegative");

    RunConfig cfg = load_run_config(args.config, mode);
    if (!args.output_override.empty()) cfg.output = args.output_override;

    switch (mode) {
      case RunMode::Estimate: run_estimate(cfg, args); break;
      case RunMode::Simulate: run_simulate(cfg, args); break;
      case RunMode::Survival: run_survival(cfg, args); break;
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_metadata((fs::path(cfg.output) / "metadata.csv").string(), command, args.config,
                   fnv1a(read_file(args.config)), wall);
  } catch (const config_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const validation_error& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return 3;
  } catch (const numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
