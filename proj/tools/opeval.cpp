#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opeval/estimators.hpp"
#include "opeval/exact.hpp"
#include "opeval/io.hpp"
#include "opeval/sim.hpp"
#include "opeval/weights.hpp"

namespace {

using namespace opeval;

void log_start(const std::string& subcommand) {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  std::cerr << "opeval " << subcommand << " started " << buf << "\n";
}

void emit(const std::string& document, const std::string& out_path) {
  std::cout << document;
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      throw ValidationError("file-not-found", "cannot write '" + out_path + "'");
    }
    out << document;
  }
}

struct EvaluateArgs {
  std::string log_path;
  std::string target_path;
  std::string estimator;
  std::string weights_source;
  std::string env_path;
  std::string policies_path;
  std::string out_path;
  std::string fallback;
};

int run_evaluate(const EvaluateArgs& args) {
  log_start("evaluate");
  io::RunManifest manifest;
  manifest.subcommand = "evaluate";
  io::add_input(manifest, args.log_path);
  io::add_input(manifest, args.target_path);

  MultiLoggerDataset data = io::load_log(args.log_path);
  TabularPolicy target = io::load_policy(args.target_path);

  std::vector<TabularPolicy> policies;
  if (!args.policies_path.empty()) {
    io::add_input(manifest, args.policies_path);
    policies = io::load_policies(args.policies_path);
    io::attach_policies(data, policies);
  }

  estimators::EstimateReport report;
  if (args.estimator == "naive") {
    report = estimators::naive_ips(data, target);
  } else if (args.estimator == "balanced") {
    report = estimators::balanced_ips(data, target);
  } else if (args.estimator == "weighted") {
    if (args.weights_source.empty()) {
      throw ValidationError("parse-error", "--estimator weighted needs --weights");
    }
    if (args.weights_source == "exact") {
      if (args.env_path.empty() || args.policies_path.empty()) {
        throw ValidationError("parse-error", "--weights exact needs --env and --policies");
      }
      io::add_input(manifest, args.env_path);
      Environment env = io::load_environment(args.env_path);
      std::vector<TabularPolicy> loggers;
      for (const auto& l : data.loggers) {
        if (!l.policy.has_value()) {
          throw DomainError("missing-policy",
                            "logger '" + l.logger_id + "' has no policy in --policies");
        }
        loggers.push_back(*l.policy);
      }
      exact::DivergenceProfile profile =
          exact::make_divergence_profile(target, loggers, data.sizes(), env);
      report = estimators::weighted_ips_optimal(data, target, profile);
    } else if (args.weights_source == "estimated") {
      exact::WeightVector w;
      bool fellback = false;
      try {
        w = weights::estimate_weights(data, target);
      } catch (const DomainError& e) {
        if (args.fallback == "naive" && e.kind() == "zero-divergence-estimate") {
          std::cerr << "warning: " << e.what() << "; falling back to uniform weights\n";
          w = exact::uniform_weights(data.sizes());
          fellback = true;
        } else {
          throw;
        }
      }
      report = estimators::weighted_ips(data, target, w);
      if (fellback) report.estimator_name = "weighted-fallback-naive";
    } else if (args.weights_source.rfind("file:", 0) == 0) {
      std::string path = args.weights_source.substr(5);
      io::add_input(manifest, path);
      exact::WeightVector w;
      w.weights = io::load_weight_values(path);
      w.sample_sizes = data.sizes();
      report = estimators::weighted_ips(data, target, w);
    } else {
      throw ValidationError("parse-error",
                            "--weights must be exact, estimated, or file:<path>");
    }
  } else {
    throw ValidationError("parse-error", "--estimator must be naive, balanced, or weighted");
  }

  emit(io::estimate_document(manifest, report), args.out_path);
  return 0;
}

struct ExactArgs {
  std::string env_path;
  std::string policies_path;
  std::string target_name;
  std::vector<std::int64_t> sizes;
  std::string out_path;
};

int run_exact(const ExactArgs& args) {
  log_start("exact");
  io::RunManifest manifest;
  manifest.subcommand = "exact";
  io::add_input(manifest, args.env_path);
  io::add_input(manifest, args.policies_path);

  Environment env = io::load_environment(args.env_path);
  std::vector<TabularPolicy> policies = io::load_policies(args.policies_path);

  TabularPolicy target;
  std::vector<TabularPolicy> loggers;
  bool found = false;
  for (const auto& p : policies) {
    if (p.name == args.target_name) {
      target = p;
      found = true;
    } else {
      loggers.push_back(p);
    }
  }
  if (!found) {
    throw ValidationError("unknown-policy",
                          "no policy named '" + args.target_name + "' in " + args.policies_path);
  }
  if (loggers.empty()) {
    throw ValidationError("empty-dataset", "no logger policies besides the target");
  }
  if (args.sizes.size() != loggers.size()) {
    std::ostringstream os;
    os << loggers.size() << " loggers but " << args.sizes.size() << " sizes";
    throw ValidationError("length-mismatch", os.str());
  }

  emit(io::exact_document(manifest, env, target, loggers, args.sizes), args.out_path);
  return 0;
}

struct EstimateWeightsArgs {
  std::string log_path;
  std::string target_path;
  std::string out_path;
  std::string fallback;
};

int run_estimate_weights(const EstimateWeightsArgs& args) {
  log_start("estimate-weights");
  io::RunManifest manifest;
  manifest.subcommand = "estimate-weights";
  io::add_input(manifest, args.log_path);
  io::add_input(manifest, args.target_path);

  MultiLoggerDataset data = io::load_log(args.log_path);
  TabularPolicy target = io::load_policy(args.target_path);

  weights::EstimatedDivergenceProfile profile = weights::estimate_profile(data, target);
  exact::WeightVector w;
  bool fellback = false;
  try {
    w = weights::weights_from_profile(profile);
  } catch (const DomainError& e) {
    if (args.fallback == "naive" && e.kind() == "zero-divergence-estimate") {
      std::cerr << "warning: " << e.what() << "; falling back to uniform weights\n";
      w = exact::uniform_weights(data.sizes());
      fellback = true;
    } else {
      throw;
    }
  }
  emit(io::weight_estimate_document(manifest, profile, w, fellback), args.out_path);
  return 0;
}

struct SimulateArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_path;
  std::string fallback;
};

int run_simulate(const SimulateArgs& args) {
  log_start("simulate");
  io::RunManifest manifest;
  manifest.subcommand = "simulate";
  io::add_input(manifest, args.config_path);

  io::ConfigBundle bundle = io::load_simulation_config(args.config_path);
  for (const auto& ref : bundle.referenced_files) io::add_input(manifest, ref);
  if (args.seed_given) {
    bundle.config.master_seed = args.seed;
    bundle.seed_provided = true;
  }
  if (args.fallback == "naive") bundle.config.fallback_naive = true;
  if (!bundle.seed_provided) {
    std::cerr << "warning: no seed given, using master seed 0\n";
  }
  manifest.seed = bundle.config.master_seed;

  sim::ReplicationSummary summary = sim::replicate(bundle.config);
  emit(io::simulate_document(manifest, summary), args.out_path);
  return 0;
}

struct SweepArgs {
  std::string env_path;
  std::string target_path;
  std::string logger2_path;
  std::string family_base_path;
  std::vector<double> mix_grid{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> r1_grid{0.1, 0.25, 0.5, 1.0, 3.0, 5.0, 7.0, 9.0};
  std::int64_t n2 = 100;
  std::string out_path;
};

int run_sweep(const SweepArgs& args) {
  log_start("sweep");
  io::RunManifest manifest;
  manifest.subcommand = "sweep";
  io::add_input(manifest, args.env_path);
  io::add_input(manifest, args.target_path);
  io::add_input(manifest, args.logger2_path);
  io::add_input(manifest, args.family_base_path);

  Environment env = io::load_environment(args.env_path);
  TabularPolicy target = io::load_policy(args.target_path);
  TabularPolicy logger2 = io::load_policy(args.logger2_path);
  TabularPolicy base = io::load_policy(args.family_base_path);

  std::vector<TabularPolicy> family;
  family.reserve(args.mix_grid.size());
  for (double mix : args.mix_grid) {
    family.push_back(sim::make_policy_family(env, base, mix));
  }
  std::vector<sim::SweepRow> rows =
      sim::sweep(env, target, logger2, family, args.mix_grid, args.r1_grid, args.n2);
  emit(io::sweep_csv(manifest, rows), args.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy evaluation for contextual bandit logs from multiple logging policies"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::kToolVersion);

  EvaluateArgs ev;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Point estimate from a log file");
  evaluate->add_option("--log", ev.log_path, "Log file (one record per line)")->required();
  evaluate->add_option("--target", ev.target_path, "Target policy file")->required();
  evaluate->add_option("--estimator", ev.estimator, "naive | balanced | weighted")->required();
  evaluate->add_option("--weights", ev.weights_source, "exact | estimated | file:<path>");
  evaluate->add_option("--env", ev.env_path, "Environment file (needed for --weights exact)");
  evaluate->add_option("--policies", ev.policies_path, "Logger policies to attach by name");
  evaluate->add_option("--out", ev.out_path, "Also write the report here");
  evaluate->add_option("--fallback", ev.fallback, "naive: uniform weights when estimation degenerates")
      ->check(CLI::IsMember({"naive"}));

  ExactArgs ex;
  CLI::App* exact_cmd = app.add_subcommand("exact", "Closed-form analysis of an instance");
  exact_cmd->add_option("--env", ex.env_path, "Environment file")->required();
  exact_cmd->add_option("--policies", ex.policies_path, "Policy array file")->required();
  exact_cmd->add_option("--target", ex.target_name, "Name of the target policy")->required();
  exact_cmd->add_option("--sizes", ex.sizes, "Per-logger sample sizes")->required()->delimiter(',');
  exact_cmd->add_option("--out", ex.out_path, "Also write the report here");

  EstimateWeightsArgs ew;
  CLI::App* estw = app.add_subcommand("estimate-weights", "Empirical divergences and weights");
  estw->add_option("--log", ew.log_path, "Log file")->required();
  estw->add_option("--target", ew.target_path, "Target policy file")->required();
  estw->add_option("--out", ew.out_path, "Also write the report here");
  estw->add_option("--fallback", ew.fallback, "naive: uniform weights when estimation degenerates")
      ->check(CLI::IsMember({"naive"}));

  SimulateArgs si;
  CLI::App* simulate = app.add_subcommand("simulate", "Replicated synthetic-log evaluation");
  simulate->add_option("--config", si.config_path, "Simulation config file")->required();
  auto* seed_opt = simulate->add_option("--seed", si.seed, "Master seed (overrides config)");
  simulate->add_option("--out", si.out_path, "Also write the report here");
  simulate->add_option("--fallback", si.fallback, "naive: uniform weights when estimation degenerates")
      ->check(CLI::IsMember({"naive"}));

  SweepArgs sw;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Exact variance-ratio grid as CSV");
  sweep_cmd->add_option("--env", sw.env_path, "Environment file")->required();
  sweep_cmd->add_option("--target", sw.target_path, "Target policy file")->required();
  sweep_cmd->add_option("--logger2", sw.logger2_path, "Fixed second logger policy file")->required();
  sweep_cmd->add_option("--family-base", sw.family_base_path, "Family base policy file")->required();
  sweep_cmd->add_option("--mix-grid", sw.mix_grid, "Mixture coefficients")->delimiter(',');
  sweep_cmd->add_option("--r1-grid", sw.r1_grid, "Relative size grid")->delimiter(',');
  sweep_cmd->add_option("--n2", sw.n2, "Base sample count for logger 2");
  sweep_cmd->add_option("--out", sw.out_path, "Also write the CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (evaluate->parsed()) return run_evaluate(ev);
    if (exact_cmd->parsed()) return run_exact(ex);
    if (estw->parsed()) return run_estimate_weights(ew);
    if (simulate->parsed()) {
      si.seed_given = seed_opt->count() > 0;
      return run_simulate(si);
    }
    if (sweep_cmd->parsed()) return run_sweep(sw);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
