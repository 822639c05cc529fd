// Command-line surface for the alert-prioritization game: scenario
// validation, double-oracle solving, best-response training, policy
// evaluation, experiment sweeps and gradient checks.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sacap/env.hpp"
#include "sacap/equilibrium.hpp"
#include "sacap/error.hpp"
#include "sacap/harness.hpp"
#include "sacap/nn.hpp"
#include "sacap/persist.hpp"
#include "sacap/sac.hpp"
#include "sacap/scenario.hpp"

namespace fs = std::filesystem;
using namespace sacap;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("SACAP_OUT_DIR");
  return env && *env ? env : ".";
}

ScenarioSpec load_scenario(const std::string& path) {
  const ScenarioSpec spec = parse_scenario(read_text_file(path));
  require_usable(spec);
  return spec;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      out.push_back(std::stod(token));
    } catch (...) {
      throw usage_error("cannot parse " + what + " value '" + token + "'");
    }
  }
  if (out.empty()) throw usage_error(what + " list is empty");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      out.push_back(std::stoull(token));
    } catch (...) {
      throw usage_error("cannot parse seed '" + token + "'");
    }
  }
  if (out.empty()) throw usage_error("seed list is empty");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

int run_validate(const std::string& scenario_path) {
  const ScenarioSpec spec = parse_scenario(read_text_file(scenario_path));
  const std::vector<Violation> violations = validate_scenario(spec);
  if (violations.empty()) {
    std::cout << "valid: " << spec.num_alert_types() << " alert types, " << spec.num_attacks()
              << " attacks, B=" << format_number(spec.defense_budget)
              << ", D=" << format_number(spec.attack_budget) << ", K=" << spec.horizon
              << ", hash " << scenario_hash_hex(spec) << "\n";
    return 0;
  }
  for (const Violation& v : violations) {
    std::cout << violation_code_name(v.code);
    if (v.index >= 0) std::cout << "[" << v.index << "]";
    std::cout << ": " << v.message << "\n";
  }
  return 1;
}

int run_solve(const std::string& scenario_path, int iterations, int oracle_episodes,
              int eval_episodes, double gain_tolerance, const std::string& out_dir) {
  const ScenarioSpec spec = load_scenario(scenario_path);

  DoubleOracleConfig config;
  config.max_iterations = iterations;
  config.oracle_episodes = oracle_episodes;
  config.episodes_per_cell = eval_episodes;
  config.gain_tolerance = gain_tolerance;

  RngStream rng(spec.seed);
  const DoubleOracleState state =
      double_oracle(spec, std::make_shared<RandomScoresDefenderPolicy>(),
                    std::make_shared<RandomScoresAttackerPolicy>(), config, rng);

  fs::create_directories(fs::path(out_dir) / "policies");

  std::ostringstream journal;
  journal << "iteration,value,defender_gain,attacker_gain,gain_tolerance,defender_set,"
             "attacker_set,wall_seconds\n";
  for (const DoubleOracleIteration& it : state.history) {
    journal << it.iteration << "," << format_number(it.value) << ","
            << format_number(it.defender_gain) << "," << format_number(it.attacker_gain) << ","
            << format_number(it.gain_tolerance) << "," << it.defender_set_size << ","
            << it.attacker_set_size << "," << format_number(it.wall_seconds) << "\n";
  }
  write_text_file((fs::path(out_dir) / "journal.csv").string(), journal.str());

  std::vector<std::string> defender_files;
  for (std::size_t i = 0; i < state.defender_set.size(); ++i) {
    const std::string name = "policies/def_" + std::to_string(i) + ".policy";
    save_defender_policy(*state.defender_set[i], spec, (fs::path(out_dir) / name).string());
    defender_files.push_back(name);
  }
  std::vector<std::string> attacker_files;
  for (std::size_t j = 0; j < state.attacker_set.size(); ++j) {
    const std::string name = "policies/att_" + std::to_string(j) + ".policy";
    save_attacker_policy(*state.attacker_set[j], spec, (fs::path(out_dir) / name).string());
    attacker_files.push_back(name);
  }
  save_mix(state.defender_mix, defender_files, "defender", spec,
           (fs::path(out_dir) / "defender_mix.json").string());
  save_mix(state.attacker_mix, attacker_files, "attacker", spec,
           (fs::path(out_dir) / "attacker_mix.json").string());

  std::cout << (state.converged ? "converged" : "iteration limit") << " after "
            << state.iteration << " iterations; value " << format_number(state.value)
            << " (defender loss " << format_number(-state.value + 0.0) << "); policy sets "
            << state.defender_set.size() << "x" << state.attacker_set.size() << "; run dir "
            << out_dir << "\n";
  return 0;
}

int run_train_oracle(const std::string& scenario_path, const std::string& player,
                     const std::string& mix_path, int episodes, std::uint64_t seed,
                     const std::string& out_file) {
  const ScenarioSpec spec = load_scenario(scenario_path);
  RngStream rng(seed);
  if (player == "defender") {
    const LoadedAttackerMix opponents = load_attacker_mix(mix_path, spec);
    const DefenderPolicyPtr policy =
        train_defender_best_response(opponents.policies, opponents.mix, spec, episodes, rng);
    save_defender_policy(*policy, spec, out_file);
  } else if (player == "attacker") {
    const LoadedDefenderMix opponents = load_defender_mix(mix_path, spec);
    const AttackerPolicyPtr policy =
        train_attacker_best_response(opponents.policies, opponents.mix, spec, episodes, rng);
    save_attacker_policy(*policy, spec, out_file);
  } else {
    throw usage_error("--player must be defender or attacker");
  }
  std::cout << "trained " << player << " best response over " << episodes << " episodes -> "
            << out_file << "\n";
  return 0;
}

int run_evaluate(const std::string& scenario_path, const std::string& defender_file,
                 const std::string& attacker_file, int episodes, std::uint64_t seed,
                 const std::string& trace_file) {
  const ScenarioSpec spec = load_scenario(scenario_path);
  const DefenderPolicyPtr defender = load_defender_policy(defender_file, spec);
  const AttackerPolicyPtr attacker = load_attacker_policy(attacker_file, spec);

  RngStream rng(seed);
  const auto [mean, se] = estimate_utility(*defender, *attacker, spec, episodes, rng);
  std::cout << "episodes " << episodes << ": defender utility " << format_number(mean)
            << " (loss " << format_number(-mean) << "), se " << format_number(se) << "\n";

  if (!trace_file.empty()) {
    std::vector<TraceRow> trace;
    RngStream trace_rng = rng.derive(0xdeed);
    run_episode(*defender, *attacker, spec, trace_rng, &trace);
    std::ostringstream out;
    out << trace_header(spec) << "\n";
    for (const TraceRow& row : trace) out << format_trace_row(row) << "\n";
    write_text_file(trace_file, out.str());
    std::cout << "trace of one episode -> " << trace_file << "\n";
  }
  return 0;
}

int run_experiment_cmd(const std::string& scenario_path, const std::string& methods,
                       const std::string& sweep, const std::string& seeds, int eval_episodes,
                       int oracle_episodes, int iterations, const std::string& out_dir,
                       bool overwrite) {
  const ScenarioSpec spec = load_scenario(scenario_path);

  const auto equals = sweep.find('=');
  if (equals == std::string::npos) {
    throw usage_error("--sweep must look like VAR=V1,V2,... (e.g. defense_budget=1,2,4)");
  }
  ExperimentConfig config;
  config.methods = split_list(methods);
  config.variable = parse_sweep_variable(sweep.substr(0, equals));
  config.grid = parse_double_list(sweep.substr(equals + 1), "sweep");
  config.seeds = parse_seed_list(seeds);
  config.eval_episodes = eval_episodes;
  config.oracle.oracle_episodes = oracle_episodes;
  config.oracle.max_iterations = iterations;

  const ExperimentReport report = run_experiment(spec, config);
  emit_report(report, out_dir, overwrite);
  std::cout << format_report_table(report);
  std::cout << "report written to " << out_dir << "\n";
  return 0;
}

int run_gradcheck() {
  const auto start = std::chrono::steady_clock::now();
  RngStream rng(20240601);

  double mlp_worst = 0.0;
  const std::vector<std::vector<int>> shapes = {
      {4, 64, 64, 3}, {2, 16, 1}, {8, 32, 32, 8}, {3, 64, 5}, {6, 4}};
  for (const std::vector<int>& dims : shapes) {
    RngStream net_rng = rng.derive(static_cast<std::uint64_t>(dims.size() * 131 + dims.back()));
    Mlp net = Mlp::create(dims, net_rng);
    RngStream check_rng = net_rng.derive(1);
    mlp_worst = std::max(mlp_worst, gradient_check(net, 3, check_rng));
  }

  RngStream loss_rng = rng.derive(7);
  const SacGradientCheckReport losses = sac_loss_gradient_check(3, loss_rng);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("mlp forward/backward: max relative error %.3g (tolerance 1e-4)\n", mlp_worst);
  std::printf("critic loss:          max relative error %.3g (tolerance 1e-3)\n",
              losses.critic_error);
  std::printf("value loss:           max relative error %.3g (tolerance 1e-3)\n",
              losses.value_error);
  std::printf("actor loss:           max relative error %.3g (tolerance 1e-3)\n",
              losses.actor_error);
  std::printf("elapsed %.2fs\n", seconds);

  const bool ok = mlp_worst < 1e-4 && losses.worst() < 1e-3;
  std::printf("%s\n", ok ? "gradcheck passed" : "gradcheck FAILED");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Budget-constrained alert-prioritization game: soft actor-critic best responses "
      "inside a double-oracle equilibrium loop"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = default_out_dir();
  std::string out_file;
  std::string player, mix_path, defender_file, attacker_file, trace_file;
  std::string methods = "sacap,uniform";
  std::string sweep, seeds = "1,2,3";
  int iterations = 20;
  int oracle_episodes = 500;
  int eval_episodes = 100;
  int episodes = 500;
  double gain_tolerance = -1.0;
  std::uint64_t seed = 1;
  bool overwrite = false;

  CLI::App* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", scenario_path)->required();

  CLI::App* solve = app.add_subcommand("solve", "Run the double-oracle loop on a scenario");
  solve->add_option("scenario", scenario_path)->required();
  solve->add_option("--iterations", iterations, "Maximum double-oracle iterations");
  solve->add_option("--oracle-episodes", oracle_episodes, "Training episodes per oracle call");
  solve->add_option("--eval-episodes", eval_episodes, "Episodes per payoff cell");
  solve->add_option("--gain-tolerance", gain_tolerance,
                    "Best-response gain threshold (negative = automatic)");
  solve->add_option("--out", out_dir, "Run directory");

  CLI::App* train =
      app.add_subcommand("train-oracle", "Train one player's best response to an opponent mix");
  train->add_option("scenario", scenario_path)->required();
  train->add_option("--player", player)
      ->required()
      ->check(CLI::IsMember({"defender", "attacker"}));
  train->add_option("--opponent-mix", mix_path)->required();
  train->add_option("--episodes", episodes, "Training episodes");
  train->add_option("--seed", seed, "Training seed");
  train->add_option("--out", out_file, "Output policy file");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Estimate the utility of a policy pair");
  evaluate->add_option("scenario", scenario_path)->required();
  evaluate->add_option("--defender", defender_file)->required();
  evaluate->add_option("--attacker", attacker_file)->required();
  evaluate->add_option("--episodes", eval_episodes, "Evaluation episodes");
  evaluate->add_option("--seed", seed, "Evaluation seed");
  evaluate->add_option("--trace", trace_file, "Write one episode trace to this file");

  CLI::App* experiment = app.add_subcommand("experiment", "Sweep methods over a scenario grid");
  experiment->add_option("scenario", scenario_path)->required();
  experiment->add_option("--methods", methods, "Comma-separated: sacap,uniform,priority");
  experiment
      ->add_option("--sweep", sweep,
                   "VAR=V1,V2,... (defense_budget, attack_budget or actual_attack_budget)")
      ->required();
  experiment->add_option("--seeds", seeds, "Comma-separated seed list");
  experiment->add_option("--eval-episodes", eval_episodes, "Evaluation episodes per job");
  experiment->add_option("--oracle-episodes", oracle_episodes, "Training episodes per oracle");
  experiment->add_option("--iterations", iterations, "Double-oracle iteration cap");
  experiment->add_option("--out", out_dir, "Report directory");
  experiment->add_flag("--overwrite", overwrite, "Replace existing report files");

  app.add_subcommand("gradcheck", "Finite-difference checks for the networks and SAC losses");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return run_validate(scenario_path);
    if (solve->parsed()) {
      return run_solve(scenario_path, iterations, oracle_episodes, eval_episodes, gain_tolerance,
                       out_dir == default_out_dir() ? out_dir + "/run" : out_dir);
    }
    if (train->parsed()) {
      if (out_file.empty()) out_file = default_out_dir() + "/oracle_" + player + ".policy";
      return run_train_oracle(scenario_path, player, mix_path, episodes, seed, out_file);
    }
    if (evaluate->parsed()) {
      return run_evaluate(scenario_path, defender_file, attacker_file, eval_episodes, seed,
                          trace_file);
    }
    if (experiment->parsed()) {
      return run_experiment_cmd(scenario_path, methods, sweep, seeds, eval_episodes,
                                oracle_episodes, iterations, out_dir, overwrite);
    }
    return run_gradcheck();
  } catch (const Error& e) {
    std::cerr << "error: " << e.category_name() << ": " << e.what() << "\n";
    switch (e.category()) {
      case Error::Category::Usage: return 2;
      case Error::Category::Parse: return 3;
      case Error::Category::Validation: return 4;
      case Error::Category::Io: return 5;
      case Error::Category::Internal: return 6;
    }
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 6;
  }
}
