#include "sacap/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sacap/error.hpp"
#include "sacap/sac.hpp"

namespace sacap {

namespace fs = std::filesystem;

namespace {

constexpr double kBudgetSlack = 1e-9;

std::string format_value(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", x + 0.0);  // normalizes -0
  return buf;
}

}  // namespace

DefenderAction uniform_defender_action(const DefenderObservation& obs, const ScenarioSpec& spec,
                                       RngStream& rng) {
  const int num_types = spec.num_alert_types();
  if (static_cast<int>(obs.uninvestigated.size()) != num_types) {
    throw validation_error("observation does not match scenario shape");
  }
  DefenderAction act;
  act.allocation.assign(static_cast<std::size_t>(num_types), 0);
  std::vector<long long> available = obs.uninvestigated;
  double remaining = spec.defense_budget;

  while (true) {
    long long pool = 0;
    for (int t = 0; t < num_types; ++t) {
      if (available[t] > 0 && spec.alert_types[t].investigation_cost <= remaining + kBudgetSlack) {
        pool += available[t];
      }
    }
    if (pool == 0) break;
    long long pick = rng.uniform_int(pool);
    for (int t = 0; t < num_types; ++t) {
      if (available[t] == 0 || spec.alert_types[t].investigation_cost > remaining + kBudgetSlack) {
        continue;
      }
      if (pick < available[t]) {
        available[t] -= 1;
        act.allocation[t] += 1;
        remaining -= spec.alert_types[t].investigation_cost;
        break;
      }
      pick -= available[t];
    }
  }
  return act;
}

AttackerAction uniform_attacker_action(const ScenarioSpec& spec, RngStream& rng) {
  const int num_attacks = spec.num_attacks();
  AttackerAction act;
  act.selection.assign(static_cast<std::size_t>(num_attacks), 0);
  double remaining = spec.attack_budget;

  while (true) {
    std::vector<int> affordable;
    for (int a = 0; a < num_attacks; ++a) {
      if (!act.selection[a] && spec.attacks[a].execution_cost <= remaining + kBudgetSlack) {
        affordable.push_back(a);
      }
    }
    if (affordable.empty()) break;
    const int a = affordable[static_cast<std::size_t>(
        rng.uniform_int(static_cast<long long>(affordable.size())))];
    act.selection[a] = 1;
    remaining -= spec.attacks[a].execution_cost;
  }
  return act;
}

DefenderAction static_priority_action(const DefenderObservation& obs, const ScenarioSpec& spec,
                                      const std::vector<int>& priority_order) {
  const int num_types = spec.num_alert_types();
  if (static_cast<int>(priority_order.size()) != num_types) {
    throw validation_error("priority order must be a permutation of the alert types");
  }
  std::vector<bool> seen(static_cast<std::size_t>(num_types), false);
  for (int t : priority_order) {
    if (t < 0 || t >= num_types || seen[static_cast<std::size_t>(t)]) {
      throw validation_error("priority order must be a permutation of the alert types");
    }
    seen[static_cast<std::size_t>(t)] = true;
  }
  // Rank-forced scores reuse the greedy projection arithmetic.
  std::vector<double> scores(static_cast<std::size_t>(num_types));
  for (int rank = 0; rank < num_types; ++rank) {
    scores[static_cast<std::size_t>(priority_order[rank])] =
        1.0 - static_cast<double>(rank) / static_cast<double>(num_types);
  }
  return project_defender_action(scores, obs, spec);
}

const char* sweep_variable_name(SweepVariable variable) {
  switch (variable) {
    case SweepVariable::DefenseBudget: return "defense_budget";
    case SweepVariable::AttackBudget: return "attack_budget";
    case SweepVariable::ActualAttackBudget: return "actual_attack_budget";
  }
  return "unknown";
}

SweepVariable parse_sweep_variable(const std::string& name) {
  if (name == "defense_budget") return SweepVariable::DefenseBudget;
  if (name == "attack_budget") return SweepVariable::AttackBudget;
  if (name == "actual_attack_budget") return SweepVariable::ActualAttackBudget;
  throw usage_error("unknown sweep variable '" + name +
                    "' (expected defense_budget, attack_budget or actual_attack_budget)");
}

namespace {

struct MethodRun {
  // Per-seed mean defender loss at one grid point.
  std::vector<double> per_seed_loss;
};

// Training spec (what policies are obtained on) and evaluation spec (what
// they are scored on) for one grid point.
struct GridSpecs {
  ScenarioSpec train;
  ScenarioSpec eval;
};

GridSpecs specs_for_grid_point(const ScenarioSpec& base, SweepVariable variable, double value) {
  GridSpecs out{base, base};
  switch (variable) {
    case SweepVariable::DefenseBudget:
      out.train.defense_budget = value;
      out.eval.defense_budget = value;
      break;
    case SweepVariable::AttackBudget:
      out.train.attack_budget = value;
      out.eval.attack_budget = value;
      break;
    case SweepVariable::ActualAttackBudget:
      // Unaware defender: train at the estimated budget already in the
      // scenario, evaluate at the actual one.
      out.eval.attack_budget = value;
      break;
  }
  return out;
}

double evaluate_mixed_loss(const std::vector<DefenderPolicyPtr>& defenders,
                           const MixedStrategy& def_mix,
                           const std::vector<AttackerPolicyPtr>& attackers,
                           const MixedStrategy& att_mix, const ScenarioSpec& eval_spec,
                           int episodes, RngStream& eval_rng) {
  RngStream pick_rng = eval_rng.derive(1);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const DefenderPolicy& def = *defenders[static_cast<std::size_t>(def_mix.sample(pick_rng))];
    const AttackerPolicy* att = nullptr;
    if (!attackers.empty()) {
      att = attackers[static_cast<std::size_t>(att_mix.sample(pick_rng))].get();
    }
    static const NullAttackerPolicy null_attacker;
    RngStream episode_rng = eval_rng.derive(100 + static_cast<std::uint64_t>(e));
    total += run_episode(def, att ? *att : null_attacker, eval_spec, episode_rng);
  }
  return -(total / episodes);
}

double run_one_job(const std::string& method, const GridSpecs& specs,
                   const ExperimentConfig& config, std::uint64_t seed, RngStream& eval_rng) {
  RngStream job_rng = RngStream(seed).derive(0x10b);

  if (method == "sacap") {
    DoubleOracleState state =
        double_oracle(specs.train, std::make_shared<RandomScoresDefenderPolicy>(),
                      std::make_shared<RandomScoresAttackerPolicy>(), config.oracle, job_rng);
    return evaluate_mixed_loss(state.defender_set, state.defender_mix, state.attacker_set,
                               state.attacker_mix, specs.eval, config.eval_episodes, eval_rng);
  }

  DefenderPolicyPtr defender;
  if (method == "uniform") {
    defender = std::make_shared<UniformDefenderPolicy>();
  } else if (method == "priority") {
    std::vector<int> order(static_cast<std::size_t>(specs.train.num_alert_types()));
    std::iota(order.begin(), order.end(), 0);
    defender = std::make_shared<StaticPriorityPolicy>(std::move(order));
  } else {
    throw usage_error("unknown method '" + method + "'");
  }

  // Baselines face an adaptive adversary: a SAC attacker trained as the best
  // response to the baseline rule, under the evaluation-time budget.
  AttackerPolicyPtr attacker;
  if (specs.eval.attacker_degenerate()) {
    attacker = std::make_shared<NullAttackerPolicy>();
  } else {
    attacker = train_attacker_best_response({defender}, MixedStrategy{{1.0}}, specs.eval,
                                            config.oracle.oracle_episodes, job_rng,
                                            config.oracle.sac);
  }

  MixedStrategy unit{{1.0}};
  return evaluate_mixed_loss({defender}, unit, {attacker}, unit, specs.eval,
                             config.eval_episodes, eval_rng);
}

}  // namespace

ExperimentReport run_experiment(const ScenarioSpec& spec, const ExperimentConfig& config) {
  require_usable(spec);
  if (config.grid.empty()) throw usage_error("sweep grid must be nonempty");
  if (config.seeds.empty()) throw usage_error("seed list must be nonempty");
  if (config.methods.empty()) throw usage_error("method list must be nonempty");
  if (config.eval_episodes < 1) throw usage_error("eval episodes must be >= 1");
  for (const std::string& m : config.methods) {
    if (m != "sacap" && m != "uniform" && m != "priority") {
      throw usage_error("unknown method '" + m + "' (expected sacap, uniform or priority)");
    }
  }

  ExperimentReport report;
  report.scenario_hash = scenario_hash_hex(spec);
  report.sweep_variable = sweep_variable_name(config.variable);
  report.grid = config.grid;
  report.methods = config.methods;
  report.seeds = config.seeds;

  for (const std::string& method : config.methods) {
    for (std::size_t g = 0; g < config.grid.size(); ++g) {
      const GridSpecs specs = specs_for_grid_point(spec, config.variable, config.grid[g]);
      require_usable(specs.train);
      require_usable(specs.eval);

      std::vector<double> losses;
      for (std::uint64_t seed : config.seeds) {
        // Evaluation streams depend on (seed, grid point) only, so methods
        // are compared on paired episode randomness.
        RngStream eval_rng = RngStream(seed).derive(0xe7a1).derive(g);
        losses.push_back(run_one_job(method, specs, config, seed, eval_rng));
      }

      double mean = 0.0;
      for (double l : losses) mean += l;
      mean /= static_cast<double>(losses.size());
      double se = 0.0;
      if (losses.size() > 1) {
        double var = 0.0;
        for (double l : losses) var += (l - mean) * (l - mean);
        var /= static_cast<double>(losses.size() - 1);
        se = std::sqrt(var / static_cast<double>(losses.size()));
      }
      report.cells.push_back(ExperimentCell{method, config.grid[g], mean, se,
                                            static_cast<int>(losses.size())});
    }
  }
  return report;
}

std::string format_report_table(const ExperimentReport& report) {
  std::ostringstream out;
  out << "# scenario " << report.scenario_hash << "\n";
  out << "# sweep " << report.sweep_variable << "\n";
  out << "# seeds";
  for (std::uint64_t s : report.seeds) out << " " << s;
  out << "\n";
  out << "method," << report.sweep_variable << ",mean_loss,se,n_seeds\n";
  for (const ExperimentCell& cell : report.cells) {
    out << cell.method << "," << format_value(cell.sweep_value) << ","
        << format_value(cell.mean_loss) << "," << format_value(cell.standard_error) << ","
        << cell.n_seeds << "\n";
  }
  return out.str();
}

void emit_report(const ExperimentReport& report, const std::string& directory, bool overwrite) {
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw io_error("cannot create output directory '" + directory + "': " + ec.message());

  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("report.csv", format_report_table(report));
  for (const std::string& method : report.methods) {
    std::ostringstream plot;
    plot << report.sweep_variable << ",mean_loss,se\n";
    for (const ExperimentCell& cell : report.cells) {
      if (cell.method != method) continue;
      plot << format_value(cell.sweep_value) << "," << format_value(cell.mean_loss) << ","
           << format_value(cell.standard_error) << "\n";
    }
    files.emplace_back("plot_" + method + ".csv", plot.str());
  }

  for (const auto& [name, _] : files) {
    const fs::path path = fs::path(directory) / name;
    if (!overwrite && fs::exists(path)) {
      throw io_error("refusing to overwrite '" + path.string() + "' (use --overwrite)");
    }
  }
  for (const auto& [name, content] : files) {
    const fs::path path = fs::path(directory) / name;
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path.string() + "'");
    out << content;
  }
}

}  // namespace sacap
