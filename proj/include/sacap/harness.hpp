#pragma once

#include <string>
#include <vector>

#include "sacap/equilibrium.hpp"
#include "sacap/policy.hpp"

namespace sacap {

// Uniform baseline: repeatedly pick one uninvestigated alert uniformly at
// random among all still-affordable ones, pay its cost, until nothing
// affordable remains.
DefenderAction uniform_defender_action(const DefenderObservation& obs, const ScenarioSpec& spec,
                                       RngStream& rng);

// Same rule on the attack side: pick affordable attacks uniformly until the
// budget admits none.
AttackerAction uniform_attacker_action(const ScenarioSpec& spec, RngStream& rng);

// Fixed-priority baseline: greedy allocation in a fixed type order, same
// arithmetic as the score projection with scores forced by rank.
DefenderAction static_priority_action(const DefenderObservation& obs, const ScenarioSpec& spec,
                                      const std::vector<int>& priority_order);

class UniformDefenderPolicy final : public DefenderPolicy {
 public:
  DefenderAction act(const DefenderObservation& obs, const ScenarioSpec& spec,
                     RngStream& rng) const override {
    return uniform_defender_action(obs, spec, rng);
  }
  std::string kind() const override { return "uniform"; }
};

class UniformAttackerPolicy final : public AttackerPolicy {
 public:
  AttackerAction act(const AttackerObservation& obs, const ScenarioSpec& spec,
                     RngStream& rng) const override {
    (void)obs;
    return uniform_attacker_action(spec, rng);
  }
  std::string kind() const override { return "uniform"; }
};

class StaticPriorityPolicy final : public DefenderPolicy {
 public:
  explicit StaticPriorityPolicy(std::vector<int> priority_order)
      : priority_order_(std::move(priority_order)) {}
  DefenderAction act(const DefenderObservation& obs, const ScenarioSpec& spec,
                     RngStream& rng) const override {
    (void)rng;
    return static_priority_action(obs, spec, priority_order_);
  }
  std::string kind() const override { return "priority"; }
  const std::vector<int>& priority_order() const { return priority_order_; }

 private:
  std::vector<int> priority_order_;
};

enum class SweepVariable {
  DefenseBudget,
  AttackBudget,
  // Unaware case: policies are obtained under the scenario's (estimated)
  // attack budget, then evaluated under the grid's actual attack budget.
  ActualAttackBudget,
};

const char* sweep_variable_name(SweepVariable variable);
SweepVariable parse_sweep_variable(const std::string& name);

struct ExperimentConfig {
  std::vector<std::string> methods;  // "sacap", "uniform", "priority"
  SweepVariable variable = SweepVariable::DefenseBudget;
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds;
  int eval_episodes = 100;
  DoubleOracleConfig oracle;  // also provides the SAC settings for baselines
};

struct ExperimentCell {
  std::string method;
  double sweep_value = 0.0;
  double mean_loss = 0.0;       // negated utility, nonnegative
  double standard_error = 0.0;  // across seeds
  int n_seeds = 0;
};

struct ExperimentReport {
  std::string scenario_hash;
  std::string sweep_variable;
  std::vector<double> grid;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  std::vector<ExperimentCell> cells;  // methods x grid, grid-major per method
};

// Runs every (method, grid point, seed) job and aggregates losses across
// seeds. SAC-AP defenders come from a double-oracle run and are evaluated at
// the equilibrium mix; baseline defenders are evaluated against a SAC
// attacker trained as the best response to that baseline. Evaluation
// episodes are paired across methods through shared seed streams.
ExperimentReport run_experiment(const ScenarioSpec& spec, const ExperimentConfig& config);

// Writes report.csv plus one plot_<method>.csv per method into `directory`.
// Refuses to clobber existing files unless `overwrite`.
void emit_report(const ExperimentReport& report, const std::string& directory, bool overwrite);

// The report.csv payload; exposed so tests can check byte-identity.
std::string format_report_table(const ExperimentReport& report);

}  // namespace sacap
