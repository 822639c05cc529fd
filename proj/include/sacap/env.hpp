#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sacap/rng.hpp"
#include "sacap/scenario.hpp"

namespace sacap {

// Full environment state at the start of a period. The attribution matrix
// tracks which pending (not yet judged) attack raised which alerts; once an
// attack has been judged its remaining alerts stay in `uninvestigated` but
// the attribution row is cleared, so they count as benign from then on.
struct SystemState {
  std::vector<long long> uninvestigated;            // per alert type, N
  std::vector<std::uint8_t> executed;               // per attack, pending flag M
  std::vector<std::vector<long long>> attribution;  // [attack][type] counts S
  int period = 0;

  bool operator==(const SystemState&) const = default;
};

// What the defender sees: alert counts and the clock, nothing else.
struct DefenderObservation {
  std::vector<long long> uninvestigated;
  int period = 0;

  bool operator==(const DefenderObservation&) const = default;
};

// The attacker sees everything.
struct AttackerObservation {
  SystemState state;
};

struct DefenderAction {
  std::vector<long long> allocation;  // alerts of each type to investigate
};

struct AttackerAction {
  std::vector<std::uint8_t> selection;  // attacks to execute this period
};

struct StepOutcome {
  SystemState next_state;
  double defender_reward = 0.0;         // -sum(loss_a * missed_a)
  std::vector<std::uint8_t> missed;     // per attack, this period's miss indicator
  double attacker_reward() const { return -defender_reward; }
};

// Fresh episode state: all counts zero, period zero. The rng stream is part
// of the signature for symmetry with step(); reset itself draws nothing.
SystemState reset(const ScenarioSpec& spec, RngStream& rng);

DefenderObservation observe_defender(const SystemState& state);
AttackerObservation observe_attacker(const SystemState& state);

// Greedy budget projection of a continuous score vector onto a feasible
// investigation allocation. Types are visited in descending score order
// (ties broken by lower index); each takes min(available, floor(budget/cost))
// alerts; zero-cost types take everything available for free.
DefenderAction project_defender_action(const std::vector<double>& scores,
                                       const DefenderObservation& obs,
                                       const ScenarioSpec& spec);

// Attack-side projection: attacks visited in descending score order (ties to
// lower index); attack a is selected iff score_a >= 0.5 and its cost still
// fits the remaining budget.
AttackerAction project_attacker_action(const std::vector<double>& scores,
                                       const ScenarioSpec& spec);

// One period, in order:
//   1. the defender investigates allocation[t] alerts of each type, sampled
//      uniformly without replacement within the type;
//   2. attacks executed last period are judged: missed iff none of their
//      attributed alerts were just investigated (an attack that raised zero
//      alerts is therefore automatically missed); judged attacks are cleared
//      and their leftover alerts become benign;
//   3. reward = -sum over attacks of loss * missed;
//   4. the attacker's new selections execute (Poisson alerts per type),
//      benign Poisson alerts arrive, and the period advances.
// Actions violating budget or availability are rejected with a validation
// error naming the violation.
StepOutcome step(const SystemState& state, const DefenderAction& d_act,
                 const AttackerAction& a_act, const ScenarioSpec& spec, RngStream& rng);

// sum_k discount^k * rewards[k]
double discounted_return(const std::vector<double>& rewards, double discount);

// One episode row for trace export: period, N vector, allocation, selection, reward.
struct TraceRow {
  int period = 0;
  std::vector<long long> uninvestigated;
  std::vector<long long> allocation;
  std::vector<std::uint8_t> selection;
  double reward = 0.0;
};

std::string trace_header(const ScenarioSpec& spec);
std::string format_trace_row(const TraceRow& row);

}  // namespace sacap
