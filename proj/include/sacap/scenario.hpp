#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sacap {

// One alert type the intrusion detector can raise.
struct AlertTypeSpec {
  int id = 0;                     // dense index 0..|T|-1
  double investigation_cost = 0;  // budget units per investigated alert
  double false_alarm_rate = 0;    // mean benign alerts per period (Poisson)
  std::string label;
};

// One attack the adversary can mount.
struct AttackSpec {
  int id = 0;                      // dense index 0..|A|-1
  double execution_cost = 0;       // budget units per execution
  double miss_loss = 0;            // defender loss when the attack goes uninvestigated
  std::vector<double> alert_means; // mean alerts raised per type (Poisson), length |T|
};

// Full game definition consumed by every other module. Immutable after
// validation; safe to share read-only across workers.
struct ScenarioSpec {
  std::vector<AlertTypeSpec> alert_types;
  std::vector<AttackSpec> attacks;
  double defense_budget = 0;  // B
  double attack_budget = 0;   // D
  int horizon = 20;           // K periods per episode
  double discount = 0.95;     // gamma
  std::uint64_t seed = 0;

  int num_alert_types() const { return static_cast<int>(alert_types.size()); }
  int num_attacks() const { return static_cast<int>(attacks.size()); }

  // No attack fits the attack budget: the attacker can never act.
  bool attacker_degenerate() const;
  // No single investigation fits the defense budget: the defender can never act.
  bool defender_degenerate() const;
};

enum class ViolationCode {
  NoAlertTypes,
  NoAttacks,
  NegativeCost,
  NegativeRate,
  NegativeExecutionCost,
  NegativeLoss,
  NegativeAlertMean,
  ShapeMismatch,
  BadAlertTypeId,
  BadAttackId,
  BadDiscount,
  BadHorizon,
  DegenerateAttacker,
};

const char* violation_code_name(ViolationCode code);

struct Violation {
  ViolationCode code;
  int index = -1;  // alert type or attack index, -1 when scalar
  std::string message;
};

// Parses the documented scenario format (JSON; see README / emit_scenario).
// Unknown keys are rejected; discount defaults to 0.95, horizon to 20,
// false_alarm_rate to 0, label to "t<i>", seed to 0.
ScenarioSpec parse_scenario(const std::string& text);

// Inverse of parse_scenario: emits a canonical document such that
// parse_scenario(emit_scenario(s)) == s field for field.
std::string emit_scenario(const ScenarioSpec& spec);

// Returns every invariant violation; empty means valid. Violations are data,
// not failures. DegenerateAttacker is the one non-fatal code: such scenarios
// still simulate (the attacker just never acts) and the equilibrium layer
// short-circuits them.
std::vector<Violation> validate_scenario(const ScenarioSpec& spec);

// True when the scenario has no fatal violation (DegenerateAttacker is allowed).
bool scenario_usable(const ScenarioSpec& spec);

// Throws validation_error listing all fatal violations, if any.
void require_usable(const ScenarioSpec& spec);

// Stable content hash (FNV-1a over the canonical emitted document). Used to
// bind persisted policies to the scenario that produced them.
std::uint64_t scenario_hash(const ScenarioSpec& spec);
std::string scenario_hash_hex(const ScenarioSpec& spec);

}  // namespace sacap
