#include "sacap/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "sacap/error.hpp"

namespace sacap {

namespace {

constexpr double kBudgetSlack = 1e-9;  // absorbs float noise in cost sums

void check_scores(const std::vector<double>& scores, std::size_t expected, const char* who) {
  if (scores.size() != expected) {
    throw validation_error(std::string(who) + " score vector has length " +
                           std::to_string(scores.size()) + ", expected " +
                           std::to_string(expected));
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw validation_error(std::string(who) + " scores must be finite");
  }
}

// Descending score, ties to the lower index.
std::vector<int> order_by_score(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&scores](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

void check_defender_action(const DefenderAction& act, const SystemState& state,
                           const ScenarioSpec& spec) {
  if (act.allocation.size() != spec.alert_types.size()) {
    throw validation_error("defender allocation has wrong length");
  }
  double spent = 0.0;
  for (std::size_t t = 0; t < act.allocation.size(); ++t) {
    const long long n = act.allocation[t];
    if (n < 0) throw validation_error("defender allocation must be nonnegative");
    if (n > state.uninvestigated[t]) {
      throw validation_error("defender allocation exceeds available alerts of type " +
                             std::to_string(t));
    }
    spent += static_cast<double>(n) * spec.alert_types[t].investigation_cost;
  }
  if (spent > spec.defense_budget + kBudgetSlack) {
    throw validation_error("defender allocation exceeds the defense budget");
  }
}

void check_attacker_action(const AttackerAction& act, const ScenarioSpec& spec) {
  if (act.selection.size() != spec.attacks.size()) {
    throw validation_error("attacker selection has wrong length");
  }
  double spent = 0.0;
  for (std::size_t a = 0; a < act.selection.size(); ++a) {
    if (act.selection[a]) spent += spec.attacks[a].execution_cost;
  }
  if (spent > spec.attack_budget + kBudgetSlack) {
    throw validation_error("attacker selection exceeds the attack budget");
  }
}

}  // namespace

SystemState reset(const ScenarioSpec& spec, RngStream& rng) {
  (void)rng;
  require_usable(spec);
  SystemState state;
  state.uninvestigated.assign(spec.alert_types.size(), 0);
  state.executed.assign(spec.attacks.size(), 0);
  state.attribution.assign(spec.attacks.size(),
                           std::vector<long long>(spec.alert_types.size(), 0));
  state.period = 0;
  return state;
}

DefenderObservation observe_defender(const SystemState& state) {
  return DefenderObservation{state.uninvestigated, state.period};
}

AttackerObservation observe_attacker(const SystemState& state) {
  return AttackerObservation{state};
}

DefenderAction project_defender_action(const std::vector<double>& scores,
                                       const DefenderObservation& obs,
                                       const ScenarioSpec& spec) {
  check_scores(scores, spec.alert_types.size(), "defender");
  if (obs.uninvestigated.size() != spec.alert_types.size()) {
    throw validation_error("observation does not match scenario shape");
  }

  DefenderAction act;
  act.allocation.assign(spec.alert_types.size(), 0);
  double remaining = spec.defense_budget;
  for (int t : order_by_score(scores)) {
    const long long available = obs.uninvestigated[t];
    if (available == 0) continue;
    const double cost = spec.alert_types[t].investigation_cost;
    long long take;
    if (cost == 0.0) {
      take = available;
    } else {
      const long long affordable =
          static_cast<long long>(std::floor(remaining / cost + kBudgetSlack));
      take = std::min(available, std::max<long long>(affordable, 0));
      remaining -= static_cast<double>(take) * cost;
    }
    act.allocation[t] = take;
  }
  return act;
}

AttackerAction project_attacker_action(const std::vector<double>& scores,
                                       const ScenarioSpec& spec) {
  check_scores(scores, spec.attacks.size(), "attacker");

  AttackerAction act;
  act.selection.assign(spec.attacks.size(), 0);
  double remaining = spec.attack_budget;
  for (int a : order_by_score(scores)) {
    if (scores[a] < 0.5) continue;
    const double cost = spec.attacks[a].execution_cost;
    if (cost <= remaining + kBudgetSlack) {
      act.selection[a] = 1;
      remaining -= cost;
    }
  }
  return act;
}

StepOutcome step(const SystemState& state, const DefenderAction& d_act,
                 const AttackerAction& a_act, const ScenarioSpec& spec, RngStream& rng) {
  const std::size_t num_types = spec.alert_types.size();
  const std::size_t num_attacks = spec.attacks.size();
  if (state.uninvestigated.size() != num_types || state.executed.size() != num_attacks) {
    throw validation_error("state does not match scenario shape");
  }
  check_defender_action(d_act, state, spec);
  check_attacker_action(a_act, spec);

  StepOutcome out;
  out.next_state = state;
  SystemState& next = out.next_state;

  // Phase 1: investigation. Within each type the investigated alerts are a
  // uniform without-replacement sample, so the split between each pending
  // attack's alerts and the rest is multivariate hypergeometric; we sample it
  // attack by attack.
  std::vector<long long> investigated_of_attack(num_attacks, 0);
  for (std::size_t t = 0; t < num_types; ++t) {
    long long draws = d_act.allocation[t];
    long long population = next.uninvestigated[t];
    if (draws > 0) {
      for (std::size_t a = 0; a < num_attacks && draws > 0; ++a) {
        const long long attributed = next.attribution[a][t];
        if (attributed == 0) continue;
        const long long hit = rng.hypergeometric(attributed, population, draws);
        investigated_of_attack[a] += hit;
        next.attribution[a][t] -= hit;
        population -= attributed;
        draws -= hit;
      }
    }
    next.uninvestigated[t] -= d_act.allocation[t];
  }

  // Phase 2: judge attacks executed last period. Missed iff none of their
  // alerts were just investigated; either way the attack is resolved and its
  // leftover alerts are relabeled benign.
  out.missed.assign(num_attacks, 0);
  double reward = 0.0;
  for (std::size_t a = 0; a < num_attacks; ++a) {
    if (!next.executed[a]) continue;
    if (investigated_of_attack[a] == 0) {
      out.missed[a] = 1;
      reward -= spec.attacks[a].miss_loss;
    }
    next.executed[a] = 0;
    std::fill(next.attribution[a].begin(), next.attribution[a].end(), 0);
  }

  // Phase 3: reward.
  out.defender_reward = reward;

  // Phase 4: new attacks execute, benign alerts arrive, clock advances.
  for (std::size_t a = 0; a < num_attacks; ++a) {
    if (!a_act.selection[a]) continue;
    next.executed[a] = 1;
    for (std::size_t t = 0; t < num_types; ++t) {
      const long long raised = rng.poisson(spec.attacks[a].alert_means[t]);
      next.attribution[a][t] = raised;
      next.uninvestigated[t] += raised;
    }
  }
  for (std::size_t t = 0; t < num_types; ++t) {
    next.uninvestigated[t] += rng.poisson(spec.alert_types[t].false_alarm_rate);
  }
  next.period = state.period + 1;

  return out;
}

double discounted_return(const std::vector<double>& rewards, double discount) {
  if (!(discount >= 0.0 && discount <= 1.0)) {
    throw validation_error("discount must lie in [0, 1]");
  }
  double total = 0.0;
  double weight = 1.0;
  for (double r : rewards) {
    total += weight * r;
    weight *= discount;
  }
  return total;
}

std::string trace_header(const ScenarioSpec& spec) {
  std::ostringstream out;
  out << "period";
  for (int t = 0; t < spec.num_alert_types(); ++t) out << ",n_" << t;
  for (int t = 0; t < spec.num_alert_types(); ++t) out << ",alloc_" << t;
  for (int a = 0; a < spec.num_attacks(); ++a) out << ",exec_" << a;
  out << ",reward";
  return out.str();
}

std::string format_trace_row(const TraceRow& row) {
  std::ostringstream out;
  out << row.period;
  for (long long n : row.uninvestigated) out << "," << n;
  for (long long n : row.allocation) out << "," << n;
  for (std::uint8_t s : row.selection) out << "," << static_cast<int>(s);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", row.reward);
  out << "," << buf;
  return out.str();
}

}  // namespace sacap
