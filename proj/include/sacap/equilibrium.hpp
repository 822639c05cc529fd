#pragma once

#include <utility>
#include <vector>

#include "sacap/policy.hpp"
#include "sacap/rng.hpp"
#include "sacap/sac.hpp"
#include "sacap/scenario.hpp"

namespace sacap {

// Estimated defender utilities over pure-policy sets. Row i / column j holds
// the Monte Carlo estimate of the defender's discounted return when defender
// policy i plays attacker policy j; attacker utility is the negation.
struct PayoffMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;           // row-major, rows*cols
  std::vector<double> standard_errors;  // same shape
  int episodes_per_cell = 0;

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * cols + col]; }
  double se_at(int row, int col) const {
    return standard_errors[static_cast<std::size_t>(row) * cols + col];
  }
  void validate() const;  // finite values, shapes consistent
};

// One episode of the game; returns the defender's discounted return.
// Policy randomness and environment randomness use separate derived streams.
double run_episode(const DefenderPolicy& defender, const AttackerPolicy& attacker,
                   const ScenarioSpec& spec, RngStream& rng,
                   std::vector<TraceRow>* trace = nullptr);

// Sample mean and standard error of the defender's discounted return over
// `episodes` independent episodes.
std::pair<double, double> estimate_utility(const DefenderPolicy& defender,
                                           const AttackerPolicy& attacker,
                                           const ScenarioSpec& spec, int episodes,
                                           RngStream& rng);

// sum_i row_mix_i * values[i][col]
double expected_utility_mixed(const PayoffMatrix& payoff, const MixedStrategy& row_mix, int col);
// sum_i sum_j row_mix_i * col_mix_j * values[i][j]
double expected_utility_mixed(const PayoffMatrix& payoff, const MixedStrategy& row_mix,
                              const MixedStrategy& col_mix);

struct MsneSolution {
  MixedStrategy row_mix;
  MixedStrategy col_mix;
  double value = 0.0;
};

// Maximin linear program for both players of the zero-sum matrix game, via a
// self-contained dense simplex (shift positive, normalize). The row player
// solves on the values, the column player on the negated transpose; the two
// solves must agree (duality gap <= 1e-6) or the solver reports an internal
// error.
MsneSolution solve_msne_lp(const PayoffMatrix& payoff);

// Total best-response gain of both players against (row_mix, col_mix) on the
// restricted matrix; nonnegative, zero exactly at an MSNE.
double exploitability(const PayoffMatrix& payoff, const MixedStrategy& row_mix,
                      const MixedStrategy& col_mix);

struct DoubleOracleConfig {
  int oracle_episodes = 500;   // SAC episodes per best-response call
  int episodes_per_cell = 100;
  int max_iterations = 20;
  // Best-response gain below which a policy is not added. Negative means
  // automatic: max(0.01 * |value|, 2 * the gain estimates' standard error).
  double gain_tolerance = -1.0;
  SacHyper sac;
};

struct DoubleOracleIteration {
  int iteration = 0;
  double value = 0.0;
  double defender_gain = 0.0;
  double attacker_gain = 0.0;
  double gain_tolerance = 0.0;  // the threshold actually applied
  int defender_set_size = 0;    // sizes of the restricted game just solved
  int attacker_set_size = 0;
  double wall_seconds = 0.0;
};

struct DoubleOracleState {
  std::vector<DefenderPolicyPtr> defender_set;
  std::vector<AttackerPolicyPtr> attacker_set;
  PayoffMatrix payoff;
  MixedStrategy defender_mix;
  MixedStrategy attacker_mix;
  double value = 0.0;
  int iteration = 0;
  bool converged = false;  // terminated because both gains fell below tolerance
  std::vector<DoubleOracleIteration> history;
};

// Double-oracle loop: estimate missing payoff cells, solve the restricted
// game, train one best response per player against the current equilibrium
// mixes, and add any response whose gain exceeds the tolerance. Terminates
// when neither player improves or after max_iterations. Payoff cells are
// estimated once and reused forever. A scenario whose attacker cannot afford
// any attack short-circuits to defender value 0 with an empty attacker set.
DoubleOracleState double_oracle(const ScenarioSpec& spec, DefenderPolicyPtr initial_defender,
                                AttackerPolicyPtr initial_attacker,
                                const DoubleOracleConfig& config, RngStream& rng);

}  // namespace sacap
