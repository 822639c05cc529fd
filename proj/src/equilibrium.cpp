#include "sacap/equilibrium.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "sacap/error.hpp"

namespace sacap {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kDualityTol = 1e-6;

// Primal simplex (Bland's rule) for: max 1.q  s.t.  A q <= 1, q >= 0, with
// every entry of A strictly positive. Returns the optimal objective and q.
// For a positively shifted game matrix A this LP encodes the normalized
// maximin program: the optimum is 1/value and q is the column player's mix
// scaled by the value.
std::pair<double, std::vector<double>> simplex_unit_lp(const std::vector<double>& a, int m,
                                                       int n) {
  const int cols = n + m + 1;  // structural vars, slacks, rhs
  std::vector<double> tab(static_cast<std::size_t>(m + 1) * cols, 0.0);
  const auto at = [&tab, cols](int r, int c) -> double& {
    return tab[static_cast<std::size_t>(r) * cols + c];
  };

  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) at(i, j) = a[static_cast<std::size_t>(i) * n + j];
    at(i, n + i) = 1.0;
    at(i, cols - 1) = 1.0;
  }
  for (int j = 0; j < n; ++j) at(m, j) = -1.0;  // objective row: max sum q

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  const int max_pivots = 50 * (m + n) * (m + n) + 1000;
  for (int pivot_count = 0;; ++pivot_count) {
    if (pivot_count > max_pivots) throw internal_error("simplex failed to terminate");

    // Bland: first column with a negative reduced cost.
    int enter = -1;
    for (int j = 0; j < n + m; ++j) {
      if (at(m, j) < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;  // optimal

    // Ratio test; ties to the smallest basis index (Bland).
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      const double coeff = at(i, enter);
      if (coeff > kPivotTol) {
        const double ratio = at(i, cols - 1) / coeff;
        if (ratio < best_ratio - kPivotTol ||
            (ratio < best_ratio + kPivotTol && (leave < 0 || basis[i] < basis[leave]))) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw internal_error("simplex: unbounded program");

    // Pivot.
    const double pivot = at(leave, enter);
    for (int c = 0; c < cols; ++c) at(leave, c) /= pivot;
    for (int r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double factor = at(r, enter);
      if (factor == 0.0) continue;
      for (int c = 0; c < cols; ++c) at(r, c) -= factor * at(leave, c);
    }
    basis[leave] = enter;
  }

  std::vector<double> q(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) q[static_cast<std::size_t>(basis[i])] = at(i, cols - 1);
  }
  return {at(m, cols - 1), q};
}

// Game value and the column player's optimal mix for the matrix (row player
// maximizes). Implements shift-positive + normalize on top of the simplex.
std::pair<double, MixedStrategy> value_and_column_mix(const std::vector<double>& values, int rows,
                                                      int cols) {
  double lowest = std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (!std::isfinite(v)) throw validation_error("payoff entries must be finite");
    lowest = std::min(lowest, v);
  }
  const double shift = 1.0 - lowest;
  std::vector<double> shifted(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) shifted[i] = values[i] + shift;

  const auto [objective, q] = simplex_unit_lp(shifted, rows, cols);
  if (!(objective > 0.0)) throw internal_error("maximin LP produced a nonpositive objective");
  const double shifted_value = 1.0 / objective;

  MixedStrategy mix;
  mix.probabilities.resize(q.size());
  double total = 0.0;
  for (double x : q) total += x;
  for (std::size_t j = 0; j < q.size(); ++j) {
    mix.probabilities[j] = std::max(0.0, q[j] / total);
  }
  // Renormalize away accumulated float noise.
  double sum = 0.0;
  for (double p : mix.probabilities) sum += p;
  for (double& p : mix.probabilities) p /= sum;
  return {shifted_value - shift, mix};
}

std::vector<double> negated_transpose(const PayoffMatrix& payoff) {
  std::vector<double> out(static_cast<std::size_t>(payoff.rows) * payoff.cols);
  for (int i = 0; i < payoff.rows; ++i) {
    for (int j = 0; j < payoff.cols; ++j) {
      out[static_cast<std::size_t>(j) * payoff.rows + i] = -payoff.at(i, j);
    }
  }
  return out;
}

}  // namespace

void PayoffMatrix::validate() const {
  if (rows < 0 || cols < 0) throw validation_error("payoff matrix has negative dimensions");
  const std::size_t expected = static_cast<std::size_t>(rows) * cols;
  if (values.size() != expected || standard_errors.size() != expected) {
    throw validation_error("payoff matrix storage does not match its dimensions");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw validation_error("payoff entries must be finite");
  }
}

double run_episode(const DefenderPolicy& defender, const AttackerPolicy& attacker,
                   const ScenarioSpec& spec, RngStream& rng, std::vector<TraceRow>* trace) {
  RngStream env_rng = rng.derive(0);
  RngStream def_rng = rng.derive(1);
  RngStream att_rng = rng.derive(2);

  SystemState state = reset(spec, env_rng);
  double total = 0.0;
  double weight = 1.0;
  for (int k = 0; k < spec.horizon; ++k) {
    const DefenderObservation d_obs = observe_defender(state);
    const AttackerObservation a_obs = observe_attacker(state);
    const DefenderAction d_act = defender.act(d_obs, spec, def_rng);
    const AttackerAction a_act = attacker.act(a_obs, spec, att_rng);
    const StepOutcome outcome = step(state, d_act, a_act, spec, env_rng);
    total += weight * outcome.defender_reward;
    weight *= spec.discount;
    if (trace) {
      trace->push_back(TraceRow{state.period, state.uninvestigated, d_act.allocation,
                                a_act.selection, outcome.defender_reward});
    }
    state = outcome.next_state;
  }
  return total;
}

std::pair<double, double> estimate_utility(const DefenderPolicy& defender,
                                           const AttackerPolicy& attacker,
                                           const ScenarioSpec& spec, int episodes,
                                           RngStream& rng) {
  if (episodes < 1) throw validation_error("estimate_utility requires episodes >= 1");
  require_usable(spec);
  std::vector<double> returns(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    RngStream episode_rng = rng.derive(static_cast<std::uint64_t>(e));
    returns[static_cast<std::size_t>(e)] = run_episode(defender, attacker, spec, episode_rng);
  }
  double sum = 0.0;
  bool all_equal = true;
  for (double r : returns) {
    sum += r;
    all_equal = all_equal && r == returns.front();
  }
  const double mean = sum / episodes;
  double se = 0.0;
  if (episodes > 1 && !all_equal) {
    double squared_deviation = 0.0;
    for (double r : returns) squared_deviation += (r - mean) * (r - mean);
    se = std::sqrt(squared_deviation / (episodes - 1) / episodes);
  }
  return {mean, se};
}

double expected_utility_mixed(const PayoffMatrix& payoff, const MixedStrategy& row_mix, int col) {
  payoff.validate();
  row_mix.validate();
  if (static_cast<int>(row_mix.probabilities.size()) != payoff.rows) {
    throw validation_error("row mix length does not match the payoff matrix");
  }
  if (col < 0 || col >= payoff.cols) throw validation_error("column index out of range");
  double total = 0.0;
  for (int i = 0; i < payoff.rows; ++i) total += row_mix.probabilities[i] * payoff.at(i, col);
  return total;
}

double expected_utility_mixed(const PayoffMatrix& payoff, const MixedStrategy& row_mix,
                              const MixedStrategy& col_mix) {
  payoff.validate();
  row_mix.validate();
  col_mix.validate();
  if (static_cast<int>(row_mix.probabilities.size()) != payoff.rows ||
      static_cast<int>(col_mix.probabilities.size()) != payoff.cols) {
    throw validation_error("mix lengths do not match the payoff matrix");
  }
  double total = 0.0;
  for (int i = 0; i < payoff.rows; ++i) {
    double row_dot = 0.0;
    for (int j = 0; j < payoff.cols; ++j) row_dot += col_mix.probabilities[j] * payoff.at(i, j);
    total += row_mix.probabilities[i] * row_dot;
  }
  return total;
}

MsneSolution solve_msne_lp(const PayoffMatrix& payoff) {
  payoff.validate();
  if (payoff.rows == 0 || payoff.cols == 0) {
    throw validation_error("payoff matrix must be nonempty");
  }

  // Column player's optimal mix comes from the LP on the values; the row
  // player's from the LP on the negated transpose (where it is the column
  // player). The two game values must cancel.
  const auto [value, col_mix] = value_and_column_mix(payoff.values, payoff.rows, payoff.cols);
  const auto [neg_value, row_mix] =
      value_and_column_mix(negated_transpose(payoff), payoff.cols, payoff.rows);

  if (std::fabs(value + neg_value) > kDualityTol) {
    throw internal_error("maximin LP duality gap " + std::to_string(value + neg_value));
  }

  MsneSolution solution;
  solution.row_mix = row_mix;
  solution.col_mix = col_mix;
  solution.value = value;
  return solution;
}

double exploitability(const PayoffMatrix& payoff, const MixedStrategy& row_mix,
                      const MixedStrategy& col_mix) {
  payoff.validate();
  row_mix.validate();
  col_mix.validate();
  if (static_cast<int>(row_mix.probabilities.size()) != payoff.rows ||
      static_cast<int>(col_mix.probabilities.size()) != payoff.cols) {
    throw validation_error("mix lengths do not match the payoff matrix");
  }

  // Row player's best response against col_mix.
  double best_row = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < payoff.rows; ++i) {
    double u = 0.0;
    for (int j = 0; j < payoff.cols; ++j) u += col_mix.probabilities[j] * payoff.at(i, j);
    best_row = std::max(best_row, u);
  }
  // Column player's best response (minimizing row utility) against row_mix.
  double worst_col = std::numeric_limits<double>::infinity();
  for (int j = 0; j < payoff.cols; ++j) {
    double u = 0.0;
    for (int i = 0; i < payoff.rows; ++i) u += row_mix.probabilities[i] * payoff.at(i, j);
    worst_col = std::min(worst_col, u);
  }
  return std::max(0.0, best_row - worst_col);
}

namespace {

struct CellEstimator {
  RngStream root;
  std::uint64_t counter = 0;
  int episodes = 0;

  std::pair<double, double> estimate(const DefenderPolicy& def, const AttackerPolicy& att,
                                     const ScenarioSpec& spec) {
    RngStream cell_rng = root.derive(counter++);
    return estimate_utility(def, att, spec, episodes, cell_rng);
  }
};

void append_row(PayoffMatrix& payoff, const std::vector<double>& values,
                const std::vector<double>& ses) {
  payoff.values.insert(payoff.values.end(), values.begin(), values.end());
  payoff.standard_errors.insert(payoff.standard_errors.end(), ses.begin(), ses.end());
  payoff.rows += 1;
}

void append_col(PayoffMatrix& payoff, const std::vector<double>& values,
                const std::vector<double>& ses) {
  // Insert one entry at the end of each row, back to front.
  for (int i = payoff.rows - 1; i >= 0; --i) {
    const auto pos = static_cast<std::ptrdiff_t>(i + 1) * payoff.cols;
    payoff.values.insert(payoff.values.begin() + pos, values[static_cast<std::size_t>(i)]);
    payoff.standard_errors.insert(payoff.standard_errors.begin() + pos,
                                  ses[static_cast<std::size_t>(i)]);
  }
  payoff.cols += 1;
}

}  // namespace

DoubleOracleState double_oracle(const ScenarioSpec& spec, DefenderPolicyPtr initial_defender,
                                AttackerPolicyPtr initial_attacker,
                                const DoubleOracleConfig& config, RngStream& rng) {
  require_usable(spec);
  if (!initial_defender || !initial_attacker) {
    throw validation_error("double_oracle requires one initial policy per player");
  }
  if (config.max_iterations < 1) throw validation_error("max_iterations must be >= 1");
  if (config.episodes_per_cell < 1) throw validation_error("episodes_per_cell must be >= 1");

  DoubleOracleState state;
  state.defender_set.push_back(std::move(initial_defender));

  if (spec.attacker_degenerate()) {
    // No attack is affordable: the game value is 0 and the attacker plays
    // nothing. Leave the attacker set empty.
    state.payoff.rows = 1;
    state.payoff.cols = 0;
    state.payoff.episodes_per_cell = config.episodes_per_cell;
    state.defender_mix.probabilities = {1.0};
    state.value = 0.0;
    state.converged = true;
    return state;
  }

  state.attacker_set.push_back(std::move(initial_attacker));
  state.payoff.episodes_per_cell = config.episodes_per_cell;

  CellEstimator cells{rng.derive(100), 0, config.episodes_per_cell};
  RngStream oracle_rng = rng.derive(200);

  const SacHyper& sac_hyper = config.sac;

  while (true) {
    const auto started = std::chrono::steady_clock::now();
    state.iteration += 1;

    // 1. Fill missing payoff cells. Rows/columns only ever grow, so the
    // missing region is exactly the cells beyond the stored rectangle; the
    // stored cells are never re-estimated.
    {
      PayoffMatrix filled;
      filled.rows = static_cast<int>(state.defender_set.size());
      filled.cols = static_cast<int>(state.attacker_set.size());
      filled.episodes_per_cell = config.episodes_per_cell;
      filled.values.resize(static_cast<std::size_t>(filled.rows) * filled.cols);
      filled.standard_errors.resize(filled.values.size());
      for (int i = 0; i < filled.rows; ++i) {
        for (int j = 0; j < filled.cols; ++j) {
          const std::size_t dst = static_cast<std::size_t>(i) * filled.cols + j;
          if (i < state.payoff.rows && j < state.payoff.cols) {
            filled.values[dst] = state.payoff.at(i, j);
            filled.standard_errors[dst] = state.payoff.se_at(i, j);
          } else {
            const auto [mean, se] =
                cells.estimate(*state.defender_set[static_cast<std::size_t>(i)],
                               *state.attacker_set[static_cast<std::size_t>(j)], spec);
            filled.values[dst] = mean;
            filled.standard_errors[dst] = se;
          }
        }
      }
      state.payoff = std::move(filled);
    }

    // 2. Restricted-game equilibrium.
    const MsneSolution solution = solve_msne_lp(state.payoff);
    state.defender_mix = solution.row_mix;
    state.attacker_mix = solution.col_mix;
    state.value = solution.value;

    // 3. One best response per player against the current equilibrium mix.
    RngStream att_oracle = oracle_rng.derive(2 * static_cast<std::uint64_t>(state.iteration));
    RngStream def_oracle = oracle_rng.derive(2 * static_cast<std::uint64_t>(state.iteration) + 1);
    AttackerPolicyPtr new_attacker = train_attacker_best_response(
        state.defender_set, state.defender_mix, spec, config.oracle_episodes, att_oracle,
        sac_hyper);
    DefenderPolicyPtr new_defender = train_defender_best_response(
        state.attacker_set, state.attacker_mix, spec, config.oracle_episodes, def_oracle,
        sac_hyper);

    // 4. Gains over the equilibrium value.
    std::vector<double> new_row_values, new_row_ses;
    for (const AttackerPolicyPtr& att : state.attacker_set) {
      const auto [mean, se] = cells.estimate(*new_defender, *att, spec);
      new_row_values.push_back(mean);
      new_row_ses.push_back(se);
    }
    std::vector<double> new_col_values, new_col_ses;
    for (const DefenderPolicyPtr& def : state.defender_set) {
      const auto [mean, se] = cells.estimate(*def, *new_attacker, spec);
      new_col_values.push_back(mean);
      new_col_ses.push_back(se);
    }

    double def_response_utility = 0.0, def_response_var = 0.0;
    for (std::size_t j = 0; j < new_row_values.size(); ++j) {
      const double p = state.attacker_mix.probabilities[j];
      def_response_utility += p * new_row_values[j];
      def_response_var += p * p * new_row_ses[j] * new_row_ses[j];
    }
    double att_response_utility = 0.0, att_response_var = 0.0;
    for (std::size_t i = 0; i < new_col_values.size(); ++i) {
      const double p = state.defender_mix.probabilities[i];
      att_response_utility += p * new_col_values[i];
      att_response_var += p * p * new_col_ses[i] * new_col_ses[i];
    }
    const double defender_gain = def_response_utility - state.value;
    const double attacker_gain = state.value - att_response_utility;

    double tolerance = config.gain_tolerance;
    if (tolerance < 0.0) {
      const double gain_se =
          std::sqrt(std::max(def_response_var, att_response_var));
      tolerance = std::max(0.01 * std::fabs(state.value), 2.0 * gain_se);
    }

    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started);
    state.history.push_back(DoubleOracleIteration{
        state.iteration, state.value, defender_gain, attacker_gain, tolerance,
        static_cast<int>(state.defender_set.size()), static_cast<int>(state.attacker_set.size()),
        elapsed.count()});

    if (defender_gain <= tolerance && attacker_gain <= tolerance) {
      state.converged = true;
      break;
    }
    if (state.iteration >= config.max_iterations) {
      // Out of iterations: keep the solved restricted game (mixes must stay
      // consistent with the sets), discarding the last responses.
      break;
    }

    // 5. Grow the sets with every profitable response.
    const bool add_defender = defender_gain > tolerance;
    const bool add_attacker = attacker_gain > tolerance;
    if (add_defender) {
      state.defender_set.push_back(new_defender);
      append_row(state.payoff, new_row_values, new_row_ses);
    }
    if (add_attacker) {
      if (add_defender) {
        // Corner cell: the two fresh policies against each other.
        const auto [mean, se] = cells.estimate(*new_defender, *new_attacker, spec);
        new_col_values.push_back(mean);
        new_col_ses.push_back(se);
      }
      state.attacker_set.push_back(new_attacker);
      append_col(state.payoff, new_col_values, new_col_ses);
    }
  }

  return state;
}

}  // namespace sacap
