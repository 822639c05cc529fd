#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sacap/equilibrium.hpp"
#include "sacap/error.hpp"
#include "sacap/harness.hpp"

#include "test_util.hpp"

using namespace sacap;

namespace {

PayoffMatrix matrix(int rows, int cols, std::vector<double> values) {
  PayoffMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.values = std::move(values);
  m.standard_errors.assign(m.values.size(), 0.0);
  m.episodes_per_cell = 1;
  return m;
}

class AlwaysAttackPolicy final : public AttackerPolicy {
 public:
  AttackerAction act(const AttackerObservation&, const ScenarioSpec& spec,
                     RngStream&) const override {
    return project_attacker_action(std::vector<double>(spec.attacks.size(), 1.0), spec);
  }
  std::string kind() const override { return "always"; }
};

class InvestigateAllPolicy final : public DefenderPolicy {
 public:
  DefenderAction act(const DefenderObservation& obs, const ScenarioSpec& spec,
                     RngStream&) const override {
    return project_defender_action(std::vector<double>(spec.alert_types.size(), 1.0), obs, spec);
  }
  std::string kind() const override { return "all"; }
};

void check_equilibrium_condition(const PayoffMatrix& payoff, const MsneSolution& solution) {
  // The mixed strategy guarantees at least the value against every opponent
  // pure strategy (and symmetrically for the column player).
  for (int j = 0; j < payoff.cols; ++j) {
    CHECK(expected_utility_mixed(payoff, solution.row_mix, j) >= solution.value - 1e-6);
  }
  for (int i = 0; i < payoff.rows; ++i) {
    double u = 0.0;
    for (int j = 0; j < payoff.cols; ++j) {
      u += solution.col_mix.probabilities[static_cast<std::size_t>(j)] * payoff.at(i, j);
    }
    CHECK(u <= solution.value + 1e-6);
  }
}

}  // namespace

TEST_CASE("matching pennies solves to the uniform mix and value zero") {
  const PayoffMatrix pennies = matrix(2, 2, {1, -1, -1, 1});
  const MsneSolution solution = solve_msne_lp(pennies);
  CHECK(solution.value == doctest::Approx(0.0).epsilon(1e-9));
  for (double p : solution.row_mix.probabilities) CHECK(p == doctest::Approx(0.5).epsilon(1e-9));
  for (double p : solution.col_mix.probabilities) CHECK(p == doctest::Approx(0.5).epsilon(1e-9));
  check_equilibrium_condition(pennies, solution);
}

TEST_CASE("rock paper scissors solves to thirds") {
  const PayoffMatrix rps = matrix(3, 3, {0, -1, 1, 1, 0, -1, -1, 1, 0});
  const MsneSolution solution = solve_msne_lp(rps);
  CHECK(solution.value == doctest::Approx(0.0).epsilon(1e-9));
  for (double p : solution.row_mix.probabilities) {
    CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  }
  for (double p : solution.col_mix.probabilities) {
    CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  }
  check_equilibrium_condition(rps, solution);
}

TEST_CASE("the 2x2 indifference example") {
  // [[3,1],[0,2]]: indifference equations 3p = 2-p and 1+2q = 2-2q give
  // row (1/2, 1/2), col (1/4, 3/4), value 1.5.
  const PayoffMatrix game = matrix(2, 2, {3, 1, 0, 2});
  const MsneSolution solution = solve_msne_lp(game);
  CHECK(solution.value == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(solution.row_mix.probabilities[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(solution.col_mix.probabilities[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(solution.col_mix.probabilities[1] == doctest::Approx(0.75).epsilon(1e-9));
  check_equilibrium_condition(game, solution);
}

TEST_CASE("degenerate shapes and bad input") {
  const MsneSolution single = solve_msne_lp(matrix(1, 1, {-4.0}));
  CHECK(single.value == doctest::Approx(-4.0).epsilon(1e-9));
  CHECK(single.row_mix.probabilities == std::vector<double>{1.0});

  const MsneSolution wide = solve_msne_lp(matrix(1, 3, {2, 5, 1}));
  CHECK(wide.value == doctest::Approx(1.0).epsilon(1e-9));  // column player picks 1

  const MsneSolution tall = solve_msne_lp(matrix(3, 1, {2, 5, 1}));
  CHECK(tall.value == doctest::Approx(5.0).epsilon(1e-9));  // row player picks 5

  CHECK_THROWS_AS(solve_msne_lp(matrix(0, 0, {})), Error);
  PayoffMatrix bad = matrix(1, 1, {std::nan("")});
  CHECK_THROWS_AS(solve_msne_lp(bad), Error);
}

TEST_CASE("random matrices satisfy the equilibrium condition and duality") {
  RngStream rng(314);
  for (int trial = 0; trial < 100; ++trial) {
    PayoffMatrix game = matrix(5, 5, {});
    game.values.resize(25);
    for (double& v : game.values) v = rng.uniform(-10.0, 10.0);
    game.standard_errors.assign(25, 0.0);
    // solve_msne_lp verifies the row/column duality gap internally.
    const MsneSolution solution = solve_msne_lp(game);
    check_equilibrium_condition(game, solution);
    CHECK(exploitability(game, solution.row_mix, solution.col_mix) <= 1e-6);
  }
}

TEST_CASE("restricted-game value is monotone under set growth") {
  // Adding a row (defender policy) never decreases the value; adding a
  // column (attacker policy) never increases it.
  RngStream rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    PayoffMatrix game = matrix(3, 3, {});
    game.values.resize(9);
    for (double& v : game.values) v = rng.uniform(-5.0, 5.0);
    game.standard_errors.assign(9, 0.0);
    const double value = solve_msne_lp(game).value;

    PayoffMatrix with_row = game;
    for (int j = 0; j < 3; ++j) with_row.values.push_back(rng.uniform(-5.0, 5.0));
    with_row.standard_errors.resize(12, 0.0);
    with_row.rows = 4;
    CHECK(solve_msne_lp(with_row).value >= value - 1e-9);

    PayoffMatrix with_col = game;
    with_col.cols = 4;
    std::vector<double> values;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) values.push_back(game.at(i, j));
      values.push_back(rng.uniform(-5.0, 5.0));
    }
    with_col.values = values;
    with_col.standard_errors.assign(12, 0.0);
    CHECK(solve_msne_lp(with_col).value <= value + 1e-9);
  }
}

TEST_CASE("expected utility for pure and mixed rows") {
  const PayoffMatrix game = matrix(2, 2, {3, 1, 0, 2});
  CHECK(expected_utility_mixed(game, MixedStrategy{{1.0, 0.0}}, 0) == 3.0);
  CHECK(expected_utility_mixed(game, MixedStrategy{{1.0, 0.0}}, 1) == 1.0);
  CHECK(expected_utility_mixed(game, MixedStrategy{{0.25, 0.75}}, 0) ==
        doctest::Approx(0.75).epsilon(1e-12));

  const PayoffMatrix pennies = matrix(2, 2, {1, -1, -1, 1});
  CHECK(expected_utility_mixed(pennies, MixedStrategy{{0.5, 0.5}}, MixedStrategy{{0.5, 0.5}}) ==
        doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(expected_utility_mixed(game, MixedStrategy{{1.0}}, 0), Error);
  CHECK_THROWS_AS(expected_utility_mixed(game, MixedStrategy{{1.0, 0.0}}, 5), Error);
}

TEST_CASE("exploitability is zero at equilibrium and positive off it") {
  const PayoffMatrix pennies = matrix(2, 2, {1, -1, -1, 1});
  const MixedStrategy half{{0.5, 0.5}};
  CHECK(exploitability(pennies, half, half) == doctest::Approx(0.0).epsilon(1e-12));

  // Pure row 0 vs pure col 0: the row player gains nothing by deviating, the
  // column player gains 2.
  const MixedStrategy row_pure{{1.0, 0.0}};
  const MixedStrategy col_pure{{1.0, 0.0}};
  CHECK(exploitability(pennies, row_pure, col_pure) == doctest::Approx(2.0).epsilon(1e-12));

  RngStream rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    CHECK(exploitability(pennies, MixedStrategy{{a, 1 - a}}, MixedStrategy{{b, 1 - b}}) >= 0.0);
  }
}

TEST_CASE("estimate_utility reproduces the closed-form all-missed value") {
  // B = 0 defender vs always-attack: the single attack (L = 1) executes at
  // periods 0..K-2 and is missed once each at periods 1..K-1. With K = 4 the
  // utility is -(0.95 + 0.95^2 + 0.95^3) exactly, every episode.
  ScenarioSpec spec = test_util::one_type_scenario(0.0, 1.0, 1.0, 4);
  const NullDefenderPolicy defender;
  const AlwaysAttackPolicy attacker;
  RngStream rng(8);
  const auto [mean, se] = estimate_utility(defender, attacker, spec, 50, rng);
  const double expected = -(0.95 + 0.95 * 0.95 + 0.95 * 0.95 * 0.95);
  CHECK(mean == doctest::Approx(expected).epsilon(1e-12));
  CHECK(se == 0.0);  // no randomness touches the reward
}

TEST_CASE("standard error shrinks like one over sqrt episodes") {
  ScenarioSpec spec;
  spec.alert_types = {test_util::alert_type(0, 1.0, 2.0)};
  spec.attacks = {test_util::attack(0, 1.0, 3.0, {1.0})};
  spec.defense_budget = 1.0;
  spec.attack_budget = 1.0;
  spec.horizon = 8;

  const UniformDefenderPolicy defender;
  const AlwaysAttackPolicy attacker;
  RngStream rng_small(21);
  RngStream rng_large(22);
  const auto [mean_small, se_small] = estimate_utility(defender, attacker, spec, 100, rng_small);
  const auto [mean_large, se_large] = estimate_utility(defender, attacker, spec, 400, rng_large);
  CHECK(se_small > 0.0);
  const double ratio = se_large / se_small;
  CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));  // within 20%
}

TEST_CASE("run_episode fills a trace when asked") {
  ScenarioSpec spec = test_util::one_type_scenario(0.0, 1.0, 1.0, 4);
  const NullDefenderPolicy defender;
  const AlwaysAttackPolicy attacker;
  RngStream rng(8);
  std::vector<TraceRow> trace;
  run_episode(defender, attacker, spec, rng, &trace);
  REQUIRE(trace.size() == 4);
  CHECK(trace[0].period == 0);
  CHECK(trace[1].reward == -1.0);  // first miss happens at period 1
  CHECK(trace[3].selection == std::vector<std::uint8_t>{1});
}

TEST_CASE("double oracle on a degenerate attacker short-circuits") {
  ScenarioSpec spec = test_util::one_type_scenario(2.0, 1.0, 1.0, 4);
  spec.attack_budget = 0.25;  // the attack costs 1
  DoubleOracleConfig config;
  config.oracle_episodes = 1;
  config.episodes_per_cell = 1;
  RngStream rng(3);
  const DoubleOracleState state =
      double_oracle(spec, std::make_shared<RandomScoresDefenderPolicy>(),
                    std::make_shared<RandomScoresAttackerPolicy>(), config, rng);
  CHECK(state.value == 0.0);
  CHECK(state.attacker_set.empty());
  CHECK(state.attacker_mix.probabilities.empty());
  CHECK(state.defender_mix.probabilities == std::vector<double>{1.0});
  CHECK(state.converged);
}

TEST_CASE("double oracle structure on a tiny game") {
  ScenarioSpec spec;
  spec.alert_types = {test_util::alert_type(0, 1.0, 0.5), test_util::alert_type(1, 1.0, 0.5)};
  spec.attacks = {test_util::attack(0, 1.0, 4.0, {2.0, 0.0}),
                  test_util::attack(1, 1.0, 2.0, {0.0, 2.0})};
  spec.defense_budget = 1.0;
  spec.attack_budget = 1.0;
  spec.horizon = 4;
  spec.discount = 0.95;

  DoubleOracleConfig config;
  config.oracle_episodes = 4;
  config.episodes_per_cell = 8;
  config.max_iterations = 1;
  config.sac.hidden = {8};
  config.sac.batch_size = 8;

  SUBCASE("a single iteration runs exactly one oracle round") {
    RngStream rng(17);
    const DoubleOracleState state =
        double_oracle(spec, std::make_shared<RandomScoresDefenderPolicy>(),
                      std::make_shared<RandomScoresAttackerPolicy>(), config, rng);
    CHECK(state.iteration == 1);
    CHECK(state.history.size() == 1);
    CHECK(state.defender_set.size() == 1);  // responses are not added on the last round
    CHECK(state.attacker_set.size() == 1);
    CHECK(state.payoff.rows == 1);
    CHECK(state.payoff.cols == 1);
  }
  SUBCASE("sets grow by at most one per player per iteration") {
    config.max_iterations = 3;
    config.gain_tolerance = -1.0;
    RngStream rng(18);
    const DoubleOracleState state =
        double_oracle(spec, std::make_shared<RandomScoresDefenderPolicy>(),
                      std::make_shared<RandomScoresAttackerPolicy>(), config, rng);
    CHECK(state.iteration <= 3);
    CHECK(state.defender_set.size() <= 1 + 2u);
    CHECK(state.attacker_set.size() <= 1 + 2u);
    CHECK(state.payoff.rows == static_cast<int>(state.defender_set.size()));
    CHECK(state.payoff.cols == static_cast<int>(state.attacker_set.size()));
    CHECK(state.defender_mix.probabilities.size() == state.defender_set.size());
    CHECK(state.attacker_mix.probabilities.size() == state.attacker_set.size());
    for (const DoubleOracleIteration& it : state.history) {
      CHECK(it.defender_set_size <= static_cast<int>(state.defender_set.size()));
      CHECK(it.attacker_set_size <= static_cast<int>(state.attacker_set.size()));
    }
  }
  SUBCASE("runs are reproducible from the seed") {
    config.max_iterations = 2;
    RngStream rng_a(19);
    RngStream rng_b(19);
    const DoubleOracleState a =
        double_oracle(spec, std::make_shared<RandomScoresDefenderPolicy>(),
                      std::make_shared<RandomScoresAttackerPolicy>(), config, rng_a);
    const DoubleOracleState b =
        double_oracle(spec, std::make_shared<RandomScoresDefenderPolicy>(),
                      std::make_shared<RandomScoresAttackerPolicy>(), config, rng_b);
    CHECK(a.payoff.values == b.payoff.values);
    CHECK(a.value == b.value);
    CHECK(a.defender_mix.probabilities == b.defender_mix.probabilities);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      CHECK(a.history[i].value == b.history[i].value);
      CHECK(a.history[i].defender_gain == b.history[i].defender_gain);
      CHECK(a.history[i].attacker_gain == b.history[i].attacker_gain);
    }
  }
}

TEST_CASE("history values reconstruct from the cached payoff and move monotonically") {
  // Because cells are estimated once and reused, the restricted game at
  // iteration i is exactly the leading submatrix of the final payoff. Its
  // value must match the recorded history, and the value must not decrease
  // when only rows were added nor increase when only columns were added.
  ScenarioSpec spec;
  spec.alert_types = {test_util::alert_type(0, 1.0, 0.4), test_util::alert_type(1, 1.0, 0.4)};
  spec.attacks = {test_util::attack(0, 1.0, 4.0, {3.0, 0.0}),
                  test_util::attack(1, 1.0, 2.0, {0.0, 3.0})};
  spec.defense_budget = 1.0;
  spec.attack_budget = 1.0;
  spec.horizon = 5;

  DoubleOracleConfig config;
  config.oracle_episodes = 6;
  config.episodes_per_cell = 12;
  config.max_iterations = 4;
  config.gain_tolerance = 0.0;  // add every strictly improving response
  config.sac.hidden = {8};
  config.sac.batch_size = 8;

  RngStream rng(41);
  const DoubleOracleState state =
      double_oracle(spec, std::make_shared<RandomScoresDefenderPolicy>(),
                    std::make_shared<RandomScoresAttackerPolicy>(), config, rng);
  REQUIRE(state.history.size() >= 2);

  const auto leading_submatrix = [&state](int rows, int cols) {
    PayoffMatrix sub;
    sub.rows = rows;
    sub.cols = cols;
    sub.episodes_per_cell = state.payoff.episodes_per_cell;
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        sub.values.push_back(state.payoff.at(i, j));
        sub.standard_errors.push_back(state.payoff.se_at(i, j));
      }
    }
    return sub;
  };

  for (std::size_t i = 0; i < state.history.size(); ++i) {
    const DoubleOracleIteration& it = state.history[i];
    const PayoffMatrix sub = leading_submatrix(it.defender_set_size, it.attacker_set_size);
    CHECK(solve_msne_lp(sub).value == doctest::Approx(it.value).epsilon(1e-9));
    if (i + 1 < state.history.size()) {
      const DoubleOracleIteration& next = state.history[i + 1];
      // Intermediate game: rows grown, columns as before.
      const double rows_grown =
          solve_msne_lp(leading_submatrix(next.defender_set_size, it.attacker_set_size)).value;
      CHECK(rows_grown >= it.value - 1e-9);
      CHECK(next.value <= rows_grown + 1e-9);
    }
  }
}

TEST_CASE("double oracle converges when one defender policy dominates") {
  // Single alert type with a budget that covers everything: every projected
  // defender action investigates all alerts, so all policies tie and neither
  // oracle can improve. Verified by enumeration: with one type the greedy
  // projection ignores scores entirely. The attack mean is high enough that
  // a zero-alert draw (auto-miss) is essentially impossible.
  ScenarioSpec spec = test_util::one_type_scenario(60.0, 20.0, 2.0, 4);
  {
    RngStream rng(0);
    SystemState state = reset(spec, rng);
    state.uninvestigated[0] = 7;
    const DefenderObservation obs = observe_defender(state);
    for (double score : {0.0, 0.3, 0.9}) {
      CHECK(project_defender_action({score}, obs, spec).allocation ==
            std::vector<long long>{7});
    }
  }

  DoubleOracleConfig config;
  config.oracle_episodes = 10;
  config.episodes_per_cell = 20;
  config.max_iterations = 6;
  config.sac.hidden = {8};
  config.sac.batch_size = 8;
  RngStream rng(23);
  const DoubleOracleState state =
      double_oracle(spec, std::make_shared<InvestigateAllPolicy>(),
                    std::make_shared<RandomScoresAttackerPolicy>(), config, rng);
  CHECK(state.converged);
  const double tolerance = state.history.back().gain_tolerance;
  CHECK(exploitability(state.payoff, state.defender_mix, state.attacker_mix) <= tolerance);
  // The dominant behavior detects everything: restricted value 0.
  CHECK(state.value == doctest::Approx(0.0).epsilon(1e-9));
}
