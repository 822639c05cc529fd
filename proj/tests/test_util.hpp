#pragma once

// Shared helpers for the test suites: tiny scenario builders, hand-set
// networks, and finite-difference probes for the SAC losses.

#include <cmath>
#include <functional>
#include <vector>

#include "sacap/nn.hpp"
#include "sacap/sac.hpp"
#include "sacap/scenario.hpp"

namespace test_util {

inline sacap::AlertTypeSpec alert_type(int id, double cost, double rate) {
  sacap::AlertTypeSpec t;
  t.id = id;
  t.investigation_cost = cost;
  t.false_alarm_rate = rate;
  t.label = "t" + std::to_string(id);
  return t;
}

inline sacap::AttackSpec attack(int id, double cost, double loss, std::vector<double> means) {
  sacap::AttackSpec a;
  a.id = id;
  a.execution_cost = cost;
  a.miss_loss = loss;
  a.alert_means = std::move(means);
  return a;
}

// Single alert type, single always-affordable attack; every defender policy
// that spends its budget detects the attack when B covers all alerts.
inline sacap::ScenarioSpec one_type_scenario(double defense_budget, double attack_mean,
                                             double loss, int horizon) {
  sacap::ScenarioSpec spec;
  spec.alert_types = {alert_type(0, 1.0, 0.0)};
  spec.attacks = {attack(0, 1.0, loss, {attack_mean})};
  spec.defense_budget = defense_budget;
  spec.attack_budget = 1.0;
  spec.horizon = horizon;
  spec.discount = 0.95;
  spec.seed = 7;
  return spec;
}

// Zeroes every parameter; with all-zero weights the network output equals
// its output-layer bias.
inline void zero_params(sacap::Mlp& net) {
  for (double& p : net.params) p = 0.0;
}

inline void set_output_bias(sacap::Mlp& net, int output_index, double value) {
  const int layers = net.num_layers();
  const int in = net.dims[layers - 1];
  const int out = net.dims[layers];
  const std::size_t offset = net.layer_offset(layers - 1) + static_cast<std::size_t>(out) * in;
  net.params[offset + static_cast<std::size_t>(output_index)] = value;
}

// Central finite differences of `loss_of_params` around `params`.
inline double fd_gradient_worst_error(std::vector<double>& params,
                                      const std::vector<double>& analytic,
                                      const std::function<double()>& loss_of_params,
                                      double step = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double up = loss_of_params();
    params[i] = saved - step;
    const double down = loss_of_params();
    params[i] = saved;
    const double fd = (up - down) / (2.0 * step);
    const double a = analytic[i];
    const double rel = std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-6});
    worst = std::max(worst, rel);
  }
  return worst;
}

struct SacLossFdErrors {
  double critic = 0.0;
  double value = 0.0;
  double actor = 0.0;
};

// Builds a random small agent and batch, then probes all three losses
// against central finite differences (noise held fixed).
inline SacLossFdErrors sac_loss_fd_errors(std::uint64_t seed) {
  using namespace sacap;
  SacHyper hyper;
  hyper.hidden = {8, 8};
  RngStream rng(seed);
  RngStream agent_rng = rng.derive(0);
  const int obs_dim = 3;
  const int act_dim = 2;
  SacAgent agent = SacAgent::create(obs_dim, act_dim, hyper, agent_rng);

  RngStream data_rng = rng.derive(1);
  std::vector<Transition> storage;
  for (int i = 0; i < 5; ++i) {
    Transition tr;
    tr.observation.resize(obs_dim);
    tr.next_observation.resize(obs_dim);
    tr.action_scores.resize(act_dim);
    for (double& x : tr.observation) x = data_rng.uniform(-1.0, 1.0);
    for (double& x : tr.next_observation) x = data_rng.uniform(-1.0, 1.0);
    for (double& x : tr.action_scores) x = data_rng.uniform();
    tr.reward = data_rng.uniform(-1.0, 1.0);
    tr.terminal = i == 4;
    storage.push_back(std::move(tr));
  }
  SacBatch batch;
  for (const Transition& tr : storage) batch.push_back(&tr);

  std::vector<std::vector<double>> noise(batch.size(), std::vector<double>(act_dim));
  RngStream noise_rng = rng.derive(2);
  for (auto& row : noise) {
    for (double& x : row) x = noise_rng.normal();
  }

  SacLossFdErrors errors;

  const CriticLossResult critics = critic_loss(agent, batch);
  errors.critic = fd_gradient_worst_error(
      agent.critic1.params, critics.grad1,
      [&agent, &batch]() { return critic_loss(agent, batch).loss1; });
  errors.critic = std::max(
      errors.critic,
      fd_gradient_worst_error(agent.critic2.params, critics.grad2,
                              [&agent, &batch]() { return critic_loss(agent, batch).loss2; }));

  const ValueLossResult value = value_loss_with_noise(agent, batch, noise);
  errors.value = fd_gradient_worst_error(
      agent.value.params, value.grad,
      [&agent, &batch, &noise]() { return value_loss_with_noise(agent, batch, noise).loss; });

  const ActorLossResult actor = actor_loss_with_noise(agent, batch, noise);
  errors.actor = fd_gradient_worst_error(
      agent.actor.params, actor.grad,
      [&agent, &batch, &noise]() { return actor_loss_with_noise(agent, batch, noise).loss; });

  return errors;
}

}  // namespace test_util
