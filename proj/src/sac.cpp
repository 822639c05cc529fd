#include "sacap/sac.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>

#include "sacap/error.hpp"

namespace sacap {

namespace {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // 0.5 * ln(2 pi)
constexpr double kLogTwo = 0.69314718055994530942;

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

// log(1 - tanh(u)^2), stable for |u| large.
double log_one_minus_tanh_sq(double u) { return 2.0 * (kLogTwo - u - softplus(-2.0 * u)); }

struct ActorHead {
  std::vector<double> mean;
  std::vector<double> log_std;          // clamped
  std::vector<std::uint8_t> clamped;    // 1 where the clamp was active
};

ActorHead actor_head(const SacAgent& agent, const std::vector<double>& obs) {
  const std::vector<double> out = forward(agent.actor, obs);
  ActorHead head;
  head.mean.assign(out.begin(), out.begin() + agent.act_dim);
  head.log_std.resize(agent.act_dim);
  head.clamped.resize(agent.act_dim);
  for (int d = 0; d < agent.act_dim; ++d) {
    const double raw = out[agent.act_dim + d];
    double clamped = raw;
    if (clamped < agent.hyper.log_std_min) clamped = agent.hyper.log_std_min;
    if (clamped > agent.hyper.log_std_max) clamped = agent.hyper.log_std_max;
    head.log_std[d] = clamped;
    head.clamped[d] = clamped != raw;
  }
  for (double m : head.mean) {
    if (!std::isfinite(m)) throw internal_error("actor produced a non-finite mean");
  }
  return head;
}

void check_batch(const SacBatch& batch) {
  if (batch.empty()) throw validation_error("loss requires a nonempty batch");
}

std::vector<std::vector<double>> draw_noise(const SacBatch& batch, int act_dim, RngStream& rng) {
  std::vector<std::vector<double>> noise(batch.size(), std::vector<double>(act_dim));
  for (auto& row : noise) {
    for (double& x : row) x = rng.normal();
  }
  return noise;
}

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw validation_error("replay capacity must be >= 1");
  slots_.reserve(std::min<std::size_t>(static_cast<std::size_t>(capacity), 4096));
}

void ReplayBuffer::push(Transition t) {
  if (size_ < static_cast<std::size_t>(capacity_)) {
    slots_.push_back(std::move(t));
    ++size_;
  } else {
    slots_[next_] = std::move(t);  // overwrite oldest
  }
  next_ = (next_ + 1) % static_cast<std::size_t>(capacity_);
}

std::vector<const Transition*> ReplayBuffer::sample(int batch_size, RngStream& rng) const {
  if (size_ == 0) throw internal_error("cannot sample from an empty replay buffer");
  std::vector<const Transition*> out(static_cast<std::size_t>(batch_size));
  for (auto& slot : out) {
    slot = &slots_[static_cast<std::size_t>(rng.uniform_int(static_cast<long long>(size_)))];
  }
  return out;
}

SacAgent SacAgent::create(int obs_dim, int act_dim, const SacHyper& hyper, RngStream& rng) {
  if (obs_dim < 1 || act_dim < 1) throw validation_error("agent dims must be >= 1");
  SacAgent agent;
  agent.hyper = hyper;
  agent.obs_dim = obs_dim;
  agent.act_dim = act_dim;

  std::vector<int> actor_dims = {obs_dim};
  std::vector<int> critic_dims = {obs_dim + act_dim};
  std::vector<int> value_dims = {obs_dim};
  for (int h : hyper.hidden) {
    actor_dims.push_back(h);
    critic_dims.push_back(h);
    value_dims.push_back(h);
  }
  actor_dims.push_back(2 * act_dim);  // mean and log_std per action dim
  critic_dims.push_back(1);
  value_dims.push_back(1);

  agent.actor = Mlp::create(actor_dims, rng);
  agent.critic1 = Mlp::create(critic_dims, rng);
  agent.critic2 = Mlp::create(critic_dims, rng);
  agent.value = Mlp::create(value_dims, rng);
  agent.target_value = agent.value;

  agent.actor_opt = AdamState::create(agent.actor.param_count(), hyper.actor_lr);
  agent.critic1_opt = AdamState::create(agent.critic1.param_count(), hyper.critic_lr);
  agent.critic2_opt = AdamState::create(agent.critic2.param_count(), hyper.critic_lr);
  agent.value_opt = AdamState::create(agent.value.param_count(), hyper.value_lr);
  return agent;
}

double squashed_gaussian_log_prob(double mean, double log_std, double u) {
  const double eps = (u - mean) * std::exp(-log_std);
  return -log_std - kHalfLogTwoPi - 0.5 * eps * eps - log_one_minus_tanh_sq(u);
}

SampledAction sample_action(const SacAgent& agent, const std::vector<double>& obs,
                            RngStream& rng) {
  const ActorHead head = actor_head(agent, obs);
  SampledAction out;
  out.scores.resize(agent.act_dim);
  out.log_prob = 0.0;
  for (int d = 0; d < agent.act_dim; ++d) {
    const double std_dev = std::exp(head.log_std[d]);
    const double eps = rng.normal();
    const double u = head.mean[d] + std_dev * eps;
    out.scores[d] = std::tanh(u);
    out.log_prob += -head.log_std[d] - kHalfLogTwoPi - 0.5 * eps * eps;
    out.log_prob -= log_one_minus_tanh_sq(u);
  }
  return out;
}

std::vector<double> scores_to_unit(const std::vector<double>& scores) {
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = 0.5 * (scores[i] + 1.0);
  return out;
}

CriticLossResult critic_loss(const SacAgent& agent, const SacBatch& batch) {
  check_batch(batch);
  CriticLossResult result;
  result.grad1.assign(agent.critic1.param_count(), 0.0);
  result.grad2.assign(agent.critic2.param_count(), 0.0);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  for (const Transition* tr : batch) {
    double target = tr->reward;
    if (!tr->terminal) {
      target += agent.hyper.discount * forward(agent.target_value, tr->next_observation)[0];
    }
    const std::vector<double> critic_in = concat(tr->observation, tr->action_scores);
    const double q1 = forward(agent.critic1, critic_in)[0];
    const double q2 = forward(agent.critic2, critic_in)[0];
    result.loss1 += 0.5 * (target - q1) * (target - q1) * inv_batch;
    result.loss2 += 0.5 * (target - q2) * (target - q2) * inv_batch;
    backward_accumulate(agent.critic1, critic_in, {(q1 - target) * inv_batch}, result.grad1);
    backward_accumulate(agent.critic2, critic_in, {(q2 - target) * inv_batch}, result.grad2);
  }
  return result;
}

ValueLossResult value_loss_with_noise(const SacAgent& agent, const SacBatch& batch,
                                      const std::vector<std::vector<double>>& noise) {
  check_batch(batch);
  if (noise.size() != batch.size()) throw internal_error("noise batch size mismatch");
  ValueLossResult result;
  result.grad.assign(agent.value.param_count(), 0.0);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const Transition* tr = batch[s];
    const ActorHead head = actor_head(agent, tr->observation);
    double log_prob = 0.0;
    std::vector<double> action(agent.act_dim);
    for (int d = 0; d < agent.act_dim; ++d) {
      const double std_dev = std::exp(head.log_std[d]);
      const double u = head.mean[d] + std_dev * noise[s][d];
      const double squashed = std::tanh(u);
      action[d] = 0.5 * (squashed + 1.0);
      log_prob += -head.log_std[d] - kHalfLogTwoPi - 0.5 * noise[s][d] * noise[s][d];
      log_prob -= log_one_minus_tanh_sq(u);
    }
    const std::vector<double> critic_in = concat(tr->observation, action);
    const double q1 = forward(agent.critic1, critic_in)[0];
    const double q2 = forward(agent.critic2, critic_in)[0];
    const double target = std::min(q1, q2) - agent.hyper.entropy_weight * log_prob;
    const double v = forward(agent.value, tr->observation)[0];
    result.loss += 0.5 * (target - v) * (target - v) * inv_batch;
    backward_accumulate(agent.value, tr->observation, {(v - target) * inv_batch}, result.grad);
  }
  return result;
}

ValueLossResult value_loss(const SacAgent& agent, const SacBatch& batch, RngStream& rng) {
  check_batch(batch);
  return value_loss_with_noise(agent, batch, draw_noise(batch, agent.act_dim, rng));
}

ActorLossResult actor_loss_with_noise(const SacAgent& agent, const SacBatch& batch,
                                      const std::vector<std::vector<double>>& noise) {
  check_batch(batch);
  if (noise.size() != batch.size()) throw internal_error("noise batch size mismatch");
  ActorLossResult result;
  result.grad.assign(agent.actor.param_count(), 0.0);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const double beta = agent.hyper.entropy_weight;

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const Transition* tr = batch[s];
    const ActorHead head = actor_head(agent, tr->observation);

    std::vector<double> squashed(agent.act_dim);
    std::vector<double> std_dev(agent.act_dim);
    std::vector<double> action(agent.act_dim);
    double log_prob = 0.0;
    for (int d = 0; d < agent.act_dim; ++d) {
      std_dev[d] = std::exp(head.log_std[d]);
      const double u = head.mean[d] + std_dev[d] * noise[s][d];
      squashed[d] = std::tanh(u);
      action[d] = 0.5 * (squashed[d] + 1.0);
      log_prob += -head.log_std[d] - kHalfLogTwoPi - 0.5 * noise[s][d] * noise[s][d];
      log_prob -= log_one_minus_tanh_sq(u);
    }

    const std::vector<double> critic_in = concat(tr->observation, action);
    const double q1 = forward(agent.critic1, critic_in)[0];
    const double q2 = forward(agent.critic2, critic_in)[0];
    const bool use_first = q1 <= q2;
    const double q_min = use_first ? q1 : q2;
    result.loss += (-q_min + beta * log_prob) * inv_batch;

    // dL/d(action) through the minimal critic; critics are constants here.
    const std::vector<double> critic_input_grad = backward_input_only(
        use_first ? agent.critic1 : agent.critic2, critic_in, {-inv_batch});

    // Assemble the gradient at the actor's output head. For each dim:
    //   u = mean + std * eps, s = tanh(u), a = (s+1)/2
    //   dL/du = dL/da * (1-s^2)/2 + (beta/B) * 2s      (tanh correction)
    //   dL/dmean = dL/du
    //   dL/dlog_std = dL/du * std * eps - beta/B        (Gaussian entropy term)
    // and zero where the log_std clamp was active.
    std::vector<double> head_grad(2 * agent.act_dim, 0.0);
    for (int d = 0; d < agent.act_dim; ++d) {
      const double dl_da = critic_input_grad[agent.obs_dim + d];
      const double one_minus_s2 = 1.0 - squashed[d] * squashed[d];
      const double dl_du =
          dl_da * 0.5 * one_minus_s2 + beta * inv_batch * 2.0 * squashed[d];
      head_grad[d] = dl_du;
      if (!head.clamped[d]) {
        head_grad[agent.act_dim + d] =
            dl_du * std_dev[d] * noise[s][d] - beta * inv_batch;
      }
    }
    backward_accumulate(agent.actor, tr->observation, head_grad, result.grad);
  }
  return result;
}

ActorLossResult actor_loss(const SacAgent& agent, const SacBatch& batch, RngStream& rng) {
  check_batch(batch);
  return actor_loss_with_noise(agent, batch, draw_noise(batch, agent.act_dim, rng));
}

void soft_update(SacAgent& agent) {
  const double tau = agent.hyper.target_smoothing;
  for (std::size_t i = 0; i < agent.value.params.size(); ++i) {
    agent.target_value.params[i] =
        tau * agent.value.params[i] + (1.0 - tau) * agent.target_value.params[i];
  }
}

double SacGradientCheckReport::worst() const {
  return std::max({critic_error, value_error, actor_error});
}

namespace {

double fd_worst_error(std::vector<double>& params, const std::vector<double>& analytic,
                      const std::function<double()>& loss) {
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + kStep;
    const double up = loss();
    params[i] = saved - kStep;
    const double down = loss();
    params[i] = saved;
    const double fd = (up - down) / (2.0 * kStep);
    const double a = analytic[i];
    worst = std::max(worst, std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-6}));
  }
  return worst;
}

}  // namespace

SacGradientCheckReport sac_loss_gradient_check(int trials, RngStream& rng) {
  if (trials < 1) throw validation_error("sac_loss_gradient_check needs trials >= 1");
  SacGradientCheckReport report;
  SacHyper hyper;
  hyper.hidden = {8, 8};
  const int obs_dim = 3;
  const int act_dim = 2;

  for (int trial = 0; trial < trials; ++trial) {
    RngStream trial_rng = rng.derive(static_cast<std::uint64_t>(trial));
    RngStream agent_rng = trial_rng.derive(0);
    SacAgent agent = SacAgent::create(obs_dim, act_dim, hyper, agent_rng);

    RngStream data_rng = trial_rng.derive(1);
    std::vector<Transition> storage(5);
    for (std::size_t i = 0; i < storage.size(); ++i) {
      Transition& tr = storage[i];
      tr.observation.resize(obs_dim);
      tr.next_observation.resize(obs_dim);
      tr.action_scores.resize(act_dim);
      for (double& x : tr.observation) x = data_rng.uniform(-1.0, 1.0);
      for (double& x : tr.next_observation) x = data_rng.uniform(-1.0, 1.0);
      for (double& x : tr.action_scores) x = data_rng.uniform();
      tr.reward = data_rng.uniform(-1.0, 1.0);
      tr.terminal = i + 1 == storage.size();
    }
    SacBatch batch;
    for (const Transition& tr : storage) batch.push_back(&tr);

    std::vector<std::vector<double>> noise(batch.size(), std::vector<double>(act_dim));
    RngStream noise_rng = trial_rng.derive(2);
    for (auto& row : noise) {
      for (double& x : row) x = noise_rng.normal();
    }

    const CriticLossResult critics = critic_loss(agent, batch);
    report.critic_error = std::max(
        report.critic_error,
        fd_worst_error(agent.critic1.params, critics.grad1,
                       [&agent, &batch]() { return critic_loss(agent, batch).loss1; }));
    report.critic_error = std::max(
        report.critic_error,
        fd_worst_error(agent.critic2.params, critics.grad2,
                       [&agent, &batch]() { return critic_loss(agent, batch).loss2; }));

    const ValueLossResult value = value_loss_with_noise(agent, batch, noise);
    report.value_error = std::max(
        report.value_error,
        fd_worst_error(agent.value.params, value.grad, [&agent, &batch, &noise]() {
          return value_loss_with_noise(agent, batch, noise).loss;
        }));

    const ActorLossResult actor = actor_loss_with_noise(agent, batch, noise);
    report.actor_error = std::max(
        report.actor_error,
        fd_worst_error(agent.actor.params, actor.grad, [&agent, &batch, &noise]() {
          return actor_loss_with_noise(agent, batch, noise).loss;
        }));
  }
  return report;
}

double epsilon_for_episode(int episode, const SacHyper& hyper) {
  if (episode < 0) throw validation_error("episode must be >= 0");
  return hyper.epsilon_max * std::pow(hyper.epsilon_discount, static_cast<double>(episode));
}

int defender_feature_dim(const ScenarioSpec& spec) { return spec.num_alert_types() + 1; }

int attacker_feature_dim(const ScenarioSpec& spec) {
  return spec.num_alert_types() + spec.num_attacks() +
         spec.num_attacks() * spec.num_alert_types() + 1;
}

std::vector<double> defender_features(const DefenderObservation& obs, const ScenarioSpec& spec) {
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(defender_feature_dim(spec)));
  for (long long n : obs.uninvestigated) f.push_back(std::log1p(static_cast<double>(n)));
  f.push_back(static_cast<double>(obs.period) / static_cast<double>(spec.horizon));
  return f;
}

std::vector<double> attacker_features(const AttackerObservation& obs, const ScenarioSpec& spec) {
  const SystemState& st = obs.state;
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(attacker_feature_dim(spec)));
  for (long long n : st.uninvestigated) f.push_back(std::log1p(static_cast<double>(n)));
  for (std::uint8_t m : st.executed) f.push_back(static_cast<double>(m));
  for (const auto& row : st.attribution) {
    for (long long s : row) f.push_back(std::log1p(static_cast<double>(s)));
  }
  f.push_back(static_cast<double>(st.period) / static_cast<double>(spec.horizon));
  return f;
}

DefenderAction MlpDefenderPolicy::act(const DefenderObservation& obs, const ScenarioSpec& spec,
                                      RngStream& rng) const {
  (void)rng;
  const std::vector<double> out = forward(actor_, defender_features(obs, spec));
  const int act_dim = spec.num_alert_types();
  std::vector<double> scores(static_cast<std::size_t>(act_dim));
  for (int d = 0; d < act_dim; ++d) scores[d] = 0.5 * (std::tanh(out[d]) + 1.0);
  return project_defender_action(scores, obs, spec);
}

AttackerAction MlpAttackerPolicy::act(const AttackerObservation& obs, const ScenarioSpec& spec,
                                      RngStream& rng) const {
  (void)rng;
  const std::vector<double> out = forward(actor_, attacker_features(obs, spec));
  const int act_dim = spec.num_attacks();
  std::vector<double> scores(static_cast<std::size_t>(act_dim));
  for (int d = 0; d < act_dim; ++d) scores[d] = 0.5 * (std::tanh(out[d]) + 1.0);
  return project_attacker_action(scores, spec);
}

namespace {

// Shared body of the two train_*_best_response entry points. `Defender`
// selects which side of the game the learner plays.
template <bool Defender, class OpponentPtr>
auto train_best_response_impl(const std::vector<OpponentPtr>& opponents,
                              const MixedStrategy& opponent_mix, const ScenarioSpec& spec,
                              int episodes, RngStream& rng, const SacHyper& hyper) {
  if (opponents.empty()) throw validation_error("opponent pure-strategy set is empty");
  opponent_mix.validate();
  if (opponent_mix.probabilities.size() != opponents.size()) {
    throw validation_error("opponent mix length does not match the pure-strategy set");
  }
  require_usable(spec);
  if (episodes < 0) throw validation_error("episodes must be >= 0");

  const int obs_dim = Defender ? defender_feature_dim(spec) : attacker_feature_dim(spec);
  const int act_dim = Defender ? spec.num_alert_types() : spec.num_attacks();

  // The oracle best-responds to the scenario's objective, so the critic
  // bootstrap uses the scenario discount.
  SacHyper effective = hyper;
  effective.discount = spec.discount;

  RngStream init_rng = rng.derive(1);
  RngStream env_rng = rng.derive(2);
  RngStream opp_select_rng = rng.derive(3);
  RngStream opp_act_rng = rng.derive(4);
  RngStream explore_rng = rng.derive(5);
  RngStream batch_rng = rng.derive(6);
  RngStream loss_rng = rng.derive(7);

  SacAgent agent = SacAgent::create(obs_dim, act_dim, effective, init_rng);
  ReplayBuffer buffer(effective.replay_capacity);

  for (int episode = 0; episode < episodes; ++episode) {
    SystemState state = reset(spec, env_rng);
    const int opp_index = opponent_mix.sample(opp_select_rng);
    const auto& opponent = *opponents[static_cast<std::size_t>(opp_index)];
    const double eps = epsilon_for_episode(episode, effective);

    for (int k = 0; k < spec.horizon; ++k) {
      std::vector<double> obs_feat;
      if constexpr (Defender) {
        obs_feat = defender_features(observe_defender(state), spec);
      } else {
        obs_feat = attacker_features(observe_attacker(state), spec);
      }

      std::vector<double> unit_scores(static_cast<std::size_t>(act_dim));
      if (explore_rng.uniform() < eps) {
        for (double& s : unit_scores) s = explore_rng.uniform();
      } else {
        unit_scores = scores_to_unit(sample_action(agent, obs_feat, explore_rng).scores);
      }

      DefenderAction d_act;
      AttackerAction a_act;
      if constexpr (Defender) {
        d_act = project_defender_action(unit_scores, observe_defender(state), spec);
        a_act = opponent.act(observe_attacker(state), spec, opp_act_rng);
      } else {
        a_act = project_attacker_action(unit_scores, spec);
        d_act = opponent.act(observe_defender(state), spec, opp_act_rng);
      }

      const StepOutcome outcome = step(state, d_act, a_act, spec, env_rng);
      const double reward =
          Defender ? outcome.defender_reward : outcome.attacker_reward();
      state = outcome.next_state;

      std::vector<double> next_feat;
      if constexpr (Defender) {
        next_feat = defender_features(observe_defender(state), spec);
      } else {
        next_feat = attacker_features(observe_attacker(state), spec);
      }

      buffer.push(Transition{std::move(obs_feat), std::move(unit_scores), reward,
                             std::move(next_feat), k + 1 == spec.horizon});

      if (buffer.size() >= static_cast<std::size_t>(effective.batch_size)) {
        const SacBatch batch = buffer.sample(effective.batch_size, batch_rng);
        const CriticLossResult critics = critic_loss(agent, batch);
        const ActorLossResult actor = actor_loss(agent, batch, loss_rng);
        const ValueLossResult value = value_loss(agent, batch, loss_rng);
        adam_update(agent.critic1.params, critics.grad1, agent.critic1_opt);
        adam_update(agent.critic2.params, critics.grad2, agent.critic2_opt);
        adam_update(agent.actor.params, actor.grad, agent.actor_opt);
        adam_update(agent.value.params, value.grad, agent.value_opt);
        soft_update(agent);
      }
    }
  }

  return std::move(agent.actor);
}

}  // namespace

DefenderPolicyPtr train_defender_best_response(const std::vector<AttackerPolicyPtr>& opponents,
                                               const MixedStrategy& opponent_mix,
                                               const ScenarioSpec& spec, int episodes,
                                               RngStream& rng, const SacHyper& hyper) {
  if (spec.defender_degenerate()) {
    std::cerr << "warning: defender cannot afford any investigation; returning the null policy\n";
    return std::make_shared<NullDefenderPolicy>();
  }
  Mlp actor = train_best_response_impl<true>(opponents, opponent_mix, spec, episodes, rng, hyper);
  return std::make_shared<MlpDefenderPolicy>(std::move(actor));
}

AttackerPolicyPtr train_attacker_best_response(const std::vector<DefenderPolicyPtr>& opponents,
                                               const MixedStrategy& opponent_mix,
                                               const ScenarioSpec& spec, int episodes,
                                               RngStream& rng, const SacHyper& hyper) {
  if (spec.attacker_degenerate()) {
    std::cerr << "warning: attacker cannot afford any attack; returning the null policy\n";
    return std::make_shared<NullAttackerPolicy>();
  }
  Mlp actor = train_best_response_impl<false>(opponents, opponent_mix, spec, episodes, rng, hyper);
  return std::make_shared<MlpAttackerPolicy>(std::move(actor));
}

}  // namespace sacap
