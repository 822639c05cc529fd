#pragma once

#include <memory>
#include <vector>

#include "sacap/env.hpp"
#include "sacap/nn.hpp"
#include "sacap/policy.hpp"
#include "sacap/rng.hpp"
#include "sacap/scenario.hpp"

namespace sacap {

// Training hyperparameters. The learning rates, discount, entropy weight,
// smoothing constant and epsilon schedule are the published configuration;
// the buffer, batch and network sizes are desk-scale choices.
struct SacHyper {
  double critic_lr = 0.002;
  double value_lr = 0.002;
  double actor_lr = 0.001;
  double discount = 0.95;
  double entropy_weight = 0.5;      // beta
  double target_smoothing = 0.01;   // tau
  double epsilon_max = 1.0;
  double epsilon_discount = 0.99;
  int replay_capacity = 100000;
  int batch_size = 64;
  double log_std_min = -5.0;
  double log_std_max = 2.0;
  std::vector<int> hidden = {64, 64};
};

// One off-policy training record. Observations are featurized vectors;
// action_scores is the pre-projection score vector in [0,1]^act_dim (the
// fixed-dimension continuous space the critics learn over).
struct Transition {
  std::vector<double> observation;
  std::vector<double> action_scores;
  double reward = 0.0;
  std::vector<double> next_observation;
  bool terminal = false;
};

// Bounded FIFO of transitions; eviction is oldest-first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);

  void push(Transition t);
  std::size_t size() const { return size_; }
  int capacity() const { return capacity_; }

  // Uniform minibatch (with replacement). Requires size() >= 1.
  std::vector<const Transition*> sample(int batch_size, RngStream& rng) const;

 private:
  int capacity_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::vector<Transition> slots_;
};

// Actor, twin critics, value and target-value networks plus optimizer state.
// The actor outputs [mean..., log_std...]; log_std is clamped to
// [log_std_min, log_std_max] wherever it is used.
struct SacAgent {
  Mlp actor;
  Mlp critic1;
  Mlp critic2;
  Mlp value;
  Mlp target_value;
  AdamState actor_opt;
  AdamState critic1_opt;
  AdamState critic2_opt;
  AdamState value_opt;
  SacHyper hyper;
  int obs_dim = 0;
  int act_dim = 0;

  static SacAgent create(int obs_dim, int act_dim, const SacHyper& hyper, RngStream& rng);
};

// A squashed-Gaussian draw: scores = tanh(u), u ~ N(mean(obs), std(obs)),
// with log_prob = sum_d [log N(u_d) - log(1 - tanh(u_d)^2)]. Scores live in
// (-1, 1); rescale with scores_to_unit before budget projection.
struct SampledAction {
  std::vector<double> scores;
  double log_prob = 0.0;
};

SampledAction sample_action(const SacAgent& agent, const std::vector<double>& obs,
                            RngStream& rng);

// Per-dimension log-density of the squashed draw tanh(u) for
// u ~ N(mean, exp(log_std)): log N(u) - log(1 - tanh(u)^2), computed stably.
double squashed_gaussian_log_prob(double mean, double log_std, double u);

std::vector<double> scores_to_unit(const std::vector<double>& scores);  // (s+1)/2

using SacBatch = std::vector<const Transition*>;

// J_Qi = mean 1/2 (Q' - Q_i)^2 with Q' = r + gamma * V_target(next_obs)
// (terminal transitions drop the bootstrap). Gradients are with respect to
// each critic's own parameters; the target is a constant.
struct CriticLossResult {
  double loss1 = 0.0;
  double loss2 = 0.0;
  std::vector<double> grad1;
  std::vector<double> grad2;
};

CriticLossResult critic_loss(const SacAgent& agent, const SacBatch& batch);

// J_v = mean 1/2 (V' - V(obs))^2 with V' = min(Q1, Q2) - beta * log_prob on a
// fresh action from the current actor. Gradient flows into the value network
// only. The _with_noise variant takes the standard-normal draws explicitly
// (one vector of act_dim values per batch element) so the loss is a
// deterministic, finite-difference-checkable function.
struct ValueLossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

ValueLossResult value_loss(const SacAgent& agent, const SacBatch& batch, RngStream& rng);
ValueLossResult value_loss_with_noise(const SacAgent& agent, const SacBatch& batch,
                                      const std::vector<std::vector<double>>& noise);

// J_pi = mean [-min(Q1, Q2) + beta * log_prob] on reparameterized actions.
// Gradient flows through the sampled action into the actor; critics are
// constants.
struct ActorLossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

ActorLossResult actor_loss(const SacAgent& agent, const SacBatch& batch, RngStream& rng);
ActorLossResult actor_loss_with_noise(const SacAgent& agent, const SacBatch& batch,
                                      const std::vector<std::vector<double>>& noise);

// target <- tau * value + (1 - tau) * target, elementwise.
void soft_update(SacAgent& agent);

// Worst relative error between each loss gradient and central finite
// differences over `trials` randomized small agents and batches, with the
// reparameterization noise held fixed. Backs the gradcheck command.
struct SacGradientCheckReport {
  double critic_error = 0.0;
  double value_error = 0.0;
  double actor_error = 0.0;
  double worst() const;
};

SacGradientCheckReport sac_loss_gradient_check(int trials, RngStream& rng);

// epsilon_max * epsilon_discount^episode
double epsilon_for_episode(int episode, const SacHyper& hyper);

// Observation featurization. Counts are log1p-compressed so tanh layers stay
// in range as alerts accumulate; the clock is normalized by the horizon.
std::vector<double> defender_features(const DefenderObservation& obs, const ScenarioSpec& spec);
std::vector<double> attacker_features(const AttackerObservation& obs, const ScenarioSpec& spec);
int defender_feature_dim(const ScenarioSpec& spec);
int attacker_feature_dim(const ScenarioSpec& spec);

// Deterministic pure policies wrapping a trained actor: scores = tanh(mean).
class MlpDefenderPolicy final : public DefenderPolicy {
 public:
  explicit MlpDefenderPolicy(Mlp actor) : actor_(std::move(actor)) {}
  DefenderAction act(const DefenderObservation& obs, const ScenarioSpec& spec,
                     RngStream& rng) const override;
  std::string kind() const override { return "mlp"; }
  const Mlp& actor() const { return actor_; }

 private:
  Mlp actor_;
};

class MlpAttackerPolicy final : public AttackerPolicy {
 public:
  explicit MlpAttackerPolicy(Mlp actor) : actor_(std::move(actor)) {}
  AttackerAction act(const AttackerObservation& obs, const ScenarioSpec& spec,
                     RngStream& rng) const override;
  std::string kind() const override { return "mlp"; }
  const Mlp& actor() const { return actor_; }

 private:
  Mlp actor_;
};

// Trains a pure-strategy best response for one player against an opponent
// mixed strategy. Per episode: reset, sample one opponent pure policy from
// the mix, then for each period choose an epsilon-greedy action (uniform
// [0,1] scores with probability epsilon, otherwise a draw from the actor),
// execute both projected actions, store the transition, and once the buffer
// holds a full batch take one gradient step on each critic, the actor and
// the value network followed by a target soft update. The returned policy is
// the final actor, determinized through the mean.
DefenderPolicyPtr train_defender_best_response(const std::vector<AttackerPolicyPtr>& opponents,
                                               const MixedStrategy& opponent_mix,
                                               const ScenarioSpec& spec, int episodes,
                                               RngStream& rng, const SacHyper& hyper = {});

AttackerPolicyPtr train_attacker_best_response(const std::vector<DefenderPolicyPtr>& opponents,
                                               const MixedStrategy& opponent_mix,
                                               const ScenarioSpec& spec, int episodes,
                                               RngStream& rng, const SacHyper& hyper = {});

}  // namespace sacap
