#include "sacap/policy.hpp"

#include <cmath>

#include "sacap/error.hpp"

namespace sacap {

void MixedStrategy::validate() const {
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw validation_error("mixed strategy probabilities must be finite and >= 0");
    }
    sum += p;
  }
  if (!probabilities.empty() && std::fabs(sum - 1.0) > 1e-9) {
    throw validation_error("mixed strategy probabilities must sum to 1");
  }
}

int MixedStrategy::sample(RngStream& rng) const {
  if (probabilities.empty()) throw internal_error("cannot sample from an empty mix");
  const double r = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    cumulative += probabilities[i];
    if (r < cumulative) return static_cast<int>(i);
  }
  return static_cast<int>(probabilities.size()) - 1;
}

DefenderAction RandomScoresDefenderPolicy::act(const DefenderObservation& obs,
                                               const ScenarioSpec& spec, RngStream& rng) const {
  std::vector<double> scores(spec.alert_types.size());
  for (double& s : scores) s = rng.uniform();
  return project_defender_action(scores, obs, spec);
}

AttackerAction RandomScoresAttackerPolicy::act(const AttackerObservation& obs,
                                               const ScenarioSpec& spec, RngStream& rng) const {
  (void)obs;
  std::vector<double> scores(spec.attacks.size());
  for (double& s : scores) s = rng.uniform();
  return project_attacker_action(scores, spec);
}

DefenderAction NullDefenderPolicy::act(const DefenderObservation& obs, const ScenarioSpec& spec,
                                       RngStream& rng) const {
  (void)obs;
  (void)rng;
  return DefenderAction{std::vector<long long>(spec.alert_types.size(), 0)};
}

AttackerAction NullAttackerPolicy::act(const AttackerObservation& obs, const ScenarioSpec& spec,
                                       RngStream& rng) const {
  (void)obs;
  (void)rng;
  return AttackerAction{std::vector<std::uint8_t>(spec.attacks.size(), 0)};
}

}  // namespace sacap
