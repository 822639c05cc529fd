#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sacap/env.hpp"
#include "sacap/rng.hpp"
#include "sacap/scenario.hpp"

namespace sacap {

// Probability vector over a pure-policy list.
struct MixedStrategy {
  std::vector<double> probabilities;

  void validate() const;  // entries >= 0, sum == 1 within 1e-9 (empty allowed)
  // Index of the policy drawn under this mix.
  int sample(RngStream& rng) const;
};

class DefenderPolicy {
 public:
  virtual ~DefenderPolicy() = default;
  virtual DefenderAction act(const DefenderObservation& obs, const ScenarioSpec& spec,
                             RngStream& rng) const = 0;
  virtual std::string kind() const = 0;
};

class AttackerPolicy {
 public:
  virtual ~AttackerPolicy() = default;
  virtual AttackerAction act(const AttackerObservation& obs, const ScenarioSpec& spec,
                             RngStream& rng) const = 0;
  virtual std::string kind() const = 0;
};

using DefenderPolicyPtr = std::shared_ptr<const DefenderPolicy>;
using AttackerPolicyPtr = std::shared_ptr<const AttackerPolicy>;

// Initial policies for the double-oracle sets: scores drawn uniformly in
// [0, 1] each period, then budget-projected.
class RandomScoresDefenderPolicy final : public DefenderPolicy {
 public:
  DefenderAction act(const DefenderObservation& obs, const ScenarioSpec& spec,
                     RngStream& rng) const override;
  std::string kind() const override { return "random"; }
};

class RandomScoresAttackerPolicy final : public AttackerPolicy {
 public:
  AttackerAction act(const AttackerObservation& obs, const ScenarioSpec& spec,
                     RngStream& rng) const override;
  std::string kind() const override { return "random"; }
};

// Always does nothing. Returned by the oracles for budget-degenerate players.
class NullDefenderPolicy final : public DefenderPolicy {
 public:
  DefenderAction act(const DefenderObservation& obs, const ScenarioSpec& spec,
                     RngStream& rng) const override;
  std::string kind() const override { return "null"; }
};

class NullAttackerPolicy final : public AttackerPolicy {
 public:
  AttackerAction act(const AttackerObservation& obs, const ScenarioSpec& spec,
                     RngStream& rng) const override;
  std::string kind() const override { return "null"; }
};

}  // namespace sacap
