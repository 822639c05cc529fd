#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sacap/policy.hpp"
#include "sacap/scenario.hpp"

namespace sacap {

// Policy files: a small role header (player, action dimension, scenario
// hash, policy kind) followed by a kind-specific payload (the flat network
// text for trained policies, the type order for priority rules). Loading
// verifies the role and the scenario hash.
void save_defender_policy(const DefenderPolicy& policy, const ScenarioSpec& spec,
                          const std::string& path);
void save_attacker_policy(const AttackerPolicy& policy, const ScenarioSpec& spec,
                          const std::string& path);

DefenderPolicyPtr load_defender_policy(const std::string& path, const ScenarioSpec& spec);
AttackerPolicyPtr load_attacker_policy(const std::string& path, const ScenarioSpec& spec);

// Mixed strategies persist as JSON: policy file names (relative to the mix
// file) plus probabilities.
void save_mix(const MixedStrategy& mix, const std::vector<std::string>& policy_files,
              const std::string& role, const ScenarioSpec& spec, const std::string& path);

struct LoadedDefenderMix {
  std::vector<DefenderPolicyPtr> policies;
  MixedStrategy mix;
};
struct LoadedAttackerMix {
  std::vector<AttackerPolicyPtr> policies;
  MixedStrategy mix;
};

LoadedDefenderMix load_defender_mix(const std::string& path, const ScenarioSpec& spec);
LoadedAttackerMix load_attacker_mix(const std::string& path, const ScenarioSpec& spec);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace sacap
