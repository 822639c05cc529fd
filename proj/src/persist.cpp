#include "sacap/persist.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sacap/error.hpp"
#include "sacap/harness.hpp"
#include "sacap/nn.hpp"
#include "sacap/sac.hpp"

namespace sacap {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kMagic = "sacap-policy-v1";

struct PolicyHeader {
  std::string role;
  int action_dim = 0;
  std::string scenario;
  std::string kind;
  std::string payload;
};

std::string header_text(const std::string& role, int action_dim, const ScenarioSpec& spec,
                        const std::string& kind) {
  std::ostringstream out;
  out << kMagic << "\n";
  out << "role " << role << "\n";
  out << "action_dim " << action_dim << "\n";
  out << "scenario " << scenario_hash_hex(spec) << "\n";
  out << "kind " << kind << "\n";
  return out.str();
}

PolicyHeader parse_policy_file(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw parse_error("'" + path + "' is not a policy file");
  }
  PolicyHeader header;
  const auto read_field = [&in, &path](const std::string& name) {
    std::string key, value, line2;
    if (!std::getline(in, line2)) throw parse_error("truncated policy header in '" + path + "'");
    std::istringstream ls(line2);
    ls >> key;
    std::getline(ls, value);
    if (key != name) throw parse_error("expected '" + name + "' in policy header of '" + path + "'");
    // trim leading space
    const auto pos = value.find_first_not_of(' ');
    return pos == std::string::npos ? std::string() : value.substr(pos);
  };
  header.role = read_field("role");
  header.action_dim = std::stoi(read_field("action_dim"));
  header.scenario = read_field("scenario");
  header.kind = read_field("kind");
  std::ostringstream payload;
  payload << in.rdbuf();
  header.payload = payload.str();
  return header;
}

void check_header(const PolicyHeader& header, const std::string& role, int action_dim,
                  const ScenarioSpec& spec, const std::string& path) {
  if (header.role != role) {
    throw validation_error("policy '" + path + "' is a " + header.role + " policy, expected " +
                           role);
  }
  if (header.action_dim != action_dim) {
    throw validation_error("policy '" + path + "' has action dimension " +
                           std::to_string(header.action_dim) + ", scenario needs " +
                           std::to_string(action_dim));
  }
  if (header.scenario != scenario_hash_hex(spec)) {
    throw validation_error("policy '" + path + "' was trained for scenario " + header.scenario +
                           ", current scenario is " + scenario_hash_hex(spec));
  }
}

std::vector<int> parse_order(const std::string& payload) {
  std::istringstream in(payload);
  std::string key;
  in >> key;
  if (key != "order") throw parse_error("priority policy payload must start with 'order'");
  std::vector<int> order;
  int t;
  while (in >> t) order.push_back(t);
  return order;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot read '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw io_error("cannot create directory for '" + path + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write '" + path + "'");
  out << content;
}

void save_defender_policy(const DefenderPolicy& policy, const ScenarioSpec& spec,
                          const std::string& path) {
  std::string body = header_text("defender", spec.num_alert_types(), spec, policy.kind());
  if (const auto* mlp = dynamic_cast<const MlpDefenderPolicy*>(&policy)) {
    body += save_mlp(mlp->actor());
  } else if (const auto* priority = dynamic_cast<const StaticPriorityPolicy*>(&policy)) {
    std::ostringstream order;
    order << "order";
    for (int t : priority->priority_order()) order << " " << t;
    order << "\n";
    body += order.str();
  } else if (policy.kind() != "random" && policy.kind() != "uniform" && policy.kind() != "null") {
    throw internal_error("cannot persist defender policy kind '" + policy.kind() + "'");
  }
  write_text_file(path, body);
}

void save_attacker_policy(const AttackerPolicy& policy, const ScenarioSpec& spec,
                          const std::string& path) {
  std::string body = header_text("attacker", spec.num_attacks(), spec, policy.kind());
  if (const auto* mlp = dynamic_cast<const MlpAttackerPolicy*>(&policy)) {
    body += save_mlp(mlp->actor());
  } else if (policy.kind() != "random" && policy.kind() != "uniform" && policy.kind() != "null") {
    throw internal_error("cannot persist attacker policy kind '" + policy.kind() + "'");
  }
  write_text_file(path, body);
}

DefenderPolicyPtr load_defender_policy(const std::string& path, const ScenarioSpec& spec) {
  const PolicyHeader header = parse_policy_file(path);
  check_header(header, "defender", spec.num_alert_types(), spec, path);
  if (header.kind == "mlp") {
    Mlp actor = load_mlp(header.payload);
    if (actor.input_dim() != defender_feature_dim(spec) ||
        actor.output_dim() != 2 * spec.num_alert_types()) {
      throw validation_error("policy '" + path + "' network shape does not fit the scenario");
    }
    return std::make_shared<MlpDefenderPolicy>(std::move(actor));
  }
  if (header.kind == "random") return std::make_shared<RandomScoresDefenderPolicy>();
  if (header.kind == "uniform") return std::make_shared<UniformDefenderPolicy>();
  if (header.kind == "null") return std::make_shared<NullDefenderPolicy>();
  if (header.kind == "priority") {
    return std::make_shared<StaticPriorityPolicy>(parse_order(header.payload));
  }
  throw parse_error("unknown defender policy kind '" + header.kind + "' in '" + path + "'");
}

AttackerPolicyPtr load_attacker_policy(const std::string& path, const ScenarioSpec& spec) {
  const PolicyHeader header = parse_policy_file(path);
  check_header(header, "attacker", spec.num_attacks(), spec, path);
  if (header.kind == "mlp") {
    Mlp actor = load_mlp(header.payload);
    if (actor.input_dim() != attacker_feature_dim(spec) ||
        actor.output_dim() != 2 * spec.num_attacks()) {
      throw validation_error("policy '" + path + "' network shape does not fit the scenario");
    }
    return std::make_shared<MlpAttackerPolicy>(std::move(actor));
  }
  if (header.kind == "random") return std::make_shared<RandomScoresAttackerPolicy>();
  if (header.kind == "uniform") return std::make_shared<UniformAttackerPolicy>();
  if (header.kind == "null") return std::make_shared<NullAttackerPolicy>();
  throw parse_error("unknown attacker policy kind '" + header.kind + "' in '" + path + "'");
}

void save_mix(const MixedStrategy& mix, const std::vector<std::string>& policy_files,
              const std::string& role, const ScenarioSpec& spec, const std::string& path) {
  mix.validate();
  if (mix.probabilities.size() != policy_files.size()) {
    throw internal_error("mix and policy file list lengths differ");
  }
  json doc;
  doc["role"] = role;
  doc["scenario"] = scenario_hash_hex(spec);
  doc["policies"] = policy_files;
  doc["probabilities"] = mix.probabilities;
  write_text_file(path, doc.dump(2) + "\n");
}

namespace {

struct RawMix {
  std::vector<std::string> files;
  MixedStrategy mix;
};

RawMix parse_mix_file(const std::string& path, const std::string& role,
                      const ScenarioSpec& spec) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw parse_error("mix file '" + path + "': " + e.what());
  }
  if (!doc.is_object() || !doc.contains("role") || !doc.contains("policies") ||
      !doc.contains("probabilities")) {
    throw parse_error("mix file '" + path + "' must contain role, policies and probabilities");
  }
  if (doc.at("role").get<std::string>() != role) {
    throw validation_error("mix file '" + path + "' is for role " +
                           doc.at("role").get<std::string>() + ", expected " + role);
  }
  if (doc.contains("scenario") &&
      doc.at("scenario").get<std::string>() != scenario_hash_hex(spec)) {
    throw validation_error("mix file '" + path + "' belongs to a different scenario");
  }
  RawMix out;
  const fs::path base = fs::path(path).parent_path();
  for (const json& f : doc.at("policies")) {
    out.files.push_back((base / f.get<std::string>()).string());
  }
  for (const json& p : doc.at("probabilities")) out.mix.probabilities.push_back(p.get<double>());
  if (out.files.size() != out.mix.probabilities.size()) {
    throw parse_error("mix file '" + path + "': policies and probabilities lengths differ");
  }
  out.mix.validate();
  return out;
}

}  // namespace

LoadedDefenderMix load_defender_mix(const std::string& path, const ScenarioSpec& spec) {
  const RawMix raw = parse_mix_file(path, "defender", spec);
  LoadedDefenderMix out;
  out.mix = raw.mix;
  for (const std::string& file : raw.files) out.policies.push_back(load_defender_policy(file, spec));
  return out;
}

LoadedAttackerMix load_attacker_mix(const std::string& path, const ScenarioSpec& spec) {
  const RawMix raw = parse_mix_file(path, "attacker", spec);
  LoadedAttackerMix out;
  out.mix = raw.mix;
  for (const std::string& file : raw.files) out.policies.push_back(load_attacker_policy(file, spec));
  return out;
}

}  // namespace sacap
