#include "sacap/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sacap/error.hpp"

namespace sacap {

using nlohmann::json;

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw parse_error("unknown key '" + it.key() + "' in " + where);
    }
  }
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw parse_error("missing required key '" + key + "' in " + where);
  const json& v = obj.at(key);
  if (!v.is_number()) throw parse_error("key '" + key + "' in " + where + " must be a number");
  return v.get<double>();
}

double optional_number(const json& obj, const std::string& key, double fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw parse_error("key '" + key + "' in " + where + " must be a number");
  return v.get<double>();
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

bool ScenarioSpec::attacker_degenerate() const {
  for (const AttackSpec& a : attacks) {
    if (a.execution_cost <= attack_budget) return false;
  }
  return true;
}

bool ScenarioSpec::defender_degenerate() const {
  for (const AlertTypeSpec& t : alert_types) {
    if (t.investigation_cost <= defense_budget) return false;
  }
  return true;
}

const char* violation_code_name(ViolationCode code) {
  switch (code) {
    case ViolationCode::NoAlertTypes: return "NoAlertTypes";
    case ViolationCode::NoAttacks: return "NoAttacks";
    case ViolationCode::NegativeCost: return "NegativeCost";
    case ViolationCode::NegativeRate: return "NegativeRate";
    case ViolationCode::NegativeExecutionCost: return "NegativeExecutionCost";
    case ViolationCode::NegativeLoss: return "NegativeLoss";
    case ViolationCode::NegativeAlertMean: return "NegativeAlertMean";
    case ViolationCode::ShapeMismatch: return "ShapeMismatch";
    case ViolationCode::BadAlertTypeId: return "BadAlertTypeId";
    case ViolationCode::BadAttackId: return "BadAttackId";
    case ViolationCode::BadDiscount: return "BadDiscount";
    case ViolationCode::BadHorizon: return "BadHorizon";
    case ViolationCode::DegenerateAttacker: return "DegenerateAttacker";
  }
  return "Unknown";
}

ScenarioSpec parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw parse_error("scenario parse error at line " +
                      std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
  }
  if (!root.is_object()) throw parse_error("scenario document must be an object");

  reject_unknown_keys(root,
                      {"alert_types", "attacks", "defense_budget", "attack_budget", "horizon",
                       "discount", "seed"},
                      "scenario");

  ScenarioSpec spec;

  if (!root.contains("alert_types")) throw parse_error("missing required key 'alert_types'");
  if (!root.at("alert_types").is_array()) throw parse_error("'alert_types' must be a list");
  int type_index = 0;
  for (const json& entry : root.at("alert_types")) {
    const std::string where = "alert_types[" + std::to_string(type_index) + "]";
    if (!entry.is_object()) throw parse_error(where + " must be an object");
    reject_unknown_keys(entry, {"cost", "false_alarm_rate", "label"}, where);
    AlertTypeSpec t;
    t.id = type_index;
    t.investigation_cost = require_number(entry, "cost", where);
    t.false_alarm_rate = optional_number(entry, "false_alarm_rate", 0.0, where);
    if (entry.contains("label")) {
      if (!entry.at("label").is_string()) throw parse_error("'label' in " + where + " must be a string");
      t.label = entry.at("label").get<std::string>();
    } else {
      t.label = "t" + std::to_string(type_index);
    }
    spec.alert_types.push_back(std::move(t));
    ++type_index;
  }

  if (!root.contains("attacks")) throw parse_error("missing required key 'attacks'");
  if (!root.at("attacks").is_array()) throw parse_error("'attacks' must be a list");
  int attack_index = 0;
  for (const json& entry : root.at("attacks")) {
    const std::string where = "attacks[" + std::to_string(attack_index) + "]";
    if (!entry.is_object()) throw parse_error(where + " must be an object");
    reject_unknown_keys(entry, {"cost", "loss", "alert_means"}, where);
    AttackSpec a;
    a.id = attack_index;
    a.execution_cost = require_number(entry, "cost", where);
    a.miss_loss = require_number(entry, "loss", where);
    if (!entry.contains("alert_means")) {
      throw parse_error("missing required key 'alert_means' in " + where);
    }
    if (!entry.at("alert_means").is_array()) {
      throw parse_error("'alert_means' in " + where + " must be a list of numbers");
    }
    for (const json& m : entry.at("alert_means")) {
      if (!m.is_number()) throw parse_error("'alert_means' in " + where + " must contain numbers");
      a.alert_means.push_back(m.get<double>());
    }
    spec.attacks.push_back(std::move(a));
    ++attack_index;
  }

  spec.defense_budget = require_number(root, "defense_budget", "scenario");
  spec.attack_budget = require_number(root, "attack_budget", "scenario");
  spec.horizon = static_cast<int>(optional_number(root, "horizon", 20.0, "scenario"));
  spec.discount = optional_number(root, "discount", 0.95, "scenario");
  const double seed = optional_number(root, "seed", 0.0, "scenario");
  if (seed < 0) throw parse_error("'seed' must be a nonnegative integer");
  spec.seed = static_cast<std::uint64_t>(seed);

  return spec;
}

std::string emit_scenario(const ScenarioSpec& spec) {
  // Hand-rolled emission keeps the number formatting (and therefore the
  // content hash) independent of the JSON library version.
  std::ostringstream out;
  out << "{\n  \"alert_types\": [\n";
  for (std::size_t i = 0; i < spec.alert_types.size(); ++i) {
    const AlertTypeSpec& t = spec.alert_types[i];
    out << "    {\"cost\": " << format_double(t.investigation_cost)
        << ", \"false_alarm_rate\": " << format_double(t.false_alarm_rate)
        << ", \"label\": " << json(t.label).dump() << "}";
    out << (i + 1 < spec.alert_types.size() ? ",\n" : "\n");
  }
  out << "  ],\n  \"attacks\": [\n";
  for (std::size_t i = 0; i < spec.attacks.size(); ++i) {
    const AttackSpec& a = spec.attacks[i];
    out << "    {\"cost\": " << format_double(a.execution_cost)
        << ", \"loss\": " << format_double(a.miss_loss) << ", \"alert_means\": [";
    for (std::size_t j = 0; j < a.alert_means.size(); ++j) {
      out << format_double(a.alert_means[j]) << (j + 1 < a.alert_means.size() ? ", " : "");
    }
    out << "]}" << (i + 1 < spec.attacks.size() ? ",\n" : "\n");
  }
  out << "  ],\n";
  out << "  \"defense_budget\": " << format_double(spec.defense_budget) << ",\n";
  out << "  \"attack_budget\": " << format_double(spec.attack_budget) << ",\n";
  out << "  \"horizon\": " << spec.horizon << ",\n";
  out << "  \"discount\": " << format_double(spec.discount) << ",\n";
  out << "  \"seed\": " << spec.seed << "\n";
  out << "}\n";
  return out.str();
}

std::vector<Violation> validate_scenario(const ScenarioSpec& spec) {
  std::vector<Violation> out;
  const auto add = [&out](ViolationCode code, int index, const std::string& msg) {
    out.push_back(Violation{code, index, msg});
  };

  if (spec.alert_types.empty()) add(ViolationCode::NoAlertTypes, -1, "at least one alert type required");
  if (spec.attacks.empty()) add(ViolationCode::NoAttacks, -1, "at least one attack required");

  for (std::size_t t = 0; t < spec.alert_types.size(); ++t) {
    const AlertTypeSpec& at = spec.alert_types[t];
    if (at.id != static_cast<int>(t)) {
      add(ViolationCode::BadAlertTypeId, static_cast<int>(t),
          "alert type ids must be dense indices 0..|T|-1");
    }
    if (!(at.investigation_cost >= 0) || !std::isfinite(at.investigation_cost)) {
      add(ViolationCode::NegativeCost, static_cast<int>(t),
          "investigation_cost must be finite and >= 0 (t=" + std::to_string(t) + ")");
    }
    if (!(at.false_alarm_rate >= 0) || !std::isfinite(at.false_alarm_rate)) {
      add(ViolationCode::NegativeRate, static_cast<int>(t),
          "false_alarm_rate must be finite and >= 0 (t=" + std::to_string(t) + ")");
    }
  }

  for (std::size_t a = 0; a < spec.attacks.size(); ++a) {
    const AttackSpec& atk = spec.attacks[a];
    if (atk.id != static_cast<int>(a)) {
      add(ViolationCode::BadAttackId, static_cast<int>(a), "attack ids must be dense indices 0..|A|-1");
    }
    if (!(atk.execution_cost >= 0) || !std::isfinite(atk.execution_cost)) {
      add(ViolationCode::NegativeExecutionCost, static_cast<int>(a),
          "execution_cost must be finite and >= 0 (a=" + std::to_string(a) + ")");
    }
    if (!(atk.miss_loss >= 0) || !std::isfinite(atk.miss_loss)) {
      add(ViolationCode::NegativeLoss, static_cast<int>(a),
          "loss must be finite and >= 0 (a=" + std::to_string(a) + ")");
    }
    if (atk.alert_means.size() != spec.alert_types.size()) {
      add(ViolationCode::ShapeMismatch, static_cast<int>(a),
          "alert_means must have one entry per alert type (a=" + std::to_string(a) + ")");
    } else {
      for (double m : atk.alert_means) {
        if (!(m >= 0) || !std::isfinite(m)) {
          add(ViolationCode::NegativeAlertMean, static_cast<int>(a),
              "alert_means entries must be finite and >= 0 (a=" + std::to_string(a) + ")");
          break;
        }
      }
    }
  }

  if (!(spec.discount >= 0.0 && spec.discount <= 1.0)) {
    add(ViolationCode::BadDiscount, -1, "discount must lie in [0, 1]");
  }
  if (spec.horizon < 1) add(ViolationCode::BadHorizon, -1, "horizon must be >= 1");
  if (!(spec.defense_budget >= 0) || !std::isfinite(spec.defense_budget)) {
    add(ViolationCode::NegativeCost, -1, "defense_budget must be finite and >= 0");
  }
  if (!(spec.attack_budget >= 0) || !std::isfinite(spec.attack_budget)) {
    add(ViolationCode::NegativeExecutionCost, -1, "attack_budget must be finite and >= 0");
  }

  if (!spec.attacks.empty() && spec.attacker_degenerate()) {
    add(ViolationCode::DegenerateAttacker, -1, "no attack fits the attack budget");
  }

  return out;
}

bool scenario_usable(const ScenarioSpec& spec) {
  for (const Violation& v : validate_scenario(spec)) {
    if (v.code != ViolationCode::DegenerateAttacker) return false;
  }
  return true;
}

void require_usable(const ScenarioSpec& spec) {
  std::string fatal;
  for (const Violation& v : validate_scenario(spec)) {
    if (v.code == ViolationCode::DegenerateAttacker) continue;
    if (!fatal.empty()) fatal += "; ";
    fatal += std::string(violation_code_name(v.code)) + ": " + v.message;
  }
  if (!fatal.empty()) throw validation_error("invalid scenario: " + fatal);
}

std::uint64_t scenario_hash(const ScenarioSpec& spec) {
  const std::string text = emit_scenario(spec);
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string scenario_hash_hex(const ScenarioSpec& spec) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(scenario_hash(spec)));
  return buf;
}

}  // namespace sacap
