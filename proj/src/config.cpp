#include "granular_biped/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>

#include <boost/algorithm/string.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "granular_biped/errors.hpp"

namespace granular_biped {

namespace {

template <class C, class F>
void visit_fields(C& c, F&& f) {
  auto& s = c.sim;
  f("sim.dt", s.dt);
  f("sim.integrator", s.integrator);
  f("sim.duration", s.duration);
  f("sim.terrain_mode", s.terrain_mode);
  f("sim.seed", s.seed);
  f("sim.init_noise", s.init_noise);
  f("sim.decimation", s.decimation);
  f("sim.divergence_limit", s.divergence_limit);
  f("sim.baumgarte_omega", s.baumgarte_omega);
  f("sim.r_eff_cap", s.r_eff_cap);

  auto& g = s.gait;
  f("gait.cycle_period", g.cycle_period);
  f("gait.duty", g.duty);
  f("gait.swing_height", g.swing_height);
  f("gait.v_target", g.v_target);
  f("gait.step_length_override", g.step_length_override);

  auto& t = s.terrain;
  f("terrain.phi_s", t.phi_s);
  f("terrain.zeta", t.zeta);
  f("terrain.lambda", t.lambda);
  f("terrain.rho", t.rho);
  f("terrain.W", t.W);
  f("terrain.sand_level", t.sand_level);
  f("terrain.v_reg", t.v_reg);
  f("terrain.eps_v", t.eps_v);
  f("terrain.element_resolved", t.element_resolved);
  f("terrain.elements", t.elements);
  auto& k = t.coefficients;
  f("terrain.rft.A00", k.A00);
  f("terrain.rft.A10", k.A10);
  f("terrain.rft.B11", k.B11);
  f("terrain.rft.B01", k.B01);
  f("terrain.rft.Bm11", k.Bm11);
  f("terrain.rft.C11", k.C11);
  f("terrain.rft.C01", k.C01);
  f("terrain.rft.Cm11", k.Cm11);
  f("terrain.rft.D10", k.D10);

  auto& r = s.robot;
  auto& p = r.sagittal;
  f("robot.m_b", p.m_b);
  f("robot.m_t", p.m_t);
  f("robot.m_c", p.m_c);
  f("robot.m_t_swing", p.m_t_swing);
  f("robot.m_c_swing", p.m_c_swing);
  f("robot.l_t", p.l_t);
  f("robot.l_c", p.l_c);
  f("robot.l_b", p.l_b);
  f("robot.a_1", p.a_1);
  f("robot.a_2", p.a_2);
  f("robot.I_b", p.I_b);
  f("robot.I_t", p.I_t);
  f("robot.I_c", p.I_c);
  f("robot.I_t_swing", p.I_t_swing);
  f("robot.I_c_swing", p.I_c_swing);
  f("robot.g", p.g);
  f("robot.hip_spacing", r.hip_spacing);
  f("robot.foot_radius", r.foot_radius);

  auto& q = s.controller;
  f("controller.hip_height", q.hip_height);
  f("controller.trunk_pitch", q.trunk_pitch);
  f("controller.placement_gain", q.placement_gain);
  f("controller.placement_integral_gain", q.placement_integral_gain);
  f("controller.placement_bias_limit", q.placement_bias_limit);
  f("controller.push_depth", q.push_depth);
  f("controller.min_touchdown_phase", q.min_touchdown_phase);
  f("controller.extension_time", q.extension_time);
  f("controller.lateral_capture_gain", q.lateral_capture_gain);
  f("controller.lateral_offset", q.lateral_offset);
  f("controller.lateral_latch_phase", q.lateral_latch_phase);
  f("controller.kp_trunk", q.kp_trunk);
  f("controller.kd_trunk", q.kd_trunk);
  f("controller.kp_stance_knee", q.kp_stance_knee);
  f("controller.kd_stance_knee", q.kd_stance_knee);
  f("controller.kp_swing_thigh", q.kp_swing_thigh);
  f("controller.kd_swing_thigh", q.kd_swing_thigh);
  f("controller.kp_swing_knee", q.kp_swing_knee);
  f("controller.kd_swing_knee", q.kd_swing_knee);
  f("controller.kp_pelvis", q.kp_pelvis);
  f("controller.kd_pelvis", q.kd_pelvis);
  f("controller.kp_swing_roll", q.kp_swing_roll);
  f("controller.kd_swing_roll", q.kd_swing_roll);
  f("controller.tau_max", q.tau_max);

  auto& m = c.metrics;
  f("metrics.cot_norm", m.cot_norm);
  f("metrics.h_com", m.h_com);
  f("metrics.window_start", m.window_start);
  f("metrics.window_end", m.window_end);
}

template <class T>
T parse_number(const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw ConfigError(fmt::format("malformed number '{}'", text));
  return v;
}

double parse_double(const std::string& text) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  const double v = parse_number<double>(text);
  if (!std::isfinite(v)) throw ConfigError(fmt::format("non-finite number '{}'", text));
  return v;
}

bool parse_bool(const std::string& text) {
  const std::string t = boost::algorithm::to_lower_copy(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(fmt::format("malformed boolean '{}'", text));
}

template <class T>
void assign(T& field, const std::string& text) {
  if constexpr (std::is_same_v<T, double>) {
    field = parse_double(text);
  } else if constexpr (std::is_same_v<T, bool>) {
    field = parse_bool(text);
  } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
    field = parse_number<T>(text);
  } else if constexpr (std::is_same_v<T, Integrator>) {
    field = parse_integrator(text);
  } else if constexpr (std::is_same_v<T, TerrainMode>) {
    field = parse_terrain_mode(text);
  } else if constexpr (std::is_same_v<T, CotNorm>) {
    field = parse_cot_norm(text);
  } else {
    static_assert(sizeof(T) == 0, "unhandled config field type");
  }
}

template <class T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", v);
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
    return std::to_string(v);
  } else {
    return to_string(v);
  }
}

bool set_field(RunConfig& c, const std::string& key, const std::string& value) {
  bool found = false;
  visit_fields(c, [&](const char* name, auto& field) {
    if (found || key != name) return;
    found = true;
    try {
      assign(field, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("key '{}': {}", key, e.what()));
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("key '{}': {}", key, e.what()));
    }
  });
  return found;
}

std::string json_scalar_text(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) return fmt::format("{:.17g}", v.get<double>());
  throw ConfigError(fmt::format("key '{}': expected a scalar value", key));
}

void flatten(const nlohmann::json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, out);
    } else {
      out.emplace_back(key, json_scalar_text(*it, key));
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  try {
    sim.validate();
    metrics.validate();
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("invalid configuration: {}", e.what()));
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  RunConfig c;
  visit_fields(c, [&](const char* name, auto&) { keys.emplace_back(name); });
  return keys;
}

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
  if (!set_field(config, key, value)) throw ConfigError(fmt::format("unknown config key '{}'", key));
}

RunConfig parse_key_value(const std::string& text, const RunConfig& defaults) {
  RunConfig c = defaults;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    boost::algorithm::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    const std::string key = boost::algorithm::trim_copy(line.substr(0, eq));
    const std::string value = boost::algorithm::trim_copy(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    if (!seen.insert(key).second) throw ConfigError(fmt::format("line {}: repeated config key '{}'", line_no, key));
    try {
      apply_override(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  c.validate();
  return c;
}

RunConfig parse_json(const std::string& text, const RunConfig& defaults) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("malformed JSON config: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  std::vector<std::pair<std::string, std::string>> flat;
  flatten(j, "", flat);
  RunConfig c = defaults;
  std::set<std::string> seen;
  for (const auto& [k, v] : flat) {
    if (!seen.insert(k).second) throw ConfigError(fmt::format("repeated config key '{}'", k));
    apply_override(c, k, v);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (boost::algorithm::ends_with(path, ".json") || (first != std::string::npos && text[first] == '{')) {
    return parse_json(text);
  }
  return parse_key_value(text);
}

std::string to_key_value(const RunConfig& config) {
  std::string out;
  visit_fields(config, [&](const char* name, const auto& field) {
    out += fmt::format("{} = {}\n", name, format_value(field));
  });
  return out;
}

}  // namespace granular_biped
