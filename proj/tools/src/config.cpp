#include "cvsc/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "cvsc/cli/csv.hpp"

namespace cvsc::cli {

namespace {

std::string join(const std::vector<std::string>& problems) {
  std::ostringstream out;
  out << "configuration has " << problems.size() << " problem(s)";
  for (const auto& p : problems) out << "\n  " << p;
  return out.str();
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> tokens(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::optional<int> to_int(const std::string& s) {
  const auto d = to_double(s);
  if (!d || *d != static_cast<double>(static_cast<long long>(*d))) return std::nullopt;
  return static_cast<int>(*d);
}

std::optional<bool> to_bool(const std::string& s) {
  const std::string l = lower(s);
  if (l == "true" || l == "yes" || l == "1") return true;
  if (l == "false" || l == "no" || l == "0") return false;
  return std::nullopt;
}

using Params = model::WpgParameters;

const std::vector<std::pair<const char*, double Params::*>>& param_keys() {
  static const std::vector<std::pair<const char*, double Params::*>> keys = {
      {"p_mn", &Params::P_mn},           {"p_n", &Params::P_n},
      {"v_n", &Params::V_n},             {"v_tn", &Params::V_tn},
      {"l_filter", &Params::L_filter},   {"r_filter", &Params::R_filter},
      {"v_dc_nom", &Params::V_dc_nom},   {"c", &Params::C},
      {"l_boost", &Params::L_boost},     {"k_p_pitch", &Params::K_p_pitch},
      {"k_p_comp", &Params::K_p_comp},   {"k_i_comp", &Params::K_i_comp},
      {"k_p_field", &Params::K_p_field}, {"k_i_field", &Params::K_i_field},
      {"k_pg1", &Params::K_pg1},         {"k_pg2", &Params::K_pg2},
      {"k_pg3", &Params::K_pg3},         {"pole_pairs", &Params::pole_pairs},
      {"k_a", &Params::K_a},             {"k_e", &Params::K_e},
      {"d_duty", &Params::D_duty},       {"x_d", &Params::x_d},
      {"x_d_p", &Params::x_d_p},         {"x_d_pp", &Params::x_d_pp},
      {"x_q", &Params::x_q},             {"x_q_pp", &Params::x_q_pp},
      {"x_l", &Params::x_l},             {"t_d0_p", &Params::T_d0_p},
      {"t_d0_pp", &Params::T_d0_pp},     {"t_q0_pp", &Params::T_q0_pp},
      {"r_s", &Params::R_s},             {"h_t", &Params::H_t},
      {"h_g", &Params::H_g},             {"k_shaft", &Params::K_shaft},
      {"d_shaft", &Params::D_shaft},     {"p_storage", &Params::P_storage},
      {"k_track", &Params::k_track},     {"omega_ref", &Params::omega_ref},
      {"k_beta", &Params::k_beta},       {"beta_max", &Params::beta_max},
      {"m_max", &Params::m_max},
  };
  return keys;
}

const std::set<std::string>& cvsc_param_keys() {
  static const std::set<std::string> keys = {"k_a", "k_e", "k_pg1", "k_pg2", "k_pg3", "v_dc_nom"};
  return keys;
}

// Returns an error message, or empty on success.
std::string set_unit_key(dynamics::WpgUnit& u, const std::string& section, const std::string& key,
                         const std::string& value) {
  const bool is_cvsc = section == "cvsc";
  if (!is_cvsc) {
    if (key == "bus") {
      const auto v = to_int(value);
      if (!v) return "bus must be an integer";
      u.bus = *v;
      return {};
    }
    if (key == "p_dispatch" || key == "v_setpoint") {
      const auto v = to_double(value);
      if (!v) return key + " must be a number";
      (key == "p_dispatch" ? u.p_dispatch : u.v_setpoint) = *v;
      return {};
    }
    if (key == "pf_slack") {
      const auto v = to_bool(value);
      if (!v) return "pf_slack must be true or false";
      u.pf_slack = *v;
      return {};
    }
  } else {
    if (key == "has_governor") {
      const auto v = to_bool(value);
      if (!v) return "has_governor must be true or false";
      u.gains.has_governor = *v;
      return {};
    }
    if (!cvsc_param_keys().count(key)) return "unknown key '" + key + "'";
  }
  for (const auto& [name, member] : param_keys()) {
    if (key == name) {
      const auto v = to_double(value);
      if (!v) return key + " must be a number";
      u.params.*member = *v;
      return {};
    }
  }
  return "unknown key '" + key + "'";
}

std::string set_bases_key(model::NetworkModel& net, const std::string& key, const std::string& value) {
  const auto v = to_double(value);
  if (!v) return key + " must be a number";
  if (key == "s_system") net.s_system = *v;
  else if (key == "f_n") net.f_n = *v;
  else return "unknown key '" + key + "'";
  return {};
}

void refresh_gains(SystemConfig& cfg) {
  for (auto& u : cfg.units) u.gains = controller::CvscGains::from_parameters(u.params, u.gains.has_governor);
}

// Strips comments, returns the trimmed remainder.
std::string clean_line(std::string_view raw) {
  const auto hash = raw.find('#');
  return trim(hash == std::string_view::npos ? raw : raw.substr(0, hash));
}

}  // namespace

ParseError::ParseError(std::vector<std::string> problems) : Error(join(problems)), problems_(std::move(problems)) {}

std::pair<std::string, std::string> split_assignment(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ParseError({"expected key = value, got '" + std::string(text) + "'"});
  return {lower(trim(text.substr(0, eq))), trim(text.substr(eq + 1))};
}

SystemConfig parse_system_config(std::string_view text) {
  SystemConfig cfg;
  std::vector<std::string> problems;
  std::map<std::string, std::size_t> unit_pos;  // name -> index into cfg.units
  std::map<std::string, std::map<std::string, std::string>> cvsc_sections;
  std::map<std::string, int> cvsc_lines;
  std::set<std::string> seen_sections;

  std::string section, unit;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  auto fail = [&](const std::string& msg) { problems.push_back("line " + std::to_string(lineno) + ": " + msg); };

  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        fail("malformed section header");
        continue;
      }
      const std::string name = lower(trim(std::string_view(line).substr(1, line.size() - 2)));
      const auto dot = name.find('.');
      section = dot == std::string::npos ? name : name.substr(0, dot);
      unit = dot == std::string::npos ? "" : name.substr(dot + 1);
      if (section == "wpg" || section == "cvsc") {
        if (unit.empty()) fail("section [" + section + "] needs a unit name, e.g. [" + section + ".1]");
      } else if (section != "bases" && section != "buses" && section != "branches" && section != "loads") {
        fail("unknown section [" + name + "]");
        section = "?";
      } else if (!unit.empty()) {
        fail("section [" + section + "] takes no suffix");
      }
      if (!seen_sections.insert(name).second) fail("duplicate section [" + name + "]");
      if (section == "wpg" && !unit.empty()) {
        dynamics::WpgUnit u;
        u.name = unit;
        u.params = model::datasheet_defaults();
        unit_pos[unit] = cfg.units.size();
        cfg.units.push_back(u);
      }
      if (section == "cvsc") cvsc_lines[unit] = lineno;
      continue;
    }
    if (section.empty()) {
      fail("content before any section header");
      continue;
    }
    if (section == "?") continue;

    if (section == "bases" || section == "wpg" || section == "cvsc") {
      if (line.find('=') == std::string::npos) {
        fail("expected key = value");
        continue;
      }
      const auto [key, value] = split_assignment(line);
      std::string err;
      if (section == "bases") {
        err = set_bases_key(cfg.network, key, value);
      } else if (section == "wpg") {
        if (!unit.empty()) err = set_unit_key(cfg.units[unit_pos[unit]], "wpg", key, value);
      } else if (!unit.empty()) {
        cvsc_sections[unit][key] = value;
        continue;
      }
      if (!err.empty()) fail("[" + section + (unit.empty() ? "" : "." + unit) + "] " + err);
      continue;
    }

    const auto t = tokens(line);
    if (section == "buses") {
      if (t.size() != 3) {
        fail("bus rows are 'id kind v_base'");
        continue;
      }
      model::Bus b;
      const auto id = to_int(t[0]);
      const auto vb = to_double(t[2]);
      if (!id || !vb) {
        fail("bus row has a malformed number");
        continue;
      }
      b.id = *id;
      b.v_base = *vb;
      try {
        b.kind = model::bus_kind_from_string(lower(t[1]));
      } catch (const Error& e) {
        fail(e.what());
        continue;
      }
      cfg.network.buses.push_back(b);
    } else if (section == "branches") {
      if (t.size() != 7) {
        fail("branch rows are 'name from to r x b tap'");
        continue;
      }
      model::Branch br;
      br.name = t[0];
      const auto f = to_int(t[1]);
      const auto to = to_int(t[2]);
      const auto r = to_double(t[3]);
      const auto x = to_double(t[4]);
      const auto b = to_double(t[5]);
      const auto tap = to_double(t[6]);
      if (!f || !to || !r || !x || !b || !tap) {
        fail("branch " + br.name + " has a malformed number");
        continue;
      }
      br.from = *f;
      br.to = *to;
      br.r = *r;
      br.x = *x;
      br.b_shunt = *b;
      br.tap = *tap;
      if (br.x == 0.0) fail("branch " + br.name + ": x must be nonzero");
      cfg.network.branches.push_back(br);
    } else if (section == "loads") {
      if (t.size() != 4) {
        fail("load rows are 'bus p q model'");
        continue;
      }
      model::Load ld;
      const auto bus = to_int(t[0]);
      const auto p = to_double(t[1]);
      const auto q = to_double(t[2]);
      if (!bus || !p || !q) {
        fail("load row has a malformed number");
        continue;
      }
      ld.bus = *bus;
      ld.p = *p;
      ld.q = *q;
      try {
        ld.model = model::load_model_from_string(lower(t[3]));
      } catch (const Error& e) {
        fail(e.what());
        continue;
      }
      cfg.network.loads.push_back(ld);
    }
  }

  for (const auto& [name, keys] : cvsc_sections) {
    lineno = cvsc_lines[name];
    if (!unit_pos.count(name)) {
      fail("[cvsc." + name + "] has no matching [wpg." + name + "]");
      continue;
    }
    for (const auto& [key, value] : keys) {
      const std::string err = set_unit_key(cfg.units[unit_pos[name]], "cvsc", key, value);
      if (!err.empty()) fail("[cvsc." + name + "] " + err);
    }
  }

  for (const char* req : {"bases", "buses", "branches"}) {
    if (!seen_sections.count(req)) problems.push_back(std::string("missing section [") + req + "]");
  }
  if (cfg.units.empty()) problems.emplace_back("missing section [wpg.N]");
  for (const auto& u : cfg.units) {
    if (u.bus == 0) problems.push_back("[wpg." + u.name + "] bus is required");
  }
  refresh_gains(cfg);

  if (problems.empty()) {
    try {
      cfg.to_system();
    } catch (const ValidationError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    } catch (const Error& e) {
      problems.emplace_back(e.what());
    }
  }
  if (!problems.empty()) throw ParseError(std::move(problems));
  return cfg;
}

std::string serialize_system_config(const SystemConfig& cfg) {
  std::ostringstream out;
  out << "[bases]\n";
  out << "s_system = " << format_number(cfg.network.s_system) << "\n";
  out << "f_n = " << format_number(cfg.network.f_n) << "\n\n";
  out << "[buses]\n# id kind v_base\n";
  for (const auto& b : cfg.network.buses) {
    out << b.id << " " << model::to_string(b.kind) << " " << format_number(b.v_base) << "\n";
  }
  out << "\n[branches]\n# name from to r x b tap\n";
  for (const auto& br : cfg.network.branches) {
    out << br.name << " " << br.from << " " << br.to << " " << format_number(br.r) << " " << format_number(br.x)
        << " " << format_number(br.b_shunt) << " " << format_number(br.tap) << "\n";
  }
  out << "\n[loads]\n# bus p q model\n";
  for (const auto& ld : cfg.network.loads) {
    out << ld.bus << " " << format_number(ld.p) << " " << format_number(ld.q) << " " << model::to_string(ld.model)
        << "\n";
  }
  for (const auto& u : cfg.units) {
    out << "\n[wpg." << u.name << "]\n";
    out << "bus = " << u.bus << "\n";
    out << "p_dispatch = " << format_number(u.p_dispatch) << "\n";
    out << "v_setpoint = " << format_number(u.v_setpoint) << "\n";
    out << "pf_slack = " << (u.pf_slack ? "true" : "false") << "\n";
    for (const auto& [name, member] : param_keys()) {
      out << name << " = " << format_number(u.params.*member) << "\n";
    }
    out << "\n[cvsc." << u.name << "]\n";
    out << "has_governor = " << (u.gains.has_governor ? "true" : "false") << "\n";
  }
  return out.str();
}

void apply_override(SystemConfig& cfg, std::string_view path, std::string_view value_view) {
  const std::string p = lower(trim(path));
  const std::string value = trim(value_view);
  const auto first = p.find('.');
  if (first == std::string::npos) throw ParseError({"override '" + p + "' needs a section prefix"});
  const std::string section = p.substr(0, first);
  std::string err;
  if (section == "bases") {
    err = set_bases_key(cfg.network, p.substr(first + 1), value);
  } else if (section == "wpg" || section == "cvsc") {
    const auto second = p.find('.', first + 1);
    if (second == std::string::npos) throw ParseError({"override '" + p + "' needs a unit and key"});
    const std::string unit = p.substr(first + 1, second - first - 1);
    const std::string key = p.substr(second + 1);
    auto it = std::find_if(cfg.units.begin(), cfg.units.end(), [&](const auto& u) { return u.name == unit; });
    if (it == cfg.units.end()) throw ParseError({"override '" + p + "' names unknown unit " + unit});
    err = set_unit_key(*it, section, key, value);
  } else {
    err = "unknown section";
  }
  if (!err.empty()) throw ParseError({"override '" + p + "': " + err});
  refresh_gains(cfg);
  try {
    cfg.to_system();
  } catch (const ValidationError& e) {
    throw ParseError(e.problems());
  }
}

dynamics::Scenario parse_scenario(std::string_view text) {
  dynamics::Scenario sc;
  std::vector<std::string> problems;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  bool have_header = false;
  auto fail = [&](const std::string& msg) { problems.push_back("line " + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = clean_line(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = lower(trim(std::string_view(line).substr(1, line.size() >= 2 ? line.size() - 2 : 0)));
      if (section == "scenario") have_header = true;
      else if (section != "events") fail("unknown section [" + section + "]");
      continue;
    }
    if (section == "scenario") {
      if (line.find('=') == std::string::npos) {
        fail("expected key = value");
        continue;
      }
      const auto [key, value] = split_assignment(line);
      if (key == "outputs") {
        std::string item;
        std::istringstream list(value);
        while (std::getline(list, item, ',')) {
          if (!trim(item).empty()) sc.outputs.push_back(trim(item));
        }
        continue;
      }
      const auto v = to_double(value);
      if (!v) fail(key + " must be a number");
      else if (key == "t_end") sc.t_end = *v;
      else if (key == "dt") sc.dt = *v;
      else fail("unknown key '" + key + "'");
    } else if (section == "events") {
      const auto t = tokens(line);
      if (t.size() < 2) {
        fail("event rows are 'time kind key=value ...'");
        continue;
      }
      network::Event ev;
      const auto time = to_double(t[0]);
      if (!time) {
        fail("event time is not a number");
        continue;
      }
      ev.time = *time;
      try {
        ev.kind = network::event_kind_from_string(lower(t[1]));
      } catch (const Error& e) {
        fail(e.what());
        continue;
      }
      for (std::size_t i = 2; i < t.size(); ++i) {
        const auto eq = t[i].find('=');
        if (eq == std::string::npos) {
          fail("payload item '" + t[i] + "' is not key=value");
          continue;
        }
        const std::string key = lower(t[i].substr(0, eq));
        const std::string value = t[i].substr(eq + 1);
        if (key == "branch") {
          ev.branch = value;
          continue;
        }
        if (key == "bus") {
          const auto b = to_int(value);
          if (!b) fail("bus must be an integer");
          else ev.bus = *b;
          continue;
        }
        const auto v = to_double(value);
        if (!v) fail(key + " must be a number");
        else if (key == "p") ev.p = *v;
        else if (key == "q") ev.q = *v;
        else if (key == "location") ev.location = *v;
        else if (key == "y_fault") ev.y_fault = *v;
        else fail("unknown payload key '" + key + "'");
      }
      const bool needs_branch = ev.kind == network::EventKind::reclose;
      if (needs_branch && ev.branch.empty()) fail("reclose needs branch=");
      if (ev.kind == network::EventKind::load_step && ev.bus == 0) fail("load-step needs bus=");
      if ((ev.kind == network::EventKind::fault || ev.kind == network::EventKind::clear) && ev.branch.empty() &&
          ev.bus == 0) {
        fail(std::string(network::to_string(ev.kind)) + " needs branch= or bus=");
      }
      sc.events.push_back(ev);
    } else {
      fail("content outside a known section");
    }
  }
  if (!have_header) problems.emplace_back("missing section [scenario]");
  if (problems.empty()) {
    try {
      dynamics::validate(sc);
    } catch (const ValidationError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  }
  if (!problems.empty()) throw ParseError(std::move(problems));
  return sc;
}

std::string serialize_scenario(const dynamics::Scenario& sc) {
  std::ostringstream out;
  out << "[scenario]\n";
  out << "t_end = " << format_number(sc.t_end) << "\n";
  out << "dt = " << format_number(sc.dt) << "\n";
  if (!sc.outputs.empty()) {
    out << "outputs = ";
    for (std::size_t i = 0; i < sc.outputs.size(); ++i) out << (i ? "," : "") << sc.outputs[i];
    out << "\n";
  }
  out << "\n[events]\n";
  for (const auto& e : sc.events) {
    out << format_number(e.time) << " " << network::to_string(e.kind);
    if (!e.branch.empty()) out << " branch=" << e.branch;
    if (e.bus) out << " bus=" << e.bus;
    if (e.kind == network::EventKind::load_step) out << " p=" << format_number(e.p) << " q=" << format_number(e.q);
    if (e.kind == network::EventKind::fault) {
      if (!e.branch.empty()) out << " location=" << format_number(e.location);
      out << " y_fault=" << format_number(e.y_fault);
    }
    out << "\n";
  }
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError({"cannot open '" + path + "'"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cvsc::cli
