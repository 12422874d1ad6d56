#include "spdelab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

#include "spdelab/csv.hpp"
#include "spdelab/errors.hpp"

namespace spdelab {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"", {"seed", "output_dir"}},
      {"space", {"L", "m", "alpha", "quad_points"}},
      {"operator", {"name", "nu", "b", "noise", "sigma", "channels", "beta"}},
      {"control", {"family", "kappa", "n_knots", "gain_scale", "load"}},
      {"sim",
       {"T", "n_steps", "k_noise", "scheme", "taming_power", "x0", "x0_scale",
        "stop_nh", "stop_nv", "hard_stop", "store_noise", "divergence_cap",
        "store"}},
      {"cost",
       {"mode", "q", "r", "q_T", "v_cap", "joint", "x_ref", "x_T", "tau_m"}},
      {"run",
       {"n_paths", "p_list", "delta_list", "method", "budget", "opt_n_paths",
        "opt_init_step", "n_seq", "ctrl_points", "check_samples", "r_max", "c_p",
        "threads"}},
  };
  return s;
}

struct Located {
  std::string value;
  int line = 0;
  int col = 0;
};

std::string spot(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

} // namespace

void RawConfig::set(const std::string& section, const std::string& key,
                    const std::string& value) {
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (it->section == section && it->key == key) {
      it->value = value;
      return;
    }
  }
  entries.push_back({section, key, value, 0, 0});
}

RawConfig parse_ini(const std::string& text) {
  RawConfig raw;
  std::string current_section;
  int line_no = 0;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    const char first = line[start];
    if (first == '#' || first == ';') continue;
    const int col = static_cast<int>(start) + 1;
    if (first == '[') {
      const auto close = line.find(']', start);
      if (close == std::string::npos)
        throw ConfigError("section header has no closing ']'", line_no, col);
      const std::string name{trim(std::string_view(line).substr(start + 1, close - start - 1))};
      if (name.empty())
        throw ConfigError("section header names no section", line_no, col);
      const auto tail = trim(std::string_view(line).substr(close + 1));
      if (!tail.empty() && tail.front() != '#' && tail.front() != ';')
        throw ConfigError("unexpected text after section header", line_no,
                          static_cast<int>(close) + 2);
      current_section = name;
      continue;
    }
    const auto eq = line.find('=', start);
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", line_no, col);
    const std::string key{trim(std::string_view(line).substr(start, eq - start))};
    if (key.empty()) throw ConfigError("assignment names no key", line_no, col);
    const std::string value{trim(std::string_view(line).substr(eq + 1))};
    raw.entries.push_back({current_section, key, value, line_no, col});
  }
  return raw;
}

void apply_override(RawConfig& raw, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must look like section.key=value: " + assignment);
  const std::string left{trim(std::string_view(assignment).substr(0, eq))};
  const std::string value{trim(std::string_view(assignment).substr(eq + 1))};
  if (left.empty())
    throw ConfigError("override names no key: " + assignment);
  const auto dot = left.find('.');
  const std::string section = dot == std::string::npos ? "" : left.substr(0, dot);
  const std::string key = dot == std::string::npos ? left : left.substr(dot + 1);
  if (key.empty()) throw ConfigError("override names no key: " + assignment);
  raw.set(section, key, value);
}

namespace {

class Reader {
 public:
  explicit Reader(const RawConfig& raw) {
    const auto& known = schema();
    for (const auto& e : raw.entries) {
      const auto sec_it = known.find(e.section);
      if (sec_it == known.end())
        throw ConfigError("unknown section [" + e.section + "]", e.line, e.col);
      if (!sec_it->second.count(e.key))
        throw ConfigError("unknown key '" + e.key + "' in section [" +
                              (e.section.empty() ? "top level" : e.section) + "]",
                          e.line, e.col);
      map_[{e.section, e.key}] = {e.value, e.line, e.col};
    }
  }

  const Located* find(const std::string& sec, const std::string& key) const {
    const auto it = map_.find({sec, key});
    return it == map_.end() ? nullptr : &it->second;
  }

  void get(const std::string& sec, const std::string& key, double& out) const {
    if (const Located* l = find(sec, key)) {
      if (!parse_double(l->value, out)) bad(sec, key, *l);
    }
  }
  void get(const std::string& sec, const std::string& key, int& out) const {
    if (const Located* l = find(sec, key)) {
      long long v = 0;
      if (!parse_int(l->value, v)) bad(sec, key, *l);
      out = static_cast<int>(v);
    }
  }
  void get(const std::string& sec, const std::string& key, std::uint64_t& out) const {
    if (const Located* l = find(sec, key)) {
      unsigned long long v = 0;
      const char* first = l->value.data();
      const char* last = first + l->value.size();
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc() || res.ptr != last) bad(sec, key, *l);
      out = v;
    }
  }
  void get(const std::string& sec, const std::string& key, bool& out) const {
    if (const Located* l = find(sec, key)) {
      if (l->value == "true" || l->value == "1")
        out = true;
      else if (l->value == "false" || l->value == "0")
        out = false;
      else
        bad(sec, key, *l);
    }
  }
  void get(const std::string& sec, const std::string& key, std::string& out) const {
    if (const Located* l = find(sec, key)) out = l->value;
  }
  void get(const std::string& sec, const std::string& key,
           std::vector<double>& out) const {
    if (const Located* l = find(sec, key)) {
      out.clear();
      std::string_view rest = l->value;
      if (trim(rest).empty()) return;
      while (true) {
        const auto comma = rest.find(',');
        const std::string_view piece = trim(rest.substr(0, comma));
        double v = 0.0;
        if (piece.empty() || !parse_double(piece, v)) bad(sec, key, *l);
        out.push_back(v);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
    }
  }

  template <typename Enum>
  void get_enum(const std::string& sec, const std::string& key,
                const std::vector<std::pair<std::string, Enum>>& names,
                Enum& out) const {
    if (const Located* l = find(sec, key)) {
      for (const auto& [name, v] : names)
        if (l->value == name) {
          out = v;
          return;
        }
      std::string allowed;
      for (const auto& [name, v] : names) {
        if (!allowed.empty()) allowed += ", ";
        allowed += name;
      }
      throw ConfigError("invalid value for " + spot(sec, key) + ": '" + l->value +
                            "' (expected one of: " + allowed + ")",
                        l->line, l->col);
    }
  }

  void require(bool ok, const std::string& sec, const std::string& key,
               const std::string& message) const {
    if (ok) return;
    const Located* l = find(sec, key);
    throw ConfigError(message, l ? l->line : 0, l ? l->col : 0);
  }

 private:
  [[noreturn]] void bad(const std::string& sec, const std::string& key,
                        const Located& l) const {
    throw ConfigError("invalid value for " + spot(sec, key) + ": '" + l.value + "'",
                      l.line, l.col);
  }
  std::map<std::pair<std::string, std::string>, Located> map_;
};

} // namespace

Config validate_config(const RawConfig& raw) {
  Reader r(raw);
  Config cfg;

  r.get("", "seed", cfg.seed);
  r.get("", "output_dir", cfg.output_dir);

  r.get("space", "L", cfg.space.length);
  r.get("space", "m", cfg.space.m);
  r.get("space", "alpha", cfg.space.alpha);
  r.get("space", "quad_points", cfg.space.quad_points);
  r.require(cfg.space.length > 0.0, "space", "L", "L must be positive");
  r.require(cfg.space.m >= 1, "space", "m", "m must be at least 1");
  r.require(cfg.space.alpha > 1.0, "space", "alpha", "alpha must exceed 1");
  r.require(cfg.space.quad_points == 0 || cfg.space.quad_points >= 4 * cfg.space.m,
            "space", "quad_points",
            "quad_points must be 0 (default) or at least 4*m");

  r.get("operator", "name", cfg.op.name);
  r.get("operator", "nu", cfg.op.nu);
  r.get("operator", "b", cfg.op.b);
  r.get_enum("operator", "noise",
             {{"none", NoiseKind::none},
              {"additive", NoiseKind::additive},
              {"multiplicative", NoiseKind::multiplicative}},
             cfg.op.noise);
  r.get("operator", "sigma", cfg.op.sigma);
  r.get("operator", "channels", cfg.op.channels);
  r.get("operator", "beta", cfg.op.beta);
  {
    static const std::set<std::string> ops = {"heat", "convection_diffusion",
                                              "p_laplace", "sign_flipped_heat",
                                              "step_discontinuous"};
    r.require(ops.count(cfg.op.name) != 0, "operator", "name",
              "unknown operator '" + cfg.op.name + "'");
  }
  r.require(cfg.op.sigma >= 0.0, "operator", "sigma", "sigma must be nonnegative");
  r.require(cfg.op.channels >= 0, "operator", "channels",
            "channels must be nonnegative");
  r.require(cfg.op.beta == 0.0 || cfg.op.beta > 1.0, "operator", "beta",
            "beta must exceed 1");

  r.get("control", "family", cfg.control.family);
  r.get("control", "kappa", cfg.control.kappa);
  r.get("control", "n_knots", cfg.control.n_knots);
  r.get("control", "gain_scale", cfg.control.gain_scale);
  r.get("control", "load", cfg.control.load);
  r.require(cfg.control.family == "zero" || cfg.control.family == "affine",
            "control", "family", "family must be 'zero' or 'affine'");
  r.require(cfg.control.kappa > 0.0, "control", "kappa", "kappa must be positive");
  r.require(cfg.control.n_knots >= 1, "control", "n_knots",
            "n_knots must be at least 1");

  r.get("sim", "T", cfg.sim.horizon);
  r.get("sim", "n_steps", cfg.sim.n_steps);
  r.get("sim", "k_noise", cfg.sim.k_noise);
  r.get_enum("sim", "scheme",
             {{"explicit", Scheme::explicit_em}, {"tamed", Scheme::tamed_em}},
             cfg.sim.scheme);
  r.get("sim", "taming_power", cfg.sim.taming_power);
  r.get("sim", "x0", cfg.sim.x0);
  r.get("sim", "x0_scale", cfg.sim.x0_scale);
  r.get("sim", "stop_nh", cfg.sim.stop_nh);
  r.get("sim", "stop_nv", cfg.sim.stop_nv);
  r.get("sim", "hard_stop", cfg.sim.hard_stop);
  r.get("sim", "store_noise", cfg.sim.store_noise);
  r.get("sim", "divergence_cap", cfg.sim.divergence_cap);
  r.get_enum("sim", "store",
             {{"full", Storage::full}, {"summary", Storage::summary}},
             cfg.sim.store);
  r.require(cfg.sim.horizon > 0.0, "sim", "T", "T must be positive");
  r.require(cfg.sim.n_steps >= 1, "sim", "n_steps", "n_steps must be at least 1");
  r.require(cfg.sim.k_noise >= 0, "sim", "k_noise", "k_noise must be nonnegative");
  r.require(cfg.sim.taming_power > 0.0, "sim", "taming_power",
            "taming_power must be positive");
  r.require(cfg.sim.stop_nh >= 0.0, "sim", "stop_nh", "stop_nh must be nonnegative");
  r.require(cfg.sim.stop_nv >= 0.0, "sim", "stop_nv", "stop_nv must be nonnegative");
  r.require(cfg.sim.divergence_cap >= 0.0 && cfg.sim.divergence_cap <= 1.0, "sim",
            "divergence_cap", "divergence_cap must lie in [0, 1]");

  r.get_enum("cost", "mode",
             {{"tracking", RunningCostMode::tracking},
              {"v_penalty", RunningCostMode::v_penalty}},
             cfg.cost.mode);
  r.get("cost", "q", cfg.cost.q);
  r.get("cost", "r", cfg.cost.r);
  r.get("cost", "q_T", cfg.cost.q_terminal);
  r.get("cost", "v_cap", cfg.cost.v_cap);
  r.get("cost", "joint", cfg.cost.joint);
  r.get("cost", "x_ref", cfg.cost.x_ref);
  r.get("cost", "x_T", cfg.cost.x_term);
  r.get("cost", "tau_m", cfg.cost.tau_m);
  r.require(cfg.cost.q >= 0.0, "cost", "q", "q must be nonnegative");
  r.require(cfg.cost.r >= 0.0, "cost", "r", "r must be nonnegative");
  r.require(cfg.cost.q_terminal >= 0.0, "cost", "q_T", "q_T must be nonnegative");
  r.require(cfg.cost.v_cap > 0.0, "cost", "v_cap", "v_cap must be positive");
  r.require(cfg.cost.tau_m >= 0.0, "cost", "tau_m", "tau_m must be nonnegative");

  r.get("run", "n_paths", cfg.run.n_paths);
  r.get("run", "p_list", cfg.run.p_list);
  r.get("run", "delta_list", cfg.run.delta_list);
  r.get_enum("run", "method",
             {{"nelder_mead", OptMethod::nelder_mead},
              {"random_search", OptMethod::random_search},
              {"spsa", OptMethod::spsa}},
             cfg.run.method);
  r.get("run", "budget", cfg.run.budget);
  r.get("run", "opt_n_paths", cfg.run.opt_n_paths);
  r.get("run", "opt_init_step", cfg.run.opt_init_step);
  r.get("run", "n_seq", cfg.run.n_seq);
  r.get("run", "ctrl_points", cfg.run.ctrl_points);
  r.get("run", "check_samples", cfg.run.check_samples);
  r.get("run", "r_max", cfg.run.r_max);
  r.get("run", "c_p", cfg.run.c_p);
  r.get("run", "threads", cfg.run.threads);
  r.require(cfg.run.n_paths >= 1, "run", "n_paths", "n_paths must be at least 1");
  for (double p : cfg.run.p_list)
    r.require(p >= 2.0, "run", "p_list", "each moment order must be at least 2");
  for (double d : cfg.run.delta_list)
    r.require(d > 0.0, "run", "delta_list", "each delta must be positive");
  r.require(cfg.run.budget >= 1, "run", "budget", "budget must be at least 1");
  r.require(cfg.run.opt_n_paths >= 1, "run", "opt_n_paths",
            "opt_n_paths must be at least 1");
  r.require(cfg.run.opt_init_step > 0.0, "run", "opt_init_step",
            "opt_init_step must be positive");
  r.require(cfg.run.n_seq >= 1, "run", "n_seq", "n_seq must be at least 1");
  r.require(cfg.run.ctrl_points >= 1, "run", "ctrl_points",
            "ctrl_points must be at least 1");
  r.require(cfg.run.check_samples >= 1, "run", "check_samples",
            "check_samples must be at least 1");
  r.require(cfg.run.r_max > 0.0, "run", "r_max", "r_max must be positive");
  r.require(cfg.run.c_p >= 0.0, "run", "c_p", "c_p must be nonnegative");
  r.require(cfg.run.threads >= 0, "run", "threads", "threads must be nonnegative");

  return cfg;
}

Config load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return validate_config(parse_ini(buf.str()));
}

namespace {

std::string join_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

const char* noise_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::additive: return "additive";
    case NoiseKind::multiplicative: return "multiplicative";
  }
  return "none";
}

const char* method_name(OptMethod m) {
  switch (m) {
    case OptMethod::nelder_mead: return "nelder_mead";
    case OptMethod::random_search: return "random_search";
    case OptMethod::spsa: return "spsa";
  }
  return "nelder_mead";
}

} // namespace

std::string serialize_config(const Config& cfg) {
  std::ostringstream os;
  os << "seed = " << cfg.seed << '\n';
  os << "output_dir = " << cfg.output_dir << '\n';
  os << "\n[space]\n";
  os << "L = " << format_double(cfg.space.length) << '\n';
  os << "m = " << cfg.space.m << '\n';
  os << "alpha = " << format_double(cfg.space.alpha) << '\n';
  os << "quad_points = " << cfg.space.quad_points << '\n';
  os << "\n[operator]\n";
  os << "name = " << cfg.op.name << '\n';
  os << "nu = " << format_double(cfg.op.nu) << '\n';
  os << "b = " << format_double(cfg.op.b) << '\n';
  os << "noise = " << noise_name(cfg.op.noise) << '\n';
  os << "sigma = " << format_double(cfg.op.sigma) << '\n';
  os << "channels = " << cfg.op.channels << '\n';
  os << "beta = " << format_double(cfg.op.beta) << '\n';
  os << "\n[control]\n";
  os << "family = " << cfg.control.family << '\n';
  os << "kappa = " << format_double(cfg.control.kappa) << '\n';
  os << "n_knots = " << cfg.control.n_knots << '\n';
  os << "gain_scale = " << format_double(cfg.control.gain_scale) << '\n';
  os << "load = " << cfg.control.load << '\n';
  os << "\n[sim]\n";
  os << "T = " << format_double(cfg.sim.horizon) << '\n';
  os << "n_steps = " << cfg.sim.n_steps << '\n';
  os << "k_noise = " << cfg.sim.k_noise << '\n';
  os << "scheme = " << (cfg.sim.scheme == Scheme::explicit_em ? "explicit" : "tamed")
     << '\n';
  os << "taming_power = " << format_double(cfg.sim.taming_power) << '\n';
  os << "x0 = " << cfg.sim.x0 << '\n';
  os << "x0_scale = " << format_double(cfg.sim.x0_scale) << '\n';
  os << "stop_nh = " << format_double(cfg.sim.stop_nh) << '\n';
  os << "stop_nv = " << format_double(cfg.sim.stop_nv) << '\n';
  os << "hard_stop = " << (cfg.sim.hard_stop ? "true" : "false") << '\n';
  os << "store_noise = " << (cfg.sim.store_noise ? "true" : "false") << '\n';
  os << "divergence_cap = " << format_double(cfg.sim.divergence_cap) << '\n';
  os << "store = " << (cfg.sim.store == Storage::full ? "full" : "summary") << '\n';
  os << "\n[cost]\n";
  os << "mode = "
     << (cfg.cost.mode == RunningCostMode::tracking ? "tracking" : "v_penalty")
     << '\n';
  os << "q = " << format_double(cfg.cost.q) << '\n';
  os << "r = " << format_double(cfg.cost.r) << '\n';
  os << "q_T = " << format_double(cfg.cost.q_terminal) << '\n';
  os << "v_cap = " << format_double(cfg.cost.v_cap) << '\n';
  os << "joint = " << (cfg.cost.joint ? "true" : "false") << '\n';
  os << "x_ref = " << cfg.cost.x_ref << '\n';
  os << "x_T = " << cfg.cost.x_term << '\n';
  os << "tau_m = " << format_double(cfg.cost.tau_m) << '\n';
  os << "\n[run]\n";
  os << "n_paths = " << cfg.run.n_paths << '\n';
  os << "p_list = " << join_list(cfg.run.p_list) << '\n';
  os << "delta_list = " << join_list(cfg.run.delta_list) << '\n';
  os << "method = " << method_name(cfg.run.method) << '\n';
  os << "budget = " << cfg.run.budget << '\n';
  os << "opt_n_paths = " << cfg.run.opt_n_paths << '\n';
  os << "opt_init_step = " << format_double(cfg.run.opt_init_step) << '\n';
  os << "n_seq = " << cfg.run.n_seq << '\n';
  os << "ctrl_points = " << cfg.run.ctrl_points << '\n';
  os << "check_samples = " << cfg.run.check_samples << '\n';
  os << "r_max = " << format_double(cfg.run.r_max) << '\n';
  os << "c_p = " << format_double(cfg.run.c_p) << '\n';
  os << "threads = " << cfg.run.threads << '\n';
  return os.str();
}

} // namespace spdelab
