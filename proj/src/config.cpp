#include "qmf/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <regex>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"
#include "qmf/io.hpp"
#include "qmf/quantum.hpp"

namespace qmf {

namespace {

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Entry {
  Setter set;
  Getter get;
  bool numeric = true;  // can be swept
};

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c); };
  while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && ws(static_cast<unsigned char>(s[b]))) ++b;
  return s.substr(b);
}

bool parse_bool(const std::string& v, const std::string& field) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(field + ": '" + v + "' is not a boolean", field);
}

double parse_num(const std::string& v, const std::string& field) {
  try {
    return parse_double(v, field);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), field);
  }
}

std::size_t parse_count(const std::string& v, const std::string& field) {
  const double d = parse_num(v, field);
  if (!(d >= 0.0) || d != std::floor(d) || d > 1e15) throw ConfigError(field + ": '" + v + "' is not a count", field);
  return static_cast<std::size_t>(d);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

using Registry = std::map<std::string, Entry>;

template <class Ref>
void add_num(Registry& r, const std::string& key, Ref ref) {
  r[key] = {[key, ref](ExperimentConfig& c, const std::string& v) { ref(c) = parse_num(v, key); },
            [ref](const ExperimentConfig& c) { return format_double(ref(const_cast<ExperimentConfig&>(c))); }, true};
}

template <class Ref>
void add_count(Registry& r, const std::string& key, Ref ref) {
  r[key] = {[key, ref](ExperimentConfig& c, const std::string& v) { ref(c) = parse_count(v, key); },
            [ref](const ExperimentConfig& c) { return std::to_string(ref(const_cast<ExperimentConfig&>(c))); }, true};
}

template <class Ref>
void add_bool(Registry& r, const std::string& key, Ref ref) {
  r[key] = {[key, ref](ExperimentConfig& c, const std::string& v) { ref(c) = parse_bool(v, key); },
            [ref](const ExperimentConfig& c) { return std::string(ref(const_cast<ExperimentConfig&>(c)) ? "true" : "false"); },
            false};
}

template <class Ref>
void add_grid(Registry& r, const std::string& key, Ref ref) {
  r[key] = {[key, ref](ExperimentConfig& c, const std::string& v) { ref(c) = parse_grid(v, key); },
            [ref](const ExperimentConfig& c) { return join(ref(const_cast<ExperimentConfig&>(c))); }, false};
}

template <class Ref>
void add_vec3(Registry& r, const std::string& key, Ref ref) {
  r[key] = {[key, ref](ExperimentConfig& c, const std::string& v) {
              const auto g = parse_grid(v, key);
              if (g.size() != 3) throw ConfigError(key + ": expected three comma-separated components", key);
              try {
                ref(c) = SpinVector::normalized(g[0], g[1], g[2]);
              } catch (const std::invalid_argument&) {
                throw ConfigError(key + ": zero vector", key);
              }
            },
            [ref](const ExperimentConfig& c) {
              const SpinVector& s = ref(const_cast<ExperimentConfig&>(c));
              return join({s.x, s.y, s.z});
            },
            false};
}

const Registry& registry() {
  static const Registry reg = [] {
    Registry r;
    using C = ExperimentConfig;
    r["scenario"] = {[](C& c, const std::string& v) { c.scenario = scenario_from_string(trim(v)); },
                     [](const C& c) { return to_string(c.scenario); }, false};
    r["seed"] = {[](C& c, const std::string& v) {
                   const std::string t = trim(v);
                   try {
                     std::size_t pos = 0;
                     c.seed = std::stoull(t, &pos);
                     if (pos != t.size()) throw std::invalid_argument(t);
                   } catch (const std::exception&) {
                     throw ConfigError("seed: '" + v + "' is not an unsigned 64-bit integer", "seed");
                   }
                 },
                 [](const C& c) { return std::to_string(c.seed); }, false};
    add_count(r, "shots", [](C& c) -> std::size_t& { return c.shots; });
    r["out"] = {[](C& c, const std::string& v) { c.out_dir = trim(v); }, [](const C& c) { return c.out_dir; }, false};
    r["emit"] = {[](C& c, const std::string& v) {
                   const std::string t = trim(v);
                   if (t != "csv" && t != "json") throw ConfigError("emit must be csv or json", "emit");
                   c.emit = t;
                 },
                 [](const C& c) { return c.emit; }, false};

    add_num(r, "lmg.s", [](C& c) -> double& { return c.lmg_s; });
    add_num(r, "lmg.alpha_lin", [](C& c) -> double& { return c.lmg_alpha_lin; });
    add_num(r, "lmg.lambda", [](C& c) -> double& { return c.lmg_lambda; });

    add_num(r, "kt.alpha", [](C& c) -> double& { return c.kt.alpha; });
    add_num(r, "kt.k", [](C& c) -> double& { return c.kt.k; });
    add_num(r, "kt.tau", [](C& c) -> double& { return c.kt.tau; });

    add_num(r, "schedule.t_linear", [](C& c) -> double& { return c.schedule.t_linear; });
    add_num(r, "schedule.t_gap", [](C& c) -> double& { return c.schedule.t_gap; });
    add_num(r, "schedule.t_kick", [](C& c) -> double& { return c.schedule.t_kick; });
    add_count(r, "schedule.n_steps", [](C& c) -> std::size_t& { return c.schedule.n_steps; });

    add_num(r, "loop.sample_period", [](C& c) -> double& { return c.loop.sample_period; });
    add_num(r, "loop.latency", [](C& c) -> double& { return c.loop.latency; });
    add_num(r, "loop.plant_dt", [](C& c) -> double& { return c.loop.plant_dt; });
    add_num(r, "loop.duration", [](C& c) -> double& { return c.loop.duration; });
    add_num(r, "loop.decay_half_time", [](C& c) -> double& { return c.loop.decay_half_time; });
    add_num(r, "loop.theta0", [](C& c) -> double& { return c.loop.initial_state.theta; });
    add_num(r, "loop.phi0", [](C& c) -> double& { return c.loop.initial_state.phi; });
    add_bool(r, "loop.qpn", [](C& c) -> bool& { return c.loop.noise.qpn; });
    add_bool(r, "loop.qpn_offset", [](C& c) -> bool& { return c.loop.noise.qpn_offset; });
    add_bool(r, "loop.shot_noise", [](C& c) -> bool& { return c.loop.noise.shot; });
    add_bool(r, "loop.rotation_noise", [](C& c) -> bool& { return c.loop.noise.rotation; });
    add_num(r, "loop.rf_phase", [](C& c) -> double& { return c.loop.rf_phase; });
    add_bool(r, "loop.finite_prep_pulse", [](C& c) -> bool& { return c.loop.finite_prep_pulse; });
    add_num(r, "loop.prep_pulse_duration", [](C& c) -> double& { return c.loop.prep_pulse_duration; });
    r["loop.arithmetic"] = {[](C& c, const std::string& v) {
                              const std::string t = trim(v);
                              if (t == "fixed") c.loop.arithmetic = Arithmetic::fixed_point;
                              else if (t == "double") c.loop.arithmetic = Arithmetic::double_precision;
                              else throw ConfigError("loop.arithmetic must be fixed or double", "loop.arithmetic");
                            },
                            [](const C& c) {
                              return std::string(c.loop.arithmetic == Arithmetic::fixed_point ? "fixed" : "double");
                            },
                            false};
    add_num(r, "loop.max_z_rate", [](C& c) -> double& { return c.loop.max_z_rate; });
    add_num(r, "loop.decay_model_error", [](C& c) -> double& { return c.loop.decay_model_error; });

    add_bool(r, "fixed_point.signed", [](C& c) -> bool& { return c.loop.format.is_signed; });
    r["fixed_point.word_bits"] = {[](C& c, const std::string& v) {
                                    c.loop.format.word_bits = static_cast<int>(parse_count(v, "fixed_point.word_bits"));
                                  },
                                  [](const C& c) { return std::to_string(c.loop.format.word_bits); }, true};
    r["fixed_point.int_bits"] = {[](C& c, const std::string& v) {
                                   c.loop.format.int_bits = static_cast<int>(parse_count(v, "fixed_point.int_bits"));
                                 },
                                 [](const C& c) { return std::to_string(c.loop.format.int_bits); }, true};

    add_num(r, "rotation_noise.fixed_detuning", [](C& c) -> double& { return c.loop.rotation_noise.fixed_detuning; });
    add_num(r, "rotation_noise.static_detuning_sigma",
            [](C& c) -> double& { return c.loop.rotation_noise.static_detuning_sigma; });
    add_num(r, "rotation_noise.amplitude_error_sigma",
            [](C& c) -> double& { return c.loop.rotation_noise.amplitude_error_sigma; });
    add_num(r, "rotation_noise.phase_noise_sigma", [](C& c) -> double& { return c.loop.rotation_noise.phase_noise_sigma; });
    add_num(r, "rotation_noise.rabi_rate", [](C& c) -> double& { return c.loop.rotation_noise.rabi_rate; });

    add_num(r, "measurement.n1_eff", [](C& c) -> double& { return c.measurement.n1_eff; });
    add_num(r, "measurement.ratio_n2_n1", [](C& c) -> double& { return c.measurement.ratio_n2_n1; });
    add_num(r, "measurement.f", [](C& c) -> double& { return c.measurement.f; });
    add_num(r, "measurement.chi_p", [](C& c) -> double& { return c.measurement.chi_p; });
    add_num(r, "measurement.sn_coeff", [](C& c) -> double& { return c.measurement.sn_coeff; });

    add_num(r, "analysis.window_begin", [](C& c) -> double& { return c.analysis.window_begin; });
    add_num(r, "analysis.window_end", [](C& c) -> double& { return c.analysis.window_end; });
    add_num(r, "analysis.dpt_threshold", [](C& c) -> double& { return c.analysis.dpt_threshold; });
    r["analysis.dpt_refine"] = {[](C& c, const std::string& v) {
                                  c.analysis.dpt_refine = static_cast<int>(parse_count(v, "analysis.dpt_refine"));
                                },
                                [](const C& c) { return std::to_string(c.analysis.dpt_refine); }, true};
    add_num(r, "analysis.settle_fraction", [](C& c) -> double& { return c.analysis.settle.final_fraction; });
    add_num(r, "analysis.settle_threshold", [](C& c) -> double& { return c.analysis.settle.threshold; });
    add_count(r, "analysis.lyap_steps", [](C& c) -> std::size_t& { return c.analysis.lyap_steps; });
    add_count(r, "analysis.ensemble", [](C& c) -> std::size_t& { return c.analysis.ensemble; });
    add_num(r, "analysis.ensemble_tilt", [](C& c) -> double& { return c.analysis.ensemble_tilt; });
    add_count(r, "analysis.fit_steps", [](C& c) -> std::size_t& { return c.analysis.fit_steps; });
    add_vec3(r, "analysis.lyap_x0", [](C& c) -> SpinVector& { return c.analysis.lyap_x0; });
    add_vec3(r, "analysis.ensemble_centre", [](C& c) -> SpinVector& { return c.analysis.ensemble_centre; });
    add_bool(r, "analysis.include_dc", [](C& c) -> bool& { return c.analysis.include_dc; });

    add_grid(r, "noise_budget.n1_grid", [](C& c) -> std::vector<double>& { return c.noise_budget.n1_grid; });
    add_num(r, "noise_budget.c_sn", [](C& c) -> double& { return c.noise_budget.c_sn; });
    add_num(r, "noise_budget.c_qpn", [](C& c) -> double& { return c.noise_budget.c_qpn; });
    add_num(r, "noise_budget.c_cpn", [](C& c) -> double& { return c.noise_budget.c_cpn; });
    add_grid(r, "noise_budget.windows", [](C& c) -> std::vector<double>& { return c.noise_budget.windows; });
    add_count(r, "noise_budget.series_samples", [](C& c) -> std::size_t& { return c.noise_budget.series_samples; });

    add_grid(r, "composite.theta_grid", [](C& c) -> std::vector<double>& { return c.composite.theta_grid; });
    add_num(r, "composite.initial_tilt", [](C& c) -> double& { return c.composite.initial_tilt; });

    add_num(r, "quantum.j", [](C& c) -> double& { return c.quantum.j; });
    add_num(r, "quantum.sigma", [](C& c) -> double& { return c.quantum.sigma; });
    add_num(r, "quantum.dt", [](C& c) -> double& { return c.quantum.dt; });
    add_count(r, "quantum.n_steps", [](C& c) -> std::size_t& { return c.quantum.n_steps; });
    return r;
  }();
  return reg;
}

// "[section] key" pairs with their line numbers, for diagnostics only.
std::map<std::string, int> ini_key_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line, section;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(t.substr(0, eq));
    lines.emplace(section.empty() ? key : section + "." + key, n);
  }
  return lines;
}

std::string resolve_sweep_key(const std::string& name) {
  const auto& reg = registry();
  if (reg.count(name)) return name;
  std::string found;
  for (const auto& [k, e] : reg) {
    const auto dot = k.rfind('.');
    if (dot != std::string::npos && k.substr(dot + 1) == name) {
      if (!found.empty()) throw ConfigError("sweep key '" + name + "' is ambiguous; use section.key", "sweep." + name);
      found = k;
    }
  }
  if (found.empty()) throw ConfigError("unknown sweep key '" + name + "'", "sweep." + name);
  return found;
}

void apply_pairs(ExperimentConfig& cfg, const std::vector<std::pair<std::string, std::string>>& pairs,
                 const std::map<std::string, int>& lines, const std::string& origin) {
  const auto& reg = registry();
  auto line_of = [&](const std::string& key) {
    const auto it = lines.find(key);
    return it == lines.end() ? 0 : it->second;
  };
  auto where = [&](const std::string& key) {
    const int l = line_of(key);
    return origin + (l ? ":" + std::to_string(l) : std::string()) + ": ";
  };
  // Scenario first: some defaults depend on it.
  for (const auto& [k, v] : pairs)
    if (k == "scenario") reg.at(k).set(cfg, v);
  for (const auto& [k, v] : pairs) {
    if (k == "scenario") continue;
    try {
      if (k.rfind("sweep.", 0) == 0) {
        const std::string target = resolve_sweep_key(k.substr(6));
        if (!reg.at(target).numeric) throw ConfigError(target + " cannot be swept", k);
        auto values = parse_grid(v, k);
        auto it = std::find_if(cfg.sweeps.begin(), cfg.sweeps.end(), [&](const SweepAxis& a) { return a.key == target; });
        if (it != cfg.sweeps.end()) throw ConfigError("sweep over " + target + " given twice", k);
        cfg.sweeps.push_back({target, std::move(values)});
        continue;
      }
      const auto it = reg.find(k);
      if (it == reg.end()) throw ConfigError("unknown key '" + k + "'", k);
      it->second.set(cfg, v);
    } catch (const ConfigError& e) {
      throw ConfigError(where(k) + e.what(), e.field().empty() ? k : e.field(), line_of(k));
    } catch (const std::exception& e) {
      throw ConfigError(where(k) + e.what(), k, line_of(k));
    }
  }
}

void fill_defaults_and_canonical(ExperimentConfig& cfg) {
  std::erase_if(cfg.sweeps, [](const SweepAxis& a) { return a.implicit; });
  const bool has = [&] {
    for (const auto& a : cfg.sweeps)
      if (a.key == "lmg.s") return true;
    return false;
  }();
  if (cfg.scenario == Scenario::dpt_sweep && !has) cfg.sweeps.push_back({"lmg.s", parse_grid("0:0.1:0.8", "sweep.lmg.s"), true});
  if (cfg.scenario == Scenario::ftc_sweep &&
      std::none_of(cfg.sweeps.begin(), cfg.sweeps.end(), [](const SweepAxis& a) { return a.key == "kt.alpha"; })) {
    std::vector<double> alphas;
    for (double a : {0.90, 0.93, 0.95, 0.97, 1.00, 1.03, 1.05, 1.07, 1.10}) alphas.push_back(a * kPi);
    cfg.sweeps.push_back({"kt.alpha", alphas, true});
  }
  if (cfg.scenario == Scenario::composite_scan && cfg.composite.theta_grid.empty())
    for (int j = 1; j <= 15; ++j) cfg.composite.theta_grid.push_back(j * kPi / 8.0);
  cfg.canonical.clear();
  // The output location is not part of the experiment: reruns elsewhere keep their hash.
  for (const auto& [k, e] : registry())
    if (k != "out") cfg.canonical[k] = e.get(cfg);
  for (const auto& a : cfg.sweeps) cfg.canonical["sweep." + a.key] = join(a.values);
}

std::string field_from_message(const std::string& msg) {
  static const std::regex key(R"(([a-z_]+\.[a-z_0-9]+))");
  std::smatch m;
  return std::regex_search(msg, m, key) ? m.str(1) : std::string();
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::lmg_run: return "lmg-run";
    case Scenario::kt_run: return "kt-run";
    case Scenario::dpt_sweep: return "dpt-sweep";
    case Scenario::ssb_ensemble: return "ssb-ensemble";
    case Scenario::lyapunov: return "lyapunov";
    case Scenario::ftc_sweep: return "ftc-sweep";
    case Scenario::noise_budget: return "noise-budget";
    case Scenario::composite_scan: return "composite-scan";
    case Scenario::quantum_qmf: return "quantum-qmf";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& name) {
  for (auto s : {Scenario::lmg_run, Scenario::kt_run, Scenario::dpt_sweep, Scenario::ssb_ensemble, Scenario::lyapunov,
                 Scenario::ftc_sweep, Scenario::noise_budget, Scenario::composite_scan, Scenario::quantum_qmf})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown scenario '" + name + "'", "scenario");
}

std::vector<double> parse_grid(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(field + ": empty grid", field);
  std::vector<double> out;
  if (t.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream ss(t);
    while (std::getline(ss, cur, ':')) parts.push_back(cur);
    if (parts.size() != 3) throw ConfigError(field + ": range must be start:step:stop", field);
    const double a = parse_num(parts[0], field), step = parse_num(parts[1], field), b = parse_num(parts[2], field);
    if (step == 0.0 || (b - a) / step < 0.0) throw ConfigError(field + ": step does not reach stop", field);
    const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
    if (n > 1000000) throw ConfigError(field + ": grid too large", field);
    for (std::size_t i = 0; i <= n; ++i) {
      const double v = a + static_cast<double>(i) * step;
      // Snap values like 0.30000000000000004 to the nearest short decimal.
      out.push_back(std::stod(format_double(std::round(v * 1e12) / 1e12)));
    }
    return out;
  }
  std::string cur;
  std::istringstream ss(t);
  while (std::getline(ss, cur, ',')) out.push_back(parse_num(cur, field));
  return out;
}

LmgParams ExperimentConfig::lmg() const {
  if (lmg_lambda > 0.0) return {lmg_s, lmg_lambda};
  return LmgParams::from_alpha(lmg_s, lmg_alpha_lin);
}

std::string ExperimentConfig::hash() const {
  std::string text;
  for (const auto& [k, v] : canonical) text += k + "=" + v + "\n";
  return sha256_hex(text);
}

void ExperimentConfig::validate() const {
  try {
    if (shots < 1) throw std::invalid_argument("shots must be at least 1");
    lmg().validate();
    loop.validate();
    measurement.validate();
    kt.validate();
    if (scenario == Scenario::kt_run || scenario == Scenario::ftc_sweep) {
      qkt_schedule(schedule.t_linear, schedule.t_gap, schedule.t_kick, schedule.n_steps, loop.sample_period,
                   loop.duration - loop.latency);
      if (loop.latency > schedule.t_gap - loop.sample_period + 1e-12)
        throw std::invalid_argument("loop.latency must not exceed schedule.t_gap minus loop.sample_period");
    }
    if (!(analysis.window_end > analysis.window_begin)) throw std::invalid_argument("analysis.window_end must exceed analysis.window_begin");
    if (scenario == Scenario::composite_scan && shots < 100) throw std::invalid_argument("shots must be >= 100 for composite-scan");
    if (scenario == Scenario::quantum_qmf) {
      spin_operators(quantum.j);
      if (!(quantum.sigma > 0.0)) throw std::invalid_argument("quantum.sigma must be positive");
      if (!(quantum.dt >= 0.0)) throw std::invalid_argument("quantum.dt must be non-negative");
    }
    if (scenario == Scenario::lyapunov) {
      if (analysis.ensemble < 50) throw std::invalid_argument("analysis.ensemble must be >= 50");
      if (analysis.lyap_steps < 1000) throw std::invalid_argument("analysis.lyap_steps must be >= 1000");
      if (analysis.fit_steps < 3) throw std::invalid_argument("analysis.fit_steps must be >= 3");
    }
    if (scenario == Scenario::noise_budget && noise_budget.n1_grid.size() < 3)
      throw std::invalid_argument("noise_budget.n1_grid needs at least 3 values");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what(), field_from_message(e.what()));
  }
}

std::vector<ExperimentConfig> ExperimentConfig::expand() const {
  std::vector<ExperimentConfig> out{*this};
  out.front().sweeps.clear();
  for (const auto& axis : sweeps) {
    std::vector<ExperimentConfig> next;
    for (const auto& base : out) {
      for (double v : axis.values) {
        ExperimentConfig c = base;
        apply_setting(c, axis.key, format_double(v));
        c.sweep_point.push_back({axis.key, v});
        next.push_back(std::move(c));
      }
    }
    out = std::move(next);
  }
  for (auto& c : out) {
    c.validate();
    // Sub-runs keep the parent's canonical text so their hash names the
    // whole experiment; the sweep point is recorded separately.
    c.canonical = canonical;
  }
  return out;
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& reg = registry();
  const auto it = reg.find(key);
  if (it == reg.end()) throw ConfigError("unknown key '" + key + "'", key);
  it->second.set(cfg, value);
  if (key == "scenario")
    fill_defaults_and_canonical(cfg);
  else if (key != "out")
    cfg.canonical[key] = it->second.get(cfg);
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, e] : registry()) keys.push_back(k);
  return keys;
}

ExperimentConfig parse_config_text(const std::string& text, bool json, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::map<std::string, int> lines;
  if (json) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(origin + ": " + e.what(), "", 0);
    }
    if (!j.is_object()) throw ConfigError(origin + ": top level must be an object", "");
    auto scalar = [&](const std::string& key, const nlohmann::json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
      if (v.is_number()) return format_double(v.get<double>());
      if (v.is_array()) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (!v[i].is_number()) throw ConfigError(origin + ": " + key + ": arrays must hold numbers", key);
          s += (i ? "," : "") + format_double(v[i].get<double>());
        }
        return s;
      }
      throw ConfigError(origin + ": " + key + ": unsupported value type", key);
    };
    for (const auto& [k, v] : j.items()) {
      if (v.is_object()) {
        for (const auto& [k2, v2] : v.items()) pairs.emplace_back(k + "." + k2, scalar(k + "." + k2, v2));
      } else {
        pairs.emplace_back(k, scalar(k, v));
      }
    }
  } else {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(origin + ":" + std::to_string(e.line()) + ": " + e.message(), "", static_cast<int>(e.line()));
    }
    for (const auto& [k, v] : tree) {
      if (v.empty()) {
        pairs.emplace_back(k, v.data());
      } else {
        for (const auto& [k2, v2] : v) pairs.emplace_back(k + "." + k2, v2.data());
      }
    }
    lines = ini_key_lines(text);
  }
  ExperimentConfig cfg;
  apply_pairs(cfg, pairs, lines, origin);
  fill_defaults_and_canonical(cfg);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    const auto it = lines.find(e.field());
    const int l = it == lines.end() ? 0 : it->second;
    throw ConfigError(origin + (l ? ":" + std::to_string(l) : std::string()) + ": " + e.what(), e.field(), l);
  }
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path, "");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::string t = trim(text);
  const bool json = std::filesystem::path(path).extension() == ".json" || (!t.empty() && t.front() == '{');
  return parse_config_text(text, json, path);
}

}  // namespace qmf
