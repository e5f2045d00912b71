#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmf/analysis.hpp"
#include "qmf/controller.hpp"
#include "qmf/loop.hpp"
#include "qmf/measurement.hpp"
#include "qmf/models.hpp"

namespace qmf {

enum class Scenario {
  lmg_run,
  kt_run,
  dpt_sweep,
  ssb_ensemble,
  lyapunov,
  ftc_sweep,
  noise_budget,
  composite_scan,
  quantum_qmf
};

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

// Thrown for anything wrong with a configuration; field is the dotted key
// path (e.g. "loop.sample_period") and line is 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, std::string field, int line = 0)
      : std::runtime_error(msg), field_(std::move(field)), line_(line) {}
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

struct AnalysisSettings {
  double window_begin = 0.0;
  double window_end = 1.25e-3;
  double dpt_threshold = 0.1;
  int dpt_refine = 6;  // bisection steps on the bracketing interval
  SettleCriteria settle;
  std::size_t lyap_steps = 100000;
  std::size_t ensemble = 300;
  double ensemble_tilt = 2.5e-4;
  std::size_t fit_steps = 5;
  SpinVector lyap_x0{0.0, -0.6, 0.8};
  SpinVector ensemble_centre{1.0, 0.0, 0.0};
  bool include_dc = false;
};

struct NoiseBudgetSettings {
  std::vector<double> n1_grid{1e4, 2e4, 5e4, 1e5, 2e5, 5e5, 1e6, 2e6, 5e6, 1e7};
  double c_sn = 3e4;
  double c_qpn = 1.0;
  double c_cpn = 1e-6;
  std::vector<double> windows{2e-6, 4e-6, 8e-6, 16e-6, 32e-6, 64e-6, 128e-6, 256e-6};
  std::size_t series_samples = 128;
};

struct CompositeSettings {
  std::vector<double> theta_grid;  // empty: j pi/8 for j = 1..15
  double initial_tilt = 2.5e-4;
};

struct QuantumSettings {
  double j = 200.0;
  double sigma = 20.0;
  double dt = 2e-6;
  std::size_t n_steps = 150;
};

struct SweepAxis {
  std::string key;
  std::vector<double> values;
  bool implicit = false;  // filled in from the scenario's default grid
};

struct ExperimentConfig {
  Scenario scenario = Scenario::lmg_run;
  std::uint64_t seed = 1;
  std::size_t shots = 1;
  std::string out_dir = "out";
  std::string emit = "csv";

  LoopConfig loop;
  double lmg_s = 0.7;
  double lmg_alpha_lin = kTwoPi * 6.25e3;
  double lmg_lambda = 0.0;  // overrides alpha_lin when > 0
  KtParams kt{kPi / 2.0, 2.5, 48e-6};
  QktSchedule schedule;
  MeasurementModel measurement;
  AnalysisSettings analysis;
  NoiseBudgetSettings noise_budget;
  CompositeSettings composite;
  QuantumSettings quantum;
  std::vector<SweepAxis> sweeps;
  // Set on configs produced by expand(): the swept keys and their values.
  std::vector<std::pair<std::string, double>> sweep_point;

  // Every known key with its effective value as text; the config hash is
  // SHA-256 over the sorted "key=value" lines.
  std::map<std::string, std::string> canonical;

  LmgParams lmg() const;
  std::string hash() const;
  // One config per point of the Cartesian product of the sweep axes.
  std::vector<ExperimentConfig> expand() const;
  // Checks every module invariant; throws ConfigError naming the field.
  void validate() const;
};

// "a:step:b" (inclusive) or "a,b,c"; a single number is a one-point grid.
std::vector<double> parse_grid(const std::string& text, const std::string& field);

// INI (sections, key = value) or JSON (detected by a leading '{' or a .json
// extension). Unknown keys are rejected; defaults fill everything else.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, bool json, const std::string& origin = "<string>");

// Apply one override after parsing (used for --seed / --shots and sweeps).
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

std::vector<std::string> known_config_keys();

}  // namespace qmf
