#pragma once

#include <cstddef>
#include <functional>

#include "qmf/fixed_point.hpp"
#include "qmf/models.hpp"
#include "qmf/spin.hpp"

namespace qmf {

// [5,5] Pade approximant of exp(x); coefficients 1, 1/2, 1/9, 1/72, 1/1008,
// 1/30240 with the denominator's odd terms negated. Throws std::domain_error
// if the denominator is not positive.
double pade_exp(double x);
FixedPointValue pade_exp(const FixedPointValue& x, FxpDiagnostics* diag = nullptr);

// j0 * exp(-t ln2 / half_time) through pade_exp. Exponents below -1 are
// halved until they fit and the result squared back up. With a format the
// Pade evaluation runs in fixed point (the j0 scaling stays in double).
double decay_estimate(double j0, double half_time, double t);
double decay_estimate(double j0, double half_time, double t, const FixedPointFormat& fmt);

// pi * bmod2(k m / pi): the kick angle wrapped into (-2pi, 2pi) with the sign
// of k m. Generates the same z rotation as k m itself.
double kick_angle(double m_norm, double k);
double kick_angle(const FixedPointValue& m_norm, double k, FxpDiagnostics* diag = nullptr);

struct CoilCalibration {
  double n_loops = 1.0;
  double gamma = 3.5e3;       // Hz/uT
  double geom_factor = 4.5;   // uT/A
  double amp_gain = 1.0;
  double resistance = 5.75;   // Ohm
  void validate() const;
};

// Control voltage to rotation rate, Hz/V: 2 N gamma G g / R.
double ctl_gain(const CoilCalibration& c);

inline constexpr double kDefaultMaxRate = kTwoPi * 56.7e3;

// Mean-field z rate k_nl * clamp(m / (chi_p j_est), -1, 1), capped at max_rate.
double lmg_control(double m, double j_est, double chi_p, const LmgParams& p,
                   double max_rate = kDefaultMaxRate);

struct QktSchedule {
  double t_linear = 20e-6;
  double t_gap = 8e-6;
  double t_kick = 20e-6;
  std::size_t n_steps = 25;
  double period() const { return t_linear + t_gap + t_kick; }
  double total() const { return period() * static_cast<double>(n_steps); }
};

// Throws std::invalid_argument for non-positive durations, durations that
// are not whole controller samples, or a schedule longer than run_window.
QktSchedule qkt_schedule(double t_linear, double t_gap, double t_kick, std::size_t n_steps,
                         double sample_period, double run_window);

enum class Arithmetic { double_precision, fixed_point };

struct ControllerConfig {
  Arithmetic arithmetic = Arithmetic::fixed_point;
  FixedPointFormat format{};
  double sample_period = 2e-6;
  double decay_half_time = 2e-3;
  // Fractional error of the half-time the controller believes in. The plant
  // always decays with the true half-time.
  double decay_model_error = 0.0;
  double max_rate = kDefaultMaxRate;
};

// Per-trajectory controller state: the decay tracker epoch and the latched
// kick of the kicked-top protocol.
class Controller {
 public:
  // initial_signal: chi_p * J measured at the start of the run.
  Controller(const ControllerConfig& cfg, double initial_signal, double chi_p);

  // Estimated spin signal chi_p * J(t) at controller tick n.
  double signal_estimate(std::size_t tick);
  double j_estimate(std::size_t tick) { return signal_estimate(tick) / chi_p_; }
  // clamp(m / signal_estimate, -1, 1) after the input filter.
  double normalized(double m, std::size_t tick);
  double lmg_rate(double m, std::size_t tick, const LmgParams& p);
  double kick(double m, std::size_t tick, double k);

  // Optional FIR-style input stage; identity unless set.
  void set_input_filter(std::function<double(double)> f) { filter_ = std::move(f); }
  const FxpDiagnostics& diagnostics() const { return diag_; }
  const ControllerConfig& config() const { return cfg_; }

 private:
  FixedPointValue normalized_fixed(double m, std::size_t tick);
  ControllerConfig cfg_;
  double v0_;
  double chi_p_;
  FixedPointValue decay_per_tick_{};
  FxpDiagnostics diag_;
  std::function<double(double)> filter_;
};

}  // namespace qmf
