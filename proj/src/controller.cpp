#include "qmf/controller.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qmf {

namespace {

constexpr std::array<double, 6> kPadeCoef{1.0, 1.0 / 2.0, 1.0 / 9.0, 1.0 / 72.0, 1.0 / 1008.0, 1.0 / 30240.0};

// Halve x until it is >= -1; returns the number of halvings.
int range_reduce(double& x) {
  int n = 0;
  while (x < -1.0) {
    x *= 0.5;
    ++n;
  }
  return n;
}

}  // namespace

double pade_exp(double x) {
  double num = 0.0, den = 0.0;
  for (int i = 5; i >= 0; --i) {
    num = num * x + kPadeCoef[static_cast<std::size_t>(i)];
    den = den * x + ((i % 2) ? -kPadeCoef[static_cast<std::size_t>(i)] : kPadeCoef[static_cast<std::size_t>(i)]);
  }
  if (!(den > 0.0)) throw std::domain_error("pade_exp: denominator is not positive");
  return num / den;
}

FixedPointValue pade_exp(const FixedPointValue& x, FxpDiagnostics* diag) {
  const FixedPointFormat& fmt = x.format;
  FixedPointValue num = fxp_quantize(0.0, fmt), den = fxp_quantize(0.0, fmt);
  for (int i = 5; i >= 0; --i) {
    const double c = kPadeCoef[static_cast<std::size_t>(i)];
    num = fxp_add(fxp_mul(num, x, diag), fxp_quantize(c, fmt, diag), diag);
    den = fxp_add(fxp_mul(den, x, diag), fxp_quantize((i % 2) ? -c : c, fmt, diag), diag);
  }
  if (den.raw <= 0) throw std::domain_error("pade_exp: denominator is not positive");
  return fxp_div(num, den, diag);
}

double decay_estimate(double j0, double half_time, double t) {
  if (!(half_time > 0.0)) throw std::invalid_argument("decay_estimate: half_time must be positive");
  if (t < 0.0) throw std::invalid_argument("decay_estimate: negative time");
  double x = -t * std::numbers::ln2 / half_time;
  const int n = range_reduce(x);
  double r = pade_exp(x);
  for (int i = 0; i < n; ++i) r *= r;
  return j0 * r;
}

double decay_estimate(double j0, double half_time, double t, const FixedPointFormat& fmt) {
  if (!(half_time > 0.0)) throw std::invalid_argument("decay_estimate: half_time must be positive");
  if (t < 0.0) throw std::invalid_argument("decay_estimate: negative time");
  double x = -t * std::numbers::ln2 / half_time;
  const int n = range_reduce(x);
  FixedPointValue r = pade_exp(fxp_quantize(x, fmt));
  for (int i = 0; i < n; ++i) r = fxp_mul(r, r);
  return j0 * r.to_double();
}

double kick_angle(double m_norm, double k) { return kPi * bmod2(k * m_norm / kPi); }

double kick_angle(const FixedPointValue& m_norm, double k, FxpDiagnostics* diag) {
  const FixedPointFormat& fmt = m_norm.format;
  const FixedPointValue k_over_pi = fxp_quantize(k / kPi, fmt, diag);
  const FixedPointValue wrapped = bmod2(fxp_mul(k_over_pi, m_norm, diag));
  return fxp_mul(wrapped, fxp_quantize(kPi, fmt, diag), diag).to_double();
}

void CoilCalibration::validate() const {
  if (n_loops < 0.0 || gamma < 0.0 || geom_factor < 0.0 || amp_gain < 0.0)
    throw std::invalid_argument("coil calibration fields must be non-negative");
  if (!(resistance > 0.0)) throw std::invalid_argument("coil resistance must be positive");
}

double ctl_gain(const CoilCalibration& c) {
  c.validate();
  return 2.0 * c.n_loops * c.gamma * c.geom_factor * c.amp_gain / c.resistance;
}

double lmg_control(double m, double j_est, double chi_p, const LmgParams& p, double max_rate) {
  if (!(j_est > 0.0)) throw std::invalid_argument("lmg_control: j_est must be positive");
  const double z = std::clamp(m / (chi_p * j_est), -1.0, 1.0);
  return std::clamp(p.k_nl() * z, -max_rate, max_rate);
}

QktSchedule qkt_schedule(double t_linear, double t_gap, double t_kick, std::size_t n_steps,
                         double sample_period, double run_window) {
  if (!(t_linear > 0.0 && t_gap > 0.0 && t_kick > 0.0))
    throw std::invalid_argument("qkt_schedule: segment durations must be positive");
  if (!(sample_period > 0.0)) throw std::invalid_argument("qkt_schedule: sample period must be positive");
  for (double d : {t_linear, t_gap, t_kick}) {
    const double n = d / sample_period;
    if (std::abs(n - std::round(n)) > 1e-6)
      throw std::invalid_argument("qkt_schedule: segment durations must be whole controller samples");
  }
  QktSchedule s{t_linear, t_gap, t_kick, n_steps};
  if (s.total() > run_window * (1.0 + 1e-12))
    throw std::invalid_argument("qkt_schedule: n_steps * period exceeds the run window");
  return s;
}

Controller::Controller(const ControllerConfig& cfg, double initial_signal, double chi_p)
    : cfg_(cfg), v0_(initial_signal), chi_p_(chi_p) {
  if (!(initial_signal > 0.0)) throw std::invalid_argument("controller: initial signal must be positive");
  if (!(cfg.sample_period > 0.0 && cfg.decay_half_time > 0.0))
    throw std::invalid_argument("controller: sample period and half-time must be positive");
  if (cfg_.arithmetic == Arithmetic::fixed_point) {
    cfg_.format.validate();
    if (!cfg_.format.is_signed) throw std::invalid_argument("controller: fixed-point format must be signed");
    const double believed = cfg_.decay_half_time * (1.0 + cfg_.decay_model_error);
    decay_per_tick_ = fxp_quantize(std::numbers::ln2 * cfg_.sample_period / believed, cfg_.format, &diag_);
  }
}

double Controller::signal_estimate(std::size_t tick) {
  const double believed = cfg_.decay_half_time * (1.0 + cfg_.decay_model_error);
  if (cfg_.arithmetic == Arithmetic::double_precision)
    return decay_estimate(v0_, believed, static_cast<double>(tick) * cfg_.sample_period);
  // Exponent = -tick * (ln2 Ts / T_half), an exact integer multiple of the
  // stored per-tick constant.
  const FixedPointFormat& fmt = cfg_.format;
  __int128 raw = -static_cast<__int128>(tick) * decay_per_tick_.raw;
  int halvings = 0;
  const __int128 minus_one = -(static_cast<__int128>(1) << fmt.frac_bits());
  while (raw < minus_one) {
    raw /= 2;
    ++halvings;
  }
  FixedPointValue r = pade_exp(FixedPointValue{static_cast<std::int64_t>(raw), fmt}, &diag_);
  for (int i = 0; i < halvings; ++i) r = fxp_mul(r, r, &diag_);
  return fxp_mul(fxp_quantize(v0_, fmt, &diag_), r, &diag_).to_double();
}

FixedPointValue Controller::normalized_fixed(double m, std::size_t tick) {
  const FixedPointFormat& fmt = cfg_.format;
  const double in = filter_ ? filter_(m) : m;
  const FixedPointValue mq = fxp_quantize(in, fmt, &diag_);
  const FixedPointValue v = fxp_quantize(signal_estimate(tick), fmt, &diag_);
  return fxp_clamp(fxp_div(mq, v, &diag_), -1.0, 1.0);
}

double Controller::normalized(double m, std::size_t tick) {
  if (cfg_.arithmetic == Arithmetic::fixed_point) return normalized_fixed(m, tick).to_double();
  const double in = filter_ ? filter_(m) : m;
  return std::clamp(in / signal_estimate(tick), -1.0, 1.0);
}

double Controller::lmg_rate(double m, std::size_t tick, const LmgParams& p) {
  return std::clamp(p.k_nl() * normalized(m, tick), -cfg_.max_rate, cfg_.max_rate);
}

double Controller::kick(double m, std::size_t tick, double k) {
  if (cfg_.arithmetic == Arithmetic::fixed_point) return kick_angle(normalized_fixed(m, tick), k, &diag_);
  return kick_angle(normalized(m, tick), k);
}

}  // namespace qmf
