#include "qmf/loop.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace qmf {

namespace {

std::size_t whole_steps(double span, double dt, const char* what) {
  const double n = span / dt;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-6 * std::max(1.0, r))
    throw std::invalid_argument(std::string(what) + " must be a whole number of plant steps");
  return static_cast<std::size_t>(r);
}

struct ShotSetup {
  SpinVector x0;
  double qpn_offset = 0.0;
  ShotErrors rf;
  ShotErrors zcoil;
};

// Random draws happen in a fixed order: preparation pulse, pointing error,
// QPN offset, drive errors. Measurement noise follows sample by sample.
ShotSetup prepare_shot(const LoopConfig& cfg, const MeasurementModel& model, RandomStream& rng) {
  ShotSetup s;
  const bool rot = cfg.noise.rotation;
  if (cfg.finite_prep_pulse) {
    RotationNoise prep = rot ? cfg.rotation_noise : RotationNoise{};
    prep.rabi_rate = std::max(cfg.initial_state.theta, 1e-12) / cfg.prep_pulse_duration;
    s.x0 = noisy_rotate(kZAxis, cfg.initial_state.phi + kPi / 2.0, cfg.initial_state.theta, prep, rng);
  } else {
    s.x0 = from_angles(cfg.initial_state);
  }
  if (cfg.noise.qpn) {
    s.x0 = gaussian_tilt(s.x0, pointing_uncertainty(model), rng);
    if (cfg.noise.qpn_offset) s.qpn_offset = draw_qpn_offset(model, rng);
  }
  if (rot) {
    s.rf = draw_shot_errors(cfg.rotation_noise, rng);
    s.zcoil.amplitude_error = cfg.rotation_noise.amplitude_error_sigma * rng.normal();
  }
  return s;
}

// Shared plant/sensor/controller loop. command(tick, m, sample_index) returns
// (ctl_x, ctl_z) computed by the controller at that tick.
template <class Command, class OnStep>
TrajectoryRecord run_loop(const LoopConfig& cfg, const MeasurementModel& model, RandomStream& rng,
                          Controller& ctl, const ShotSetup& shot, Command&& command, OnStep&& on_step) {
  const std::size_t spp = cfg.steps_per_sample();
  const std::size_t lat = cfg.latency_steps();
  const std::size_t n_plant = cfg.plant_steps();
  const double dt = cfg.plant_dt;
  const double j0 = model.spin_length();
  const double ln2 = std::log(2.0);
  const Vec3 drive_axis(std::cos(cfg.rf_phase), std::sin(cfg.rf_phase), 0.0);

  TrajectoryRecord rec;
  rec.reserve(n_plant / spp + 1);
  std::deque<std::pair<std::size_t, std::pair<double, double>>> fifo;
  double applied_x = 0.0, applied_z = 0.0;
  Vec3 x = shot.x0.vec();

  for (std::size_t i = 0; i <= n_plant; ++i) {
    on_step(i, x);
    if (i % spp == 0) {
      const std::size_t tick = i / spp;
      const double t = static_cast<double>(i) * dt;
      const double j_true = j0 * std::exp(-t * ln2 / cfg.decay_half_time);
      const MeasurementSample ms =
          measure(x.z(), j_true, model, cfg.sample_period, shot.qpn_offset, cfg.noise.shot, rng);
      fifo.push_back({i + lat, command(tick, ms.value, rec.size())});
      while (!fifo.empty() && fifo.front().first <= i) {
        applied_x = fifo.front().second.first;
        applied_z = fifo.front().second.second;
        fifo.pop_front();
      }
      rec.t.push_back(t);
      rec.x.push_back(x.x());
      rec.y.push_back(x.y());
      rec.z.push_back(x.z());
      rec.j_true.push_back(j_true);
      rec.meas.push_back(ms.value);
      rec.ctl_x.push_back(applied_x);
      rec.ctl_z.push_back(applied_z);
      rec.j_est.push_back(ctl.j_estimate(tick));
    } else {
      while (!fifo.empty() && fifo.front().first <= i) {
        applied_x = fifo.front().second.first;
        applied_z = fifo.front().second.second;
        fifo.pop_front();
      }
    }
    if (i == n_plant) break;
    const Vec3 omega = applied_x * (1.0 + shot.rf.amplitude_error) * drive_axis +
                       Vec3(0.0, 0.0, applied_z * (1.0 + shot.zcoil.amplitude_error) + shot.rf.detuning);
    x = rk4_rotation_step(x, omega, dt);
  }
  return rec;
}

}  // namespace

void LoopConfig::validate() const {
  if (!(plant_dt > 0.0)) throw std::invalid_argument("loop.plant_dt must be positive");
  if (!(sample_period > 0.0)) throw std::invalid_argument("loop.sample_period must be positive");
  if (plant_dt > sample_period * (1.0 + 1e-12))
    throw std::invalid_argument("loop.sample_period must be >= loop.plant_dt");
  if (latency < 0.0) throw std::invalid_argument("loop.latency must be non-negative");
  if (!(duration > 0.0)) throw std::invalid_argument("loop.duration must be positive");
  if (!(decay_half_time > 0.0)) throw std::invalid_argument("loop.decay_half_time must be positive");
  if (!(initial_state.theta >= 0.0 && initial_state.theta <= kPi))
    throw std::invalid_argument("loop.theta0 must lie in [0, pi]");
  if (finite_prep_pulse && !(prep_pulse_duration > 0.0))
    throw std::invalid_argument("loop.prep_pulse_duration must be positive");
  if (!(max_z_rate > 0.0)) throw std::invalid_argument("loop.max_z_rate must be positive");
  rotation_noise.validate();
  if (arithmetic == Arithmetic::fixed_point) format.validate();
  whole_steps(sample_period, plant_dt, "loop.sample_period");
}

std::size_t LoopConfig::steps_per_sample() const { return whole_steps(sample_period, plant_dt, "loop.sample_period"); }

std::size_t LoopConfig::latency_steps() const {
  return static_cast<std::size_t>(std::llround(latency / plant_dt));
}

std::size_t LoopConfig::plant_steps() const {
  return static_cast<std::size_t>(std::llround(duration / plant_dt));
}

ControllerConfig LoopConfig::controller() const {
  ControllerConfig c;
  c.arithmetic = arithmetic;
  c.format = format;
  c.sample_period = sample_period;
  c.decay_half_time = decay_half_time;
  c.decay_model_error = decay_model_error;
  c.max_rate = max_z_rate;
  return c;
}

LoopConfig ideal_loop(double sample_period, double duration) {
  LoopConfig c;
  c.sample_period = sample_period;
  c.plant_dt = sample_period;
  c.latency = 0.0;
  c.duration = duration;
  c.noise = {false, false, false, false};
  c.arithmetic = Arithmetic::double_precision;
  c.max_z_rate = 1e300;
  return c;
}

void TrajectoryRecord::reserve(std::size_t n) {
  for (auto* v : {&t, &x, &y, &z, &j_true, &meas, &ctl_z, &ctl_x, &j_est}) v->reserve(n);
}

TrajectoryRecord run_lmg_loop(const LoopConfig& cfg, const LmgParams& p, const MeasurementModel& model,
                              RandomStream& rng) {
  cfg.validate();
  p.validate();
  model.validate();
  const ShotSetup shot = prepare_shot(cfg, model, rng);
  Controller ctl(cfg.controller(), model.chi_p * model.spin_length(), model.chi_p);
  const double alpha = p.alpha_lin();
  auto command = [&](std::size_t tick, double m, std::size_t) {
    return std::pair<double, double>{alpha, ctl.lmg_rate(m, tick, p)};
  };
  TrajectoryRecord rec = run_loop(cfg, model, rng, ctl, shot, command, [](std::size_t, const Vec3&) {});
  rec.meta.model = "lmg";
  rec.meta.params = {{"s", p.s}, {"lambda", p.lambda}, {"alpha_lin", p.alpha_lin()}, {"k_nl", p.k_nl()}};
  return rec;
}

TrajectoryRecord run_kt_loop(const LoopConfig& cfg, const QktSchedule& sched, const KtParams& p,
                             const MeasurementModel& model, RandomStream& rng) {
  cfg.validate();
  p.validate();
  model.validate();
  const double ts = cfg.sample_period;
  auto ticks = [&](double d, const char* what) {
    const double n = d / ts;
    if (!(d > 0.0) || std::abs(n - std::round(n)) > 1e-6)
      throw std::invalid_argument(std::string(what) + " must be a positive whole number of samples");
    return static_cast<std::size_t>(std::llround(n));
  };
  const std::size_t nl = ticks(sched.t_linear, "schedule.t_linear");
  const std::size_t ng = ticks(sched.t_gap, "schedule.t_gap");
  const std::size_t nk = ticks(sched.t_kick, "schedule.t_kick");
  const std::size_t period = nl + ng + nk;
  const std::size_t spp = cfg.steps_per_sample();
  const std::size_t lat = cfg.latency_steps();
  if (static_cast<double>(lat) * cfg.plant_dt > sched.t_gap - ts + 1e-12)
    throw std::invalid_argument("loop.latency must not exceed schedule.t_gap minus one sample");
  const std::size_t last_strobe = sched.n_steps * period * spp + lat;
  if (last_strobe > cfg.plant_steps())
    throw std::invalid_argument("schedule overflow: n_steps * period + latency exceeds loop.duration");

  const ShotSetup shot = prepare_shot(cfg, model, rng);
  Controller ctl(cfg.controller(), model.chi_p * model.spin_length(), model.chi_p);
  const double x_rate = -p.alpha / sched.t_linear;
  double latched_kick = 0.0;
  std::vector<std::size_t> strobe_index;
  std::vector<SpinVector> strobe_states;

  auto command = [&](std::size_t tick, double m, std::size_t sample) {
    const std::size_t q = tick / period, r = tick % period;
    if (q >= sched.n_steps) return std::pair<double, double>{0.0, 0.0};
    if (r < nl) return std::pair<double, double>{x_rate, 0.0};
    if (r < nl + ng) {
      if (r == nl + ng - 1) {
        latched_kick = ctl.kick(m, tick, p.k);
        strobe_index.push_back(sample);
      }
      return std::pair<double, double>{0.0, 0.0};
    }
    return std::pair<double, double>{0.0, latched_kick / sched.t_kick};
  };
  auto on_step = [&](std::size_t i, const Vec3& x) {
    if (i >= lat && (i - lat) % (period * spp) == 0 && strobe_states.size() <= sched.n_steps)
      strobe_states.push_back({x.x(), x.y(), x.z()});
  };
  TrajectoryRecord rec = run_loop(cfg, model, rng, ctl, shot, command, on_step);
  rec.strobe_index = std::move(strobe_index);
  rec.strobe_states = std::move(strobe_states);
  rec.meta.model = "kt";
  rec.meta.params = {{"alpha", p.alpha}, {"k", p.k}, {"tau", p.tau}, {"t_linear", sched.t_linear},
                     {"t_gap", sched.t_gap}, {"t_kick", sched.t_kick},
                     {"n_steps", static_cast<double>(sched.n_steps)}};
  return rec;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("QMF_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

template <class Run>
std::vector<TrajectoryRecord> batch(std::size_t n_shots, std::uint64_t master_seed, Run&& run) {
  if (n_shots < 1) throw std::invalid_argument("run_batch needs at least one shot");
  std::vector<TrajectoryRecord> out(n_shots);
  parallel_for(n_shots, [&](std::size_t i) {
    RandomStream rng = RandomStream::derive(master_seed, i);
    out[i] = run(rng);
    out[i].meta.master_seed = master_seed;
    out[i].meta.shot = i;
  });
  return out;
}

}  // namespace

std::vector<TrajectoryRecord> run_batch(const LoopConfig& cfg, const LmgParams& p,
                                        const MeasurementModel& model, std::size_t n_shots,
                                        std::uint64_t master_seed) {
  return batch(n_shots, master_seed, [&](RandomStream& rng) { return run_lmg_loop(cfg, p, model, rng); });
}

std::vector<TrajectoryRecord> run_batch(const LoopConfig& cfg, const QktSchedule& sched, const KtParams& p,
                                        const MeasurementModel& model, std::size_t n_shots,
                                        std::uint64_t master_seed) {
  return batch(n_shots, master_seed,
               [&](RandomStream& rng) { return run_kt_loop(cfg, sched, p, model, rng); });
}

double latency_metric(double alpha_lin, double latency) { return alpha_lin * latency; }

}  // namespace qmf
