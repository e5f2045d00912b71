#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qmf/controller.hpp"
#include "qmf/measurement.hpp"
#include "qmf/models.hpp"
#include "qmf/random.hpp"
#include "qmf/spin.hpp"

namespace qmf {

struct NoiseFlags {
  bool qpn = true;         // Gaussian pointing error of the prepared state
  bool qpn_offset = true;  // frozen per-shot QPN term in every measurement (needs qpn)
  bool shot = true;
  bool rotation = false;   // RotationNoise on drives and preparation
};

struct LoopConfig {
  double sample_period = 2e-6;
  double latency = 6e-6;
  double plant_dt = 1e-7;
  double duration = 1.5e-3;
  double decay_half_time = 2e-3;
  SphericalAngles initial_state{kPi / 2.0, 0.0};
  NoiseFlags noise;
  RotationNoise rotation_noise;
  // Azimuth of the RF drive axis; 0 puts the linear rotation about +x.
  double rf_phase = 0.0;
  // Preparation from +z: instantaneous and perfect unless enabled.
  bool finite_prep_pulse = false;
  double prep_pulse_duration = 40e-6;
  Arithmetic arithmetic = Arithmetic::fixed_point;
  FixedPointFormat format{};
  double max_z_rate = kDefaultMaxRate;
  double decay_model_error = 0.0;

  void validate() const;
  std::size_t steps_per_sample() const;
  std::size_t latency_steps() const;
  std::size_t plant_steps() const;
  ControllerConfig controller() const;
};

// Noise off, zero latency, double-precision controller, plant step equal
// to the sample period.
LoopConfig ideal_loop(double sample_period, double duration = 1.5e-3);

struct RecordMetadata {
  std::uint64_t master_seed = 0;
  std::uint64_t shot = 0;
  std::string model;
  std::vector<std::pair<std::string, double>> params;
  std::string config_hash;
};

struct TrajectoryRecord {
  std::vector<double> t, x, y, z, j_true, meas, ctl_z, ctl_x, j_est;
  // Kicked top only: sample index of the latched gap measurement of each
  // step, and the full state at the start of every period (n_steps + 1).
  std::vector<std::size_t> strobe_index;
  std::vector<SpinVector> strobe_states;
  RecordMetadata meta;

  std::size_t size() const { return t.size(); }
  void reserve(std::size_t n);
};

TrajectoryRecord run_lmg_loop(const LoopConfig& cfg, const LmgParams& p, const MeasurementModel& model,
                              RandomStream& rng);

// The x rotation of each period turns by -alpha about the drive axis, so
// the stroboscopic record follows kt_step. Requires latency <= t_gap - Ts
// for the gap measurement to see the completed x rotation.
TrajectoryRecord run_kt_loop(const LoopConfig& cfg, const QktSchedule& sched, const KtParams& p,
                             const MeasurementModel& model, RandomStream& rng);

// Shot i runs on RandomStream::derive(master_seed, i). Shots run on
// QMF_THREADS worker threads (default: hardware concurrency); the output
// does not depend on the thread count.
std::vector<TrajectoryRecord> run_batch(const LoopConfig& cfg, const LmgParams& p,
                                        const MeasurementModel& model, std::size_t n_shots,
                                        std::uint64_t master_seed);
std::vector<TrajectoryRecord> run_batch(const LoopConfig& cfg, const QktSchedule& sched, const KtParams& p,
                                        const MeasurementModel& model, std::size_t n_shots,
                                        std::uint64_t master_seed);

double latency_metric(double alpha_lin, double latency);

// Runs fn(i) for i in [0, n) on the configured number of threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);
std::size_t worker_threads();

}  // namespace qmf
