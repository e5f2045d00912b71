#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "qmf/models.hpp"
#include "qmf/random.hpp"
#include "qmf/spin.hpp"

namespace qmf {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kMaxDenseSpin = 500.0;

// Pure state of spin j; index i holds m = j - i.
struct QuantumSpinState {
  double j = 0.0;
  CVector amplitudes;
  double norm() const { return amplitudes.norm(); }
  Eigen::Index dim() const { return amplitudes.size(); }
};

struct SpinOperators {
  double j = 0.0;
  CMatrix jx, jy, jz;
};

// Throws for 2j not an integer, j < 1/2, or j > 500.
SpinOperators spin_operators(double j);

// Stretched state |j, j> rotated to point along the given direction.
QuantumSpinState scs_state(double j, SphericalAngles angles);

double expect(const QuantumSpinState& s, const CMatrix& op);

struct KrausResult {
  QuantumSpinState state;
  double prob_density = 0.0;
};

// Gaussian Kraus operator for outcome m: amplitudes times
// (2 pi sigma^2)^(-1/4) exp(-(m_z - m)^2 / (4 sigma^2)), then renormalized.
KrausResult kraus_apply(const QuantumSpinState& s, double m, double sigma);

// Draw from sum_m0 |<m0|psi>|^2 N(m0, sigma^2); sigma = 0 gives the
// projective outcome.
double sample_outcome(const QuantumSpinState& s, double sigma, RandomStream& rng);

// Measurement followed by the outcome-conditioned unitary
// exp(-i (alpha_lin Jx + k_nl (m/j) Jz) dt), the quantum counterpart of the
// classical torque (alpha_lin, 0, k_nl Z). The unitary is evaluated exactly
// as R_y(beta) exp(-i |w| dt Jz) R_y(beta)^dagger, with the Jy eigenbasis
// computed once per spin size.
class QmfStepper {
 public:
  explicit QmfStepper(double j);
  double j() const { return j_; }
  const SpinOperators& operators() const { return ops_; }

  QuantumSpinState unitary(const QuantumSpinState& s, double omega_x, double omega_z, double dt) const;
  QuantumSpinState step(const QuantumSpinState& s, double m, const LmgParams& p, double dt,
                        double sigma) const;

 private:
  QuantumSpinState rotate_y(const QuantumSpinState& s, double beta) const;
  double j_;
  SpinOperators ops_;
  CMatrix jy_vecs_;
  Eigen::VectorXd jy_vals_;
};

// Convenience wrapper building a stepper each call.
QuantumSpinState qmf_step(const QuantumSpinState& s, double m, const LmgParams& p, double dt, double sigma);

struct MmssVariance {
  double variance = 0.0;
  double ratio_to_scs = 0.0;
};

// Uniform population of the 2f+1 sublevels against an SCS (variance f/2).
MmssVariance mmss_variance(double f);

struct QuantumTrajectory {
  std::vector<double> t, jx, jy, jz, outcome;  // expectation values / j
  double j = 0.0;
};

// Repeated measure-then-rotate from an SCS; outcomes are sampled from the
// current state.
QuantumTrajectory run_qmf_trajectory(const QmfStepper& stepper, SphericalAngles start, const LmgParams& p,
                                     double dt, double sigma, std::size_t n_steps, RandomStream& rng);

}  // namespace qmf
