#pragma once

#include <vector>

#include <Eigen/Core>

#include "qmf/spin.hpp"

namespace qmf {

// LMG parameters. Only s and the overall rate are stored; the linear and
// nonlinear rates are derived so that alpha_lin + k_nl = lambda exactly.
struct LmgParams {
  double s = 0.0;
  double lambda = 0.0;  // rad/s

  double alpha_lin() const { return (1.0 - s) * lambda; }
  double k_nl() const { return s * lambda; }
  void validate() const;
  // Build from a fixed linear rate; used when sweeping s at constant alpha.
  static LmgParams from_alpha(double s, double alpha_lin);
};

struct KtParams {
  double alpha = 0.0;  // rad per period
  double k = 0.0;      // rad
  double tau = 1.0;    // s
  void validate() const;
};

enum class Stability { stable, unstable };

struct FixedPoint {
  SpinVector location;
  Stability stability = Stability::stable;
};

struct AngleRates {
  double dtheta_dt = 0.0;
  double dphi_dt = 0.0;
};

// Angular velocities of the mean-field flow dX/dt = omega x X with
// omega = (alpha_lin, 0, k_nl Z). Throws std::domain_error within 1e-9 of a
// pole where phi is undefined; integrate in Cartesian form there.
AngleRates lmg_derivatives(SphericalAngles state, const LmgParams& p);

// Cartesian form of the same flow.
Vec3 lmg_flow(const Vec3& x, const LmgParams& p);

// E/(J Lambda) = -(1-s) x - (s/2) z^2.
double lmg_energy(const SpinVector& v, const LmgParams& p);

std::vector<FixedPoint> lmg_fixed_points(double s);

// s at which the pole and +x have equal energy.
double lmg_critical_s_for_pole();

double lmg_s_from_rates(double alpha_lin, double k_nl);

// Direct RK4 integration of the mean-field flow; returns n_steps+1 states.
std::vector<SpinVector> integrate_lmg(const SpinVector& x0, const LmgParams& p, double dt,
                                      std::size_t n_steps);

// One period of the kicked top, written out component by component.
SpinVector kt_step(const SpinVector& X, const KtParams& p);

// Full 3x3 derivative of kt_step as a map on R^3 restricted to unit vectors.
Eigen::Matrix3d kt_jacobian3(const SpinVector& X, const KtParams& p);

// Tangent map in the orthonormal charts given by tangent_basis at X and at
// kt_step(X).
Eigen::Matrix2d kt_jacobian(const SpinVector& X, const KtParams& p);

}  // namespace qmf
