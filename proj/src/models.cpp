#include "qmf/models.hpp"

#include <cmath>
#include <stdexcept>

namespace qmf {

void LmgParams::validate() const {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("lmg.s must lie in [0, 1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lmg.lambda must be finite and >= 0");
}

LmgParams LmgParams::from_alpha(double s, double alpha_lin) {
  if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("lmg.s must lie in [0, 1) when the linear rate is fixed");
  return {s, alpha_lin / (1.0 - s)};
}

void KtParams::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("kt.tau must be positive");
  if (!std::isfinite(alpha) || !std::isfinite(k)) throw std::invalid_argument("kt parameters must be finite");
}

AngleRates lmg_derivatives(SphericalAngles st, const LmgParams& p) {
  const double sin_t = std::sin(st.theta);
  if (std::abs(sin_t) < 1e-9) throw std::domain_error("lmg_derivatives: phi is undefined at the poles");
  const double a = p.alpha_lin(), k = p.k_nl();
  AngleRates r;
  r.dtheta_dt = -a * std::sin(st.phi);
  r.dphi_dt = k * std::cos(st.theta) - a * std::cos(st.theta) / sin_t * std::cos(st.phi);
  return r;
}

Vec3 lmg_flow(const Vec3& x, const LmgParams& p) {
  return rotation_flow(x, Vec3(p.alpha_lin(), 0.0, p.k_nl() * x.z()));
}

double lmg_energy(const SpinVector& v, const LmgParams& p) {
  return -(1.0 - p.s) * v.x - 0.5 * p.s * v.z * v.z;
}

std::vector<FixedPoint> lmg_fixed_points(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("lmg_fixed_points: s must lie in [0, 1]");
  std::vector<FixedPoint> out;
  out.push_back({kXAxis, s > 0.5 ? Stability::unstable : Stability::stable});
  out.push_back({{-1.0, 0.0, 0.0}, Stability::stable});
  if (s > 0.5) {
    const double x = (1.0 - s) / s;
    const double z = std::sqrt(1.0 - x * x);
    out.push_back({{x, 0.0, z}, Stability::stable});
    out.push_back({{x, 0.0, -z}, Stability::stable});
  }
  return out;
}

double lmg_critical_s_for_pole() {
  // E(pole) - E(+x) is linear in s; solve from its values at s = 0 and 1.
  auto gap = [](double s) {
    const LmgParams p{s, 1.0};
    return lmg_energy(kZAxis, p) - lmg_energy(kXAxis, p);
  };
  const double g0 = gap(0.0), g1 = gap(1.0);
  return g0 / (g0 - g1);
}

double lmg_s_from_rates(double alpha_lin, double k_nl) {
  if (alpha_lin == 0.0 && k_nl == 0.0) throw std::invalid_argument("lmg_s_from_rates: both rates are zero");
  if (alpha_lin < 0.0 || k_nl < 0.0) throw std::invalid_argument("lmg_s_from_rates: rates must be non-negative");
  return k_nl / (alpha_lin + k_nl);
}

std::vector<SpinVector> integrate_lmg(const SpinVector& x0, const LmgParams& p, double dt,
                                      std::size_t n_steps) {
  std::vector<SpinVector> out;
  out.reserve(n_steps + 1);
  Vec3 x = x0.vec();
  out.push_back(x0);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const Vec3 k1 = lmg_flow(x, p);
    const Vec3 k2 = lmg_flow(x + 0.5 * dt * k1, p);
    const Vec3 k3 = lmg_flow(x + 0.5 * dt * k2, p);
    const Vec3 k4 = lmg_flow(x + dt * k3, p);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    x.normalize();
    out.push_back({x.x(), x.y(), x.z()});
  }
  return out;
}

SpinVector kt_step(const SpinVector& X, const KtParams& p) {
  const double ca = std::cos(p.alpha), sa = std::sin(p.alpha);
  const double w = ca * X.z - sa * X.y;
  const double u = ca * X.y + sa * X.z;
  const double ck = std::cos(p.k * w), sk = std::sin(p.k * w);
  return SpinVector::normalized(-sk * u + ck * X.x, ck * u + sk * X.x, w);
}

Eigen::Matrix3d kt_jacobian3(const SpinVector& X, const KtParams& p) {
  const double ca = std::cos(p.alpha), sa = std::sin(p.alpha);
  const double w = ca * X.z - sa * X.y;
  const double u = ca * X.y + sa * X.z;
  const double ck = std::cos(p.k * w), sk = std::sin(p.k * w);
  const double xn = -sk * u + ck * X.x;
  const double yn = ck * u + sk * X.x;
  const Eigen::RowVector3d dw(0.0, -sa, ca);
  const Eigen::RowVector3d du(0.0, ca, sa);
  const Eigen::RowVector3d ex(1.0, 0.0, 0.0);
  Eigen::Matrix3d J;
  J.row(0) = -p.k * yn * dw - sk * du + ck * ex;
  J.row(1) = p.k * xn * dw + ck * du + sk * ex;
  J.row(2) = dw;
  return J;
}

Eigen::Matrix2d kt_jacobian(const SpinVector& X, const KtParams& p) {
  const auto [a1, a2] = tangent_basis(X);
  const auto [b1, b2] = tangent_basis(kt_step(X, p));
  const Eigen::Matrix3d J = kt_jacobian3(X, p);
  Eigen::Matrix<double, 3, 2> in;
  in << a1, a2;
  Eigen::Matrix<double, 2, 3> out;
  out << b1.transpose(), b2.transpose();
  return out * J * in;
}

}  // namespace qmf
