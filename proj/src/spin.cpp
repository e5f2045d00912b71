#include "qmf/spin.hpp"

#include <cmath>
#include <stdexcept>

namespace qmf {

SpinVector SpinVector::normalized(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("spin vector has zero or non-finite length");
  return {v.x() / n, v.y() / n, v.z() / n};
}

namespace {

// sin and cos that are exact at whole quarter turns, so that axis-aligned
// states (the unstable +x point in particular) start with no 1e-17 residue.
std::pair<double, double> sincos_exact(double a) {
  const double q = a / (kPi / 2.0);
  const double r = std::nearbyint(q);
  if (q == r && std::abs(r) < 1e6) {
    static const double s[4] = {0.0, 1.0, 0.0, -1.0};
    static const double c[4] = {1.0, 0.0, -1.0, 0.0};
    const int i = static_cast<int>(((static_cast<long>(r) % 4) + 4) % 4);
    return {s[i], c[i]};
  }
  return {std::sin(a), std::cos(a)};
}

}  // namespace

SpinVector from_angles(SphericalAngles a) {
  const auto [st, ct] = sincos_exact(a.theta);
  const auto [sp, cp] = sincos_exact(a.phi);
  return SpinVector::normalized(st * cp, st * sp, ct);
}

SphericalAngles to_angles(const SpinVector& v) {
  const double rho = std::hypot(v.x, v.y);
  SphericalAngles a;
  a.theta = std::atan2(rho, v.z);
  a.phi = rho < 1e-12 ? 0.0 : std::atan2(v.y, v.x);
  if (a.phi >= kPi) a.phi -= kTwoPi;
  return a;
}

SpinVector rotate(const SpinVector& v, const SpinVector& axis, double angle) {
  Vec3 a = axis.vec();
  const double n = a.norm();
  if (std::abs(n - 1.0) > 1e-6) throw std::invalid_argument("rotation axis is not unit length");
  a /= n;
  const Vec3 x = v.vec();
  const double c = std::cos(angle), s = std::sin(angle);
  const Vec3 r = x * c + a.cross(x) * s + a * (a.dot(x) * (1.0 - c));
  return SpinVector::normalized(r);
}

SpinVector larmor_precess(const SpinVector& v, double omega_L, double t) {
  if (t < 0.0) throw std::invalid_argument("larmor_precess: negative time");
  return rotate(v, kZAxis, -omega_L * t);
}

Vec3 rk4_rotation_step(const Vec3& x, const Vec3& omega, double dt) {
  const Vec3 k1 = rotation_flow(x, omega);
  const Vec3 k2 = rotation_flow(x + 0.5 * dt * k1, omega);
  const Vec3 k3 = rotation_flow(x + 0.5 * dt * k2, omega);
  const Vec3 k4 = rotation_flow(x + dt * k3, omega);
  const Vec3 next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return next / next.norm();
}

void RotationNoise::validate() const {
  if (static_detuning_sigma < 0.0 || amplitude_error_sigma < 0.0 || phase_noise_sigma < 0.0)
    throw std::invalid_argument("rotation noise sigmas must be non-negative");
  if (!(rabi_rate > 0.0)) throw std::invalid_argument("rotation noise rabi_rate must be positive");
}

bool RotationNoise::is_zero() const {
  return fixed_detuning == 0.0 && static_detuning_sigma == 0.0 && amplitude_error_sigma == 0.0 &&
         phase_noise_sigma == 0.0;
}

ShotErrors draw_shot_errors(const RotationNoise& noise, RandomStream& rng) {
  ShotErrors e;
  e.detuning = noise.fixed_detuning + noise.static_detuning_sigma * rng.normal();
  e.amplitude_error = noise.amplitude_error_sigma * rng.normal();
  return e;
}

SpinVector noisy_rotate(const SpinVector& v, double axis_phase, double angle,
                        const RotationNoise& noise, const ShotErrors& errors,
                        RandomStream& rng) {
  noise.validate();
  double phase = axis_phase;
  if (noise.phase_noise_sigma > 0.0) phase += noise.phase_noise_sigma * rng.normal();
  if (angle < 0.0) {  // drive with the opposite RF phase for the same duration
    angle = -angle;
    phase += kPi;
  }
  if (errors.detuning == 0.0 && errors.amplitude_error == 0.0 && phase == axis_phase)
    return rotate(v, {std::cos(phase), std::sin(phase), 0.0}, angle);
  // The pulse lasts angle/Omega; during it the torque vector is
  // (Omega(1+eps) n_phase, Delta).
  const double duration = angle / noise.rabi_rate;
  const double drive = noise.rabi_rate * (1.0 + errors.amplitude_error);
  const Vec3 omega(drive * std::cos(phase), drive * std::sin(phase), errors.detuning);
  const double w = omega.norm();
  if (w == 0.0) return v;
  return rotate(v, SpinVector::normalized(omega), w * duration);
}

SpinVector noisy_rotate(const SpinVector& v, double axis_phase, double angle,
                        const RotationNoise& noise, RandomStream& rng) {
  const ShotErrors e = draw_shot_errors(noise, rng);
  return noisy_rotate(v, axis_phase, angle, noise, e, rng);
}

SpinVector noisy_rotate_z(const SpinVector& v, double angle, const ShotErrors& errors) {
  return rotate(v, kZAxis, angle * (1.0 + errors.amplitude_error));
}

std::pair<Vec3, Vec3> tangent_basis(const SpinVector& v) {
  const Vec3 x = v.vec();
  Vec3 e1 = Vec3::UnitZ().cross(x);
  if (e1.norm() < 1e-3) e1 = Vec3::UnitX().cross(x);
  e1.normalize();
  const Vec3 e2 = x.cross(e1);
  return {e1, e2};
}

SpinVector gaussian_tilt(const SpinVector& v, double sigma, RandomStream& rng) {
  const auto [e1, e2] = tangent_basis(v);
  const double a = sigma * rng.normal();
  const double b = sigma * rng.normal();
  return SpinVector::normalized(v.vec() + a * e1 + b * e2);
}

}  // namespace qmf
