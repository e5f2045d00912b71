#pragma once

#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "qmf/random.hpp"

namespace qmf {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Normalized collective spin direction J/|J|.
struct SpinVector {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  Vec3 vec() const { return {x, y, z}; }
  double norm() const { return vec().norm(); }
  // Throws std::invalid_argument for a zero vector.
  static SpinVector normalized(const Vec3& v);
  static SpinVector normalized(double x, double y, double z) { return normalized(Vec3(x, y, z)); }
};

inline const SpinVector kXAxis{1.0, 0.0, 0.0};
inline const SpinVector kYAxis{0.0, 1.0, 0.0};
inline const SpinVector kZAxis{0.0, 0.0, 1.0};

// theta from +z in [0, pi], phi in [-pi, pi).
struct SphericalAngles {
  double theta = 0.0;
  double phi = 0.0;
};

SpinVector from_angles(SphericalAngles a);
// phi is reported as 0 when sin(theta) < 1e-12.
SphericalAngles to_angles(const SpinVector& v);

// Right-handed (active) rotation of v about axis by angle. An axis within
// 1e-6 of unit length is renormalized; anything else throws.
SpinVector rotate(const SpinVector& v, const SpinVector& axis, double angle);

// Free precession about +z. A positive Larmor frequency turns the vector
// clockwise seen from +z, i.e. rotate(v, z, -omega_L * t).
SpinVector larmor_precess(const SpinVector& v, double omega_L, double t);

// dX/dt = omega x X, the rigid-rotation flow every plant in the library uses.
inline Vec3 rotation_flow(const Vec3& x, const Vec3& omega) { return omega.cross(x); }

// One RK4 step of the rotation flow with constant omega, renormalized.
Vec3 rk4_rotation_step(const Vec3& x, const Vec3& omega, double dt);

struct RotationNoise {
  double fixed_detuning = 0.0;         // rad/s, same for every shot
  double static_detuning_sigma = 0.0;  // rad/s, redrawn per shot
  double amplitude_error_sigma = 0.0;  // fractional, redrawn per shot
  double phase_noise_sigma = 0.0;      // rad, redrawn per pulse
  double rabi_rate = kTwoPi * 6.25e3;  // rad/s of the RF drive
  void validate() const;
  bool is_zero() const;
};

// Errors that stay fixed for one shot.
struct ShotErrors {
  double detuning = 0.0;         // rad/s
  double amplitude_error = 0.0;  // fractional
};

ShotErrors draw_shot_errors(const RotationNoise& noise, RandomStream& rng);

// Equatorial RF rotation with the given shot errors; phase noise is drawn
// from rng once for this pulse. Detuning lifts the torque vector out of the
// equatorial plane by atan(Delta/Omega) and lengthens the effective angle.
SpinVector noisy_rotate(const SpinVector& v, double axis_phase, double angle,
                        const RotationNoise& noise, const ShotErrors& errors,
                        RandomStream& rng);
// Same, with fresh shot errors drawn first.
SpinVector noisy_rotate(const SpinVector& v, double axis_phase, double angle,
                        const RotationNoise& noise, RandomStream& rng);

// z rotations (bias field pulses) only see the amplitude error.
SpinVector noisy_rotate_z(const SpinVector& v, double angle, const ShotErrors& errors);

// Small Gaussian tilt: each of two orthonormal tangent components of the
// displacement is N(0, sigma^2), so the azimuth of the tilt is uniform.
SpinVector gaussian_tilt(const SpinVector& v, double sigma, RandomStream& rng);

// Orthonormal tangent basis (e1, e2) at v with e1 x e2 = v. e1 = z x v
// normalized, falling back to x x v near the poles.
std::pair<Vec3, Vec3> tangent_basis(const SpinVector& v);

}  // namespace qmf
