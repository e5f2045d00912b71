#include "qmf/quantum.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace qmf {

namespace {

using cd = std::complex<double>;

Eigen::Index dimension_for(double j) {
  if (!(j >= 0.5) || j > kMaxDenseSpin)
    throw std::invalid_argument("spin size must satisfy 1/2 <= j <= 500 for dense storage");
  const double two_j = 2.0 * j;
  if (std::abs(two_j - std::round(two_j)) > 1e-12) throw std::invalid_argument("2j must be an integer");
  return static_cast<Eigen::Index>(std::llround(two_j)) + 1;
}

double m_of(double j, Eigen::Index i) { return j - static_cast<double>(i); }

// <m+1|J+|m> for the state at index i (m = j - i).
double ladder(double j, Eigen::Index i) {
  const double m = m_of(j, i);
  return std::sqrt(std::max(0.0, j * (j + 1.0) - m * (m + 1.0)));
}

// <Jx>, <Jy>, <Jz> in O(dim) using the tridiagonal ladder structure.
Vec3 spin_expectations(const QuantumSpinState& s) {
  const auto& a = s.amplitudes;
  cd jplus = 0.0;
  double jz = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    jz += m_of(s.j, i) * std::norm(a(i));
    if (i > 0) jplus += std::conj(a(i - 1)) * ladder(s.j, i) * a(i);
  }
  return {jplus.real(), jplus.imag(), jz};
}

}  // namespace

SpinOperators spin_operators(double j) {
  const Eigen::Index n = dimension_for(j);
  SpinOperators ops;
  ops.j = j;
  CMatrix jp = CMatrix::Zero(n, n);
  ops.jz = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ops.jz(i, i) = m_of(j, i);
    if (i > 0) jp(i - 1, i) = ladder(j, i);
  }
  const CMatrix jm = jp.adjoint();
  ops.jx = 0.5 * (jp + jm);
  ops.jy = cd(0.0, -0.5) * (jp - jm);
  return ops;
}

QuantumSpinState scs_state(double j, SphericalAngles a) {
  const Eigen::Index n = dimension_for(j);
  QuantumSpinState s;
  s.j = j;
  s.amplitudes = CVector::Zero(n);
  const double c = std::cos(a.theta / 2.0), sn = std::sin(a.theta / 2.0);
  const double two_j = 2.0 * j;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = m_of(j, i);
    const double up = j + m, down = j - m;
    // sqrt(C(2j, j+m)) c^(j+m) s^(j-m) in log space; 0^0 = 1.
    if ((c == 0.0 && up > 0.0) || (sn == 0.0 && down > 0.0)) continue;
    double logmag = 0.5 * (std::lgamma(two_j + 1.0) - std::lgamma(up + 1.0) - std::lgamma(down + 1.0));
    if (up > 0.0) logmag += up * std::log(std::abs(c));
    if (down > 0.0) logmag += down * std::log(std::abs(sn));
    double sign = 1.0;
    if (c < 0.0 && std::fmod(up, 2.0) == 1.0) sign = -sign;
    if (sn < 0.0 && std::fmod(down, 2.0) == 1.0) sign = -sign;
    s.amplitudes(i) = sign * std::exp(logmag) * std::polar(1.0, -m * a.phi);
  }
  s.amplitudes /= s.amplitudes.norm();
  return s;
}

double expect(const QuantumSpinState& s, const CMatrix& op) {
  if (op.rows() != s.dim() || op.cols() != s.dim()) throw std::invalid_argument("expect: dimension mismatch");
  const cd v = s.amplitudes.dot(op * s.amplitudes);  // conjugates the first argument
  return v.real();
}

KrausResult kraus_apply(const QuantumSpinState& s, double m, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("kraus_apply: sigma must be positive");
  const double norm = std::pow(2.0 * kPi * sigma * sigma, -0.25);
  // Envelope exponents are shifted by their smallest value over the occupied
  // levels so the conditioned state stays well defined far in the tails,
  // where the density itself underflows to 0.
  auto exponent = [&](Eigen::Index i) {
    const double d = m_of(s.j, i) - m;
    return d * d / (4.0 * sigma * sigma);
  };
  double shift = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < s.dim(); ++i)
    if (s.amplitudes(i) != 0.0) shift = std::min(shift, exponent(i));
  if (!std::isfinite(shift)) throw std::invalid_argument("kraus_apply: zero state");
  KrausResult r;
  r.state.j = s.j;
  r.state.amplitudes.resize(s.dim());
  for (Eigen::Index i = 0; i < s.dim(); ++i) r.state.amplitudes(i) = s.amplitudes(i) * std::exp(shift - exponent(i));
  const double scaled = r.state.amplitudes.squaredNorm();
  r.prob_density = norm * norm * scaled * std::exp(-2.0 * shift);
  r.state.amplitudes /= std::sqrt(scaled);
  return r;
}

double sample_outcome(const QuantumSpinState& s, double sigma, RandomStream& rng) {
  const double u = rng.uniform() * s.amplitudes.squaredNorm();
  double acc = 0.0;
  Eigen::Index pick = s.dim() - 1;
  for (Eigen::Index i = 0; i < s.dim(); ++i) {
    acc += std::norm(s.amplitudes(i));
    if (u < acc) {
      pick = i;
      break;
    }
  }
  return m_of(s.j, pick) + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
}

QmfStepper::QmfStepper(double j) : j_(j), ops_(spin_operators(j)) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(ops_.jy);
  if (es.info() != Eigen::Success) throw std::runtime_error("Jy diagonalization failed");
  jy_vecs_ = es.eigenvectors();
  jy_vals_ = es.eigenvalues();
}

QuantumSpinState QmfStepper::rotate_y(const QuantumSpinState& s, double beta) const {
  CVector c = jy_vecs_.adjoint() * s.amplitudes;
  for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::polar(1.0, -beta * jy_vals_(i));
  return {s.j, jy_vecs_ * c};
}

QuantumSpinState QmfStepper::unitary(const QuantumSpinState& s, double omega_x, double omega_z, double dt) const {
  if (s.j != j_) throw std::invalid_argument("QmfStepper: state has a different spin size");
  const double w = std::hypot(omega_x, omega_z);
  if (w == 0.0 || dt == 0.0) return s;
  const double beta = std::atan2(omega_x, omega_z);
  QuantumSpinState r = beta == 0.0 ? s : rotate_y(s, -beta);
  for (Eigen::Index i = 0; i < r.dim(); ++i) r.amplitudes(i) *= std::polar(1.0, -w * dt * m_of(j_, i));
  if (beta != 0.0) r = rotate_y(r, beta);
  r.amplitudes /= r.amplitudes.norm();
  return r;
}

QuantumSpinState QmfStepper::step(const QuantumSpinState& s, double m, const LmgParams& p, double dt,
                                  double sigma) const {
  const KrausResult k = kraus_apply(s, m, sigma);
  return unitary(k.state, p.alpha_lin(), p.k_nl() * m / j_, dt);
}

QuantumSpinState qmf_step(const QuantumSpinState& s, double m, const LmgParams& p, double dt, double sigma) {
  return QmfStepper(s.j).step(s, m, p, dt, sigma);
}

MmssVariance mmss_variance(double f) {
  if (!(f >= 0.5)) throw std::invalid_argument("mmss_variance: f must be >= 1/2");
  const double var = f * (f + 1.0) / 3.0;
  return {var, var / (f / 2.0)};
}

QuantumTrajectory run_qmf_trajectory(const QmfStepper& stepper, SphericalAngles start, const LmgParams& p,
                                     double dt, double sigma, std::size_t n_steps, RandomStream& rng) {
  QuantumTrajectory tr;
  tr.j = stepper.j();
  QuantumSpinState s = scs_state(stepper.j(), start);
  auto record = [&](std::size_t n, double outcome) {
    const Vec3 e = spin_expectations(s) / tr.j;
    tr.t.push_back(static_cast<double>(n) * dt);
    tr.jx.push_back(e.x());
    tr.jy.push_back(e.y());
    tr.jz.push_back(e.z());
    tr.outcome.push_back(outcome);
  };
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double m = sample_outcome(s, sigma, rng);
    record(n, m);
    s = stepper.step(s, m, p, dt, sigma);
  }
  record(n_steps, std::numeric_limits<double>::quiet_NaN());
  return tr;
}

}  // namespace qmf
