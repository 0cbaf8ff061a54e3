#pragma once

// Symmetry flows generated by the invariants.
//
//  * Upsilon (invariant space): rotations of the vector J about an axis n.
//  * Gamma_m (reduced space): linear unitary maps beta -> exp(-i tau A) beta.
//  * Gamma (phase space): the same generators pulled back through the reduction
//    map. These are integrated numerically; they are ill-defined on the planes
//    alpha_n = 0 and the integrator reports a hit there instead of stepping across.
//
// A generator is always represented by a hermitean matrix A acting as
// G = conj(beta) . A . beta. With {beta_n, conj(beta_n')} = -i delta_nn' the
// reduced flow is d beta / d tau = -i A beta.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oscillab/detail/dopri.hpp"
#include "oscillab/invariants.hpp"
#include "oscillab/observables.hpp"

namespace oscillab {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 scaled(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 unit(const Vec3& a) {
  const double n = norm(a);
  if (!(n > 0.0)) throw Error("cannot normalize a zero vector");
  return scaled(a, 1.0 / n);
}

inline void require_unit(const Vec3& n, const char* what) {
  if (std::abs(norm(n) - 1.0) > 1e-12) throw Error(std::string(what) + ": direction must be a unit vector");
}

/// n . sigma
inline CMatrix pauli_dot(const Vec3& n) {
  return n[0] * observables::pauli(1) + n[1] * observables::pauli(2) + n[2] * observables::pauli(3);
}

/// SU(2) element cos(tau/2) 1 - i sin(tau/2) n . sigma.
inline CMatrix su2_rotation(const Vec3& n, double tau) {
  const Complex i(0.0, 1.0);
  return std::cos(0.5 * tau) * CMatrix::Identity(2, 2) - i * std::sin(0.5 * tau) * pauli_dot(n);
}

// ---------------------------------------------------------------------------
// Generators

class Generator {
 public:
  enum class Kind { J0, J3, Direction, Hermitean };

  static Generator j0(std::size_t dim = 2) {
    return Generator(Kind::J0, 0.5 * CMatrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim)),
                     std::nullopt);
  }
  static Generator j3() { return Generator(Kind::J3, 0.5 * observables::pauli(3), Vec3{0.0, 0.0, 1.0}); }
  static Generator direction(const Vec3& n) {
    require_unit(n, "Generator::direction");
    return Generator(Kind::Direction, 0.5 * pauli_dot(n), n);
  }
  static Generator hermitean(CMatrix a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("generator matrix must be square");
    if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw Error("generator matrix must be hermitean");
    return Generator(Kind::Hermitean, std::move(a), std::nullopt);
  }
  /// J^s_{nn'}: A = (E_nn' + E_n'n) / 2
  static Generator symmetric(std::size_t dim, std::size_t n, std::size_t np) {
    using observables::matrix_unit;
    return hermitean(0.5 * (matrix_unit(dim, n, np) + matrix_unit(dim, np, n)));
  }
  /// J^a_{nn'}: A = (E_nn' - E_n'n) / 2i
  static Generator antisymmetric(std::size_t dim, std::size_t n, std::size_t np) {
    using observables::matrix_unit;
    return hermitean(Complex(0.0, -0.5) * (matrix_unit(dim, n, np) - matrix_unit(dim, np, n)));
  }
  /// J^d_n: A = (E_nn - E_{n+1,n+1}) / 2
  static Generator diagonal(std::size_t dim, std::size_t n) {
    using observables::matrix_unit;
    if (n + 1 >= dim) throw IndexOutOfRange("diagonal generator index out of range");
    return hermitean(0.5 * (matrix_unit(dim, n, n) - matrix_unit(dim, n + 1, n + 1)));
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(a_.rows()); }
  const CMatrix& matrix() const noexcept { return a_; }
  /// Rotation axis in invariant space, for two-mode generators that have one.
  const std::optional<Vec3>& axis() const noexcept { return axis_; }

  /// G = conj(beta) . A . beta as a phase-space function.
  PhaseFunction as_function(const FrequencySignature& sig) const {
    require_dim(sig.dim(), dim(), "generator");
    return observables::sesquilinear(sig.m(), observables::all_modes(sig.dim()), a_, "G");
  }

  /// Value of the generator on a reduced point.
  double value(const ReducedPoint& b) const { return (b.beta.adjoint() * a_ * b.beta)(0, 0).real(); }

 private:
  Generator(Kind k, CMatrix a, std::optional<Vec3> axis) : kind_(k), a_(std::move(a)), axis_(axis) {}

  Kind kind_;
  CMatrix a_;
  std::optional<Vec3> axis_;
};

// ---------------------------------------------------------------------------
// Closed-form flows

/// Time evolution alpha_n(t) = exp(-i omega t / m_n) alpha_n(0).
inline PhasePoint evolve_time(const PhasePoint& x, const FrequencySignature& sig, double t) {
  require_dim(x.dim(), sig.dim(), "evolve_time");
  PhasePoint y = x;
  for (std::size_t n = 0; n < sig.dim(); ++n)
    y.alpha(static_cast<Eigen::Index>(n)) *= std::polar(1.0, -sig.omega() * t / sig.m(n));
  return y;
}

/// exp(-i tau A) for hermitean A.
inline CMatrix unitary_exp(const CMatrix& a, double tau) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
  const Eigen::VectorXd& lam = es.eigenvalues();
  CVector phases(lam.size());
  for (Eigen::Index k = 0; k < lam.size(); ++k) phases(k) = std::polar(1.0, -tau * lam(k));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline ReducedPoint flow_reduced(const ReducedPoint& b, const Generator& g, double tau) {
  require_dim(b.dim(), g.dim(), "flow_reduced");
  switch (g.kind()) {
    case Generator::Kind::J0:
      return ReducedPoint{b.beta * std::polar(1.0, -0.5 * tau)};
    case Generator::Kind::J3: {
      ReducedPoint r = b;
      r.beta(0) *= std::polar(1.0, -0.5 * tau);
      r.beta(1) *= std::polar(1.0, 0.5 * tau);
      return r;
    }
    case Generator::Kind::Direction:
      return ReducedPoint{su2_rotation(*g.axis(), tau) * b.beta};
    case Generator::Kind::Hermitean:
      return ReducedPoint{unitary_exp(g.matrix(), tau) * b.beta};
  }
  return b;
}

/// Rotation of J about n by tau: j(tau) = cos tau j + (1 - cos tau) n (n.j) + sin tau (n x j).
/// This is the image of flow_reduced under invariant_set (dJ/dtau = {J, n.J} = n x J).
inline InvariantSet flow_upsilon(const InvariantSet& inv, const Vec3& n, double tau) {
  if (!inv.jvec) throw DimensionMismatch("flow_upsilon requires a two-mode invariant set");
  require_unit(n, "flow_upsilon");
  const Vec3& j = *inv.jvec;
  const double c = std::cos(tau), s = std::sin(tau);
  const Vec3 r = scaled(j, c) + scaled(n, (1.0 - c) * dot(n, j)) + scaled(cross(n, j), s);
  return InvariantSet::from_four_vector(inv.j0, r);
}

// ---------------------------------------------------------------------------
// Vector fields on Gamma

/// d alpha / d tau = {alpha, G} for G = conj(beta) A beta:
///   V_n = -i (Re c_n + i m_n Im c_n) / conj(alpha_n),   c_n = conj(beta_n) (A beta)_n.
/// For m_n = 1 this reduces to the smooth -i (A beta)_n. Non-finite on alpha_n = 0 when m_n > 1.
inline CVector gamma_field(const PhasePoint& x, const FrequencySignature& sig, const CMatrix& a) {
  const ReducedPoint b = reduce(x, sig);
  const CVector ab = a * b.beta;
  const Complex i(0.0, 1.0);
  CVector v(x.alpha.size());
  for (Eigen::Index n = 0; n < x.alpha.size(); ++n) {
    const int m = sig.m(static_cast<std::size_t>(n));
    if (m == 1) {
      v(n) = -i * ab(n);
      continue;
    }
    const Complex an = x.alpha(n);
    if (an == Complex(0.0, 0.0)) {
      v(n) = Complex(std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const Complex c = std::conj(b.beta(n)) * ab(n);
    v(n) = -i * Complex(c.real(), m * c.imag()) / std::conj(an);
  }
  return v;
}

/// The same field from central differences of G: V_n = -i dG/d conj(alpha_n),
/// with d/d conj(alpha) = (d/dq + i d/dp) / sqrt(2).
inline CVector gamma_field_fd(const PhasePoint& x, const FrequencySignature& sig, const CMatrix& a, double h = 1e-6) {
  PhaseFunction g = without_gradient(observables::sesquilinear(sig.m(), observables::all_modes(sig.dim()), a, "G"));
  const Eigen::Index n = x.alpha.size();
  const CVector grad = [&] {
    CVector out(2 * n);
    for (Eigen::Index c = 0; c < 2 * n; ++c) {
      PhasePoint yp = x, ym = x;
      const Complex d = c < n ? Complex(h / std::numbers::sqrt2, 0.0) : Complex(0.0, h / std::numbers::sqrt2);
      yp.alpha(c % n) += d;
      ym.alpha(c % n) -= d;
      out(c) = (g.eval(yp) - g.eval(ym)) / (2.0 * h);
    }
    return out;
  }();
  const Complex i(0.0, 1.0);
  CVector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = -i * (grad(k) + i * grad(n + k)) / std::numbers::sqrt2;
  return v;
}

// ---------------------------------------------------------------------------
// Numerical flows in Gamma

enum class Space { Gamma, Reduced, Upsilon };

inline std::string to_string(Space s) {
  switch (s) {
    case Space::Gamma: return "gamma";
    case Space::Reduced: return "reduced";
    case Space::Upsilon: return "upsilon";
  }
  return "?";
}

/// Sampled flow output. `states` holds alpha (Gamma) or beta (Reduced) and is empty for Upsilon.
struct OrbitTrace {
  Space space = Space::Gamma;
  std::vector<double> tau;
  std::vector<CVector> states;
  std::vector<InvariantSet> invariants;
  /// Deviation of the quantities the flow conserves (J0 and the generator) from tau = 0.
  std::vector<double> drift;
  /// |alpha_n|^2 against the closed-form moduli (Gamma only).
  std::vector<double> moduli_error;
  /// |alpha_n - reconstructed alpha_n| using closed-form moduli and lifted phases (Gamma only).
  std::vector<double> reconstruction_error;
  /// Continuous angles Phi_n / m_n at the last sample (Gamma only).
  std::vector<double> unwrapped_angle;
  std::size_t steps = 0;
  std::size_t rejected = 0;
};

struct SingularityReport {
  bool hit = false;
  double tau_star = 0.0;
  std::optional<std::size_t> plane;  // zero-based mode index whose action vanished
  double min_action = 0.0;
  std::vector<double> actions_at_hit;
  std::string diagnostic;
  /// Two-mode only: v+ = J + J0 e3 (plane P1) and v- = J - J0 e3 (plane P2).
  std::optional<std::array<Vec3, 2>> normals;
};

inline constexpr double kDefaultSingularEps = 1e-6;
inline constexpr double kDefaultFlowAtol = 1e-10;
inline constexpr double kDefaultFlowRtol = 1e-10;
inline constexpr double kDefaultFlowMaxStep = 0.1;
inline constexpr double kDefaultEventTol = 1e-9;

struct FlowOptions {
  double eps_sing = kDefaultSingularEps;
  double atol = kDefaultFlowAtol;
  double rtol = kDefaultFlowRtol;
  double h_init = 1e-3;
  double h_min = 1e-12;
  double h_max = kDefaultFlowMaxStep;
  std::size_t max_steps = 5'000'000;
  /// Output spacing; 0 records every accepted step.
  double sample_dtau = 0.0;
  double event_tol = kDefaultEventTol;
};

struct GammaFlowResult {
  OrbitTrace trace;
  SingularityReport report;
};

inline std::array<Vec3, 2> singular_normals(const InvariantSet& inv) {
  const Vec3& j = *inv.jvec;
  return {Vec3{j[0], j[1], j[2] + inv.j0}, Vec3{j[0], j[1], j[2] - inv.j0}};
}

namespace detail {

inline double min_action(const CVector& a) {
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < a.size(); ++k) m = std::min(m, std::norm(a(k)));
  return m;
}

/// Bisection for the sign change of `fn` on [lo, hi] with fn(lo) < 0 <= fn(hi).
template <class Fn>
double bisect(Fn&& fn, double lo, double hi, double tol) {
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (fn(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Integrates d alpha / d tau = {alpha, G} from x over [0, tau_max] and stops at the first
/// parameter where some action drops below eps_sing.
inline GammaFlowResult flow_gamma(const PhasePoint& x, const FrequencySignature& sig, const Generator& g,
                                  double tau_max, const FlowOptions& opt = {}) {
  require_dim(x.dim(), sig.dim(), "flow_gamma");
  require_dim(g.dim(), sig.dim(), "flow_gamma");
  if (!(tau_max > 0.0)) throw Error("flow_gamma: tau_max must be positive");
  const std::size_t dim = sig.dim();
  for (std::size_t n = 0; n < dim; ++n)
    if (x.action(n) < opt.eps_sing) throw SingularInput("flow_gamma: initial point lies on singular plane P" + std::to_string(n + 1));

  const CMatrix& a = g.matrix();
  auto rhs = [&](const CVector& y) { return gamma_field(PhasePoint{y}, sig, a); };
  auto step_from = [&](const CVector& y, const CVector& f, double h) {
    return detail::dopri_step(rhs, y, f, h, opt.atol, opt.rtol);
  };
  auto action_rate = [](const CVector& y, const CVector& f, Eigen::Index n) {
    return 2.0 * (std::conj(y(n)) * f(n)).real();
  };

  const ReducedPoint beta0 = reduce(x, sig);
  const InvariantSet inv0 = invariant_set(beta0);
  const double g0 = g.value(beta0);
  const bool two_mode_axis = dim == 2 && g.axis().has_value();

  GammaFlowResult out;
  OrbitTrace& tr = out.trace;
  tr.space = Space::Gamma;
  SingularityReport& rep = out.report;
  if (dim == 2) rep.normals = singular_normals(inv0);

  // continuous phases: Phi_n from the numerical alpha, PhiCF_n from the closed-form beta
  std::vector<double> phi_num(dim), phi_cf(dim);
  for (std::size_t n = 0; n < dim; ++n) {
    phi_num[n] = sig.m(n) * std::arg(x.alpha(static_cast<Eigen::Index>(n)));
    phi_cf[n] = phi_num[n];
  }
  CVector beta_cf_prev = beta0.beta;

  auto record = [&](double tau, const CVector& y) {
    const ReducedPoint b = reduce(PhasePoint{y}, sig);
    const InvariantSet inv = invariant_set(b);
    tr.tau.push_back(tau);
    tr.states.push_back(y);
    tr.invariants.push_back(inv);
    tr.drift.push_back(std::max(std::abs(inv.j0 - inv0.j0), std::abs(g.value(b) - g0)));

    const ReducedPoint bcf = flow_reduced(beta0, g, tau);
    std::vector<double> target(dim);
    if (two_mode_axis) {
      const InvariantSet rot = flow_upsilon(inv0, *g.axis(), tau);
      target[0] = sig.m(0) * (rot.j0 + (*rot.jvec)[2]);
      target[1] = sig.m(1) * (rot.j0 - (*rot.jvec)[2]);
    } else {
      for (std::size_t n = 0; n < dim; ++n) target[n] = sig.m(n) * std::norm(bcf.beta(static_cast<Eigen::Index>(n)));
    }
    double mod_err = 0.0, rec_err = 0.0;
    for (std::size_t n = 0; n < dim; ++n) {
      const auto k = static_cast<Eigen::Index>(n);
      mod_err = std::max(mod_err, std::abs(std::norm(y(k)) - target[n]));
      const Complex rec = std::polar(std::sqrt(std::max(0.0, target[n])), phi_cf[n] / sig.m(n));
      rec_err = std::max(rec_err, std::abs(y(k) - rec));
    }
    tr.moduli_error.push_back(mod_err);
    tr.reconstruction_error.push_back(rec_err);
  };

  CVector y = x.alpha;
  CVector f = rhs(y);
  double tau = 0.0;
  double h = std::min(opt.h_init, opt.h_max);
  double running_min = detail::min_action(y);
  record(0.0, y);
  double next_sample = opt.sample_dtau > 0.0 ? opt.sample_dtau : 0.0;

  while (tau < tau_max) {
    if (tr.steps + tr.rejected >= opt.max_steps) throw LimitExceeded("flow_gamma: step limit reached");
    bool land_on_sample = false;
    bool land_on_end = false;
    if (tau + h >= tau_max) {
      h = tau_max - tau;
      land_on_end = true;
    }
    if (opt.sample_dtau > 0.0 && tau + h >= next_sample) {
      h = next_sample - tau;
      land_on_sample = true;
      land_on_end = land_on_end && next_sample >= tau_max;
    }
    if (h < opt.h_min) {
      rep.hit = true;
      rep.tau_star = tau;
      const Eigen::Index worst = [&] {
        Eigen::Index w = 0;
        for (Eigen::Index k = 1; k < y.size(); ++k)
          if (std::norm(y(k)) < std::norm(y(w))) w = k;
        return w;
      }();
      rep.plane = static_cast<std::size_t>(worst);
      rep.min_action = std::min(running_min, std::norm(y(worst)));
      for (Eigen::Index k = 0; k < y.size(); ++k) rep.actions_at_hit.push_back(std::norm(y(k)));
      rep.diagnostic = "step size underflow approaching plane P" + std::to_string(worst + 1);
      record(tau, y);
      break;
    }

    const detail::StepResult s = step_from(y, f, h);
    if (!s.finite || s.error > 1.0) {
      ++tr.rejected;
      h = detail::next_step(h, s.error);
      continue;
    }
    bool phase_jump = false;
    for (std::size_t n = 0; n < dim && !phase_jump; ++n) {
      const auto k = static_cast<Eigen::Index>(n);
      if (y(k) == Complex(0.0, 0.0) || s.y(k) == Complex(0.0, 0.0)) continue;
      if (sig.m(n) * std::abs(std::arg(s.y(k) / y(k))) >= 0.5 * kPi) phase_jump = true;
    }
    if (phase_jump) {
      ++tr.rejected;
      h *= 0.5;
      continue;
    }

    // singular-plane events inside [tau, tau + h]
    std::optional<double> event_s;
    std::size_t event_plane = 0;
    double event_min = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < dim; ++n) {
      const auto k = static_cast<Eigen::Index>(n);
      auto action_at = [&](double sub) { return sub <= 0.0 ? std::norm(y(k)) : std::norm(step_from(y, f, sub).y(k)); };
      auto rate_at = [&](double sub) {
        if (sub <= 0.0) return action_rate(y, f, k);
        const auto r = step_from(y, f, sub);
        return action_rate(r.y, r.f, k);
      };
      const double i1 = std::norm(s.y(k));
      const double d0 = action_rate(y, f, k), d1 = action_rate(s.y, s.f, k);
      double s_min = h, i_min = i1;
      if (d0 < 0.0 && d1 > 0.0) {
        s_min = detail::bisect(rate_at, 0.0, h, opt.event_tol * 1e-3);
        i_min = action_at(s_min);
      }
      running_min = std::min(running_min, i_min);
      if (i_min < opt.eps_sing) {
        const double cross = detail::bisect([&](double sub) { return opt.eps_sing - action_at(sub); }, 0.0, s_min,
                                            opt.event_tol * 1e-3);
        if (!event_s || cross < *event_s) {
          event_s = cross;
          event_plane = n;
          event_min = i_min;
        }
      }
    }
    if (event_s) {
      const CVector y_hit = step_from(y, f, *event_s).y;
      rep.hit = true;
      rep.tau_star = tau + *event_s;
      rep.plane = event_plane;
      rep.min_action = event_min;
      for (Eigen::Index k = 0; k < y_hit.size(); ++k) rep.actions_at_hit.push_back(std::norm(y_hit(k)));
      rep.diagnostic = "action I_" + std::to_string(event_plane + 1) + " fell below eps_sing";
      ++tr.steps;
      record(rep.tau_star, y_hit);
      break;
    }

    // accept
    for (std::size_t n = 0; n < dim; ++n) {
      const auto k = static_cast<Eigen::Index>(n);
      if (y(k) != Complex(0.0, 0.0) && s.y(k) != Complex(0.0, 0.0)) phi_num[n] += sig.m(n) * std::arg(s.y(k) / y(k));
    }
    tau = land_on_end ? tau_max : (land_on_sample ? next_sample : tau + h);
    y = s.y;
    f = s.f;
    ++tr.steps;
    const CVector beta_cf = flow_reduced(beta0, g, tau).beta;
    for (std::size_t n = 0; n < dim; ++n) {
      const auto k = static_cast<Eigen::Index>(n);
      if (beta_cf(k) != Complex(0.0, 0.0) && beta_cf_prev(k) != Complex(0.0, 0.0))
        phi_cf[n] += std::arg(beta_cf(k) / beta_cf_prev(k));
    }
    beta_cf_prev = beta_cf;
    if (opt.sample_dtau <= 0.0 || land_on_sample || land_on_end) record(tau, y);
    if (land_on_sample) next_sample += opt.sample_dtau;
    h = std::min(detail::next_step(h, s.error), opt.h_max);
  }

  rep.min_action = rep.hit ? rep.min_action : running_min;
  tr.unwrapped_angle.resize(dim);
  for (std::size_t n = 0; n < dim; ++n) tr.unwrapped_angle[n] = phi_num[n] / sig.m(n);
  return out;
}

/// Closed-form sampling of the reduced flow on tau in [0, tau_max] with spacing dtau.
inline OrbitTrace sample_reduced(const ReducedPoint& b, const Generator& g, double tau_max, double dtau) {
  OrbitTrace tr;
  tr.space = Space::Reduced;
  const InvariantSet inv0 = invariant_set(b);
  const double g0 = g.value(b);
  const auto count = static_cast<std::size_t>(std::floor(tau_max / dtau + 1e-9));
  for (std::size_t k = 0; k <= count; ++k) {
    const double tau = std::min(tau_max, static_cast<double>(k) * dtau);
    const ReducedPoint r = flow_reduced(b, g, tau);
    const InvariantSet inv = invariant_set(r);
    tr.tau.push_back(tau);
    tr.states.push_back(r.beta);
    tr.invariants.push_back(inv);
    tr.drift.push_back(std::max(std::abs(inv.j0 - inv0.j0), std::abs(g.value(r) - g0)));
  }
  if (tr.tau.back() < tau_max) {
    const ReducedPoint r = flow_reduced(b, g, tau_max);
    const InvariantSet inv = invariant_set(r);
    tr.tau.push_back(tau_max);
    tr.states.push_back(r.beta);
    tr.invariants.push_back(inv);
    tr.drift.push_back(std::max(std::abs(inv.j0 - inv0.j0), std::abs(g.value(r) - g0)));
  }
  return tr;
}

/// Closed-form sampling of the rotation in invariant space.
inline OrbitTrace sample_upsilon(const InvariantSet& inv0, const Vec3& n, double tau_max, double dtau) {
  OrbitTrace tr;
  tr.space = Space::Upsilon;
  const double r0 = norm(*inv0.jvec);
  auto push = [&](double tau) {
    const InvariantSet inv = flow_upsilon(inv0, n, tau);
    tr.tau.push_back(tau);
    tr.invariants.push_back(inv);
    tr.drift.push_back(std::max(std::abs(inv.j0 - inv0.j0), std::abs(norm(*inv.jvec) - r0)));
  };
  const auto count = static_cast<std::size_t>(std::floor(tau_max / dtau + 1e-9));
  for (std::size_t k = 0; k <= count; ++k) push(std::min(tau_max, static_cast<double>(k) * dtau));
  if (tr.tau.back() < tau_max) push(tau_max);
  return tr;
}

// ---------------------------------------------------------------------------
// Singular directions

/// Plane of rotation axes n with n . (J - p) = 0 for a pole p = -/+ J0 e3.
/// Rotating J about any unit vector in the plane carries it through p.
struct SingularPlane {
  std::size_t plane = 0;  // zero-based mode whose action vanishes at the pole
  int pole = 0;           // -1: south (J3 = -J0), +1: north (J3 = +J0)
  Vec3 normal{};
  std::array<Vec3, 2> basis{};

  Vec3 direction(double theta) const { return scaled(basis[0], std::cos(theta)) + scaled(basis[1], std::sin(theta)); }
};

struct SingularDirections {
  double j0 = 0.0;
  Vec3 j{};
  /// [0]: P1 (alpha_1 = 0, south pole); [1]: P2 (alpha_2 = 0, north pole).
  std::array<SingularPlane, 2> planes{};
};

inline SingularDirections singular_planes(const InvariantSet& inv) {
  if (!inv.jvec) throw DimensionMismatch("singular_planes requires a two-mode invariant set");
  const Vec3& j = *inv.jvec;
  const double rho = std::hypot(j[0], j[1]);
  if (!(rho > 1e-14 * std::max(1.0, inv.j0))) {
    throw SingularInput("J is parallel to e3: the critical circles degenerate to the poles");
  }
  SingularDirections d;
  d.j0 = inv.j0;
  d.j = j;
  // J x e3 is perpendicular to both normals
  const Vec3 u1 = unit(cross(j, Vec3{0.0, 0.0, 1.0}));
  const auto normals = singular_normals(inv);
  for (int k = 0; k < 2; ++k) {
    SingularPlane& p = d.planes[static_cast<std::size_t>(k)];
    p.plane = static_cast<std::size_t>(k);
    p.pole = k == 0 ? -1 : +1;
    p.normal = normals[static_cast<std::size_t>(k)];
    p.basis = {u1, unit(cross(unit(p.normal), u1))};
  }
  return d;
}

inline SingularDirections singular_planes(const PhasePoint& x, const FrequencySignature& sig) {
  require_dim(sig.dim(), 2, "singular_planes");
  for (std::size_t n = 0; n < 2; ++n)
    if (x.action(n) == 0.0) throw SingularInput("point already lies on plane P" + std::to_string(n + 1));
  return singular_planes(invariant_set(reduce(x, sig)));
}

// ---------------------------------------------------------------------------
// Boosts, Hopf fibration, group composition

struct BoostResult {
  ReducedPoint beta;
  InvariantSet invariants;
};

/// beta(gamma) = (cosh(gamma/2) + sinh(gamma/2) nu . sigma) beta.
inline BoostResult lorentz_boost(const ReducedPoint& b, const Vec3& nu, double gamma) {
  require_dim(b.dim(), 2, "lorentz_boost");
  require_unit(nu, "lorentz_boost");
  const CMatrix u = std::cosh(0.5 * gamma) * CMatrix::Identity(2, 2) + std::sinh(0.5 * gamma) * pauli_dot(nu);
  ReducedPoint out{u * b.beta};
  return {out, invariant_set(out)};
}

struct HopfSample {
  ReducedPoint beta;
  InvariantSet invariants;
};

/// Uniform samples on the energy 3-sphere conj(beta).beta = E / omega, with their projections.
inline std::vector<HopfSample> hopf_sample(const FrequencySignature& sig, double energy, std::size_t count,
                                           std::uint64_t seed) {
  require_dim(sig.dim(), 2, "hopf_sample");
  if (!(energy > 0.0)) throw Error("hopf_sample: energy must be positive");
  const double radius = std::sqrt(energy / sig.omega());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<HopfSample> out;
  out.reserve(count);
  while (out.size() < count) {
    CVector v(2);
    v(0) = Complex(gauss(rng), gauss(rng));
    v(1) = Complex(gauss(rng), gauss(rng));
    const double r = v.norm();
    if (r < 1e-12) continue;
    ReducedPoint b{v * (radius / r)};
    out.push_back({b, invariant_set(b)});
  }
  return out;
}

struct RotationWordElement {
  Vec3 n;
  double tau;
};

/// Max componentwise deviation between applying the rotations one by one and applying
/// their SU(2) matrix product once.
inline double group_compose_check(const std::vector<RotationWordElement>& word, const ReducedPoint& b) {
  require_dim(b.dim(), 2, "group_compose_check");
  ReducedPoint seq = b;
  CMatrix product = CMatrix::Identity(2, 2);
  for (const auto& e : word) {
    seq = flow_reduced(seq, Generator::direction(e.n), e.tau);
    product = su2_rotation(e.n, e.tau) * product;
  }
  const CVector once = product * b.beta;
  return (seq.beta - once).cwiseAbs().maxCoeff();
}

}  // namespace oscillab
