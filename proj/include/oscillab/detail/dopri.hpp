#pragma once

// Dormand-Prince 5(4) embedded pair on complex state vectors (FSAL form).

#include <algorithm>
#include <cmath>
#include <limits>

#include "oscillab/core_space.hpp"

namespace oscillab::detail {

namespace dp45 {
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                        a65 = -5103.0 / 18656.0;
inline constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                        b6 = 11.0 / 84.0;
// fifth-order minus fourth-order weights
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                        e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
}  // namespace dp45

struct StepResult {
  CVector y;
  CVector f;  // derivative at the new point (first stage of the next step)
  double error = 0.0;  // scaled RMS error; a step is acceptable when <= 1
  bool finite = true;
};

inline bool all_finite(const CVector& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k)
    if (!std::isfinite(v(k).real()) || !std::isfinite(v(k).imag())) return false;
  return true;
}

/// One Dormand-Prince step of size h from (y, f0 = rhs(y)). The system is autonomous.
template <class Rhs>
StepResult dopri_step(Rhs&& rhs, const CVector& y, const CVector& f0, double h, double atol, double rtol) {
  using namespace dp45;
  StepResult r;
  const CVector k1 = f0;
  const CVector k2 = rhs(CVector(y + h * a21 * k1));
  const CVector k3 = rhs(CVector(y + h * (a31 * k1 + a32 * k2)));
  const CVector k4 = rhs(CVector(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
  const CVector k5 = rhs(CVector(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
  const CVector k6 = rhs(CVector(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
  r.y = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  r.f = rhs(r.y);
  if (!all_finite(r.y) || !all_finite(r.f) || !all_finite(k2) || !all_finite(k3) || !all_finite(k4) ||
      !all_finite(k5) || !all_finite(k6)) {
    r.finite = false;
    r.error = std::numeric_limits<double>::infinity();
    return r;
  }
  const CVector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * r.f);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double scale = atol + rtol * std::max(std::abs(y(k)), std::abs(r.y(k)));
    const double q = std::abs(err(k)) / scale;
    acc += q * q;
  }
  r.error = std::sqrt(acc / static_cast<double>(std::max<Eigen::Index>(1, y.size())));
  return r;
}

/// Standard step-size update with safety factor 0.9 and growth clamped to [0.2, 5].
inline double next_step(double h, double error) {
  if (!std::isfinite(error)) return 0.25 * h;
  if (error == 0.0) return 5.0 * h;
  return h * std::clamp(0.9 * std::pow(error, -0.2), 0.2, 5.0);
}

}  // namespace oscillab::detail
