#include "stlpi2/ppc.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace stlpi2 {

void validate(const Funnel& funnel) {
  if (!(funnel.t_c > 0.0)) throw std::invalid_argument("funnel: t_c must be positive");
  if (!(funnel.gamma0 <= funnel.gamma_inf))
    throw std::invalid_argument("funnel: gamma0 must not exceed gamma_inf");
  if (!(funnel.gamma_inf < funnel.rho_max))
    throw std::invalid_argument("funnel: gamma_inf must stay below rho_max");
}

namespace {

// S(1) - B after eliminating m and alpha through the continuity
// constraints at xi_c; strictly increasing in kappa.
double end_value_residual(double beta, double B, double xi_c, double kappa) {
  return beta * (1.0 + std::expm1(kappa * (1.0 - xi_c)) / (xi_c * kappa)) - B;
}

}  // namespace

TransformFn solve_transform(double beta, double B, double xi_c) {
  if (!(beta > 0.0) || !(beta < B))
    throw std::invalid_argument("transform: requires 0 < beta < B");
  if (!(xi_c > 0.0) || !(xi_c < 1.0))
    throw std::invalid_argument("transform: requires 0 < xi_c < 1");

  double lo = 1e-8;
  double hi = 1e3;
  double flo = end_value_residual(beta, B, xi_c, lo);
  double fhi = end_value_residual(beta, B, xi_c, hi);
  if (!(flo < 0.0) || !(fhi > 0.0)) {
    std::ostringstream os;
    os << "transform: no kappa in (1e-8, 1e3) meets S(1) = B"
       << " (residual at bracket ends: " << flo << ", " << fhi << ")";
    throw std::runtime_error(os.str());
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (end_value_residual(beta, B, xi_c, mid) < 0.0 ? lo : hi) = mid;
  }

  TransformFn s;
  s.beta = beta;
  s.B = B;
  s.xi_c = xi_c;
  s.kappa = 0.5 * (lo + hi);
  s.alpha = beta / (xi_c * s.kappa * std::exp(s.kappa * xi_c));
  s.m = beta - s.alpha * std::expm1(s.kappa * xi_c);

  const double value_jump = s.m + s.alpha * std::expm1(s.kappa * xi_c) - beta;
  const double slope_jump = s.alpha * s.kappa * std::exp(s.kappa * xi_c) - beta / xi_c;
  const double end_jump = s.m + s.alpha * std::expm1(s.kappa) - B;
  if (std::abs(value_jump) > 1e-10 || std::abs(slope_jump) > 1e-10 ||
      std::abs(end_jump) > 1e-10) {
    std::ostringstream os;
    os << "transform: constraint residuals too large (value " << value_jump
       << ", slope " << slope_jump << ", end " << end_jump << ")";
    throw std::runtime_error(os.str());
  }
  return s;
}

double xi(const Funnel& funnel, double rho, double t) {
  return (funnel.rho_max - rho) / (funnel.rho_max - funnel.gamma(t));
}

Vector elementary_control(const SubtaskController& sub, const Matrix& g_at_x,
                          const Vector& x, double t) {
  const SmoothEval rob = smooth_robustness(sub.psi, x);
  const double gain = sub.transform(std::clamp(xi(sub.funnel, rob.value, t), 0.0, 1.0));
  return gain * (g_at_x.transpose() * rob.gradient);
}

void validate(const BaseLaw& law) {
  if (law.subtasks.empty()) throw std::invalid_argument("base law: no subtasks");
  if (!law.g) throw std::invalid_argument("base law: missing input map g");
  double total = 0.0;
  for (const SubtaskController& sub : law.subtasks) {
    validate(sub.funnel);
    if (!sub.psi.is_ppc_fragment())
      throw std::invalid_argument("base law: subtask formula outside the non-temporal fragment");
    total += sub.weight;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("base law: subtask weights must sum to 1");
}

Vector base_control(const BaseLaw& law, const Vector& x, double t) {
  const Matrix g_at_x = law.g(x);
  Vector u = Vector::Zero(g_at_x.cols());
  for (const SubtaskController& sub : law.subtasks)
    u += sub.weight * elementary_control(sub, g_at_x, x, t);
  return u;
}

}  // namespace stlpi2
