#pragma once

#include "stlpi2/stl.hpp"

#include <algorithm>
#include <cmath>

namespace stlpi2 {

/// Prescribed-performance band for one subtask's robustness: the upper
/// boundary stays at rho_max while the lower one ramps linearly from
/// gamma0 to gamma_inf over the first t_c seconds.
struct Funnel {
  double rho_max = 0.0;
  double gamma0 = 0.0;
  double gamma_inf = 0.0;
  double t_c = 0.0;

  double gamma(double t) const {
    if (t >= t_c) return gamma_inf;
    return gamma0 + (gamma_inf - gamma0) * std::max(t, 0.0) / t_c;
  }
};

/// Throws std::invalid_argument unless gamma0 <= gamma_inf < rho_max and
/// t_c > 0.
void validate(const Funnel& funnel);

/// Joined linear-exponential gain map on [0, 1]:
///   S(xi) = max(0, beta/xi_c * xi)        for xi <= xi_c
///   S(xi) = m + alpha * (exp(kappa*xi)-1) for xi >  xi_c
/// with m, alpha, kappa solved so that value and slope are continuous at
/// xi_c and S(1) = B.
struct TransformFn {
  double beta = 0.0;
  double B = 0.0;
  double xi_c = 0.0;
  double m = 0.0;
  double alpha = 0.0;
  double kappa = 0.0;

  double operator()(double xi) const {
    if (xi <= xi_c) return std::max(0.0, beta / xi_c * xi);
    return m + alpha * (std::exp(kappa * xi) - 1.0);
  }
};

/// Solves for the exponential piece by bisection on kappa. Requires
/// 0 < beta < B and 0 < xi_c < 1; all three joint constraints end up with
/// residuals below 1e-10, otherwise an error reports them.
TransformFn solve_transform(double beta, double B, double xi_c);

/// Normalized position of a robustness value inside its funnel,
/// (rho_max - rho) / (rho_max - gamma(t)). Returned unclamped; 0 at the
/// upper boundary, 1 at the lower one.
double xi(const Funnel& funnel, double rho, double t);

/// One temporal subtask: the non-temporal core formula, its funnel, its
/// gain map, and its share of the combined law.
struct SubtaskController {
  Formula psi;
  Funnel funnel;
  TransformFn transform;
  double weight = 0.0;
};

/// S(clamp(xi,0,1)) * g(x)^T * grad smooth_robustness(psi, x) - gradient
/// ascent on the subtask robustness, bounded by B * |g^T grad|.
Vector elementary_control(const SubtaskController& sub, const Matrix& g_at_x,
                          const Vector& x, double t);

/// Convex combination of elementary controls over all subtasks. Only the
/// input map g is consulted; the drift of the plant is never visible here.
struct BaseLaw {
  std::vector<SubtaskController> subtasks;
  std::function<Matrix(const Vector&)> g;
};

/// Throws std::invalid_argument unless the weights sum to 1, every funnel
/// is valid, and every psi lies in the controllable non-temporal fragment.
void validate(const BaseLaw& law);

Vector base_control(const BaseLaw& law, const Vector& x, double t);

}  // namespace stlpi2
