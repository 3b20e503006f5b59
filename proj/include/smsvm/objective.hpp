#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "smsvm/dataset.hpp"

namespace smsvm {

// All solver knobs in one place. lambda/mu weight the l2/l1 penalties; the
// rest parameterize the smoothing schedule and the guarded Newton step.
struct Hyperparams {
  double lambda = 1e-3;    // l2 weight, >= 0
  double mu = 1e-3;        // l1 weight, >= 0
  double alpha0 = 1.0;     // initial smoothing
  double alpha_min = 1e-6; // terminal smoothing
  double beta = 0.1;       // smoothing reduction factor, in (0,1)
  double eta = 0.1;        // predicted-reduction stopping parameter, in (0,1)
  double c1 = 1e-4;        // Armijo sufficient-decrease parameter, in (0,1)
  double s_min = 0x1p-30;  // minimal line-search step before declaring failure

  void validate() const {
    if (!(lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
    if (!(mu >= 0)) throw std::invalid_argument("mu must be >= 0");
    if (!(alpha0 > 0)) throw std::invalid_argument("alpha0 must be > 0");
    if (!(alpha_min > 0)) throw std::invalid_argument("alpha_min must be > 0");
    if (!(alpha0 >= alpha_min)) throw std::invalid_argument("alpha0 must be >= alpha_min");
    if (!(beta > 0 && beta < 1)) throw std::invalid_argument("beta must be in (0,1)");
    if (!(eta > 0 && eta < 1)) throw std::invalid_argument("eta must be in (0,1)");
    if (!(c1 > 0 && c1 < 1)) throw std::invalid_argument("c1 must be in (0,1)");
    if (!(s_min > 0)) throw std::invalid_argument("s_min must be > 0");
  }
};

struct PsiDerivatives {
  double value;   // psi(u)  = (u + sqrt(1+u^2)) / 2
  double first;   // psi'(u) = (1 + u/sqrt(1+u^2)) / 2
  double second;  // psi''(u) = (1+u^2)^{-3/2} / 2
};

// Beyond |u| = 1e8 the exact values are within one ulp of the asymptotes, so
// the tails are returned directly rather than squaring huge arguments.
inline PsiDerivatives psi(double u) {
  if (u > 1e8) return {u + 0.25 / u, 1.0, 0.0};
  if (u < -1e8) return {-0.25 / u, 0.0, 0.0};
  const double r = std::sqrt(1.0 + u * u);
  return {0.5 * (u + r), 0.5 * (1.0 + u / r), 0.5 / (r * r * r)};
}

// phi_alpha(u) = alpha * psi(u/alpha) = (u + sqrt(alpha^2 + u^2)) / 2.
// Satisfies max(0,u) <= phi_alpha(u) <= max(0,u) + alpha/2.
inline double smoothed_hinge(double u, double alpha) {
  return 0.5 * (u + std::hypot(u, alpha));
}

// u_i = 1 - y_i x_i^T w, accumulated row by row.
inline Vector margins(const Vector& w, const Dataset& d) {
  if (w.size() != d.cols()) throw std::invalid_argument("margins: dimension mismatch");
  Vector u(d.rows());
  for (Index i = 0; i < d.rows(); ++i) {
    u[i] = 1.0 - d.y[i] * d.X.row(i).dot(w);
  }
  return u;
}

struct ObjectiveValue {
  double f;     // fhat + mu * ||w||_1
  double fhat;  // lambda/2 ||w||^2 + mean smoothed hinge
};

inline ObjectiveValue objective_from_margins(const Vector& u, const Vector& w,
                                             const Hyperparams& h, double alpha) {
  double loss = 0.0;
  for (Index i = 0; i < u.size(); ++i) loss += smoothed_hinge(u[i], alpha);
  const double fhat = 0.5 * h.lambda * w.squaredNorm() + loss / static_cast<double>(u.size());
  const double f = fhat + h.mu * w.lpNorm<1>();
  if (!std::isfinite(f)) throw std::runtime_error("objective is not finite");
  return {f, fhat};
}

inline ObjectiveValue objective(const Vector& w, const Dataset& d, const Hyperparams& h,
                                double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("objective: alpha must be > 0");
  return objective_from_margins(margins(w, d), w, h, alpha);
}

inline Vector gradient_smooth_from_margins(const Vector& u, const Vector& w, const Dataset& d,
                                           const Hyperparams& h, double alpha) {
  const double inv_n = 1.0 / static_cast<double>(d.rows());
  Vector g = h.lambda * w;
  for (Index i = 0; i < d.rows(); ++i) {
    const double coef = psi(u[i] / alpha).first * d.y[i] * inv_n;
    g.noalias() -= coef * d.X.row(i).transpose();
  }
  return g;
}

// Gradient of the smooth part fhat only; the l1 subgradient handling lives in
// the solver where the active set is known.
inline Vector gradient_smooth(const Vector& w, const Dataset& d, const Hyperparams& h,
                              double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("gradient: alpha must be > 0");
  return gradient_smooth_from_margins(margins(w, d), w, d, h, alpha);
}

// Active block of Hess fhat: lambda I + (1/N) sum (1/alpha) psi''(u_i/alpha)
// x_i x_i^T restricted to the given columns. The full m x m matrix is never
// formed.
inline Eigen::MatrixXd hessian_active_from_margins(const Vector& u, const Dataset& d,
                                                   const Hyperparams& h, double alpha,
                                                   const std::vector<Index>& active) {
  const Index k = static_cast<Index>(active.size());
  for (std::size_t t = 0; t < active.size(); ++t) {
    if (active[t] < 0 || active[t] >= d.cols()) throw std::invalid_argument("hessian: invalid active index");
    if (t > 0 && active[t] <= active[t - 1]) throw std::invalid_argument("hessian: active indices must be increasing");
  }
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(k, k);
  if (k == 0) return H;

  // psi'' >= 0, so the data term is S^T S for S = diag(sqrt(c)) X_active;
  // a symmetric rank-k update halves the work of a general product
  const Index n = d.rows();
  const double inv_na = 1.0 / (static_cast<double>(n) * alpha);
  Eigen::MatrixXd scaled(n, k);
  for (Index i = 0; i < n; ++i) {
    const double root = std::sqrt(psi(u[i] / alpha).second * inv_na);
    for (Index t = 0; t < k; ++t) {
      scaled(i, t) = root * d.X(i, active[static_cast<std::size_t>(t)]);
    }
  }
  H.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  H.triangularView<Eigen::StrictlyUpper>() = H.transpose();
  H.diagonal().array() += h.lambda;
  return H;
}

inline Eigen::MatrixXd hessian_active(const Vector& w, const Dataset& d, const Hyperparams& h,
                                      double alpha, const std::vector<Index>& active) {
  if (!(alpha > 0)) throw std::invalid_argument("hessian: alpha must be > 0");
  return hessian_active_from_margins(margins(w, d), d, h, alpha, active);
}

// d^T Hess fhat d without forming any matrix; one pass over the rows.
inline double directional_curvature(const Vector& u, const Vector& dir, const Dataset& d,
                                    const Hyperparams& h, double alpha) {
  const double inv_na = 1.0 / (static_cast<double>(d.rows()) * alpha);
  double q = h.lambda * dir.squaredNorm();
  for (Index i = 0; i < d.rows(); ++i) {
    const double xd = d.X.row(i).dot(dir);
    q += psi(u[i] / alpha).second * inv_na * xd * xd;
  }
  return q;
}

}  // namespace smsvm
