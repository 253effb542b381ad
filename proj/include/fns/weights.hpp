#ifndef FNS_WEIGHTS_HPP
#define FNS_WEIGHTS_HPP

#include <cmath>
#include <limits>
#include <string>

#include "fns/common.hpp"
#include "fns/field.hpp"
#include "fns/grid.hpp"

namespace fns {

/** Exponent below which exp() underflows to zero in double precision. */
constexpr double kUnderflowExponent = -745.0;

/** Carleman parameters. eta(x) = x - x0 with x0 < 0, so eta > 0 on [0,L]
 *  and the weight exponents l, m are strictly negative. */
struct WeightParams {
  double lambda = 2.0;
  double mu = 1.5;
  double x0 = -0.5;
  double T = 1.0;
  double L = 1.0;

  double eta(double x) const { return x - x0; }
  double eta_sup() const { return L - x0; }

  void validate() const {
    if (!(lambda >= 1.0)) throw config_error("weights: lambda must be at least 1");
    if (!(mu >= 1.0)) throw config_error("weights: mu must be at least 1");
    if (!(x0 < 0.0)) throw config_error("weights: x0 must be negative");
    if (!(T > 0.0) || !(L > 0.0)) throw config_error("weights: T and L must be positive");
  }
};

/** gamma(t): t(T-t) on [0,T/2], frozen at T^2/4 on (T/2,T]. */
inline double eval_gamma(double t, double T) {
  if (t < 0.0 || t > T) throw std::domain_error("gamma: t outside [0,T]");
  if (t <= 0.5 * T) return t * (T - t);
  return 0.25 * T * T;
}

/** Pointwise weight values at (t,x). The xi/theta branch is singular at both
 *  time endpoints, the nu/sigma branch only at t = 0; exponents are kept in
 *  log form (log_theta = l, log_sigma = m) and exponentiated once. */
struct WeightEval {
  double xi = 0.0;
  double log_theta = 0.0;  // l(t,x) < 0
  double theta = 0.0;
  double nu = 0.0;
  double log_sigma = 0.0;  // m(t,x) < 0
  double sigma = 0.0;
  double gamma = 0.0;
};

inline WeightEval eval_carleman_weights(double t, double x, const WeightParams& p) {
  p.validate();
  if (!(t > 0.0) || !(t < p.T))
    throw std::domain_error("carleman weights: t must lie strictly inside (0,T)");
  if (x < 0.0 || x > p.L) throw std::domain_error("carleman weights: x outside [0,L]");
  WeightEval w;
  double den = t * (p.T - t);
  double e3 = std::exp(3.0 * p.mu * p.eta(x));
  double etop = std::exp(5.0 * p.mu * p.eta_sup());
  w.gamma = den;
  w.xi = e3 / den;
  w.log_theta = p.lambda * (e3 - etop) / den;
  w.theta = std::exp(w.log_theta);  // underflows to 0 below kUnderflowExponent
  return w;
}

inline WeightEval eval_modified_weights(double t, double x, const WeightParams& p) {
  p.validate();
  if (!(t > 0.0) || t > p.T)
    throw std::domain_error("modified weights: t must lie in (0,T]");
  if (x < 0.0 || x > p.L) throw std::domain_error("modified weights: x outside [0,L]");
  WeightEval w;
  double den = (t <= 0.5 * p.T) ? t * (p.T - t) : 0.25 * p.T * p.T;
  double e3 = std::exp(3.0 * p.mu * p.eta(x));
  double etop = std::exp(5.0 * p.mu * p.eta_sup());
  w.gamma = den;
  w.nu = e3 / den;
  w.log_sigma = p.lambda * (e3 - etop) / den;
  w.sigma = std::exp(w.log_sigma);
  return w;
}

/** Extrema of nu and sigma over x at fixed t. eta is increasing, so no
 *  search is needed: minima sit at x = 0, maxima at x = L. */
struct ExtremalWeights {
  double nu_star = 0.0, nu_hat = 0.0;
  double m_star = 0.0, m_hat = 0.0;
  double sigma_star = 0.0, sigma_hat = 0.0;
  bool sigma_star_underflowed = false;
  bool sigma_hat_underflowed = false;
};

inline ExtremalWeights eval_extremal(double t, const WeightParams& p) {
  WeightEval lo = eval_modified_weights(t, 0.0, p);
  WeightEval hi = eval_modified_weights(t, p.L, p);
  ExtremalWeights e;
  e.nu_star = lo.nu;
  e.nu_hat = hi.nu;
  e.m_star = lo.log_sigma;
  e.m_hat = hi.log_sigma;
  e.sigma_star = lo.sigma;
  e.sigma_hat = hi.sigma;
  e.sigma_star_underflowed = e.m_star < kUnderflowExponent;
  e.sigma_hat_underflowed = e.m_hat < kUnderflowExponent;
  return e;
}

// ---------------------------------------------------------------------------
// log-sum-exp quadrature

/** Nonnegative sum of terms c * e^E kept as (max exponent, rescaled sum) so
 *  integrals of severely under/overflowing weights stay meaningful. Ratios of
 *  two such sums are taken as log differences. */
struct LogSum {
  double max_exp = -std::numeric_limits<double>::infinity();
  double scaled_sum = 0.0;

  void add(double exponent, double coeff) {
    if (coeff <= 0.0) return;
    double e = exponent + std::log(coeff);
    if (e == -std::numeric_limits<double>::infinity()) return;  // empty contribution
    if (e <= max_exp) {
      scaled_sum += std::exp(e - max_exp);
    } else {
      scaled_sum = scaled_sum * std::exp(max_exp - e) + 1.0;
      max_exp = e;
    }
  }

  void add_log(double log_term) { add(log_term, 1.0); }

  bool zero() const { return scaled_sum == 0.0; }

  /** log of the sum; -inf when empty. */
  double log() const {
    if (zero()) return -std::numeric_limits<double>::infinity();
    return max_exp + std::log(scaled_sum);
  }

  /** Clamped linear value (0 on underflow, DBL_MAX on overflow). */
  double value() const {
    if (zero()) return 0.0;
    double l = log();
    if (l < kUnderflowExponent) return 0.0;
    if (l > 709.0) return std::numeric_limits<double>::max();
    return std::exp(l);
  }

  static LogSum join(const LogSum& a, const LogSum& b) {
    LogSum out = a;
    if (!b.zero()) out.add(b.log(), 1.0);
    return out;
  }
};

/** Integrand selector: product of integer/half-integer powers of
 *  {xi, theta, nu, sigma}, evaluated in log space. */
struct WeightSpec {
  double xi_pow = 0.0;
  double theta_pow = 0.0;
  double nu_pow = 0.0;
  double sigma_pow = 0.0;
};

/** log of the weight-spec value at (t,x). */
inline double weight_spec_log(const WeightSpec& s, double t, double x, const WeightParams& p) {
  double e3exp = 3.0 * p.mu * p.eta(x);  // log of e^{3 mu eta}
  double etop = std::exp(5.0 * p.mu * p.eta_sup());
  double e3 = std::exp(e3exp);
  double acc = 0.0;
  if (s.xi_pow != 0.0 || s.theta_pow != 0.0) {
    double den = t * (p.T - t);
    if (!(t > 0.0) || !(t < p.T))
      throw std::domain_error("weight spec: xi/theta need t strictly inside (0,T)");
    if (s.xi_pow != 0.0) acc += s.xi_pow * (e3exp - std::log(den));
    if (s.theta_pow != 0.0) acc += s.theta_pow * (p.lambda * (e3 - etop) / den);
  }
  if (s.nu_pow != 0.0 || s.sigma_pow != 0.0) {
    if (!(t > 0.0) || t > p.T) throw std::domain_error("weight spec: nu/sigma need t in (0,T]");
    double den = eval_gamma(t, p.T);
    if (s.nu_pow != 0.0) acc += s.nu_pow * (e3exp - std::log(den));
    if (s.sigma_pow != 0.0) acc += s.sigma_pow * (p.lambda * (e3 - etop) / den);
  }
  return acc;
}

/** Space-time quadrature of weight * |field|^2 over Q_T, with the field
 *  interpolated onto the half-step times (midpoint rule in time, so the
 *  singular endpoints are never touched). An optional mask restricts the
 *  spatial domain. */
inline LogSum weighted_sample_log(const Trajectory& traj, const WeightSpec& spec,
                                  const WeightParams& p, const Mask* mask = nullptr) {
  const Grid& g = traj.grid;
  if (mask && static_cast<int>(mask->w.size()) != g.N)
    throw config_error("weighted_sample: mask/grid mismatch");
  LogSum acc;
  double cell = g.dt * g.dx;
  for (int n = 0; n < g.M; ++n) {
    double t = g.t_half(n);
    const ComplexField& a = traj.snaps[n];
    const ComplexField& b = traj.snaps[n + 1];
    for (int i = 0; i < g.N; ++i) {
      double mw = mask ? mask->w[i] : 1.0;
      if (mw == 0.0) continue;
      complex mid = 0.5 * (a[i] + b[i]);
      double f2 = std::norm(mid);
      if (f2 == 0.0) continue;
      acc.add(weight_spec_log(spec, t, g.x(i), p), cell * mw * f2);
    }
  }
  return acc;
}

inline double weighted_sample(const Trajectory& traj, const WeightSpec& spec,
                              const WeightParams& p, const Mask* mask = nullptr) {
  return weighted_sample_log(traj, spec, p, mask).value();
}

/** Same quadrature for a field already living on the half-steps. */
inline LogSum weighted_sample_half_log(const Grid& g, const HalfStepField& f,
                                       const WeightSpec& spec, const WeightParams& p,
                                       const Mask* mask = nullptr) {
  LogSum acc;
  double cell = g.dt * g.dx;
  for (int n = 0; n < g.M; ++n) {
    double t = g.t_half(n);
    for (int i = 0; i < g.N; ++i) {
      double mw = mask ? mask->w[i] : 1.0;
      if (mw == 0.0) continue;
      double f2 = std::norm(f[n][i]);
      if (f2 == 0.0) continue;
      acc.add(weight_spec_log(spec, t, g.x(i), p), cell * mw * f2);
    }
  }
  return acc;
}

}  // namespace fns

#endif
