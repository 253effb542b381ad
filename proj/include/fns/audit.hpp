#ifndef FNS_AUDIT_HPP
#define FNS_AUDIT_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fns/cascade.hpp"
#include "fns/common.hpp"
#include "fns/field.hpp"
#include "fns/grid.hpp"
#include "fns/rng.hpp"
#include "fns/solver.hpp"
#include "fns/weights.hpp"

namespace fns {

/** Both sides of a weighted (Carleman-type) inequality evaluated on one
 *  sample. Every integral is accumulated in log space; the linear fields are
 *  the clamped exponentials and may legitimately be 0 or huge. The recorded
 *  ratio is lhs / (rhs_source + rhs_obs), meaningful as a log difference even
 *  when both sides underflow. */
struct CarlemanReport {
  double log_lhs = -std::numeric_limits<double>::infinity();
  double log_rhs_source = -std::numeric_limits<double>::infinity();
  double log_rhs_obs = -std::numeric_limits<double>::infinity();
  double log_ratio = std::numeric_limits<double>::quiet_NaN();
  double lhs = 0.0;
  double rhs_source = 0.0;
  double rhs_obs = 0.0;
  double ratio = 0.0;
  int sample_id = 0;

  void finalize() {
    LogSum rhs;
    rhs.add_log(log_rhs_source);
    rhs.add_log(log_rhs_obs);
    double log_rhs = rhs.log();
    log_ratio = log_lhs - log_rhs;
    auto clamp = [](double l) {
      if (l == -std::numeric_limits<double>::infinity() || l < kUnderflowExponent) return 0.0;
      if (l > 709.0) return std::numeric_limits<double>::max();
      return std::exp(l);
    };
    lhs = clamp(log_lhs);
    rhs_source = clamp(log_rhs_source);
    rhs_obs = clamp(log_rhs_obs);
    ratio = clamp(log_ratio);
  }
};

namespace detail {

inline void check_audit_params(const WeightParams& p) {
  if (!(p.lambda > 1.0) || !(p.mu > 1.0))
    throw config_error("carleman audit: lambda and mu must exceed 1");
}

/** Derivative trajectory: op applied snapshot-wise. */
inline Trajectory derive(const Trajectory& tr, const BandedOperator& op) {
  Trajectory out;
  out.grid = tr.grid;
  out.snaps.resize(tr.snaps.size());
  for (size_t n = 0; n < tr.snaps.size(); ++n) out.snaps[n] = op.apply(tr.snaps[n]);
  return out;
}

inline double add_powers(const LogSum& s, double lambda_pow, double mu_pow,
                         const WeightParams& p) {
  return s.log() + lambda_pow * std::log(p.lambda) + mu_pow * std::log(p.mu);
}

/** Weighted integrals of |traj|^2 and its first three spatial derivatives,
 *  with the xi/theta or nu/sigma family and the inequality's lambda-mu
 *  prefactors. Third derivative only when `orders` is 4. */
inline void accumulate_derivative_terms(LogSum& lhs_acc, const Trajectory& tr, const Grid& g,
                                        const WeightParams& p, bool modified_family,
                                        int orders) {
  BandedOperator d1 = build_centered_first_derivative(g);
  BandedOperator d2 = build_dirichlet_second_derivative(g);
  Trajectory tx = derive(tr, d1);
  Trajectory txx = derive(tr, d2);

  auto spec_for = [&](double power) {
    WeightSpec s;
    if (modified_family) {
      s.nu_pow = power;
      s.sigma_pow = 2.0;
    } else {
      s.xi_pow = power;
      s.theta_pow = 2.0;
    }
    return s;
  };
  const double lam[4] = {7.0, 5.0, 3.0, 1.0};
  const double mu[4] = {8.0, 6.0, 4.0, 2.0};
  lhs_acc.add_log(add_powers(weighted_sample_log(tr, spec_for(7.0), p), lam[0], mu[0], p));
  lhs_acc.add_log(add_powers(weighted_sample_log(tx, spec_for(5.0), p), lam[1], mu[1], p));
  lhs_acc.add_log(add_powers(weighted_sample_log(txx, spec_for(3.0), p), lam[2], mu[2], p));
  if (orders >= 4) {
    Trajectory txxx = derive(txx, d1);  // third derivative by composition
    lhs_acc.add_log(add_powers(weighted_sample_log(txxx, spec_for(1.0), p), lam[3], mu[3], p));
  }
}

inline HalfStepField sample_source(const Grid& g, const SourceFn& f) {
  HalfStepField out(g.M);
  for (int n = 0; n < g.M; ++n) {
    out[n].assign(g.N, complex(0.0, 0.0));
    if (f) f(n, g.t_half(n), out[n]);
  }
  return out;
}

}  // namespace detail

/** Both sides of the eight-term Carleman estimate for the adjoint pair:
 *  weighted integrals of phi, psi and their first three derivatives against
 *  xi^k theta^2 on the left, theta^2 source integrals plus the lambda mu
 *  xi theta^2 observation integral of phi on the right. */
inline CarlemanReport carleman_sides(const AdjointSolution& sol, const SourceFn& g0,
                                     const SourceFn& g1, const WeightParams& params,
                                     const Mask& omega) {
  detail::check_audit_params(params);
  const Grid& g = sol.phi_traj.grid;
  WeightParams p = params;
  p.T = g.T;
  p.L = g.L;

  CarlemanReport rep;
  LogSum lhs;
  detail::accumulate_derivative_terms(lhs, sol.phi_traj, g, p, false, 4);
  detail::accumulate_derivative_terms(lhs, sol.psi_traj, g, p, false, 4);
  rep.log_lhs = lhs.log();

  WeightSpec theta2;
  theta2.theta_pow = 2.0;
  LogSum src;
  src.add_log(weighted_sample_half_log(g, detail::sample_source(g, g0), theta2, p).log());
  src.add_log(weighted_sample_half_log(g, detail::sample_source(g, g1), theta2, p).log());
  rep.log_rhs_source = src.log();

  WeightSpec obs_spec;
  obs_spec.xi_pow = 1.0;
  obs_spec.theta_pow = 2.0;
  rep.log_rhs_obs =
      detail::add_powers(weighted_sample_log(sol.phi_traj, obs_spec, p, &omega), 1.0, 1.0, p);
  rep.finalize();
  return rep;
}

/** Modified-family analogue: nu/sigma weights, derivatives up to second
 *  order, observation term lambda nu sigma^2 |phi|^2 over the given region. */
inline CarlemanReport modified_carleman_sides(const AdjointSolution& sol, const SourceFn& g0,
                                              const SourceFn& g1, const WeightParams& params,
                                              const Mask& omega_tilde) {
  detail::check_audit_params(params);
  const Grid& g = sol.phi_traj.grid;
  WeightParams p = params;
  p.T = g.T;
  p.L = g.L;

  CarlemanReport rep;
  LogSum lhs;
  detail::accumulate_derivative_terms(lhs, sol.phi_traj, g, p, true, 2);
  detail::accumulate_derivative_terms(lhs, sol.psi_traj, g, p, true, 2);
  rep.log_lhs = lhs.log();

  WeightSpec sigma2;
  sigma2.sigma_pow = 2.0;
  LogSum src;
  src.add_log(weighted_sample_half_log(g, detail::sample_source(g, g0), sigma2, p).log());
  src.add_log(weighted_sample_half_log(g, detail::sample_source(g, g1), sigma2, p).log());
  rep.log_rhs_source = src.log();

  WeightSpec obs_spec;
  obs_spec.nu_pow = 1.0;
  obs_spec.sigma_pow = 2.0;
  rep.log_rhs_obs =
      detail::add_powers(weighted_sample_log(sol.phi_traj, obs_spec, p, &omega_tilde), 1.0, 0.0, p);
  rep.finalize();
  return rep;
}

/** Second-order one-sided boundary traces at x = L, using the clamped
 *  relations u(L) = u_x(L) = 0 to close the stencils. */
inline complex boundary_second_derivative_at_L(const ComplexField& f, const Grid& g) {
  double h = g.dx;
  return (108.0 * f[g.N - 1] - 27.0 * f[g.N - 2] + 4.0 * f[g.N - 3]) / (18.0 * h * h);
}

inline complex boundary_third_derivative_at_L(const ComplexField& f, const Grid& g) {
  double h = g.dx;
  return (15.0 * f[g.N - 1] - 6.0 * f[g.N - 2] + f[g.N - 3]) / (h * h * h);
}

/** Boundary-observation estimate for the reduced operator i u_t + u_xxxx.
 *  The trajectory must come from a Generator::biharmonic_only solver; the
 *  equation residual equals the known source at the half-steps, and the
 *  boundary traces at x = L come from one-sided differences built on the
 *  clamped relations u(L) = u_x(L) = 0. */
inline CarlemanReport boundary_carleman_sides(const Trajectory& traj, const SourceFn& source,
                                              const WeightParams& params) {
  detail::check_audit_params(params);
  const Grid& g = traj.grid;
  if (g.N < 3) throw config_error("boundary audit: need at least 3 interior nodes");
  WeightParams p = params;
  p.T = g.T;
  p.L = g.L;

  CarlemanReport rep;
  LogSum lhs;
  detail::accumulate_derivative_terms(lhs, traj, g, p, false, 4);
  rep.log_lhs = lhs.log();

  WeightSpec theta2;
  theta2.theta_pow = 2.0;
  rep.log_rhs_source =
      weighted_sample_half_log(g, detail::sample_source(g, source), theta2, p).log();

  // boundary terms at x = L, half-step averaged fields
  LogSum obs3, obs1;
  WeightSpec xi3t2, xi1t2;
  xi3t2.xi_pow = 3.0;
  xi3t2.theta_pow = 2.0;
  xi1t2.xi_pow = 1.0;
  xi1t2.theta_pow = 2.0;
  for (int n = 0; n < g.M; ++n) {
    double t = g.t_half(n);
    ComplexField f = traj.half_step(n);
    complex uxx = boundary_second_derivative_at_L(f, g);
    complex uxxx = boundary_third_derivative_at_L(f, g);
    obs3.add(weight_spec_log(xi3t2, t, g.L, p), g.dt * std::norm(uxx));
    obs1.add(weight_spec_log(xi1t2, t, g.L, p), g.dt * std::norm(uxxx));
  }
  LogSum obs;
  obs.add_log(detail::add_powers(obs3, 3.0, 3.0, p));
  obs.add_log(detail::add_powers(obs1, 1.0, 1.0, p));
  rep.log_rhs_obs = obs.log();
  rep.finalize();
  return rep;
}

/** One term of the observability functional: weight-spec powers plus
 *  lambda/mu prefactor exponents. The default triple mirrors the modified
 *  Carleman integrands; the weights in the inequality are only described
 *  loosely, so the realization is kept configurable. */
struct AuditTerm {
  WeightSpec w;
  double lambda_pow = 0.0;
  double mu_pow = 0.0;
};

struct ObservabilityWeights {
  AuditTerm rho1;  // whole-cylinder |phi|^2 + |psi|^2
  AuditTerm rho2;  // observation |phi|^2
  AuditTerm rho3;  // sources
  ObservabilityWeights() {
    rho1.w.nu_pow = 7.0;
    rho1.w.sigma_pow = 2.0;
    rho1.lambda_pow = 7.0;
    rho1.mu_pow = 8.0;
    rho2.w.nu_pow = 1.0;
    rho2.w.sigma_pow = 2.0;
    rho2.lambda_pow = 1.0;
    rho3.w.sigma_pow = 2.0;
  }
};

struct ObservabilityRow {
  int sample_id = 0;
  double log_num = 0.0;
  double log_obs = 0.0;
  double log_src = 0.0;
  double log_ratio = 0.0;
};

/** Empirical observability constants on random low-mode adjoint samples. */
inline std::vector<ObservabilityRow> observability_ratio(
    const DispersiveSolver& solver, int samples, const WeightParams& params, const Mask& omega,
    const Mask& obs, SplitMix64& rng, const ObservabilityWeights& rho = ObservabilityWeights{}) {
  detail::check_audit_params(params);
  if (samples < 1) throw config_error("observability_ratio: need at least one sample");
  const Grid& g = solver.grid();
  WeightParams p = params;
  p.T = g.T;
  p.L = g.L;

  std::vector<ObservabilityRow> rows;
  rows.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    ComplexField psi0 = random_low_mode_field(g, rng, true);
    HalfStepField g0 = random_low_mode_half_field(g, rng, 0.3);
    HalfStepField g1 = random_low_mode_half_field(g, rng, 0.3);
    SourceFn g0fn = [&g0](int n, double, ComplexField& out) {
      for (size_t i = 0; i < out.size(); ++i) out[i] += g0[n][i];
    };
    SourceFn g1fn = [&g1](int n, double, ComplexField& out) {
      for (size_t i = 0; i < out.size(); ++i) out[i] += g1[n][i];
    };
    AdjointSolution sol = solve_adjoint_pair(solver, psi0, g0fn, g1fn, obs);

    ObservabilityRow row;
    row.sample_id = s;
    LogSum num;
    num.add_log(detail::add_powers(weighted_sample_log(sol.phi_traj, rho.rho1.w, p),
                                   rho.rho1.lambda_pow, rho.rho1.mu_pow, p));
    num.add_log(detail::add_powers(weighted_sample_log(sol.psi_traj, rho.rho1.w, p),
                                   rho.rho1.lambda_pow, rho.rho1.mu_pow, p));
    row.log_num = num.log();
    row.log_obs = detail::add_powers(weighted_sample_log(sol.phi_traj, rho.rho2.w, p, &omega),
                                     rho.rho2.lambda_pow, rho.rho2.mu_pow, p);
    LogSum src;
    src.add_log(detail::add_powers(weighted_sample_half_log(g, g0, rho.rho3.w, p),
                                   rho.rho3.lambda_pow, rho.rho3.mu_pow, p));
    src.add_log(detail::add_powers(weighted_sample_half_log(g, g1, rho.rho3.w, p),
                                   rho.rho3.lambda_pow, rho.rho3.mu_pow, p));
    row.log_src = src.log();
    LogSum rhs;
    rhs.add_log(row.log_obs);
    rhs.add_log(row.log_src);
    row.log_ratio = row.log_num - rhs.log();
    rows.push_back(row);
  }
  return rows;
}

struct ScanCell {
  double lambda = 0.0;
  double mu = 0.0;
  double max_log_ratio = -std::numeric_limits<double>::infinity();
  double mean_log_ratio = 0.0;
};

/** Grid of empirical observability constants over (lambda, mu). The sample
 *  stream restarts from the given seed for every cell, so cells are
 *  independent of the scan order. */
inline std::vector<ScanCell> constant_scan(const DispersiveSolver& solver,
                                           const std::vector<double>& lambdas,
                                           const std::vector<double>& mus, int samples,
                                           const WeightParams& base, const Mask& omega,
                                           const Mask& obs, std::uint64_t seed) {
  if (lambdas.empty() || mus.empty()) throw config_error("constant_scan: empty parameter list");
  std::vector<ScanCell> cells;
  for (double lam : lambdas)
    for (double mu : mus) {
      WeightParams p = base;
      p.lambda = lam;
      p.mu = mu;
      SplitMix64 rng(seed);
      std::vector<ObservabilityRow> rows =
          observability_ratio(solver, samples, p, omega, obs, rng);
      ScanCell c;
      c.lambda = lam;
      c.mu = mu;
      double acc = 0.0;
      for (const auto& r : rows) {
        c.max_log_ratio = std::max(c.max_log_ratio, r.log_ratio);
        acc += r.log_ratio;
      }
      c.mean_log_ratio = acc / rows.size();
      cells.push_back(c);
    }
  return cells;
}

}  // namespace fns

#endif
