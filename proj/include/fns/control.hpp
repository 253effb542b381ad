#ifndef FNS_CONTROL_HPP
#define FNS_CONTROL_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fns/cascade.hpp"
#include "fns/common.hpp"
#include "fns/field.hpp"
#include "fns/solver.hpp"
#include "fns/weights.hpp"

namespace fns {

enum class ControlMode { plain, carleman_weighted };

struct ControlSpec {
  double epsilon = 1e-4;
  ControlMode mode = ControlMode::plain;
  double cg_tol = 1e-8;
  int cg_maxit = 1000;
  WeightParams weight_params;  // only read in carleman_weighted mode

  void validate() const {
    if (!(epsilon > 0.0)) throw config_error("control: epsilon must be positive");
    if (!(cg_tol > 0.0 && cg_tol < 1.0)) throw config_error("control: cg_tol must be in (0,1)");
    if (cg_maxit < 1) throw config_error("control: cg_maxit must be at least 1");
  }
};

struct ControlResult {
  HalfStepField h;
  ComplexField v0;
  double v0_norm = 0.0;
  double baseline_v0_norm = 0.0;
  double h_norm = 0.0;
  int cg_iterations = 0;
  std::vector<double> cg_residual_history;  // relative residuals
  bool cg_converged = true;
  double j_insensitivity_bound = 0.0;  // sup over unit perturbations = v0_norm
  std::vector<double> v_profile;       // ||v(t_n)||, n = 0..M
  int outer_iterations = 1;
  bool outer_converged = true;
  std::string note;
};

/** The linear control-to-final-state map S: h -> v(0) with all other data
 *  zeroed, its exact discrete transpose S*, and the penalized Gramian
 *  S W S* + eps I. The orientation factor of S* (here -i) is fixed by the
 *  discrete identity Re<S h, p> = Re<<h, S* p>>, which holds to solver
 *  roundoff by construction. */
class ControlOperator {
 public:
  ControlOperator(const DispersiveSolver& solver, Mask omega, Mask obs)
      : solver_(solver), omega_(std::move(omega)), obs_(std::move(obs)) {}

  const Mask& omega() const { return omega_; }
  const Mask& obs() const { return obs_; }

  /** S h: forward state driven by 1_omega h, companion backward, v(0). */
  ComplexField control_to_final(const HalfStepField& h) const {
    const Grid& g = solver_.grid();
    SourceFn usrc = [this, &h](int n, double, ComplexField& out) {
      for (size_t i = 0; i < out.size(); ++i) out[i] += omega_.w[i] * h[n][i];
    };
    Trajectory u = solver_.solve_forward(zero_field(g), usrc);
    const Trajectory* up = &u;
    SourceFn vsrc = [this, up](int n, double, ComplexField& out) {
      const ComplexField& a = up->snaps[n];
      const ComplexField& b = up->snaps[n + 1];
      for (size_t i = 0; i < out.size(); ++i) out[i] += obs_.w[i] * (0.5 * (a[i] + b[i]));
    };
    Trajectory v = solver_.solve_backward(zero_field(g), vsrc);
    return v.at(0);
  }

  /** S* p0: psi forward from p0, chi backward with source 1_O psi, output
   *  -i 1_omega chi on the half-steps. */
  HalfStepField adjoint_of_control_map(const ComplexField& p0) const {
    const Grid& g = solver_.grid();
    Trajectory psi = solver_.solve_forward(p0);
    const Trajectory* pp = &psi;
    SourceFn csrc = [this, pp](int n, double, ComplexField& out) {
      const ComplexField& a = pp->snaps[n];
      const ComplexField& b = pp->snaps[n + 1];
      for (size_t i = 0; i < out.size(); ++i) out[i] += obs_.w[i] * (0.5 * (a[i] + b[i]));
    };
    Trajectory chi = solver_.solve_backward(zero_field(g), csrc);
    HalfStepField out(g.M);
    const complex minus_i(0.0, -1.0);
    for (int n = 0; n < g.M; ++n) {
      out[n].resize(g.N);
      ComplexField ch = chi.half_step(n);
      for (int i = 0; i < g.N; ++i) out[n][i] = minus_i * omega_.w[i] * ch[i];
    }
    return out;
  }

  /** Control-space weight profile W(t_{n+1/2}). Plain mode: identity.
   *  Carleman mode: nu_hat sigma_hat^2, normalized in log space by its
   *  maximum (the raw profile underflows for every admissible parameter
   *  choice; a constant rescaling of W only rescales epsilon). */
  std::vector<double> weight_profile(const ControlSpec& spec) const {
    const Grid& g = solver_.grid();
    std::vector<double> w(g.M, 1.0);
    if (spec.mode == ControlMode::plain) return w;
    WeightParams p = spec.weight_params;
    p.T = g.T;
    p.L = g.L;
    p.validate();
    std::vector<double> logw(g.M);
    double top = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < g.M; ++n) {
      WeightEval e = eval_modified_weights(g.t_half(n), p.L, p);
      logw[n] = std::log(e.nu) + 2.0 * e.log_sigma;
      top = std::max(top, logw[n]);
    }
    for (int n = 0; n < g.M; ++n) {
      double s = logw[n] - top;
      w[n] = (s < kUnderflowExponent) ? 0.0 : std::exp(s);
    }
    return w;
  }

  /** (S W S* + eps I) p0. */
  ComplexField gramian_apply(const ComplexField& p0, const ControlSpec& spec,
                             const std::vector<double>& w) const {
    HalfStepField q = adjoint_of_control_map(p0);
    const Grid& g = solver_.grid();
    for (int n = 0; n < g.M; ++n)
      for (int i = 0; i < g.N; ++i) q[n][i] *= w[n];
    ComplexField out = control_to_final(q);
    for (int i = 0; i < g.N; ++i) out[i] += spec.epsilon * p0[i];
    return out;
  }

  ComplexField gramian_apply(const ComplexField& p0, const ControlSpec& spec) const {
    return gramian_apply(p0, spec, weight_profile(spec));
  }

 private:
  const DispersiveSolver& solver_;
  Mask omega_, obs_;
};

struct KrylovStats {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
};

/** Conjugate-residual iteration for a Hermitian positive definite operator.
 *  Chosen over plain CG because it minimizes the residual norm on the Krylov
 *  space, so the recorded history is monotone by construction. */
template <typename ApplyFn>
KrylovStats conjugate_residual(const Grid& g, ApplyFn&& apply, const ComplexField& b,
                               ComplexField& x, double tol, int maxit) {
  KrylovStats stats;
  double bnorm = l2_norm(g, b);
  x.assign(g.N, complex(0.0, 0.0));
  if (bnorm == 0.0) {
    stats.converged = true;
    return stats;
  }
  ComplexField r = b;
  ComplexField ar = apply(r);
  ComplexField p = r, ap = ar;
  double rho = l2_inner(g, r, ar).real();
  for (int it = 0; it < maxit; ++it) {
    double apap = l2_inner(g, ap, ap).real();
    if (!(apap > 0.0)) throw numerical_error("conjugate_residual: operator lost definiteness");
    double alpha = rho / apap;
    for (int i = 0; i < g.N; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    stats.iterations = it + 1;
    double rel = l2_norm(g, r) / bnorm;
    stats.residual_history.push_back(rel);
    if (rel <= tol) {
      stats.converged = true;
      return stats;
    }
    ar = apply(r);
    double rho_next = l2_inner(g, r, ar).real();
    double beta = rho_next / rho;
    rho = rho_next;
    for (int i = 0; i < g.N; ++i) {
      p[i] = r[i] + beta * p[i];
      ap[i] = ar[i] + beta * ap[i];
    }
  }
  return stats;
}

/** Penalized HUM for the linear cascade: solve (S W S* + eps I) p = -v_free(0)
 *  and reconstruct h = W S* p. The achieved v(0) equals -eps p up to the
 *  Krylov residual; a full verification cascade reports it. */
inline ControlResult hum_solve(const DispersiveSolver& solver, const CascadeProblem& p,
                               const ControlSpec& spec) {
  spec.validate();
  if (p.zeta != complex(0.0, 0.0)) throw config_error("hum_solve: zeta must be zero");
  if (!p.omega.intersects(p.obs))
    throw config_error("hum_solve: control and observation regions must share nodes");
  const Grid& g = solver.grid();

  CascadeProblem free = p;
  free.h.clear();
  CascadeSolution sol_free = solve_cascade_linear(solver, free);
  ControlResult res;
  res.baseline_v0_norm = l2_norm(g, sol_free.v0);

  ComplexField b(g.N);
  for (int i = 0; i < g.N; ++i) b[i] = -sol_free.v0[i];

  ControlOperator op(solver, p.omega, p.obs);
  std::vector<double> w = op.weight_profile(spec);

  ComplexField rhs_p;
  KrylovStats stats =
      conjugate_residual(g, [&](const ComplexField& v) { return op.gramian_apply(v, spec, w); },
                         b, rhs_p, spec.cg_tol, spec.cg_maxit);
  res.cg_iterations = stats.iterations;
  res.cg_residual_history = std::move(stats.residual_history);
  res.cg_converged = stats.converged;
  if (!stats.converged && res.baseline_v0_norm > 0.0)
    res.note = "krylov iteration hit cg_maxit; returning best iterate";

  res.h = op.adjoint_of_control_map(rhs_p);
  for (int n = 0; n < g.M; ++n)
    for (int i = 0; i < g.N; ++i) res.h[n][i] *= w[n];
  res.h_norm = qt_norm(g, res.h);

  CascadeProblem controlled = p;
  controlled.h = res.h;
  CascadeSolution sol = solve_cascade_linear(solver, controlled);
  res.v0 = sol.v0;
  res.v0_norm = l2_norm(g, sol.v0);
  res.j_insensitivity_bound = res.v0_norm;
  res.v_profile.resize(g.M + 1);
  for (int n = 0; n <= g.M; ++n) res.v_profile[n] = l2_norm(g, sol.v_traj.at(n));
  return res;
}

/** Smallness surrogate for the source: a cap on ||e^{c/t} f||_{L^2(Q_T)}
 *  sampled at the half-steps, evaluated in log space. c = 0 degrades to the
 *  plain norm; cap = +inf disables the check. */
struct SmallnessCap {
  double c = 0.0;
  double cap = std::numeric_limits<double>::infinity();
};

inline double weighted_source_log_norm(const Grid& g, const SourceFn& f, double c) {
  if (!f) return -std::numeric_limits<double>::infinity();
  LogSum acc;
  ComplexField buf(g.N);
  for (int n = 0; n < g.M; ++n) {
    double t = g.t_half(n);
    buf.assign(g.N, complex(0.0, 0.0));
    f(n, t, buf);
    for (int i = 0; i < g.N; ++i) {
      double f2 = std::norm(buf[i]);
      if (f2 > 0.0) acc.add(2.0 * c / t, g.dt * g.dx * f2);
    }
  }
  return 0.5 * acc.log();
}

/** Insensitizing control for the cubic problem by successive linearization:
 *  freeze the cubic terms of the current trajectories as sources, solve the
 *  resulting linear control problem with hum_solve, re-solve the nonlinear
 *  cascade with the new control, repeat. zeta = 0 falls through to hum_solve
 *  unchanged. */
inline ControlResult nonlinear_insensitize(const DispersiveSolver& solver,
                                           const CascadeProblem& p, const ControlSpec& spec,
                                           double outer_tol, int outer_maxit,
                                           const SmallnessCap& cap = SmallnessCap{}) {
  spec.validate();
  if (!(outer_tol > 0.0)) throw config_error("nonlinear_insensitize: outer_tol must be positive");
  if (outer_maxit < 1) throw config_error("nonlinear_insensitize: outer_maxit must be at least 1");
  if (std::isfinite(cap.cap)) {
    double lognorm = weighted_source_log_norm(solver.grid(), p.f0, cap.c);
    if (lognorm > std::log(cap.cap))
      throw config_error("nonlinear_insensitize: source exceeds the smallness cap");
  }
  if (p.zeta == complex(0.0, 0.0)) {
    ControlResult res = hum_solve(solver, p, spec);
    res.outer_iterations = 1;
    return res;
  }

  const Grid& g = solver.grid();
  complex zeta = p.zeta;
  complex zb = std::conj(zeta);

  CascadeProblem nl = p;
  nl.h.clear();
  CascadeSolution cur = solve_cascade_nonlinear(solver, nl);
  double baseline = l2_norm(g, cur.v0);

  HalfStepField h_prev = zero_half_step_field(g);
  ControlResult best;
  best.v0_norm = std::numeric_limits<double>::infinity();
  ControlResult last;
  int grew = 0;
  double prev_v0 = baseline;
  bool converged = false;
  int outer = 0;

  for (outer = 1; outer <= outer_maxit; ++outer) {
    // freeze the cubic terms of the current trajectories as sources
    HalfStepField s0(g.M), s1(g.M);
    for (int n = 0; n < g.M; ++n) {
      ComplexField uh = cur.u_traj.half_step(n);
      ComplexField vh = cur.v_traj.half_step(n);
      s0[n].resize(g.N);
      s1[n].resize(g.N);
      for (int i = 0; i < g.N; ++i) {
        s0[n][i] = zeta * std::norm(uh[i]) * uh[i];
        complex ub = std::conj(uh[i]);
        s1[n][i] = zb * (ub * ub) * std::conj(vh[i]) + 2.0 * zb * std::norm(uh[i]) * vh[i];
      }
    }
    CascadeProblem linp = p;
    linp.zeta = complex(0.0, 0.0);
    linp.h.clear();
    const SourceFn& f0 = p.f0;
    linp.f0 = [&f0, &s0](int n, double t, ComplexField& out) {
      if (f0) f0(n, t, out);
      for (size_t i = 0; i < out.size(); ++i) out[i] += s0[n][i];
    };
    const SourceFn& f1 = p.f1;
    linp.f1 = [&f1, &s1](int n, double t, ComplexField& out) {
      if (f1) f1(n, t, out);
      for (size_t i = 0; i < out.size(); ++i) out[i] += s1[n][i];
    };

    last = hum_solve(solver, linp, spec);
    last.baseline_v0_norm = baseline;

    CascadeProblem check = p;
    check.h = last.h;
    cur = solve_cascade_nonlinear(solver, check);
    last.v0 = cur.v0;
    last.v0_norm = l2_norm(g, cur.v0);
    last.j_insensitivity_bound = last.v0_norm;
    last.v_profile.resize(g.M + 1);
    for (int n = 0; n <= g.M; ++n) last.v_profile[n] = l2_norm(g, cur.v_traj.at(n));
    last.outer_iterations = outer;

    if (last.v0_norm < best.v0_norm) best = last;

    double dh = 0.0;
    for (int n = 0; n < g.M; ++n)
      for (int i = 0; i < g.N; ++i) dh += std::norm(last.h[n][i] - h_prev[n][i]);
    dh = std::sqrt(g.dt * g.dx * dh);
    double rel = dh / std::max(last.h_norm, 1e-300);
    h_prev = last.h;

    if (rel < outer_tol) {
      converged = true;
      break;
    }
    grew = (last.v0_norm > prev_v0) ? grew + 1 : 0;
    prev_v0 = last.v0_norm;
    if (grew >= 3) {
      best.outer_converged = false;
      best.note = "outer loop diverged for 3 consecutive iterations; "
                  "consider a smaller source or a larger epsilon";
      best.outer_iterations = outer;
      return best;
    }
  }
  last.outer_converged = converged;
  if (!converged)
    last.note = "outer loop reached outer_maxit without meeting outer_tol";
  return last;
}

}  // namespace fns

#endif
