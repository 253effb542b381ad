#ifndef FNS_CASCADE_HPP
#define FNS_CASCADE_HPP

#include <cmath>
#include <string>
#include <utility>

#include "fns/common.hpp"
#include "fns/field.hpp"
#include "fns/grid.hpp"
#include "fns/solver.hpp"

namespace fns {

/** Data of the coupled control problem: state u driven forward by
 *  f0 + 1_omega h, companion v driven backward by f1 + 1_O u from v(T) = 0. */
struct CascadeProblem {
  ComplexField u0;
  SourceFn f0;           // u-equation source (empty = zero)
  SourceFn f1;           // v-equation source (empty = zero)
  HalfStepField h;       // control samples on the half-steps (empty = none)
  Mask omega;
  Mask obs;
  complex zeta{0.0, 0.0};
};

struct CascadeSolution {
  Trajectory u_traj;
  Trajectory v_traj;
  ComplexField v0;
};

struct AdjointSolution {
  Trajectory psi_traj;  // forward from psi(0) = psi0
  Trajectory phi_traj;  // backward from phi(T) = 0 with source 1_O psi + g0
};

namespace detail {

/** Source of the u-equation: f0 plus the masked control. */
inline SourceFn state_source(const CascadeProblem& p) {
  const SourceFn& f0 = p.f0;
  const HalfStepField* h = p.h.empty() ? nullptr : &p.h;
  const Mask& omega = p.omega;
  return [&f0, h, &omega](int n, double t, ComplexField& out) {
    if (f0) f0(n, t, out);
    if (h)
      for (size_t i = 0; i < out.size(); ++i) out[i] += omega.w[i] * (*h)[n][i];
  };
}

/** Source of the v-equation: f1 plus the observation coupling 1_O u,
 *  with u averaged onto the half-steps. */
inline SourceFn companion_source(const CascadeProblem& p, const Trajectory& u) {
  const SourceFn& f1 = p.f1;
  const Mask& obs = p.obs;
  const Trajectory* up = &u;
  return [&f1, &obs, up](int n, double t, ComplexField& out) {
    if (f1) f1(n, t, out);
    const ComplexField& a = up->snaps[n];
    const ComplexField& b = up->snaps[n + 1];
    for (size_t i = 0; i < out.size(); ++i) out[i] += obs.w[i] * (0.5 * (a[i] + b[i]));
  };
}

}  // namespace detail

inline CascadeSolution solve_cascade_linear(const DispersiveSolver& solver,
                                            const CascadeProblem& p) {
  if (p.zeta != complex(0.0, 0.0))
    throw config_error("solve_cascade_linear: zeta must be zero");
  CascadeSolution sol;
  sol.u_traj = solver.solve_forward(p.u0, detail::state_source(p));
  sol.v_traj = solver.solve_backward(zero_field(solver.grid()),
                                     detail::companion_source(p, sol.u_traj));
  sol.v0 = sol.v_traj.at(0);
  return sol;
}

/** Nonlinear cascade. u solves the cubic state equation; v solves the
 *  companion equation whose zero-order terms conj(zeta) conj(u)^2 conj(v) and
 *  2 conj(zeta) |u|^2 v use the computed u and the current v iterate, lagged
 *  per step until the update stalls (the conj(v) term is only real-linear,
 *  which the lagging absorbs while keeping one constant factorization). */
inline CascadeSolution solve_cascade_nonlinear(const DispersiveSolver& solver,
                                               const CascadeProblem& p) {
  if (p.zeta == complex(0.0, 0.0)) return solve_cascade_linear(solver, p);
  const Grid& g = solver.grid();
  CascadeSolution sol;
  sol.u_traj = solver.solve_forward_nonlinear(p.u0, detail::state_source(p), p.zeta);

  sol.v_traj.grid = g;
  sol.v_traj.snaps.assign(g.M + 1, zero_field(g));
  complex zb = std::conj(p.zeta);
  ComplexField base(g.N), src(g.N);
  for (int n = g.M - 1; n >= 0; --n) {
    const ComplexField& vnext = sol.v_traj.snaps[n + 1];
    ComplexField uh = sol.u_traj.half_step(n);
    base.assign(g.N, complex(0.0, 0.0));
    if (p.f1) p.f1(n, g.t_half(n), base);
    for (int i = 0; i < g.N; ++i) base[i] += p.obs.w[i] * uh[i];

    ComplexField trial = solver.cn_step(vnext, base, Direction::backward);
    double rel = 0.0;
    int it = 0;
    for (; it < DispersiveSolver::picard_maxit; ++it) {
      for (int i = 0; i < g.N; ++i) {
        complex vh = 0.5 * (trial[i] + vnext[i]);
        complex ub = std::conj(uh[i]);
        src[i] = base[i] + zb * (ub * ub) * std::conj(vh) + 2.0 * zb * std::norm(uh[i]) * vh;
      }
      ComplexField next = solver.cn_step(vnext, src, Direction::backward);
      double diff = 0.0, scale = 0.0;
      for (int i = 0; i < g.N; ++i) {
        diff += std::norm(next[i] - trial[i]);
        scale += std::norm(next[i]);
      }
      trial = std::move(next);
      rel = std::sqrt(diff) / std::max(std::sqrt(scale), 1e-300);
      if (rel < DispersiveSolver::picard_tol) break;
    }
    if (it == DispersiveSolver::picard_maxit)
      throw numerical_error("solve_cascade_nonlinear: companion step stalled at step " +
                            std::to_string(n) + ", residual " + std::to_string(rel));
    sol.v_traj.snaps[n] = std::move(trial);
  }
  sol.v0 = sol.v_traj.at(0);
  return sol;
}

/** Adjoint pair: psi forward from psi0 with source g1, then phi backward
 *  from phi(T) = 0 with source 1_O psi + g0. */
inline AdjointSolution solve_adjoint_pair(const DispersiveSolver& solver,
                                          const ComplexField& psi0, const SourceFn& g0,
                                          const SourceFn& g1, const Mask& obs) {
  AdjointSolution adj;
  adj.psi_traj = solver.solve_forward(psi0, g1);
  const Trajectory* psip = &adj.psi_traj;
  SourceFn src = [&g0, &obs, psip](int n, double t, ComplexField& out) {
    if (g0) g0(n, t, out);
    const ComplexField& a = psip->snaps[n];
    const ComplexField& b = psip->snaps[n + 1];
    for (size_t i = 0; i < out.size(); ++i) out[i] += obs.w[i] * (0.5 * (a[i] + b[i]));
  };
  adj.phi_traj = solver.solve_backward(zero_field(solver.grid()), src);
  return adj;
}

/** Sentinel J = 1/2 iint_{O_T} |u|^2, same half-step quadrature as every
 *  other space-time integral here. */
inline double sentinel_value(const Trajectory& u, const Mask& obs) {
  const Grid& g = u.grid;
  double acc = 0.0;
  for (int n = 0; n < g.M; ++n) {
    const ComplexField& a = u.snaps[n];
    const ComplexField& b = u.snaps[n + 1];
    for (int i = 0; i < g.N; ++i) {
      if (obs.w[i] == 0.0) continue;
      acc += obs.w[i] * std::norm(0.5 * (a[i] + b[i]));
    }
  }
  return 0.5 * g.dt * g.dx * acc;
}

/** dJ/dtau at tau = 0 through the companion state: -Im <u_hat0, v(0)>.
 *  Exact for the discrete sentinel by the one-step duality identity. */
inline double insensitivity_derivative_adjoint(const Grid& g, const ComplexField& u_hat0,
                                               const ComplexField& v0) {
  return -std::imag(l2_inner(g, u_hat0, v0));
}

/** Centered finite difference of J in the perturbation direction u_hat0. */
inline double insensitivity_derivative_fd(const DispersiveSolver& solver,
                                          const CascadeProblem& p, const ComplexField& u_hat0,
                                          double tau) {
  if (!(tau > 0.0)) throw config_error("insensitivity_derivative_fd: tau must be positive");
  const Grid& g = solver.grid();
  auto j_at = [&](double s) {
    ComplexField u0(g.N);
    for (int i = 0; i < g.N; ++i) u0[i] = p.u0[i] + s * u_hat0[i];
    Trajectory u = (p.zeta == complex(0.0, 0.0))
                       ? solver.solve_forward(u0, detail::state_source(p))
                       : solver.solve_forward_nonlinear(u0, detail::state_source(p), p.zeta);
    return sentinel_value(u, p.obs);
  };
  return (j_at(tau) - j_at(-tau)) / (2.0 * tau);
}

}  // namespace fns

#endif
