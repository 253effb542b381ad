#ifndef FNS_EXPERIMENTS_HPP
#define FNS_EXPERIMENTS_HPP

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "fns/audit.hpp"
#include "fns/cascade.hpp"
#include "fns/config.hpp"
#include "fns/control.hpp"
#include "fns/io.hpp"
#include "fns/rng.hpp"
#include "fns/solver.hpp"

namespace fns {

namespace detail {

inline std::vector<std::string> provenance(const RunConfig& c, const std::string& command) {
  return {"command: " + command, "seed: " + std::to_string(c.seed), "config: " + c.resolved};
}

inline CascadeProblem problem_from_config(const RunConfig& c) {
  CascadeProblem p;
  p.u0 = pulse_field(c.initial, c.grid);
  p.f0 = pulse_source(c.source, c.grid);
  p.omega = c.omega_mask();
  p.obs = c.obs_mask();
  p.zeta = c.zeta;
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct SimulateOutcome {
  double max_drift = 0.0;
  double initial_norm = 0.0;
};

inline SimulateOutcome cmd_simulate(const RunConfig& c, const std::string& outdir) {
  ensure_output_dir(outdir);
  DispersiveSolver solver(c.grid);
  ComplexField u0 = pulse_field(c.initial, c.grid);
  SourceFn src = pulse_source(c.source, c.grid);
  Trajectory tr = (c.zeta == complex(0.0, 0.0))
                      ? solver.solve_forward(u0, src)
                      : solver.solve_forward_nonlinear(u0, src, c.zeta);

  std::vector<std::string> head = detail::provenance(c, "simulate");
  write_field_binary(outdir + "/trajectory.bin", tr.snaps, c.grid.N, head);

  SimulateOutcome out;
  out.initial_norm = l2_norm(c.grid, u0);
  CsvWriter csv(outdir + "/conserved.csv", head, "t,l2_norm,relative_drift");
  for (int n = 0; n <= c.grid.M; ++n) {
    double nn = l2_norm(c.grid, tr.at(n));
    double drift = out.initial_norm > 0.0 ? std::fabs(nn - out.initial_norm) / out.initial_norm
                                          : 0.0;
    out.max_drift = std::max(out.max_drift, drift);
    csv.field(c.grid.t(n));
    csv.field(nn);
    csv.field(drift);
    csv.end_row();
  }
  std::printf("simulate: %d steps, max relative norm drift %.3e\n", c.grid.M, out.max_drift);
  return out;
}

// ---------------------------------------------------------------------------

struct ControlOutcome {
  std::vector<ControlResult> results;  // one per epsilon
};

inline ControlOutcome cmd_control(const RunConfig& c, const std::string& outdir) {
  if (!c.has_masks) throw config_error("control: config needs a 'masks' block");
  ensure_output_dir(outdir);
  DispersiveSolver solver(c.grid);
  CascadeProblem p = detail::problem_from_config(c);

  std::vector<std::string> head = detail::provenance(c, "control");
  CsvWriter csv(outdir + "/control_summary.csv", head,
                "epsilon,cg_iterations,cg_converged,v0_norm,baseline_v0_norm,reduction,"
                "h_norm,outer_iterations,outer_converged");

  ControlOutcome out;
  for (size_t k = 0; k < c.epsilons.size(); ++k) {
    ControlSpec spec;
    spec.epsilon = c.epsilons[k];
    spec.mode = c.mode;
    spec.cg_tol = c.cg_tol;
    spec.cg_maxit = c.cg_maxit;
    spec.weight_params = c.weights;
    ControlResult res = (c.zeta == complex(0.0, 0.0))
                            ? hum_solve(solver, p, spec)
                            : nonlinear_insensitize(solver, p, spec, c.outer_tol,
                                                    c.outer_maxit, c.cap);

    csv.field(spec.epsilon);
    csv.field(res.cg_iterations);
    csv.field(static_cast<int>(res.cg_converged));
    csv.field(res.v0_norm);
    csv.field(res.baseline_v0_norm);
    csv.field(res.v0_norm > 0.0 ? res.baseline_v0_norm / res.v0_norm : 0.0);
    csv.field(res.h_norm);
    csv.field(res.outer_iterations);
    csv.field(static_cast<int>(res.outer_converged));
    csv.end_row();

    std::string tag = std::to_string(k);
    CsvWriter prof(outdir + "/v_profile_" + tag + ".csv", head, "t,v_norm");
    for (int n = 0; n <= c.grid.M; ++n) {
      prof.field(c.grid.t(n));
      prof.field(res.v_profile.empty() ? 0.0 : res.v_profile[n]);
      prof.end_row();
    }
    if (!res.h.empty()) write_field_binary(outdir + "/control_" + tag + ".bin", res.h, c.grid.N, head);

    std::string note = res.note.empty() ? "" : "  [" + res.note + "]";
    std::printf("control: eps=%.3e  v0=%.6e  baseline=%.6e  cg_its=%d%s\n", spec.epsilon,
                res.v0_norm, res.baseline_v0_norm, res.cg_iterations, note.c_str());
    out.results.push_back(std::move(res));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct InsensitizeCheckOutcome {
  double v0_norm = 0.0;
  double max_abs_deriv = 0.0;           // controlled run, adjoint formula
  double baseline_max_abs_deriv = 0.0;  // h = 0 run
  double ratio = 0.0;
  bool bound_ok = true;  // every |derivative| <= ||v0||
  std::vector<double> mean_slopes;      // FD order fit per tau pair
};

inline InsensitizeCheckOutcome cmd_insensitize_check(const RunConfig& c,
                                                     const std::string& outdir) {
  if (!c.has_masks) throw config_error("insensitize-check: config needs a 'masks' block");
  ensure_output_dir(outdir);
  DispersiveSolver solver(c.grid);
  CascadeProblem p = detail::problem_from_config(c);

  ControlSpec spec;
  spec.epsilon = c.epsilons.back();
  spec.mode = c.mode;
  spec.cg_tol = c.cg_tol;
  spec.cg_maxit = c.cg_maxit;
  spec.weight_params = c.weights;
  ControlResult res = (c.zeta == complex(0.0, 0.0))
                          ? hum_solve(solver, p, spec)
                          : nonlinear_insensitize(solver, p, spec, c.outer_tol, c.outer_maxit,
                                                  c.cap);

  // uncontrolled companion for the baseline column
  CascadeProblem freep = p;
  freep.h.clear();
  CascadeSolution freesol = (c.zeta == complex(0.0, 0.0))
                                ? solve_cascade_linear(solver, freep)
                                : solve_cascade_nonlinear(solver, freep);

  CascadeProblem ctrl = p;
  ctrl.h = res.h;

  std::vector<std::string> head = detail::provenance(c, "insensitize-check");
  std::string cols = "direction,adjoint,baseline_adjoint";
  for (size_t t = 0; t < c.check_taus.size(); ++t)
    cols += ",fd_" + std::to_string(t) + ",absdiff_" + std::to_string(t);
  for (size_t t = 0; t + 1 < c.check_taus.size(); ++t)
    cols += ",slope_" + std::to_string(t);
  CsvWriter csv(outdir + "/insensitivity.csv", head, cols);

  InsensitizeCheckOutcome out;
  out.v0_norm = res.v0_norm;
  std::vector<double> slope_acc(c.check_taus.size() > 1 ? c.check_taus.size() - 1 : 0, 0.0);
  SplitMix64 rng(c.seed);
  for (int d = 0; d < c.check_directions; ++d) {
    ComplexField uh = random_low_mode_field(c.grid, rng, true);
    double adj = insensitivity_derivative_adjoint(c.grid, uh, res.v0);
    double base = insensitivity_derivative_adjoint(c.grid, uh, freesol.v0);
    out.max_abs_deriv = std::max(out.max_abs_deriv, std::fabs(adj));
    out.baseline_max_abs_deriv = std::max(out.baseline_max_abs_deriv, std::fabs(base));
    if (std::fabs(adj) > res.v0_norm * (1.0 + 1e-10)) out.bound_ok = false;

    csv.field(d);
    csv.field(adj);
    csv.field(base);
    std::vector<double> diffs(c.check_taus.size());
    for (size_t t = 0; t < c.check_taus.size(); ++t) {
      double fd = insensitivity_derivative_fd(solver, ctrl, uh, c.check_taus[t]);
      diffs[t] = std::fabs(fd - adj);
      csv.field(fd);
      csv.field(diffs[t]);
    }
    for (size_t t = 0; t + 1 < c.check_taus.size(); ++t) {
      double denom = std::log(c.check_taus[t] / c.check_taus[t + 1]);
      double slope = (diffs[t] > 0.0 && diffs[t + 1] > 0.0)
                         ? std::log(diffs[t] / diffs[t + 1]) / denom
                         : 0.0;
      slope_acc[t] += slope;
      csv.field(slope);
    }
    csv.end_row();
  }
  for (double s : slope_acc) out.mean_slopes.push_back(s / c.check_directions);
  out.ratio = out.max_abs_deriv > 0.0 ? out.baseline_max_abs_deriv / out.max_abs_deriv : 0.0;

  CsvWriter sum(outdir + "/insensitivity_summary.csv", head,
                "v0_norm,max_abs_deriv,baseline_max_abs_deriv,ratio,bound_ok");
  sum.field(out.v0_norm);
  sum.field(out.max_abs_deriv);
  sum.field(out.baseline_max_abs_deriv);
  sum.field(out.ratio);
  sum.field(static_cast<int>(out.bound_ok));
  sum.end_row();

  std::printf("insensitize-check: max|dJ/dtau|=%.6e  bound %s  baseline ratio %.1f\n",
              out.max_abs_deriv, out.bound_ok ? "ok" : "VIOLATED", out.ratio);
  return out;
}

// ---------------------------------------------------------------------------

struct CarlemanScanOutcome {
  std::vector<CarlemanReport> samples;           // alternating families per sample
  std::vector<ObservabilityRow> observability;
  std::vector<ScanCell> cells;
};

inline CarlemanScanOutcome cmd_carleman_scan(const RunConfig& c, const std::string& outdir) {
  if (!c.has_masks) throw config_error("carleman-scan: config needs a 'masks' block");
  if (!c.has_weights) throw config_error("carleman-scan: config needs a 'weights' block");
  ensure_output_dir(outdir);
  DispersiveSolver solver(c.grid);
  Mask omega = c.omega_mask();
  Mask obs = c.obs_mask();
  std::vector<std::string> head = detail::provenance(c, "carleman-scan");

  CarlemanScanOutcome out;
  {
    CsvWriter csv(outdir + "/carleman_samples.csv", head,
                  "sample,family,log_lhs,log_rhs_source,log_rhs_obs,log_ratio,"
                  "lhs,rhs_source,rhs_obs");
    SplitMix64 rng(c.seed);
    for (int s = 0; s < c.scan_samples; ++s) {
      ComplexField psi0 = random_low_mode_field(c.grid, rng, true);
      HalfStepField g0 = random_low_mode_half_field(c.grid, rng, 0.3);
      HalfStepField g1 = random_low_mode_half_field(c.grid, rng, 0.3);
      SourceFn g0fn = [&g0](int n, double, ComplexField& o) {
        for (size_t i = 0; i < o.size(); ++i) o[i] += g0[n][i];
      };
      SourceFn g1fn = [&g1](int n, double, ComplexField& o) {
        for (size_t i = 0; i < o.size(); ++i) o[i] += g1[n][i];
      };
      AdjointSolution sol = solve_adjoint_pair(solver, psi0, g0fn, g1fn, obs);
      CarlemanReport full = carleman_sides(sol, g0fn, g1fn, c.weights, omega);
      full.sample_id = s;
      CarlemanReport mod = modified_carleman_sides(sol, g0fn, g1fn, c.weights, omega);
      mod.sample_id = s;
      for (const CarlemanReport* r : {&full, &mod}) {
        csv.field(s);
        csv.field(r == &full ? "theta_xi" : "sigma_nu");
        csv.field(r->log_lhs);
        csv.field(r->log_rhs_source);
        csv.field(r->log_rhs_obs);
        csv.field(r->log_ratio);
        csv.field(r->lhs);
        csv.field(r->rhs_source);
        csv.field(r->rhs_obs);
        csv.end_row();
      }
      out.samples.push_back(full);
      out.samples.push_back(mod);
    }
  }
  {
    SplitMix64 rng(c.seed);
    out.observability =
        observability_ratio(solver, c.scan_samples, c.weights, omega, obs, rng);
    CsvWriter csv(outdir + "/observability.csv", head,
                  "sample,log_num,log_obs,log_src,log_ratio");
    for (const auto& r : out.observability) {
      csv.field(r.sample_id);
      csv.field(r.log_num);
      csv.field(r.log_obs);
      csv.field(r.log_src);
      csv.field(r.log_ratio);
      csv.end_row();
    }
  }
  {
    std::vector<double> lambdas = c.scan_lambdas;
    std::vector<double> mus = c.scan_mus;
    if (lambdas.empty()) {
      double base = c.grid.T + c.grid.T * c.grid.T;
      lambdas = {4.0 * base, 8.0 * base, 16.0 * base};
    }
    if (mus.empty()) mus = {c.weights.mu};
    out.cells = constant_scan(solver, lambdas, mus, c.scan_samples, c.weights, omega, obs,
                              c.seed);
    CsvWriter csv(outdir + "/scan.csv", head, "lambda,mu,max_log_ratio,mean_log_ratio");
    for (const auto& cell : out.cells) {
      csv.field(cell.lambda);
      csv.field(cell.mu);
      csv.field(cell.max_log_ratio);
      csv.field(cell.mean_log_ratio);
      csv.end_row();
    }
  }
  std::printf("carleman-scan: %d samples, %zu scan cells written\n", c.scan_samples,
              out.cells.size());
  return out;
}

// ---------------------------------------------------------------------------

struct ConvergenceOutcome {
  std::vector<double> errors;
  std::vector<double> orders;  // between consecutive grids
};

inline ConvergenceOutcome cmd_convergence(const RunConfig& c, const std::string& outdir) {
  ensure_output_dir(outdir);
  std::vector<std::pair<int, int>> grids = c.conv_grids;
  if (grids.empty()) grids = {{32, 64}, {64, 128}, {128, 256}};

  double L = c.grid.L, T = c.grid.T;
  double kk = 2.0 * M_PI / L;
  auto run = [&](int N, int M) {
    Grid g = build_grid(L, N, T, M);
    DispersiveSolver solver(g);
    ComplexField u0(g.N);
    for (int i = 0; i < g.N; ++i) {
      double s = std::sin(M_PI * g.x(i) / L);
      u0[i] = complex(s * s, 0.0);
    }
    SourceFn src = [&](int, double t, ComplexField& outf) {
      complex phase = std::exp(complex(0.0, t));
      for (int i = 0; i < g.N; ++i) {
        double cx = std::cos(kk * g.x(i));
        outf[i] = phase * complex(-0.5 + 0.5 * (1.0 + kk * kk + kk * kk * kk * kk) * cx, 0.0);
      }
    };
    Trajectory tr = solver.solve_forward(u0, src);
    double worst = 0.0;
    for (int n = 0; n <= g.M; ++n) {
      complex phase = std::exp(complex(0.0, g.t(n)));
      double err = 0.0, scale = 0.0;
      for (int i = 0; i < g.N; ++i) {
        double s = std::sin(M_PI * g.x(i) / L);
        complex exact = phase * (s * s);
        err += std::norm(tr.at(n)[i] - exact);
        scale += std::norm(exact);
      }
      worst = std::max(worst, std::sqrt(err / scale));
    }
    return std::pair<double, double>(g.dx, worst);
  };

  std::vector<std::string> head = detail::provenance(c, "convergence");
  CsvWriter csv(outdir + "/convergence.csv", head, "N,M,dx,dt,error,order");
  ConvergenceOutcome out;
  double prev_h = 0.0, prev_e = 0.0;
  for (auto [N, M] : grids) {
    auto [h, e] = run(N, M);
    out.errors.push_back(e);
    double order = 0.0;
    if (prev_h > 0.0) {
      order = std::log(prev_e / e) / std::log(prev_h / h);
      out.orders.push_back(order);
    }
    csv.field(N);
    csv.field(M);
    csv.field(h);
    csv.field(T / M);
    csv.field(e);
    csv.field(order);
    csv.end_row();
    std::printf("convergence: N=%4d M=%5d  error %.6e  order %.3f\n", N, M, e, order);
    prev_h = h;
    prev_e = e;
  }
  return out;
}

}  // namespace fns

#endif
