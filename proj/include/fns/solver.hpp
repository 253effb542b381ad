#ifndef FNS_SOLVER_HPP
#define FNS_SOLVER_HPP

#include <cmath>
#include <string>
#include <vector>

#include "fns/common.hpp"
#include "fns/eig.hpp"
#include "fns/field.hpp"
#include "fns/grid.hpp"

namespace fns {

enum class Direction { forward, backward };

/** Spatial generator choice: the full operator of i u_t + u_xx - u_xxxx = f,
 *  or the reduced one of i u_t + u_xxxx = f used by the boundary-estimate
 *  audit. Both give u_t = i S u - i f with S real symmetric. */
enum class Generator { schrodinger, biharmonic_only };

/** Crank-Nicolson propagator for i u_t + u_xx - u_xxxx = f with clamped
 *  boundary conditions, forward and backward in time.
 *
 *  The one-step map is the Cayley transform of the skew-adjoint generator
 *  A = iS. It is realized through the spectral factorization S = Q diag(s) Q^T,
 *  computed once per grid and reused by every step, solve and Gramian
 *  application. The Cayley multipliers are normalized to unit modulus, so the
 *  free step is unitary to roundoff and the backward step is the exact
 *  conjugate-transpose of the forward one:
 *
 *      forward:  u+ = C u- - i dt K f,   C = K (I + (dt/2)A),  K = (I - (dt/2)A)^-1
 *      backward: u- = C* u+ + i dt K* f
 *
 *  Sources are sampled at the half-step times t_{n+1/2}. */
class DispersiveSolver {
 public:
  explicit DispersiveSolver(const Grid& g, Generator gen = Generator::schrodinger)
      : grid_(g), gen_(gen) {
    d2_ = build_dirichlet_second_derivative(g);
    d4_ = build_clamped_fourth_derivative(g);
    std::vector<double> dense;
    if (gen == Generator::schrodinger) {
      dense = d2_.to_dense();
      std::vector<double> d4 = d4_.to_dense();
      for (size_t i = 0; i < dense.size(); ++i) dense[i] -= d4[i];
    } else {
      dense = d4_.to_dense();
    }
    eig_ = jacobi_eigendecompose(std::move(dense), g.N);

    cayley_.resize(g.N);
    kinv_.resize(g.N);
    for (int k = 0; k < g.N; ++k) {
      double a = 0.5 * g.dt * eig_.values[k];
      complex num(1.0, a), den(1.0, -a);
      complex c = num / den;
      cayley_[k] = c / std::abs(c);  // exactly unimodular free step
      kinv_[k] = 1.0 / den;
    }
  }

  const Grid& grid() const { return grid_; }
  const SymmetricEigen& modes() const { return eig_; }
  const BandedOperator& second_derivative() const { return d2_; }
  const BandedOperator& fourth_derivative() const { return d4_; }

  /** c = Q^T u. */
  std::vector<complex> to_modes(const ComplexField& u) const {
    int n = grid_.N;
    std::vector<complex> c(n);
    for (int k = 0; k < n; ++k) {
      const double* col = &eig_.vectors[static_cast<size_t>(k) * n];
      complex acc(0.0, 0.0);
      for (int i = 0; i < n; ++i) acc += col[i] * u[i];
      c[k] = acc;
    }
    return c;
  }

  /** u = Q c. */
  ComplexField from_modes(const std::vector<complex>& c) const {
    int n = grid_.N;
    ComplexField u(n, complex(0.0, 0.0));
    for (int k = 0; k < n; ++k) {
      const double* col = &eig_.vectors[static_cast<size_t>(k) * n];
      complex ck = c[k];
      for (int i = 0; i < n; ++i) u[i] += ck * col[i];
    }
    return u;
  }

  /** One Crank-Nicolson step. `source` may be empty (zero source). */
  ComplexField cn_step(const ComplexField& state, const ComplexField& source,
                       Direction dir) const {
    check_field(state, "cn_step state");
    std::vector<complex> c = to_modes(state);
    if (source.empty()) {
      step_modes(c, nullptr, dir);
    } else {
      check_field(source, "cn_step source");
      std::vector<complex> g = to_modes(source);
      step_modes(c, &g, dir);
    }
    return from_modes(c);
  }

  /** March u(0) = u0 to t = T; snapshot n holds u(t_n). */
  Trajectory solve_forward(const ComplexField& u0, const SourceFn& src = SourceFn()) const {
    check_field(u0, "solve_forward initial data");
    Trajectory tr;
    tr.grid = grid_;
    tr.snaps.resize(grid_.M + 1);
    tr.snaps[0] = u0;
    std::vector<complex> c = to_modes(u0);
    ComplexField sbuf;
    for (int n = 0; n < grid_.M; ++n) {
      advance(c, src, n, Direction::forward, sbuf);
      tr.snaps[n + 1] = from_modes(c);
    }
    finish(tr, "solve_forward");
    return tr;
  }

  /** March v(T) = vT down to t = 0 with the adjoint one-step map. */
  Trajectory solve_backward(const ComplexField& vT, const SourceFn& src = SourceFn()) const {
    check_field(vT, "solve_backward terminal data");
    Trajectory tr;
    tr.grid = grid_;
    tr.snaps.resize(grid_.M + 1);
    tr.snaps[grid_.M] = vT;
    std::vector<complex> c = to_modes(vT);
    ComplexField sbuf;
    for (int n = grid_.M - 1; n >= 0; --n) {
      advance(c, src, n, Direction::backward, sbuf);
      tr.snaps[n] = from_modes(c);
    }
    finish(tr, "solve_backward");
    return tr;
  }

  /** Forward march of i u_t + u_xx - u_xxxx - zeta |u|^2 u = f. The cubic
   *  term is frozen at the previous inner iterate, evaluated on the field
   *  averaged between time levels, and iterated per step until the update
   *  stalls below picard_tol (relative). */
  Trajectory solve_forward_nonlinear(const ComplexField& u0, const SourceFn& src,
                                     complex zeta) const {
    if (zeta == complex(0.0, 0.0)) return solve_forward(u0, src);
    check_field(u0, "solve_forward_nonlinear initial data");
    Trajectory tr;
    tr.grid = grid_;
    tr.snaps.resize(grid_.M + 1);
    tr.snaps[0] = u0;
    std::vector<complex> c = to_modes(u0);
    ComplexField f(grid_.N), eff(grid_.N);
    for (int n = 0; n < grid_.M; ++n) {
      f.assign(grid_.N, complex(0.0, 0.0));
      if (src) src(n, grid_.t_half(n), f);

      const ComplexField& ucur = tr.snaps[n];
      // predictor: linear step
      std::vector<complex> cnext = c;
      {
        std::vector<complex> gm = to_modes(f);
        step_modes(cnext, &gm, Direction::forward);
      }
      ComplexField unext = from_modes(cnext);

      double rel = 0.0;
      int it = 0;
      for (; it < picard_maxit; ++it) {
        for (int i = 0; i < grid_.N; ++i) {
          complex w = 0.5 * (ucur[i] + unext[i]);
          eff[i] = f[i] + zeta * std::norm(w) * w;
        }
        cnext = c;
        std::vector<complex> gm = to_modes(eff);
        step_modes(cnext, &gm, Direction::forward);
        ComplexField trial = from_modes(cnext);
        double diff = 0.0, scale = 0.0;
        for (int i = 0; i < grid_.N; ++i) {
          diff += std::norm(trial[i] - unext[i]);
          scale += std::norm(trial[i]);
        }
        unext = std::move(trial);
        rel = std::sqrt(diff) / std::max(std::sqrt(scale), 1e-300);
        if (rel < picard_tol) break;
      }
      if (it == picard_maxit)
        throw numerical_error("solve_forward_nonlinear: inner iteration stalled at step " +
                              std::to_string(n) + ", residual " + std::to_string(rel));
      c = std::move(cnext);
      tr.snaps[n + 1] = std::move(unext);
    }
    finish(tr, "solve_forward_nonlinear");
    return tr;
  }

  static constexpr double picard_tol = 1e-10;
  static constexpr int picard_maxit = 50;

 private:
  void advance(std::vector<complex>& c, const SourceFn& src, int n, Direction dir,
               ComplexField& sbuf) const {
    if (src) {
      sbuf.assign(grid_.N, complex(0.0, 0.0));
      src(n, grid_.t_half(n), sbuf);
      std::vector<complex> g = to_modes(sbuf);
      step_modes(c, &g, dir);
    } else {
      step_modes(c, nullptr, dir);
    }
  }

  void step_modes(std::vector<complex>& c, const std::vector<complex>* g, Direction dir) const {
    const complex idt(0.0, grid_.dt);
    for (int k = 0; k < grid_.N; ++k) {
      if (dir == Direction::forward) {
        c[k] *= cayley_[k];
        if (g) c[k] -= idt * (kinv_[k] * (*g)[k]);
      } else {
        c[k] *= std::conj(cayley_[k]);
        if (g) c[k] += idt * (std::conj(kinv_[k]) * (*g)[k]);
      }
    }
  }

  void check_field(const ComplexField& f, const char* what) const {
    if (static_cast<int>(f.size()) != grid_.N)
      throw config_error(std::string(what) + ": size does not match grid");
    if (!all_finite(f)) throw numerical_error(std::string(what) + ": non-finite entries");
  }

  void finish(const Trajectory& tr, const char* what) const {
    if (!all_finite(tr.snaps.back()) || !all_finite(tr.snaps.front()))
      throw numerical_error(std::string(what) + ": trajectory is non-finite");
  }

  Grid grid_;
  Generator gen_;
  BandedOperator d2_, d4_;
  SymmetricEigen eig_;
  std::vector<complex> cayley_, kinv_;
};

}  // namespace fns

#endif
