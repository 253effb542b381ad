#ifndef FNS_GRID_HPP
#define FNS_GRID_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fns/common.hpp"

namespace fns {

/** Uniform space-time grid on (0,L) x (0,T).
 *
 *  Unknowns live on the N interior nodes x_i = i*dx, i = 1..N, with
 *  dx = L/(N+1); boundary values are eliminated. Time levels are
 *  t_n = n*dt, n = 0..M, dt = T/M; sources are sampled at the half-step
 *  times t_{n+1/2}. */
struct Grid {
  double L = 0.0;
  int N = 0;
  double dx = 0.0;
  double T = 0.0;
  int M = 0;
  double dt = 0.0;

  /** Coordinate of interior node with storage index i in [0,N). */
  double x(int i) const { return (i + 1) * dx; }
  /** Half-step time t_{n+1/2} for step n in [0,M). */
  double t_half(int n) const { return (n + 0.5) * dt; }
  /** Time level t_n for n in [0,M]. */
  double t(int n) const { return n * dt; }
};

inline Grid build_grid(double L, int N, double T, int M) {
  if (!(L > 0.0)) throw config_error("grid: L must be positive");
  if (!(T > 0.0)) throw config_error("grid: T must be positive");
  if (N < 8) throw config_error("grid: need at least 8 interior nodes");
  if (M < 8) throw config_error("grid: need at least 8 time steps");
  Grid g;
  g.L = L;
  g.N = N;
  g.dx = L / (N + 1);
  g.T = T;
  g.M = M;
  g.dt = T / M;
  return g;
}

/** Banded real matrix acting on interior-node vectors.
 *
 *  Row i holds coefficients for columns i-half_bw .. i+half_bw; entries
 *  outside [0,rows) are kept as explicit zeros so boundary rows need no
 *  special casing in apply(). */
struct BandedOperator {
  int rows = 0;
  int half_bw = 0;
  std::vector<double> coeff;  // rows x (2*half_bw+1), row-major

  double& at(int i, int off) { return coeff[i * (2 * half_bw + 1) + off + half_bw]; }
  double at(int i, int off) const { return coeff[i * (2 * half_bw + 1) + off + half_bw]; }

  /** Matrix entry (i,j); zero outside the band. */
  double entry(int i, int j) const {
    int off = j - i;
    if (off < -half_bw || off > half_bw || j < 0 || j >= rows) return 0.0;
    return at(i, off);
  }

  template <typename T>
  void apply(const std::vector<T>& in, std::vector<T>& out) const {
    out.assign(rows, T{});
    for (int i = 0; i < rows; ++i) {
      T acc{};
      int jlo = std::max(0, i - half_bw);
      int jhi = std::min(rows - 1, i + half_bw);
      for (int j = jlo; j <= jhi; ++j) acc += at(i, j - i) * in[j];
      out[i] = acc;
    }
  }

  template <typename T>
  std::vector<T> apply(const std::vector<T>& in) const {
    std::vector<T> out;
    apply(in, out);
    return out;
  }

  /** Largest |A_ij - A_ji| over the band. */
  double symmetry_defect() const {
    double d = 0.0;
    for (int i = 0; i < rows; ++i)
      for (int off = 1; off <= half_bw; ++off) {
        int j = i + off;
        if (j >= rows) break;
        d = std::max(d, std::fabs(entry(i, j) - entry(j, i)));
      }
    return d;
  }

  /** Dense row-major copy (for the eigensolver). */
  std::vector<double> to_dense() const {
    std::vector<double> a(static_cast<size_t>(rows) * rows, 0.0);
    for (int i = 0; i < rows; ++i) {
      int jlo = std::max(0, i - half_bw);
      int jhi = std::min(rows - 1, i + half_bw);
      for (int j = jlo; j <= jhi; ++j) a[static_cast<size_t>(i) * rows + j] = at(i, j - i);
    }
    return a;
  }
};

/** Fourth derivative with clamped ends (u = u_x = 0 at x=0,L).
 *
 *  Standard five-point stencil; the boundary rows eliminate the ghost node
 *  by the even reflection u_{-1} = u_1 (consistent with u_x = 0), which
 *  keeps the operator symmetric. */
inline BandedOperator build_clamped_fourth_derivative(const Grid& g) {
  BandedOperator op;
  op.rows = g.N;
  op.half_bw = 2;
  op.coeff.assign(static_cast<size_t>(g.N) * 5, 0.0);
  double s = 1.0 / (g.dx * g.dx * g.dx * g.dx);
  for (int i = 0; i < g.N; ++i) {
    if (i - 2 >= 0) op.at(i, -2) = s;
    if (i - 1 >= 0) op.at(i, -1) = -4.0 * s;
    op.at(i, 0) = 6.0 * s;
    if (i + 1 < g.N) op.at(i, 1) = -4.0 * s;
    if (i + 2 < g.N) op.at(i, 2) = s;
  }
  // ghost reflection folds one unit of the outermost coefficient onto the
  // first/last diagonal entry: row 0 becomes (7 -4 1)/dx^4
  op.at(0, 0) = 7.0 * s;
  op.at(g.N - 1, 0) = 7.0 * s;
  return op;
}

/** Second derivative with homogeneous Dirichlet ends, standard 3-point stencil. */
inline BandedOperator build_dirichlet_second_derivative(const Grid& g) {
  BandedOperator op;
  op.rows = g.N;
  op.half_bw = 1;
  op.coeff.assign(static_cast<size_t>(g.N) * 3, 0.0);
  double s = 1.0 / (g.dx * g.dx);
  for (int i = 0; i < g.N; ++i) {
    if (i - 1 >= 0) op.at(i, -1) = s;
    op.at(i, 0) = -2.0 * s;
    if (i + 1 < g.N) op.at(i, 1) = s;
  }
  return op;
}

/** Centered first derivative on interior nodes; boundary values u(0)=u(L)=0
 *  enter as zeros, so the end rows are one-sided over the band. */
inline BandedOperator build_centered_first_derivative(const Grid& g) {
  BandedOperator op;
  op.rows = g.N;
  op.half_bw = 1;
  op.coeff.assign(static_cast<size_t>(g.N) * 3, 0.0);
  double s = 1.0 / (2.0 * g.dx);
  for (int i = 0; i < g.N; ++i) {
    if (i - 1 >= 0) op.at(i, -1) = -s;
    if (i + 1 < g.N) op.at(i, 1) = s;
  }
  return op;
}

/** 0/1 indicator of an open subinterval (a,b), sampled on interior nodes. */
struct Mask {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> w;

  bool empty() const {
    for (double v : w)
      if (v > 0.0) return false;
    return true;
  }

  /** True when some node carries weight in both masks. */
  bool intersects(const Mask& other) const {
    size_t n = std::min(w.size(), other.w.size());
    for (size_t i = 0; i < n; ++i)
      if (w[i] > 0.0 && other.w[i] > 0.0) return true;
    return false;
  }
};

inline Mask indicator_mask(const Grid& g, double a, double b) {
  if (!(a < b)) throw config_error("mask: interval must satisfy a < b");
  if (a < 0.0 || b > g.L) throw config_error("mask: interval must lie inside [0,L]");
  Mask m;
  m.a = a;
  m.b = b;
  m.w.assign(g.N, 0.0);
  for (int i = 0; i < g.N; ++i) {
    double x = g.x(i);
    if (x > a && x < b) m.w[i] = 1.0;
  }
  return m;
}

}  // namespace fns

#endif
