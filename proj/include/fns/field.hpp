#ifndef FNS_FIELD_HPP
#define FNS_FIELD_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "fns/common.hpp"
#include "fns/grid.hpp"

namespace fns {

/** Complex-valued state sampled on the interior nodes at one time level. */
using ComplexField = std::vector<complex>;

inline ComplexField zero_field(const Grid& g) { return ComplexField(g.N, complex(0.0, 0.0)); }

/** Discrete L^2 pairing <a,b> = dx * sum_i a_i conj(b_i). */
inline complex l2_inner(const Grid& g, const ComplexField& a, const ComplexField& b) {
  if (a.size() != b.size() || static_cast<int>(a.size()) != g.N)
    throw config_error("l2_inner: field/grid size mismatch");
  complex acc(0.0, 0.0);
  for (int i = 0; i < g.N; ++i) acc += a[i] * std::conj(b[i]);
  return g.dx * acc;
}

inline double l2_norm(const Grid& g, const ComplexField& a) {
  if (static_cast<int>(a.size()) != g.N) throw config_error("l2_norm: field/grid size mismatch");
  double acc = 0.0;
  for (int i = 0; i < g.N; ++i) acc += std::norm(a[i]);
  return std::sqrt(g.dx * acc);
}

inline bool all_finite(const ComplexField& a) {
  for (const complex& z : a)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

/** Snapshots u(t_n), n = 0..M, of one trajectory. */
struct Trajectory {
  Grid grid;
  std::vector<ComplexField> snaps;  // M+1 entries

  const ComplexField& at(int n) const { return snaps[n]; }
  ComplexField& at(int n) { return snaps[n]; }
  int steps() const { return grid.M; }

  /** Field averaged onto the half-step t_{n+1/2}. */
  ComplexField half_step(int n) const {
    ComplexField out(grid.N);
    const ComplexField& a = snaps[n];
    const ComplexField& b = snaps[n + 1];
    for (int i = 0; i < grid.N; ++i) out[i] = 0.5 * (a[i] + b[i]);
    return out;
  }
};

inline Trajectory zero_trajectory(const Grid& g) {
  Trajectory tr;
  tr.grid = g;
  tr.snaps.assign(g.M + 1, zero_field(g));
  return tr;
}

/** Source term sampler: fills `out` with the source at the half-step time
 *  t = t_{n+1/2} of step n. A default-constructed (empty) sampler means a
 *  zero source. */
using SourceFn = std::function<void(int n, double t, ComplexField& out)>;

inline SourceFn zero_source() { return SourceFn(); }

/** Pointwise mask multiply. */
inline void apply_mask(const Mask& m, ComplexField& f) {
  for (size_t i = 0; i < f.size(); ++i) f[i] *= m.w[i];
}

/** Control/source field stored at the M half-steps. */
using HalfStepField = std::vector<ComplexField>;

inline HalfStepField zero_half_step_field(const Grid& g) {
  return HalfStepField(g.M, zero_field(g));
}

/** L^2(Q_T) pairing of half-step fields: dt*dx * sum_n sum_i a conj(b). */
inline complex qt_inner(const Grid& g, const HalfStepField& a, const HalfStepField& b) {
  complex acc(0.0, 0.0);
  for (int n = 0; n < g.M; ++n)
    for (int i = 0; i < g.N; ++i) acc += a[n][i] * std::conj(b[n][i]);
  return g.dt * g.dx * acc;
}

inline double qt_norm(const Grid& g, const HalfStepField& a) {
  double acc = 0.0;
  for (int n = 0; n < g.M; ++n)
    for (int i = 0; i < g.N; ++i) acc += std::norm(a[n][i]);
  return std::sqrt(g.dt * g.dx * acc);
}

}  // namespace fns

#endif
