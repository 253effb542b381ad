#ifndef FNS_RNG_HPP
#define FNS_RNG_HPP

#include <cmath>
#include <cstdint>

#include "fns/field.hpp"
#include "fns/grid.hpp"

namespace fns {

/** Seeded splitmix64 generator with Box-Muller gaussians. Self-contained so
 *  experiment outputs are reproducible across standard-library versions. */
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /** Uniform in [0,1). */
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/** Gaussian coefficients on the lowest quarter of the sine modes; high
 *  frequencies would make discrete derivative integrals quadrature noise. */
inline ComplexField random_low_mode_field(const Grid& g, SplitMix64& rng,
                                          bool unit_norm = true) {
  int kmax = std::max(1, g.N / 4);
  ComplexField f(g.N, complex(0.0, 0.0));
  for (int k = 1; k <= kmax; ++k) {
    complex coeff(rng.gauss(), rng.gauss());
    for (int i = 0; i < g.N; ++i) f[i] += coeff * std::sin(k * M_PI * g.x(i) / g.L);
  }
  if (unit_norm) {
    double n = l2_norm(g, f);
    if (n > 0.0)
      for (auto& z : f) z /= n;
  }
  return f;
}

/** Low-mode spatial profile with a smooth oscillatory time envelope. */
inline HalfStepField random_low_mode_half_field(const Grid& g, SplitMix64& rng,
                                                double amplitude) {
  ComplexField shape = random_low_mode_field(g, rng, true);
  double omega = rng.uniform() * 6.0 / g.T;
  double phase = rng.uniform() * 2.0 * M_PI;
  HalfStepField f(g.M);
  for (int n = 0; n < g.M; ++n) {
    double env = amplitude * std::cos(omega * g.t_half(n) + phase);
    f[n].resize(g.N);
    for (int i = 0; i < g.N; ++i) f[n][i] = env * shape[i];
  }
  return f;
}

}  // namespace fns

#endif
