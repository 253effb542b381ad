#ifndef FNS_EIG_HPP
#define FNS_EIG_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fns/common.hpp"

namespace fns {

/** Eigendecomposition A = V diag(values) V^T of a real symmetric matrix.
 *  vectors is column-major: vectors[k*n + i] is component i of eigenvector k. */
struct SymmetricEigen {
  int n = 0;
  std::vector<double> values;
  std::vector<double> vectors;
};

/** Cyclic Jacobi eigensolver. Intended for the modest dense matrices this
 *  project meets (a few hundred rows); deterministic sweep order. */
inline SymmetricEigen jacobi_eigendecompose(std::vector<double> a, int n) {
  SymmetricEigen res;
  res.n = n;
  res.vectors.assign(static_cast<size_t>(n) * n, 0.0);
  std::vector<double>& v = res.vectors;
  for (int k = 0; k < n; ++k) v[static_cast<size_t>(k) * n + k] = 1.0;

  auto A = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };

  double fro = 0.0;
  for (double x : a) fro += x * x;
  fro = std::sqrt(fro);
  const double tol = 1e-15 * fro;

  const int max_sweeps = 100;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += 2.0 * A(p, q) * A(p, q);
    if (std::sqrt(off) <= tol) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = A(p, q);
        if (std::fabs(apq) <= 1e-300) continue;
        double tau = (A(q, q) - A(p, p)) / (2.0 * apq);
        double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;

        double app = A(p, p), aqq = A(q, q);
        A(p, p) = app - t * apq;
        A(q, q) = aqq + t * apq;
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(p, k) = A(k, p);
          A(k, q) = s * akp + c * akq;
          A(q, k) = A(k, q);
        }
        // accumulate rotation into the eigenvector columns p and q
        double* vp = &v[static_cast<size_t>(p) * n];
        double* vq = &v[static_cast<size_t>(q) * n];
        for (int k = 0; k < n; ++k) {
          double xp = vp[k], xq = vq[k];
          vp[k] = c * xp - s * xq;
          vq[k] = s * xp + c * xq;
        }
      }
    }
  }
  if (sweep == max_sweeps) throw numerical_error("jacobi: did not converge");

  res.values.resize(n);
  for (int k = 0; k < n; ++k) res.values[k] = A(k, k);

  // sort ascending, carrying the columns along
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return res.values[i] < res.values[j]; });
  std::vector<double> sv(n);
  std::vector<double> svec(res.vectors.size());
  for (int k = 0; k < n; ++k) {
    sv[k] = res.values[order[k]];
    std::copy_n(&res.vectors[static_cast<size_t>(order[k]) * n], n,
                &svec[static_cast<size_t>(k) * n]);
  }
  res.values = std::move(sv);
  res.vectors = std::move(svec);
  return res;
}

}  // namespace fns

#endif
