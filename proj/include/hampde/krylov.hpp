#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace hampde {

using RealVector = std::vector<double>;
using LinearOperator = std::function<void(const RealVector&, RealVector&)>;

inline double norm2(const RealVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot(const RealVector& a, const RealVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct GmresResult {
  RealVector x;
  int iterations = 0;
  double relative_residual = 1.0;
  bool converged = false;
};

/// Restarted GMRES for A x = b with modified Gram–Schmidt Arnoldi and Givens
/// rotations. Starts from x = 0.
inline GmresResult gmres(const LinearOperator& A, const RealVector& b, double tol, int max_iter,
                         int restart = 50) {
  const std::size_t n = b.size();
  GmresResult out;
  out.x.assign(n, 0.0);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    out.relative_residual = 0.0;
    out.converged = true;
    return out;
  }
  RealVector r = b, w(n);
  while (out.iterations < max_iter) {
    const double beta = norm2(r);
    out.relative_residual = beta / bnorm;
    if (out.relative_residual <= tol) {
      out.converged = true;
      return out;
    }
    const int m = std::min(restart, max_iter - out.iterations);
    std::vector<RealVector> V(static_cast<std::size_t>(m + 1), RealVector(n));
    std::vector<std::vector<double>> H(static_cast<std::size_t>(m + 1), std::vector<double>(static_cast<std::size_t>(m), 0.0));
    std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m)), g(static_cast<std::size_t>(m + 1), 0.0);
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    g[0] = beta;
    int k = 0;
    for (; k < m; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      A(V[ku], w);
      for (int j = 0; j <= k; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        H[ju][ku] = dot(w, V[ju]);
        for (std::size_t i = 0; i < n; ++i) w[i] -= H[ju][ku] * V[ju][i];
      }
      H[ku + 1][ku] = norm2(w);
      if (H[ku + 1][ku] > 0.0) {
        for (std::size_t i = 0; i < n; ++i) V[ku + 1][i] = w[i] / H[ku + 1][ku];
      }
      for (int j = 0; j < k; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const double t = cs[ju] * H[ju][ku] + sn[ju] * H[ju + 1][ku];
        H[ju + 1][ku] = -sn[ju] * H[ju][ku] + cs[ju] * H[ju + 1][ku];
        H[ju][ku] = t;
      }
      const double denom = std::hypot(H[ku][ku], H[ku + 1][ku]);
      cs[ku] = denom == 0.0 ? 1.0 : H[ku][ku] / denom;
      sn[ku] = denom == 0.0 ? 0.0 : H[ku + 1][ku] / denom;
      H[ku][ku] = denom;
      H[ku + 1][ku] = 0.0;
      g[ku + 1] = -sn[ku] * g[ku];
      g[ku] = cs[ku] * g[ku];
      ++out.iterations;
      out.relative_residual = std::abs(g[ku + 1]) / bnorm;
      if (out.relative_residual <= tol || H[ku][ku] == 0.0) {
        ++k;
        break;
      }
    }
    // back substitution on the k×k triangle
    std::vector<double> y(static_cast<std::size_t>(k), 0.0);
    for (int i = k - 1; i >= 0; --i) {
      const auto iu = static_cast<std::size_t>(i);
      double s = g[iu];
      for (int j = i + 1; j < k; ++j) s -= H[iu][static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(j)];
      y[iu] = H[iu][iu] == 0.0 ? 0.0 : s / H[iu][iu];
    }
    for (int j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < n; ++i) out.x[i] += y[static_cast<std::size_t>(j)] * V[static_cast<std::size_t>(j)][i];
    }
    A(out.x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    out.relative_residual = norm2(r) / bnorm;
    if (out.relative_residual <= tol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace hampde
