#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "qcomb/matrix.hpp"

namespace qcomb {

struct EigenSystem {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // columns are eigenvectors
};

namespace detail {

// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
// form. On return `diag`/`off` hold the tridiagonal (off[k] couples k and
// k+1, nonnegative). If `basis` is non-null it receives the unitary B with
// h = B T Bᵀ-style relation h = B T B†.
inline void hermitian_tridiagonalize(ComplexMatrix a, std::vector<double>& diag, std::vector<double>& off,
                                     ComplexMatrix* basis) {
  const std::size_t n = a.rows();
  std::vector<std::vector<cplx>> reflectors;
  std::vector<double> taus;
  std::vector<cplx> v, p;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    double xnorm2 = 0;
    for (std::size_t i = 0; i < m; ++i) xnorm2 += std::norm(a(k + 1 + i, k));
    const double xnorm = std::sqrt(xnorm2);
    double tail2 = xnorm2 - std::norm(a(k + 1, k));
    if (xnorm == 0.0 || tail2 <= 1e-300 * std::max(1.0, xnorm2)) {
      reflectors.emplace_back();
      taus.push_back(0.0);
      continue;
    }
    const cplx x0 = a(k + 1, k);
    const cplx phase = std::abs(x0) > 0 ? x0 / std::abs(x0) : cplx(1.0);
    const cplx alpha = -phase * xnorm;
    v.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) v[i] = a(k + 1 + i, k);
    v[0] -= alpha;
    double vnorm2 = 0;
    for (const auto& z : v) vnorm2 += std::norm(z);
    const double tau = 2.0 / vnorm2;

    // Trailing block update: B <- H B H with H = I - tau v v†.
    p.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      cplx s = 0;
      const cplx* ai = &a(k + 1 + i, k + 1);
      for (std::size_t j = 0; j < m; ++j) s += ai[j] * v[j];
      p[i] = tau * s;
    }
    cplx vp = 0;
    for (std::size_t i = 0; i < m; ++i) vp += std::conj(v[i]) * p[i];
    const double kk = 0.5 * tau * vp.real();
    for (std::size_t i = 0; i < m; ++i) p[i] -= kk * v[i];  // p is now w
    for (std::size_t i = 0; i < m; ++i) {
      cplx* ai = &a(k + 1 + i, k + 1);
      const cplx vi = v[i], wi = p[i];
      for (std::size_t j = 0; j < m; ++j) ai[j] -= vi * std::conj(p[j]) + wi * std::conj(v[j]);
    }
    a(k + 1, k) = alpha;
    a(k, k + 1) = std::conj(alpha);
    for (std::size_t i = 1; i < m; ++i) {
      a(k + 1 + i, k) = 0;
      a(k, k + 1 + i) = 0;
    }
    reflectors.push_back(v);
    taus.push_back(tau);
  }

  diag.assign(n, 0.0);
  off.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i).real();
  // Phases that make the subdiagonal real and nonnegative.
  std::vector<cplx> delta(n, 1.0);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const cplx e = a(k + 1, k);
    off[k] = std::abs(e);
    delta[k + 1] = off[k] > 0 ? delta[k] * e / off[k] : delta[k];
  }

  if (basis) {
    ComplexMatrix q = ComplexMatrix::identity(n);
    for (std::size_t kk = reflectors.size(); kk-- > 0;) {
      if (taus[kk] == 0.0) continue;
      const auto& w = reflectors[kk];
      const std::size_t m = w.size(), s = kk + 1;
      // q[s:, :] -= tau w (w† q[s:, :])
      std::vector<cplx> row(n, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        const cplx wi = std::conj(w[i]);
        const cplx* qi = &q(s + i, 0);
        for (std::size_t j = 0; j < n; ++j) row[j] += wi * qi[j];
      }
      for (std::size_t i = 0; i < m; ++i) {
        const cplx f = taus[kk] * w[i];
        cplx* qi = &q(s + i, 0);
        for (std::size_t j = 0; j < n; ++j) qi[j] -= f * row[j];
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) q(i, j) *= delta[j];
    *basis = std::move(q);
  }
}

// Implicit QL on a symmetric tridiagonal matrix (diag d, off-diagonal e with
// e[k] coupling k and k+1). Eigenvectors are accumulated into the columns of
// the row-major n×n array z when provided.
inline void tridiagonal_ql(std::vector<double>& d, std::vector<double> e, std::vector<double>* z) {
  const std::size_t n = d.size();
  if (n == 0) return;
  e.resize(n);
  e[n - 1] = 0.0;
  double f = 0.0, tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 200) throw NumericalError("tridiagonal QL iteration did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;
        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0, s = 0.0, s2 = 0.0;
        const double el1 = e[l + 1];
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);
          if (z) {
            double* zz = z->data();
            for (std::size_t k = 0; k < n; ++k) {
              h = zz[k * n + ii + 1];
              zz[k * n + ii + 1] = s * zz[k * n + ii] + c * h;
              zz[k * n + ii] = c * zz[k * n + ii] - s * h;
            }
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

inline void require_hermitian(const ComplexMatrix& h, const char* who) {
  if (!h.is_square()) throw ShapeError(std::string(who) + ": matrix is not square");
  if (!is_hermitian(h, 1e-10)) throw DomainError(std::string(who) + ": matrix is not Hermitian");
  if (!h.all_finite()) throw DomainError(std::string(who) + ": non-finite entries");
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix: h = V diag(values) V†,
/// eigenvalues ascending.
inline EigenSystem eigh(const ComplexMatrix& h) {
  detail::require_hermitian(h, "eigh");
  const std::size_t n = h.rows();
  std::vector<double> d, e;
  ComplexMatrix q;
  detail::hermitian_tridiagonalize(h.hermitian_part(), d, e, &q);
  std::vector<double> z(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;
  detail::tridiagonal_ql(d, e, &z);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });

  EigenSystem out;
  out.values.resize(n);
  out.vectors = ComplexMatrix(n, n);
  // vectors = q * z (z real), columns permuted by order.
  for (std::size_t i = 0; i < n; ++i) {
    const cplx* qi = &q(i, 0);
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t src = order[c];
      cplx s = 0;
      for (std::size_t k = 0; k < n; ++k) s += qi[k] * z[k * n + src];
      out.vectors(i, c) = s;
    }
  }
  for (std::size_t c = 0; c < n; ++c) out.values[c] = d[order[c]];
  return out;
}

/// Eigenvalues only, ascending.
inline std::vector<double> eigvalsh(const ComplexMatrix& h) {
  detail::require_hermitian(h, "eigvalsh");
  std::vector<double> d, e;
  detail::hermitian_tridiagonalize(h.hermitian_part(), d, e, nullptr);
  detail::tridiagonal_ql(d, e, nullptr);
  std::sort(d.begin(), d.end());
  return d;
}

/// V f(Λ) V† for a real function of the spectrum.
template <class F>
ComplexMatrix spectral_function(const EigenSystem& es, F&& f) {
  const std::size_t n = es.values.size();
  ComplexMatrix r(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double fk = f(es.values[k]);
    if (fk == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx vik = es.vectors(i, k) * fk;
      for (std::size_t j = 0; j < n; ++j) r(i, j) += vik * std::conj(es.vectors(j, k));
    }
  }
  return r;
}

/// Sum of singular values.
inline double trace_norm(const ComplexMatrix& x) {
  if (!x.is_square()) throw ShapeError("trace_norm: matrix is not square");
  if (x.frobenius_norm() == 0.0) return 0.0;
  if (is_hermitian(x, 1e-12)) {
    double s = 0;
    for (double v : eigvalsh(x)) s += std::abs(v);
    return s;
  }
  // Hermitian dilation [[0, X], [X†, 0]] has spectrum ±σ_k.
  const std::size_t n = x.rows();
  ComplexMatrix dil(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      dil(i, n + j) = x(i, j);
      dil(n + j, i) = std::conj(x(i, j));
    }
  double s = 0;
  for (double v : eigvalsh(dil)) s += std::abs(v);
  return 0.5 * s;
}

namespace detail {
inline constexpr double kPsdClip = 1e-10;
inline constexpr double kPsdReject = 1e-8;
inline constexpr double kSupportCut = 1e-12;

inline void check_psd_spectrum(const EigenSystem& es, const char* who) {
  double scale = 1.0;
  for (double v : es.values) scale = std::max(scale, std::abs(v));
  if (!es.values.empty() && es.values.front() < -kPsdReject * scale)
    throw DomainError(std::string(who) + ": operator has a significantly negative eigenvalue");
}
}  // namespace detail

/// Principal square root of a positive semidefinite matrix (small negative
/// eigenvalues are clipped to zero).
inline ComplexMatrix psd_sqrt(const ComplexMatrix& h) {
  const EigenSystem es = eigh(h);
  detail::check_psd_spectrum(es, "psd_sqrt");
  return spectral_function(es, [](double v) { return v > 0 ? std::sqrt(v) : 0.0; });
}

/// Inverse square root on the support; zero on the kernel.
inline ComplexMatrix psd_inv_sqrt(const ComplexMatrix& h) {
  const EigenSystem es = eigh(h);
  detail::check_psd_spectrum(es, "psd_inv_sqrt");
  double top = 0;
  for (double v : es.values) top = std::max(top, v);
  const double cut = detail::kSupportCut * std::max(1.0, top);
  return spectral_function(es, [cut](double v) { return v > cut ? 1.0 / std::sqrt(v) : 0.0; });
}

/// Projector onto the eigenspace with eigenvalues strictly above `cut`.
inline ComplexMatrix positive_projector(const ComplexMatrix& h, double cut = 0.0) {
  return spectral_function(eigh(h), [cut](double v) { return v > cut ? 1.0 : 0.0; });
}

/// Smallest eigenvalue of a Hermitian matrix.
inline double min_eigenvalue(const ComplexMatrix& h) { return eigvalsh(h).front(); }

/// Pivoted Cholesky factor of a PSD matrix: h ≈ M M† with M of size n × r,
/// stopping when the largest residual diagonal drops below rel_tol·max diag.
inline ComplexMatrix low_rank_factor(const ComplexMatrix& h, double rel_tol = 1e-13) {
  if (!h.is_square()) throw ShapeError("low_rank_factor: matrix is not square");
  const std::size_t n = h.rows();
  std::vector<double> resid(n);
  double top = 0;
  for (std::size_t i = 0; i < n; ++i) {
    resid[i] = h(i, i).real();
    top = std::max(top, resid[i]);
  }
  std::vector<std::vector<cplx>> cols;
  const double stop = rel_tol * std::max(top, 1e-300);
  while (cols.size() < n) {
    const std::size_t j = std::size_t(std::max_element(resid.begin(), resid.end()) - resid.begin());
    if (resid[j] <= stop) break;
    const double piv = std::sqrt(resid[j]);
    std::vector<cplx> c(n);
    for (std::size_t i = 0; i < n; ++i) {
      cplx s = h(i, j);
      for (const auto& prev : cols) s -= prev[i] * std::conj(prev[j]);
      c[i] = s / piv;
    }
    for (std::size_t i = 0; i < n; ++i) resid[i] -= std::norm(c[i]);
    resid[j] = 0.0;
    cols.push_back(std::move(c));
  }
  ComplexMatrix m(n, cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k)
    for (std::size_t i = 0; i < n; ++i) m(i, k) = cols[k][i];
  return m;
}

/// Upper-triangular R with g = R† R for a Hermitian positive definite g.
inline ComplexMatrix cholesky_upper(const ComplexMatrix& g) {
  const std::size_t n = g.rows();
  ComplexMatrix r(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = g(j, j).real();
    for (std::size_t k = 0; k < j; ++k) s -= std::norm(r(k, j));
    if (s <= 0) throw NumericalError("cholesky_upper: matrix is not positive definite");
    r(j, j) = std::sqrt(s);
    for (std::size_t i = j + 1; i < n; ++i) {
      cplx t = g(j, i);
      for (std::size_t k = 0; k < j; ++k) t -= std::conj(r(k, j)) * r(k, i);
      r(j, i) = t / r(j, j);
    }
  }
  return r;
}

struct UnitaryEigen {
  std::vector<double> phases;  // in [0, 2π), matching the columns of vectors
  ComplexMatrix vectors;
};

/// Eigendecomposition of a unitary (or any normal) matrix through a generic
/// Hermitian combination of its real and imaginary parts.
inline UnitaryEigen eig_unitary(const ComplexMatrix& u, double tol = 1e-9) {
  if (!is_unitary(u, 1e-10)) throw DomainError("eig_unitary: matrix is not unitary");
  const std::size_t n = u.rows();
  const ComplexMatrix ua = u.adjoint();
  constexpr std::array<double, 5> mix{0.6180339887498949, -1.3247179572447460, 2.2360679774997896,
                                      -0.4142135623730950, 3.1415926535897931};
  UnitaryEigen best;
  double best_res = std::numeric_limits<double>::infinity();
  for (double c : mix) {
    ComplexMatrix h(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const cplx re = 0.5 * (u(i, j) + ua(i, j));
        const cplx im = (u(i, j) - ua(i, j)) / cplx(0.0, 2.0);
        h(i, j) = re + c * im;
      }
    const EigenSystem es = eigh(h.hermitian_part());
    const ComplexMatrix d = es.vectors.adjoint() * u * es.vectors;
    double off = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) off += std::norm(d(i, j));
    off = std::sqrt(off);
    if (off < best_res) {
      best_res = off;
      best.vectors = es.vectors;
      best.phases.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        double ph = std::arg(d(i, i));
        if (ph < 0) ph += 2 * M_PI;
        if (ph >= 2 * M_PI) ph -= 2 * M_PI;
        best.phases[i] = ph;
      }
    }
    if (off <= tol) break;
  }
  if (best_res > 1e3 * tol) throw NumericalError("eig_unitary: could not diagonalize");
  return best;
}

}  // namespace qcomb
