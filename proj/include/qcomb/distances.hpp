#pragma once

#include <cmath>
#include <vector>

#include "qcomb/discrimination.hpp"
#include "qcomb/unitary.hpp"

namespace qcomb {

struct DistanceOptions {
  int restarts = 20;
  int max_iterations = 2000;
  std::uint64_t seed = 1;
  /// Interior shrink toward the uniform normalization in the memory
  /// distance ascent (costs at most 2·shrink in value).
  double shrink = 1e-7;
};

struct DistanceEstimate {
  double value = 0;           // lower bound on the maximum
  LabeledOperator achiever;   // ρ or Ξ^(N)
  int iterations = 0;
  int restarts = 0;
};

namespace detail {

// ‖(I ⊗ S†) Δ (I ⊗ S)‖₁ with S acting on a subset of the spaces of Δ.
class SandwichNorm {
 public:
  SandwichNorm(const LabeledOperator& c0, const LabeledOperator& c1, const std::vector<Label>& inner) {
    std::vector<Label> order;
    for (auto l : c0.labels())
      if (std::find(inner.begin(), inner.end(), l) == inner.end()) order.push_back(l);
    e_ = c0.dim(order);
    order.insert(order.end(), inner.begin(), inner.end());
    w_ = c0.dim(inner);
    labels_ = inner;
    for (auto l : inner) dims_.push_back(c0.dim(l));
    delta_ = (c0.permuted(order).matrix() - aligned_to(c1, c0).permuted(order).matrix()).hermitian_part();
  }

  std::size_t side() const { return w_; }
  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  bool zero() const { return delta_.max_abs() == 0.0; }

  // B = Δ (I ⊗ S)
  ComplexMatrix right(const ComplexMatrix& s) const { return apply_right(delta_, s); }
  // (I ⊗ S†) B
  ComplexMatrix left_adjoint(const ComplexMatrix& s, const ComplexMatrix& b) const {
    return apply_right(b.adjoint(), s).adjoint();
  }
  // Tr_outer[A]
  ComplexMatrix inner_trace(const ComplexMatrix& a) const {
    ComplexMatrix t(w_, w_);
    for (std::size_t x = 0; x < e_; ++x)
      for (std::size_t i = 0; i < w_; ++i)
        for (std::size_t j = 0; j < w_; ++j) t(i, j) += a(x * w_ + i, x * w_ + j);
    return t;
  }

  /// Objective at a normalized operator X (state or Ξ): ‖(I⊗X½)Δ(I⊗X½)‖₁.
  double at(const ComplexMatrix& x) const {
    const ComplexMatrix r = psd_sqrt(x.hermitian_part());
    return trace_norm(left_adjoint(r, right(r)).hermitian_part());
  }

 private:
  // M (I ⊗ S)
  ComplexMatrix apply_right(const ComplexMatrix& m, const ComplexMatrix& s) const {
    const std::size_t n = m.rows();
    ComplexMatrix out(n, e_ * w_);
    for (std::size_t row = 0; row < n; ++row)
      for (std::size_t x = 0; x < e_; ++x) {
        const cplx* src = &m(row, x * w_);
        cplx* dst = &out(row, x * w_);
        for (std::size_t k = 0; k < w_; ++k) {
          const cplx v = src[k];
          if (v == cplx(0.0)) continue;
          const cplx* sk = &s(k, 0);
          for (std::size_t j = 0; j < w_; ++j) dst[j] += v * sk[j];
        }
      }
    return out;
  }

  ComplexMatrix delta_;
  std::size_t e_ = 1, w_ = 1;
  std::vector<Label> labels_;
  std::vector<std::size_t> dims_;
};

inline ComplexMatrix sign_of(const EigenSystem& es) {
  return spectral_function(es, [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

inline double inner_re(const ComplexMatrix& a, const ComplexMatrix& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += (std::conj(a(i, j)) * b(i, j)).real();
  return s;
}

inline double abs_sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += std::abs(x);
  return s;
}

}  // namespace detail

/// Lower bound on max_ρ ‖(I ⊗ ρ^½) Δ (I ⊗ ρ^½)‖₁ over states ρ on the input
/// spaces, by ascent on ρ = S S†/‖S‖² with restarts.
inline DistanceEstimate cb_distance(const MemoryChannel& c0, const MemoryChannel& c1, const DistanceOptions& opt = {}) {
  if (c0.dims() != c1.dims()) throw ShapeError("cb_distance: the two operators act on different spaces");
  const detail::SandwichNorm obj(c0.choi(), c1.choi(), detail::even_labels(c0.dims().size()));
  const std::size_t w = obj.side();
  Rng rng(opt.seed);
  DistanceEstimate best;
  best.value = -1;
  ComplexMatrix best_s;
  auto eval = [&](const ComplexMatrix& s, EigenSystem& es) {
    es = eigh(obj.left_adjoint(s, obj.right(s)).hermitian_part());
    const double n2 = s.frobenius_norm() * s.frobenius_norm();
    return detail::abs_sum(es.values) / n2;
  };
  for (int k = 0; k < std::max(1, opt.restarts); ++k) {
    ComplexMatrix s = ginibre(w, w, rng);
    s *= 1.0 / s.frobenius_norm();
    EigenSystem es;
    double v = eval(s, es);
    double t = 1.0;
    int stalls = 0, it = 0;
    for (; it < opt.max_iterations && !obj.zero(); ++it) {
      // Gradient of ‖Y‖₁/‖S‖² with Y = (I⊗S†)Δ(I⊗S), ‖S‖ = 1.
      const ComplexMatrix g =
          (obj.inner_trace(obj.right(s) * detail::sign_of(es)) * 2.0 - s * (2.0 * v));
      const double gg = g.frobenius_norm() * g.frobenius_norm();
      bool ok = false;
      ComplexMatrix s2;
      EigenSystem es2;
      double v2 = v;
      while (t > 1e-14) {
        s2 = s + g * t;
        s2 *= 1.0 / s2.frobenius_norm();
        v2 = eval(s2, es2);
        // Sufficient increase; plain increase lets t settle at the stability
        // edge and the iterate bounces across the ridge.
        if (v2 > v && v2 - v >= 0.5 * t * gg) {
          ok = true;
          break;
        }
        t *= 0.5;
      }
      if (!ok) break;
      stalls = (v2 - v) <= 1e-13 * v ? stalls + 1 : 0;
      s = std::move(s2);
      es = std::move(es2);
      v = v2;
      t *= 2.0;
      if (stalls >= 10) break;
    }
    best.iterations += it;
    best.restarts = k + 1;
    if (v > best.value) {
      best.value = v;
      best_s = s;
    }
  }
  ComplexMatrix rho = best_s * best_s.adjoint();
  rho *= 1.0 / rho.trace().real();
  best.achiever = LabeledOperator(rho.hermitian_part(), obj.labels(), obj.dims());
  best.value = std::min(2.0, obj.at(best.achiever.matrix()));
  return best;
}

inline DistanceEstimate cb_distance(const LabeledOperator& c0, const LabeledOperator& c1, const DistanceOptions& opt = {}) {
  return cb_distance(MemoryChannel(c0), MemoryChannel(c1), opt);
}

/// Objective of the memory distance at a given normalization Ξ^(N).
inline double memory_objective(const MemoryChannel& c0, const MemoryChannel& c1, const LabeledOperator& xi) {
  const auto labels = detail::labels_upto(c0.dims().size() - 1);
  const detail::SandwichNorm obj(c0.choi(), c1.choi(), labels);
  return obj.at(aligned_to(xi, LabeledOperator::identity(labels, obj.dims())).matrix());
}

/// Lower bound on max_Ξ ‖(I ⊗ Ξ^½) Δ (I ⊗ Ξ^½)‖₁ over admissible
/// normalizations, by projected ascent kept slightly inside the set.
inline DistanceEstimate memory_distance(const MemoryChannel& c0, const MemoryChannel& c1,
                                        const DistanceOptions& opt = {}) {
  if (c0.dims() != c1.dims()) throw ShapeError("memory_distance: the two combs act on different spaces");
  const auto labels = detail::labels_upto(c0.dims().size() - 1);
  const NormalizationSet set(std::vector<std::size_t>(c0.dims().begin(), c0.dims().end() - 1));
  const detail::SandwichNorm obj(c0.choi(), c1.choi(), labels);
  const std::size_t w = obj.side();
  const ComplexMatrix centre = set.uniform();
  auto inside = [&](ComplexMatrix x) {
    x *= (1.0 - opt.shrink);
    x.add_scaled(centre, opt.shrink);
    return x;
  };
  // Value and ascent direction at X (gradient in the eigenbasis of X).
  auto value_grad = [&](const ComplexMatrix& x, ComplexMatrix* grad) {
    const EigenSystem ex = eigh(x.hermitian_part());
    std::vector<double> sq(w);
    for (std::size_t k = 0; k < w; ++k) sq[k] = std::sqrt(std::max(0.0, ex.values[k]));
    const ComplexMatrix r = spectral_function(ex, [](double v) { return v > 0 ? std::sqrt(v) : 0.0; });
    const ComplexMatrix b = obj.right(r);
    const EigenSystem ey = eigh(obj.left_adjoint(r, b).hermitian_part());
    const double v = detail::abs_sum(ey.values);
    if (grad) {
      const ComplexMatrix gr = obj.inner_trace(b * detail::sign_of(ey));
      const ComplexMatrix h = ex.vectors.adjoint() * (gr + gr.adjoint()) * ex.vectors;
      ComplexMatrix g(w, w);
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t j = 0; j < w; ++j) {
          const double den = sq[i] + sq[j];
          g(i, j) = den > 1e-300 ? h(i, j) / den : 0.0;
        }
      *grad = ex.vectors * g * ex.vectors.adjoint();
    }
    return v;
  };
  Rng rng(opt.seed);
  DistanceEstimate best;
  best.value = -1;
  ComplexMatrix best_x;
  for (int k = 0; k < std::max(1, opt.restarts); ++k) {
    const ComplexMatrix g0 = ginibre(w, w, rng);
    ComplexMatrix x = inside(set.project(g0 * g0.adjoint()));
    ComplexMatrix g;
    double v = value_grad(x, &g);
    double t = 1.0 / std::max(1e-300, g.frobenius_norm());
    int stalls = 0, it = 0;
    for (; it < opt.max_iterations && !obj.zero(); ++it) {
      bool ok = false;
      ComplexMatrix x2;
      double v2 = v;
      while (t * g.frobenius_norm() > 1e-14) {
        x2 = inside(set.project(x + g * t));
        v2 = value_grad(x2, nullptr);
        if (v2 > v && v2 - v >= 0.5 * detail::inner_re(g, x2 - x)) {
          ok = true;
          break;
        }
        t *= 0.5;
      }
      if (!ok) break;
      stalls = (v2 - v) <= 1e-13 * v ? stalls + 1 : 0;
      x = std::move(x2);
      v = value_grad(x, &g);
      t *= 2.0;
      if (stalls >= 10) break;
    }
    best.iterations += it;
    best.restarts = k + 1;
    if (v > best.value) {
      best.value = v;
      best_x = x;
    }
  }
  best.achiever = set.wrap(best_x);
  best.value = std::min(2.0, obj.at(best_x));
  return best;
}

/// 2√(1 − ν²) where ν is the distance from the origin to the convex hull of
/// the spectrum of u†v.
inline double unitary_cb_oracle(const ComplexMatrix& u, const ComplexMatrix& v) {
  if (!is_unitary(u) || !is_unitary(v)) throw DomainError("unitary_cb_oracle: input is not unitary");
  if (u.rows() != v.rows()) throw ShapeError("unitary_cb_oracle: dimension mismatch");
  const double theta = angular_spread(u.adjoint() * v);
  if (theta >= std::numbers::pi) return 2.0;
  const double nu = std::cos(theta / 2.0);
  return 2.0 * std::sqrt(std::max(0.0, 1.0 - nu * nu));
}

}  // namespace qcomb
