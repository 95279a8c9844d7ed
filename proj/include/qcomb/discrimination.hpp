#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qcomb/random.hpp"
#include "qcomb/testers.hpp"

namespace qcomb {

enum class Verdict { feasible, infeasible, undetermined };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::feasible: return "feasible";
    case Verdict::infeasible: return "infeasible";
    default: return "undetermined";
  }
}

struct SolverOptions {
  int restarts = 20;
  int max_iterations = 3000;
  std::uint64_t seed = 1;
  double feasible_tol = 1e-8;
  double infeasible_tol = 1e-4;
};

struct FeasibilityReport {
  Verdict verdict = Verdict::undetermined;
  LabeledOperator witness;
  double residual = 0;
  int iterations = 0;          // summed over restarts
  int restarts = 0;            // restarts actually run
  std::vector<double> history;  // objective per accepted iterate, best restart
  bool feasible() const { return verdict == Verdict::feasible; }
};

/// g(X) = ‖C₀ (I ⊗ X) C₁‖_F² for X acting on a subset of the spaces, with
/// C_j = M_j M_j† kept in factored form.
class BilinearObjective {
 public:
  /// The dense quadratic form is precomputed when the witness side is at
  /// most dense_max_side.
  BilinearObjective(const LabeledOperator& c0, const LabeledOperator& c1, const std::vector<Label>& witness_labels,
                    std::size_t dense_max_side = kDenseFormMaxSide) {
    for (auto l : witness_labels)
      if (!c0.has(l)) throw ShapeError("objective: witness label " + std::to_string(l) + " not present");
    std::vector<Label> order;
    for (auto l : c0.labels())
      if (std::find(witness_labels.begin(), witness_labels.end(), l) == witness_labels.end()) order.push_back(l);
    rest_ = c0.dim(order);
    order.insert(order.end(), witness_labels.begin(), witness_labels.end());
    w_ = c0.dim(witness_labels);
    wlabels_ = witness_labels;
    for (auto l : witness_labels) wdims_.push_back(c0.dim(l));
    const LabeledOperator a = c0.permuted(order);
    const LabeledOperator b = aligned_to(c1, c0).permuted(order);
    m0_ = low_rank_factor(a.matrix().hermitian_part(), 1e-13);
    m1_ = low_rank_factor(b.matrix().hermitian_part(), 1e-13);
    g0_ = m0_.adjoint() * m0_;
    g1_ = m1_.adjoint() * m1_;
    if (w_ <= dense_max_side) build_form();
  }

  std::size_t witness_side() const { return w_; }
  const std::vector<Label>& witness_labels() const { return wlabels_; }
  const std::vector<std::size_t>& witness_dims() const { return wdims_; }

  double value(const ComplexMatrix& x) const {
    if (!q_.data().empty()) {
      ComplexMatrix t;
      return form(x, t);
    }
    const ComplexMatrix y = core(x);
    return std::max(0.0, trace_of_product(y.adjoint() * g0_, y * g1_).real());
  }

  /// Value and Hermitian gradient.
  double value_grad(const ComplexMatrix& x, ComplexMatrix& grad) const {
    if (!q_.data().empty()) {
      ComplexMatrix t;
      const double v = form(x, t);
      grad = t + t.adjoint();
      return v;
    }
    const ComplexMatrix y = core(x);
    const ComplexMatrix inner = g0_ * y * g1_;
    const double v = std::max(0.0, trace_of_product(y.adjoint(), inner).real());
    // T = Tr_rest[M₀ (G₀ Y G₁) M₁†]
    const ComplexMatrix l = m0_ * inner;
    const std::size_t r1 = m1_.cols();
    ComplexMatrix t(w_, w_);
    for (std::size_t a = 0; a < rest_; ++a)
      for (std::size_t i = 0; i < w_; ++i) {
        const cplx* li = &l(a * w_ + i, 0);
        for (std::size_t j = 0; j < w_; ++j) {
          const cplx* mj = &m1_(a * w_ + j, 0);
          cplx s = 0;
          for (std::size_t k = 0; k < r1; ++k) s += li[k] * std::conj(mj[k]);
          t(i, j) += s;
        }
      }
    grad = t + t.adjoint();
    return v;
  }

  /// Witness side up to which g is stored as an explicit quadratic form.
  static constexpr std::size_t kDenseFormMaxSide = 32;

 private:
  // g(X) = x† Q x with x the row-major vectorization of X and
  // Q[(j,i),(k,l)] = Σ_{a,b} A[(a,j),(b,k)] B[(b,l),(a,i)], A = C₀², B = C₁².
  void build_form() {
    const ComplexMatrix a = m0_ * g0_ * m0_.adjoint();
    const ComplexMatrix b = m1_ * g1_ * m1_.adjoint();
    const std::size_t w = w_, w2 = w_ * w_;
    q_ = ComplexMatrix(w2, w2);
    for (std::size_t ra = 0; ra < rest_; ++ra)
      for (std::size_t rb = 0; rb < rest_; ++rb)
        for (std::size_t j = 0; j < w; ++j)
          for (std::size_t k = 0; k < w; ++k) {
            const cplx av = a(ra * w + j, rb * w + k);
            if (av == cplx(0.0)) continue;
            for (std::size_t i = 0; i < w; ++i) {
              cplx* dst = &q_((j * w + i), k * w);
              for (std::size_t l = 0; l < w; ++l) dst[l] += av * b(rb * w + l, ra * w + i);
            }
          }
  }

  double form(const ComplexMatrix& x, ComplexMatrix& t) const {
    if (x.rows() != w_ || x.cols() != w_) throw ShapeError("objective: witness has the wrong size");
    const std::size_t w2 = w_ * w_;
    t = ComplexMatrix(w_, w_);
    const auto xv = x.data();
    auto tv = t.data();
    cplx v = 0;
    for (std::size_t r = 0; r < w2; ++r) {
      const cplx* qr = &q_(r, 0);
      cplx s = 0;
      for (std::size_t c = 0; c < w2; ++c) s += qr[c] * xv[c];
      tv[r] = s;
      v += std::conj(xv[r]) * s;
    }
    return std::max(0.0, v.real());
  }

  // Y = M₀† (I ⊗ X) M₁
  ComplexMatrix core(const ComplexMatrix& x) const {
    if (x.rows() != w_ || x.cols() != w_) throw ShapeError("objective: witness has the wrong size");
    const std::size_t r1 = m1_.cols();
    ComplexMatrix xm(rest_ * w_, r1);
    for (std::size_t a = 0; a < rest_; ++a)
      for (std::size_t i = 0; i < w_; ++i) {
        cplx* dst = &xm(a * w_ + i, 0);
        for (std::size_t j = 0; j < w_; ++j) {
          const cplx xv = x(i, j);
          if (xv == cplx(0.0)) continue;
          const cplx* src = &m1_(a * w_ + j, 0);
          for (std::size_t k = 0; k < r1; ++k) dst[k] += xv * src[k];
        }
      }
    return m0_.adjoint() * xm;
  }

  ComplexMatrix m0_, m1_, g0_, g1_, q_;
  std::size_t rest_ = 1, w_ = 1;
  std::vector<Label> wlabels_;
  std::vector<std::size_t> wdims_;
};

namespace detail {

struct DescentResult {
  ComplexMatrix x;
  double value = 0;
  int iterations = 0;
  std::vector<double> history;
};

// Projected gradient with backtracking; a step is accepted only when it
// strictly lowers the objective, so the history is monotone.
inline DescentResult projected_descent(const BilinearObjective& obj, ComplexMatrix x,
                                       const std::function<ComplexMatrix(const ComplexMatrix&)>& project,
                                       int max_iter, double stop_below) {
  DescentResult r;
  ComplexMatrix g;
  double v = obj.value_grad(x, g);
  r.history.push_back(v);
  double t = 1.0 / std::max(1e-300, g.frobenius_norm());
  int stalls = 0;
  for (int it = 0; it < max_iter && v > stop_below; ++it) {
    bool ok = false;
    ComplexMatrix x2;
    double v2 = v;
    while (t > 1e-14 / std::max(1e-300, g.frobenius_norm())) {
      x2 = project(x - g * t);
      v2 = obj.value(x2);
      if (v2 < v) {
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
    const double gain = v - v2;
    x = std::move(x2);
    v = obj.value_grad(x, g);
    r.history.push_back(v);
    ++r.iterations;
    t *= 2.0;
    stalls = gain <= 1e-10 * v ? stalls + 1 : 0;
    if (stalls >= 20) break;
  }
  r.x = std::move(x);
  r.value = v;
  return r;
}

inline FeasibilityReport solve_feasibility(const BilinearObjective& obj,
                                           const std::function<ComplexMatrix(const ComplexMatrix&)>& project,
                                           const SolverOptions& opt) {
  Rng rng(opt.seed);
  FeasibilityReport rep;
  const std::size_t w = obj.witness_side();
  std::optional<DescentResult> best;
  for (int k = 0; k < std::max(1, opt.restarts); ++k) {
    const ComplexMatrix g = ginibre(w, w, rng);
    const ComplexMatrix x0 = project(g * g.adjoint() * (1.0 / double(w)));
    DescentResult r = projected_descent(obj, x0, project, opt.max_iterations, 1e-3 * opt.feasible_tol);
    rep.iterations += r.iterations;
    rep.restarts = k + 1;
    if (!best || r.value < best->value) best = std::move(r);
    if (best->value < opt.feasible_tol) break;
  }
  rep.residual = best->value;
  rep.history = best->history;
  rep.witness = LabeledOperator(best->x, obj.witness_labels(), obj.witness_dims());
  if (rep.residual < opt.feasible_tol)
    rep.verdict = Verdict::feasible;
  else if (rep.residual > opt.infeasible_tol)
    rep.verdict = Verdict::infeasible;
  else
    rep.verdict = Verdict::undetermined;
  return rep;
}

inline std::vector<Label> even_labels(std::size_t n_spaces) {
  std::vector<Label> l;
  for (std::size_t k = 0; k < n_spaces; k += 2) l.push_back(Label(k));
  return l;
}

}  // namespace detail

/// Parallel criterion: minimize ‖C₀ (I ⊗ ρ) C₁‖² over states ρ on the input
/// (even) spaces. The witness ρ is the transpose of a state satisfying the
/// Kraus orthogonality conditions.
inline FeasibilityReport parallel_discriminable(const MemoryChannel& c0, const MemoryChannel& c1,
                                                const SolverOptions& opt = {}) {
  if (c0.dims() != c1.dims()) throw ShapeError("parallel_discriminable: the two combs act on different spaces");
  const BilinearObjective obj(c0.choi(), c1.choi(), detail::even_labels(c0.dims().size()));
  return detail::solve_feasibility(obj, [](const ComplexMatrix& x) { return NormalizationSet::project_density(x); },
                                   opt);
}

/// Single-use convenience overload on Choi operators labeled (0, 1).
inline FeasibilityReport parallel_discriminable(const LabeledOperator& c0, const LabeledOperator& c1,
                                                const SolverOptions& opt = {}) {
  return parallel_discriminable(MemoryChannel(c0), MemoryChannel(c1), opt);
}

/// Value of the parallel objective at a given state on the input spaces.
inline double parallel_objective(const MemoryChannel& c0, const MemoryChannel& c1, const LabeledOperator& rho) {
  const BilinearObjective obj(c0.choi(), c1.choi(), detail::even_labels(c0.dims().size()));
  return obj.value(aligned_to(rho, LabeledOperator::identity(obj.witness_labels(), obj.witness_dims())).matrix());
}

/// Causal criterion: minimize ‖C₀ (I ⊗ Ξ) C₁‖² over admissible
/// normalizations Ξ^(N).
inline FeasibilityReport causal_discriminable(const MemoryChannel& c0, const MemoryChannel& c1,
                                              const SolverOptions& opt = {}) {
  if (c0.dims() != c1.dims()) throw ShapeError("causal_discriminable: the two combs act on different spaces");
  const std::size_t n = c0.dims().size();
  const auto labels = detail::labels_upto(n - 1);
  const NormalizationSet set(std::vector<std::size_t>(c0.dims().begin(), c0.dims().end() - 1));
  const BilinearObjective obj(c0.choi(), c1.choi(), labels);
  return detail::solve_feasibility(obj, [&set](const ComplexMatrix& x) { return set.project(x); }, opt);
}

inline double causal_objective(const MemoryChannel& c0, const MemoryChannel& c1, const LabeledOperator& xi) {
  const auto labels = detail::labels_upto(c0.dims().size() - 1);
  const BilinearObjective obj(c0.choi(), c1.choi(), labels);
  return obj.value(aligned_to(xi, LabeledOperator::identity(labels, obj.witness_dims())).matrix());
}

/// Ξ^(N) = ρ ⊗ I on the intermediate output spaces, for a state ρ on the
/// input spaces 0, 2, …, 2N−2.
inline LabeledOperator embed_parallel_witness(const LabeledOperator& rho, const std::vector<std::size_t>& comb_dims) {
  const std::size_t N = comb_dims.size() / 2;
  std::vector<Label> odd;
  std::vector<std::size_t> odd_dims;
  for (std::size_t k = 1; k + 1 < 2 * N; k += 2) {
    odd.push_back(Label(k));
    odd_dims.push_back(comb_dims[k]);
  }
  return tensor(rho, LabeledOperator::identity(odd, odd_dims)).sorted();
}

struct OrthogonalityReport {
  bool orthogonal = false;
  double max_violation = 0;
};

/// Cross-Gram entries Tr[ρ K₀ⱼ† K₁ₖ].
inline OrthogonalityReport kraus_orthogonality(const Channel& ch0, const Channel& ch1, const ComplexMatrix& rho) {
  if (ch0.in_dim() != ch1.in_dim() || ch0.out_dim() != ch1.out_dim())
    throw ShapeError("kraus_orthogonality: channels have different shapes");
  if (rho.rows() != ch0.in_dim() || !rho.is_square()) throw ShapeError("kraus_orthogonality: state has the wrong size");
  OrthogonalityReport r;
  for (const auto& a : ch0.kraus())
    for (const auto& b : ch1.kraus()) r.max_violation = std::max(r.max_violation, std::abs(trace_of_product(rho, a.adjoint() * b)));
  r.orthogonal = r.max_violation <= 1e-9;
  return r;
}

namespace detail {

// Solves the real symmetric positive definite system a x = b.
inline std::vector<double> spd_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double s = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) s -= a[j * n + k] * a[j * n + k];
    if (s <= 0) throw NumericalError("spd_solve: matrix is not positive definite");
    const double l = std::sqrt(s);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double t = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) t -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = t / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return b;
}

// Residuals Re/Im Tr[S† A_m S] and ‖S‖² − 1 for S of size d×r.
struct GramResiduals {
  const std::vector<ComplexMatrix>& ops;
  std::size_t d, r;

  std::vector<double> eval(const ComplexMatrix& s) const {
    std::vector<double> f;
    for (const auto& a : ops) {
      const cplx g = trace_of_product(s.adjoint(), a * s);
      f.push_back(g.real());
      f.push_back(g.imag());
    }
    const double n = s.frobenius_norm();
    f.push_back(n * n - 1.0);
    return f;
  }

  // Columns: Re S_ia then Im S_ia, row-major over (i, a).
  std::vector<double> jacobian(const ComplexMatrix& s) const {
    const std::size_t m = 2 * ops.size() + 1, p = 2 * d * r;
    std::vector<double> jac(m * p, 0.0);
    for (std::size_t k = 0; k < ops.size(); ++k) {
      const ComplexMatrix as = ops[k] * s;
      const ComplexMatrix sa = s.adjoint() * ops[k];
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t a = 0; a < r; ++a) {
          const cplx dre = as(i, a) + sa(a, i);
          const cplx dim = cplx(0, -1) * as(i, a) + cplx(0, 1) * sa(a, i);
          const std::size_t c = i * r + a;
          jac[(2 * k) * p + c] = dre.real();
          jac[(2 * k + 1) * p + c] = dre.imag();
          jac[(2 * k) * p + d * r + c] = dim.real();
          jac[(2 * k + 1) * p + d * r + c] = dim.imag();
        }
    }
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t a = 0; a < r; ++a) {
        jac[(m - 1) * p + i * r + a] = 2 * s(i, a).real();
        jac[(m - 1) * p + d * r + i * r + a] = 2 * s(i, a).imag();
      }
    return jac;
  }
};

inline double sumsq(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s;
}

// Levenberg–Marquardt on the Gram residuals from a starting factor.
inline std::pair<ComplexMatrix, double> lm_polish(const GramResiduals& gr, ComplexMatrix s, int max_iter = 200) {
  const std::size_t p = 2 * gr.d * gr.r;
  std::vector<double> f = gr.eval(s);
  double cost = sumsq(f);
  double lambda = 1e-3;
  const std::size_t m = f.size();
  for (int it = 0; it < max_iter && cost > 1e-30; ++it) {
    const auto jac = gr.jacobian(s);
    std::vector<double> jtj(p * p, 0.0), jtf(p, 0.0);
    for (std::size_t row = 0; row < m; ++row)
      for (std::size_t a = 0; a < p; ++a) {
        const double ja = jac[row * p + a];
        if (ja == 0.0) continue;
        jtf[a] -= ja * f[row];
        for (std::size_t b = 0; b < p; ++b) jtj[a * p + b] += ja * jac[row * p + b];
      }
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      auto a = jtj;
      double dmax = 0;
      for (std::size_t k = 0; k < p; ++k) dmax = std::max(dmax, jtj[k * p + k]);
      for (std::size_t k = 0; k < p; ++k) a[k * p + k] += lambda * std::max(dmax, 1e-12);
      std::vector<double> step;
      try {
        step = spd_solve(a, jtf, p);
      } catch (const NumericalError&) {
        lambda *= 10;
        continue;
      }
      ComplexMatrix s2 = s;
      for (std::size_t i = 0; i < gr.d; ++i)
        for (std::size_t k = 0; k < gr.r; ++k) s2(i, k) += cplx(step[i * gr.r + k], step[gr.d * gr.r + i * gr.r + k]);
      const auto f2 = gr.eval(s2);
      const double c2 = sumsq(f2);
      if (c2 < cost) {
        s = std::move(s2);
        f = f2;
        cost = c2;
        lambda = std::max(lambda / 3, 1e-12);
        improved = true;
        break;
      }
      lambda *= 4;
    }
    if (!improved) break;
  }
  return {s, cost};
}

}  // namespace detail

/// Smallest rank of an input state satisfying the Kraus orthogonality
/// conditions, or nothing when no state does.
inline std::optional<std::size_t> min_entanglement_rank(const Channel& ch0, const Channel& ch1, std::uint64_t seed = 7,
                                                        int restarts = 40) {
  if (ch0.in_dim() != ch1.in_dim() || ch0.out_dim() != ch1.out_dim())
    throw ShapeError("min_entanglement_rank: channels have different shapes");
  const std::size_t d = ch0.in_dim();
  std::vector<ComplexMatrix> ops;
  for (const auto& a : ch0.kraus())
    for (const auto& b : ch1.kraus()) ops.push_back(a.adjoint() * b);
  Rng rng(seed);
  const double accept = 1e-20;  // squared residual; entries ≤ 1e-10
  for (std::size_t r = 1; r <= d; ++r) {
    const detail::GramResiduals gr{ops, d, r};
    if (r == d) {
      // Convex case: projected descent over all states, then polishing.
      const MemoryChannel m0 = comb_from_sequence({ch0}), m1 = comb_from_sequence({ch1});
      SolverOptions opt;
      opt.seed = seed;
      opt.restarts = 5;
      const auto rep = parallel_discriminable(m0, m1, opt);
      if (rep.residual < 1e-6) {
        const ComplexMatrix s0 = psd_sqrt(rep.witness.matrix().transpose().hermitian_part());
        if (detail::lm_polish(gr, s0).second < accept) return r;
      }
      continue;
    }
    for (int k = 0; k < restarts; ++k) {
      ComplexMatrix s = ginibre(d, r, rng);
      s *= 1.0 / s.frobenius_norm();
      if (detail::lm_polish(gr, s).second < accept) return r;
    }
  }
  return std::nullopt;
}

/// Two-outcome tester with Tr[P_i C_j] = δ_ij built from a normalization
/// Ξ^(N): Helstrom projectors on the reduced states, kernel assigned to
/// outcome 1, lifted back through Ξ^½.
inline Tester synthesize_tester(const MemoryChannel& c0, const MemoryChannel& c1, const LabeledOperator& xi,
                                double max_residual = 1e-6) {
  if (c0.dims() != c1.dims()) throw ShapeError("synthesize_tester: the two combs act on different spaces");
  const NormalizationSet set(std::vector<std::size_t>(c0.dims().begin(), c0.dims().end() - 1));
  const LabeledOperator x = aligned_to(xi, LabeledOperator::identity(set.labels(), set.dims()));
  const double viol = set.violation(x.matrix());
  if (viol > max_residual)
    throw NumericalError("synthesize_tester: witness is not an admissible normalization (violation " +
                         std::to_string(viol) + ")");
  const double res = causal_objective(c0, c1, x);
  if (res > max_residual)
    throw NumericalError("synthesize_tester: witness residual " + std::to_string(res) +
                         " is too large to certify perfect discrimination");
  Tester t;
  t.chain = chain_from_normalization(x);
  const LabeledOperator& top = t.chain.back();
  const LabeledOperator r0 = detail::sandwich(c0.choi(), psd_sqrt(top));
  const LabeledOperator r1 = detail::sandwich(c1.choi(), psd_sqrt(top));
  const ComplexMatrix diff = (r0.matrix() - r1.matrix()).hermitian_part();
  const ComplexMatrix p0 = positive_projector(diff, 1e-12 * std::max(1.0, diff.max_abs()));
  const ComplexMatrix p1 = ComplexMatrix::identity(p0.rows()) - p0;
  const LabeledOperator s = psd_sqrt(top);
  t.elements.push_back(detail::sandwich(LabeledOperator(p0, r0.labels(), r0.dims()), s).sorted());
  t.elements.push_back(detail::sandwich(LabeledOperator(p1, r0.labels(), r0.dims()), s).sorted());
  return t;
}

/// Max_{i,j} |Tr[P_i C_j] − δ_ij|.
inline double delta_error(const Tester& t, const MemoryChannel& c0, const MemoryChannel& c1) {
  const auto p0 = born_probabilities(t, c0), p1 = born_probabilities(t, c1);
  double e = 0;
  for (std::size_t i = 0; i < p0.size(); ++i) {
    e = std::max(e, std::abs(p0[i] - (i == 0 ? 1.0 : 0.0)));
    e = std::max(e, std::abs(p1[i] - (i == 1 ? 1.0 : 0.0)));
  }
  return e;
}

}  // namespace qcomb
