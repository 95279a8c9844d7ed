#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "qcomb/channels.hpp"

namespace qcomb {

/// Tester for N-use combs: elements P_i on spaces 0..2N−1 and the
/// normalization chain Ξ^(1)..Ξ^(N), Ξ^(n) on spaces 0..2n−2.
struct Tester {
  std::vector<LabeledOperator> elements;
  std::vector<LabeledOperator> chain;

  std::size_t uses() const { return chain.size(); }
  const LabeledOperator& normalization() const { return chain.back(); }
};

/// Measurement scheme of the general adaptive form: a state on (0 ⊗ B_1),
/// blocks k = 1..N−1 mapping (2k−1 ⊗ B_k) → (2k ⊗ B_{k+1}), and a final
/// POVM on (2N−1 ⊗ B_N).
struct TesterCircuit {
  ComplexMatrix input_state;
  std::vector<ChainStep> blocks;
  std::vector<std::size_t> memory_dims;  // B_1..B_N
  std::vector<ComplexMatrix> povm;

  std::size_t uses() const { return memory_dims.size(); }
  /// d_0..d_{2N−1} implied by the shapes.
  std::vector<std::size_t> space_dims() const {
    const std::size_t N = uses();
    if (N == 0 || blocks.size() + 1 != N) throw ShapeError("TesterCircuit: need N memories and N−1 blocks");
    if (povm.empty()) throw ShapeError("TesterCircuit: empty POVM");
    std::vector<std::size_t> d;
    if (input_state.rows() % memory_dims[0] != 0) throw ShapeError("TesterCircuit: input state does not factor over B_1");
    d.push_back(input_state.rows() / memory_dims[0]);
    for (const auto& b : blocks) {
      d.push_back(b.in_dim);
      d.push_back(b.out_dim);
    }
    if (povm[0].rows() % memory_dims.back() != 0) throw ShapeError("TesterCircuit: POVM does not factor over B_N");
    d.push_back(povm[0].rows() / memory_dims.back());
    return d;
  }
};

namespace detail {

inline std::vector<Label> labels_upto(std::size_t count) {
  std::vector<Label> l(count);
  for (std::size_t k = 0; k < count; ++k) l[k] = Label(k);
  return l;
}

inline LabeledOperator sum_of(const std::vector<LabeledOperator>& ops) {
  if (ops.empty()) throw ShapeError("empty operator list");
  LabeledOperator s = ops[0];
  for (std::size_t i = 1; i < ops.size(); ++i) s = s + ops[i];
  return s;
}

// (I ⊗ s) x (I ⊗ s) where s acts on a subset of x's labels. The result has
// x's label order.
inline LabeledOperator sandwich(const LabeledOperator& x, const LabeledOperator& s) {
  std::vector<Label> order;
  std::vector<std::size_t> dims;
  for (std::size_t p = 0; p < x.labels().size(); ++p)
    if (!s.has(x.labels()[p])) {
      order.push_back(x.labels()[p]);
      dims.push_back(x.dims()[p]);
    }
  std::size_t e = 1;
  for (auto d : dims) e *= d;
  order.insert(order.end(), s.labels().begin(), s.labels().end());
  const LabeledOperator xp = x.permuted(order);
  const std::size_t k = s.side();
  const ComplexMatrix& m = xp.matrix();
  const ComplexMatrix& sm = s.matrix();
  ComplexMatrix out(e * k, e * k);
  ComplexMatrix blk(k, k);
  for (std::size_t a = 0; a < e; ++a)
    for (std::size_t b = 0; b < e; ++b) {
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) blk(i, j) = m(a * k + i, b * k + j);
      const ComplexMatrix r = sm * blk * sm;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) out(a * k + i, b * k + j) = r(i, j);
    }
  std::vector<std::size_t> all_dims = dims;
  all_dims.insert(all_dims.end(), s.dims().begin(), s.dims().end());
  return LabeledOperator(std::move(out), order, all_dims).permuted(x.labels());
}

}  // namespace detail

/// Chain Ξ^(1)..Ξ^(N) implied by Σ_i P_i = I_{2N−1} ⊗ Ξ^(N).
inline std::vector<LabeledOperator> chain_from_sum(const LabeledOperator& sum) {
  const std::size_t N = sum.labels().size() / 2;
  std::vector<LabeledOperator> chain(N);
  const Label top = Label(2 * N - 1);
  LabeledOperator x = partial_trace(sum, {top});
  x *= 1.0 / double(sum.dim(top));
  chain[N - 1] = x.sorted();
  for (std::size_t n = N; n >= 2; --n) {
    const Label odd = Label(2 * n - 3), even = Label(2 * n - 2);
    LabeledOperator y = partial_trace(chain[n - 1], {odd, even});
    y *= 1.0 / double(chain[n - 1].dim(odd));
    chain[n - 2] = y.sorted();
  }
  return chain;
}

/// Chain below a given top normalization Ξ^(N) (on spaces 0..2N−2).
inline std::vector<LabeledOperator> chain_from_normalization(const LabeledOperator& xi) {
  const std::size_t N = (xi.labels().size() + 1) / 2;
  std::vector<LabeledOperator> chain(N);
  chain[N - 1] = xi.sorted();
  for (std::size_t n = N; n >= 2; --n) {
    const Label odd = Label(2 * n - 3), even = Label(2 * n - 2);
    LabeledOperator y = partial_trace(chain[n - 1], {odd, even});
    y *= 1.0 / double(chain[n - 1].dim(odd));
    chain[n - 2] = y.sorted();
  }
  return chain;
}

struct TesterValidation {
  bool valid = false;
  double sum_residual = 0;                 // ‖Σ P_i − I ⊗ Ξ^(N)‖_F
  std::vector<double> chain_residuals;     // index n−2 holds level n (n ≥ 2)
  double trace_residual = 0;               // |Tr Ξ^(1) − 1|
  double min_element_eigenvalue = 0;       // over all P_i
  double min_chain_eigenvalue = 0;         // over all Ξ^(n)
  bool hermitian = true;
  double max_residual = 0;
};

inline TesterValidation validate_tester(const Tester& t, double tol = 1e-9) {
  TesterValidation v;
  if (t.elements.empty() || t.chain.empty()) throw ShapeError("validate_tester: empty tester");
  const std::size_t N = t.uses();
  for (const auto& p : t.elements)
    if (p.labels().size() != 2 * N) throw ShapeError("validate_tester: element does not act on spaces 0..2N-1");
  const LabeledOperator sum = detail::sum_of(t.elements);
  const Label top = Label(2 * N - 1);
  const LabeledOperator target =
      tensor(LabeledOperator::identity({top}, {sum.dim(top)}), t.chain.back());
  v.sum_residual = frobenius_distance(sum, target);
  for (std::size_t n = 2; n <= N; ++n) {
    const LabeledOperator lhs = partial_trace(t.chain[n - 1], {Label(2 * n - 2)});
    const Label odd = Label(2 * n - 3);
    const LabeledOperator rhs = tensor(LabeledOperator::identity({odd}, {lhs.dim(odd)}), t.chain[n - 2]);
    v.chain_residuals.push_back(frobenius_distance(lhs, rhs));
  }
  v.trace_residual = std::abs(t.chain[0].matrix().trace() - cplx(1.0));
  v.min_element_eigenvalue = std::numeric_limits<double>::max();
  for (const auto& p : t.elements) {
    v.hermitian = v.hermitian && is_hermitian(p.matrix(), 1e-10);
    v.min_element_eigenvalue = std::min(v.min_element_eigenvalue, detail::psd_lower_bound(p.matrix().hermitian_part()));
  }
  v.min_chain_eigenvalue = std::numeric_limits<double>::max();
  for (const auto& x : t.chain) {
    v.hermitian = v.hermitian && is_hermitian(x.matrix(), 1e-10);
    v.min_chain_eigenvalue = std::min(v.min_chain_eigenvalue, min_eigenvalue(x.matrix().hermitian_part()));
  }
  v.max_residual = std::max(v.sum_residual, v.trace_residual);
  for (double r : v.chain_residuals) v.max_residual = std::max(v.max_residual, r);
  const double neg = std::max(tol, 1e-10);
  v.valid = v.hermitian && v.max_residual <= tol && v.min_element_eigenvalue >= -neg && v.min_chain_eigenvalue >= -neg;
  return v;
}

/// p(i|C) = Tr[P_i C].
inline std::vector<double> born_probabilities(const Tester& t, const MemoryChannel& mc) {
  std::vector<double> p;
  for (const auto& e : t.elements) {
    const LabeledOperator c = aligned_to(mc.choi(), e);
    p.push_back(trace_of_product(e.matrix(), c.matrix()).real());
  }
  return p;
}

/// POVM P̃_i = (I ⊗ Ξ^{−½}) P_i (I ⊗ Ξ^{−½}) on the support of Ξ^(N); the
/// defect I − Σ P̃_i is added to the last element.
inline std::vector<LabeledOperator> povm_from_tester(const Tester& t) {
  const LabeledOperator s = psd_inv_sqrt(t.normalization());
  std::vector<LabeledOperator> out;
  for (const auto& p : t.elements) out.push_back(detail::sandwich(p, s));
  const LabeledOperator sum = detail::sum_of(out);
  out.back() = out.back() + (LabeledOperator::identity(sum.labels(), sum.dims()) - sum);
  return out;
}

/// C̃ = (I ⊗ Ξ^½) C (I ⊗ Ξ^½).
inline LabeledOperator reduced_state(const MemoryChannel& mc, const Tester& t) {
  return detail::sandwich(mc.choi(), psd_sqrt(t.normalization()));
}

namespace detail {
inline std::vector<cplx> column_of(const ComplexMatrix& m, std::size_t c) {
  std::vector<cplx> v(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, c);
  return v;
}
}  // namespace detail

/// Tester elements of a circuit, by composing its blocks into operators
/// from the odd spaces to the even spaces and closing them with the POVM.
inline Tester tester_from_circuit(const TesterCircuit& tc) {
  const auto d = tc.space_dims();
  const std::size_t N = tc.uses();
  const std::size_t dN = d[2 * N - 1], bN = tc.memory_dims.back();
  const double tr = tc.input_state.trace().real();
  if (!is_hermitian(tc.input_state) || std::abs(tr - 1.0) > 1e-9)
    throw DomainError("tester_from_circuit: input state is not a unit-trace Hermitian operator");
  {
    ComplexMatrix s(dN * bN, dN * bN);
    for (const auto& m : tc.povm) {
      if (m.rows() != dN * bN || !m.is_square()) throw ShapeError("tester_from_circuit: POVM element shape mismatch");
      s += m;
    }
    if ((s - ComplexMatrix::identity(dN * bN)).frobenius_norm() > 1e-9)
      throw DomainError("tester_from_circuit: POVM does not sum to the identity");
  }
  // The preparation is a map from a trivial space to (0 ⊗ B_1).
  ChainStep prep{{}, 1, d[0]};
  {
    const ComplexMatrix f = low_rank_factor(tc.input_state.hermitian_part(), 1e-14);
    for (std::size_t c = 0; c < f.cols(); ++c) prep.kraus.push_back(ComplexMatrix::column(detail::column_of(f, c)));
    if (prep.kraus.empty()) throw DomainError("tester_from_circuit: zero input state");
  }
  std::vector<ChainStep> steps{prep};
  steps.insert(steps.end(), tc.blocks.begin(), tc.blocks.end());
  std::vector<std::size_t> mem{1};
  mem.insert(mem.end(), tc.memory_dims.begin(), tc.memory_dims.end());
  const ChainPaths y = chain_compose(steps, mem);
  // y: columns over rows ((evens, B_N), odds below 2N−1).
  const std::size_t E = y.outs, Od = y.ins, B = y.memory;

  std::vector<Label> labels;
  std::vector<std::size_t> dims;
  for (std::size_t n = 0; n < N; ++n) {
    labels.push_back(Label(2 * n + 1));
    dims.push_back(d[2 * n + 1]);
  }
  for (std::size_t n = 0; n < N; ++n) {
    labels.push_back(Label(2 * n));
    dims.push_back(d[2 * n]);
  }
  const std::size_t side = Od * dN * E;

  Tester t;
  for (const auto& m : tc.povm) {
    const ComplexMatrix mu = low_rank_factor(m.hermitian_part(), 1e-14);
    ComplexMatrix pis(side, std::max<std::size_t>(1, y.columns.cols() * mu.cols()));
    for (std::size_t c = 0; c < y.columns.cols(); ++c)
      for (std::size_t k = 0; k < mu.cols(); ++k) {
        const std::size_t col = c * mu.cols() + k;
        // π[(o', o_N), e] = Σ_b conj(Y[(e, b), o']) μ[(o_N, b)]
        for (std::size_t op = 0; op < Od; ++op)
          for (std::size_t on = 0; on < dN; ++on)
            for (std::size_t e = 0; e < E; ++e) {
              cplx s = 0;
              for (std::size_t b = 0; b < B; ++b) s += std::conj(y.columns((e * B + b) * Od + op, c)) * mu(on * B + b, k);
              pis((op * dN + on) * E + e, col) = s;
            }
      }
    const ComplexMatrix f = detail::compress_columns(pis);
    t.elements.push_back(LabeledOperator(f * f.adjoint(), labels, dims).sorted());
  }
  t.chain = chain_from_sum(detail::sum_of(t.elements));
  return t;
}

/// Outcome distribution from explicit state evolution: the circuit's
/// blocks alternate with the comb's blocks and the POVM closes the scheme.
/// Labels: spaces 0..2N−1, comb memories 100+n, tester memories 200+k.
inline std::vector<double> simulate_tester_circuit(const TesterCircuit& tc, const CombRealization& comb) {
  const auto d = tc.space_dims();
  const std::size_t N = tc.uses();
  if (comb.uses() != N) throw ShapeError("simulate_tester_circuit: number of uses differs");
  const auto cd = comb.space_dims();
  if (cd != d) throw ShapeError("simulate_tester_circuit: space dimensions differ between circuit and comb");
  const auto cm = comb.chain_memory();
  LabeledOperator state(tc.input_state, {0, 201}, {d[0], tc.memory_dims[0]});
  state = tensor(state, LabeledOperator::identity({100}, {1}));
  for (std::size_t n = 1; n <= N; ++n) {
    const auto& blk = comb.blocks[n - 1];
    state = apply_kraus_on(state, blk.kraus, {Label(2 * n - 2), Label(100 + n - 1)}, {Label(2 * n - 1), Label(100 + n)},
                           {blk.out_dim, cm[n]});
    if (n < N) {
      const auto& tb = tc.blocks[n - 1];
      state = apply_kraus_on(state, tb.kraus, {Label(2 * n - 1), Label(200 + n)}, {Label(2 * n), Label(200 + n + 1)},
                             {tb.out_dim, tc.memory_dims[n]});
    }
  }
  std::vector<Label> rest;
  for (auto l : state.labels())
    if (l != Label(2 * N - 1) && l != Label(200 + N)) rest.push_back(l);
  const LabeledOperator red = partial_trace(state, rest).permuted({Label(2 * N - 1), Label(200 + N)});
  std::vector<double> p;
  for (const auto& m : tc.povm) p.push_back(trace_of_product(m, red.matrix()).real());
  return p;
}

/// The convex set of top normalizations Ξ^(N) ≥ 0 on spaces 0..2N−2 whose
/// chain satisfies the tester constraints.
class NormalizationSet {
 public:
  /// `dims` are d_0..d_{2N−2}.
  explicit NormalizationSet(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    if (dims_.empty() || dims_.size() % 2 == 0) throw ShapeError("NormalizationSet: expected dims of spaces 0..2N-2");
    side_ = 1;
    for (auto x : dims_) side_ *= x;
    trace_ = 1.0;
    for (std::size_t k = 1; k + 1 < dims_.size(); k += 2) trace_ *= double(dims_[k]);
  }
  std::size_t uses() const { return (dims_.size() + 1) / 2; }
  std::size_t side() const { return side_; }
  double trace() const { return trace_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::vector<Label> labels() const { return detail::labels_upto(dims_.size()); }
  LabeledOperator wrap(ComplexMatrix x) const { return {std::move(x), labels(), dims_}; }

  /// Orthogonal projection onto the affine hull of the constraints.
  ComplexMatrix affine_project(const ComplexMatrix& x) const {
    const std::size_t N = uses();
    ComplexMatrix out = x.hermitian_part();
    const ComplexMatrix xh = out;
    // Z_N = R_{2N−2} X, Z_n = R_{2n−2} R_{2n−1} Z_{n+1}; subtract Z_n − R_{2n−3} Z_n.
    ComplexMatrix z = xh;
    for (std::size_t n = N; n >= 2; --n) {
      if (n == N)
        z = replace(z, 2 * N - 2);
      else
        z = replace(replace(z, 2 * n - 1), 2 * n - 2);
      out -= z - replace(z, 2 * n - 3);
    }
    const cplx shift = (trace_ - out.trace()) / double(side_);
    for (std::size_t i = 0; i < side_; ++i) out(i, i) += shift;
    return out;
  }

  /// Nearest point of the set (Dykstra alternation between the affine
  /// constraints and the PSD cone, then a final feasibility repair).
  ComplexMatrix project(const ComplexMatrix& x, int max_iter = 5000, double tol = 1e-12) const {
    if (uses() == 1) return project_density(x);
    ComplexMatrix y = x.hermitian_part();
    ComplexMatrix p(side_, side_), q(side_, side_);
    for (int it = 0; it < max_iter; ++it) {
      const ComplexMatrix a = affine_project(y + p);
      p = y + p - a;
      ComplexMatrix yn = psd_part(a + q);
      q = a + q - yn;
      const double step = (yn - y).frobenius_norm();
      y = std::move(yn);
      if (step < tol * std::max(1.0, trace_)) break;
    }
    return repair(affine_project(y));
  }

  /// Mixes an affine-feasible point with the uniform element until it is PSD.
  ComplexMatrix repair(ComplexMatrix a) const {
    const double m = min_eigenvalue(a);
    if (m < 0) {
      const double c = trace_ / double(side_);
      const double lam = -m / (c - m);
      a *= (1.0 - lam);
      for (std::size_t i = 0; i < side_; ++i) a(i, i) += lam * c;
    }
    return a;
  }

  ComplexMatrix uniform() const { return ComplexMatrix::identity(side_) * (trace_ / double(side_)); }

  /// Residual of x as a member of the set (max of constraint residuals and
  /// negative eigenvalue magnitude).
  double violation(const ComplexMatrix& x) const {
    const auto chain = chain_from_normalization(wrap(x));
    double r = std::abs(chain[0].matrix().trace() - cplx(1.0));
    for (std::size_t n = 2; n <= chain.size(); ++n) {
      const LabeledOperator lhs = partial_trace(chain[n - 1], {Label(2 * n - 2)});
      const Label odd = Label(2 * n - 3);
      r = std::max(r, frobenius_distance(lhs, tensor(LabeledOperator::identity({odd}, {lhs.dim(odd)}), chain[n - 2])));
    }
    return std::max(r, std::max(0.0, -min_eigenvalue(x.hermitian_part())));
  }

  static ComplexMatrix psd_part(const ComplexMatrix& h) {
    return spectral_function(eigh(h.hermitian_part()), [](double v) { return v > 0 ? v : 0.0; });
  }

  /// Euclidean projection onto density matrices (eigenvalue simplex).
  static ComplexMatrix project_density(const ComplexMatrix& h, double total = 1.0) {
    const EigenSystem es = eigh(h.hermitian_part());
    std::vector<double> u(es.values.rbegin(), es.values.rend());
    double css = 0, theta = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      css += u[k];
      const double th = (css - total) / double(k + 1);
      if (u[k] - th > 0) theta = th;
    }
    return spectral_function(es, [theta](double v) { return v > theta ? v - theta : 0.0; });
  }

 private:
  // R_k(X) = Tr_k X ⊗ I_k / d_k, keeping the factor order.
  ComplexMatrix replace(const ComplexMatrix& x, std::size_t k) const {
    const LabeledOperator lx(x, labels(), dims_);
    LabeledOperator t = partial_trace(lx, {Label(k)});
    t *= 1.0 / double(dims_[k]);
    return extend_to(t, lx).matrix();
  }

  std::vector<std::size_t> dims_;
  std::size_t side_ = 1;
  double trace_ = 1.0;
};

}  // namespace qcomb
