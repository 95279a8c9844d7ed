#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qcomb/labeled.hpp"

namespace qcomb {

/// Completely positive trace-preserving map ρ ↦ Σ_j K_j ρ K_j†.
class Channel {
 public:
  Channel() = default;
  Channel(std::vector<ComplexMatrix> kraus, std::size_t in_dim, std::size_t out_dim, double tol = 1e-9)
      : kraus_(std::move(kraus)), in_(in_dim), out_(out_dim) {
    if (kraus_.empty()) throw ShapeError("Channel: empty Kraus list");
    ComplexMatrix s(in_, in_);
    for (const auto& k : kraus_) {
      if (k.rows() != out_ || k.cols() != in_)
        throw ShapeError("Channel: Kraus operator of shape " + std::to_string(k.rows()) + "x" +
                         std::to_string(k.cols()) + ", expected " + std::to_string(out_) + "x" + std::to_string(in_));
      s += k.adjoint() * k;
    }
    const double defect = (s - ComplexMatrix::identity(in_)).frobenius_norm();
    if (defect > tol) throw DomainError("Channel: not trace preserving (defect " + std::to_string(defect) + ")");
  }
  explicit Channel(ComplexMatrix unitary_or_isometry)
      : Channel(std::vector<ComplexMatrix>{unitary_or_isometry}, unitary_or_isometry.cols(), unitary_or_isometry.rows()) {}

  const std::vector<ComplexMatrix>& kraus() const { return kraus_; }
  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }

 private:
  std::vector<ComplexMatrix> kraus_;
  std::size_t in_ = 0, out_ = 0;
};

/// Choi operator Σ_j |K_j⟩⟩⟨⟨K_j|, factors ordered (out_label, in_label).
inline LabeledOperator choi_from_kraus(const Channel& ch, Label in_label = 0, Label out_label = 1) {
  const std::size_t n = ch.in_dim() * ch.out_dim();
  ComplexMatrix c(n, n);
  for (const auto& k : ch.kraus()) {
    const auto v = k.data();
    for (std::size_t i = 0; i < n; ++i) {
      if (v[i] == cplx(0.0)) continue;
      for (std::size_t j = 0; j < n; ++j) c(i, j) += v[i] * std::conj(v[j]);
    }
  }
  return {std::move(c), {out_label, in_label}, {ch.out_dim(), ch.in_dim()}};
}

/// Kraus operators from the spectral decomposition of a single-use Choi
/// operator. The smaller of the two labels is taken as the input.
inline Channel kraus_from_choi(const LabeledOperator& c, std::size_t in_dim, std::size_t out_dim) {
  if (c.labels().size() != 2) throw ShapeError("kraus_from_choi: expected an operator on two spaces");
  const Label in_l = std::min(c.labels()[0], c.labels()[1]);
  const Label out_l = std::max(c.labels()[0], c.labels()[1]);
  if (c.dim(in_l) != in_dim || c.dim(out_l) != out_dim) throw ShapeError("kraus_from_choi: dims do not match the operator");
  const LabeledOperator oi = c.permuted({out_l, in_l});
  const double tp = (partial_trace(oi, {out_l}).matrix() - ComplexMatrix::identity(in_dim)).frobenius_norm();
  if (tp > 1e-8) throw DomainError("kraus_from_choi: not trace preserving (residual " + std::to_string(tp) + ")");
  const EigenSystem es = eigh(oi.matrix().hermitian_part());
  detail::check_psd_spectrum(es, "kraus_from_choi");
  std::vector<ComplexMatrix> ks;
  for (std::size_t k = es.values.size(); k-- > 0;) {
    if (es.values[k] <= 1e-12) break;
    const double s = std::sqrt(es.values[k]);
    ComplexMatrix kk(out_dim, in_dim);
    for (std::size_t i = 0; i < out_dim * in_dim; ++i) kk.data()[i] = s * es.vectors(i, k);
    ks.push_back(std::move(kk));
  }
  return Channel(std::move(ks), in_dim, out_dim, 1e-7);
}

inline ComplexMatrix apply_channel(const Channel& ch, const ComplexMatrix& rho) {
  if (!rho.is_square() || rho.rows() != ch.in_dim())
    throw ShapeError("apply_channel: state dimension " + std::to_string(rho.rows()) + " does not match channel input " +
                     std::to_string(ch.in_dim()));
  ComplexMatrix out(ch.out_dim(), ch.out_dim());
  for (const auto& k : ch.kraus()) out += k * rho * k.adjoint();
  return out;
}

/// Applies Kraus operators that act on the subsystems `in_labels` of a
/// labeled state and produce subsystems `out_labels` (each K has rows
/// ordered as out_labels and columns ordered as in_labels). Untouched
/// subsystems follow the new ones.
inline LabeledOperator apply_kraus_on(const LabeledOperator& state, const std::vector<ComplexMatrix>& kraus,
                                      const std::vector<Label>& in_labels, const std::vector<Label>& out_labels,
                                      const std::vector<std::size_t>& out_dims) {
  std::vector<Label> order = in_labels;
  std::vector<Label> rest;
  std::vector<std::size_t> rest_dims;
  for (std::size_t p = 0; p < state.labels().size(); ++p) {
    const Label l = state.labels()[p];
    if (std::find(in_labels.begin(), in_labels.end(), l) == in_labels.end()) {
      order.push_back(l);
      rest.push_back(l);
      rest_dims.push_back(state.dims()[p]);
    }
  }
  const LabeledOperator s = state.permuted(order);
  const std::size_t din = state.dim(in_labels);
  std::size_t dout = 1;
  for (auto d : out_dims) dout *= d;
  std::size_t r = 1;
  for (auto d : rest_dims) r *= d;
  const ComplexMatrix& m = s.matrix();
  ComplexMatrix out(dout * r, dout * r);
  ComplexMatrix tmp(dout * r, din * r);
  for (const auto& k : kraus) {
    if (k.rows() != dout || k.cols() != din) throw ShapeError("apply_kraus_on: Kraus operator shape mismatch");
    // tmp = (K ⊗ I_r) m
    for (auto& z : tmp.data()) z = 0.0;
    for (std::size_t o = 0; o < dout; ++o)
      for (std::size_t i = 0; i < din; ++i) {
        const cplx kv = k(o, i);
        if (kv == cplx(0.0)) continue;
        for (std::size_t x = 0; x < r; ++x) {
          cplx* dst = &tmp(o * r + x, 0);
          const cplx* src = &m(i * r + x, 0);
          for (std::size_t c = 0; c < din * r; ++c) dst[c] += kv * src[c];
        }
      }
    // out += tmp (K ⊗ I_r)†
    for (std::size_t row = 0; row < dout * r; ++row)
      for (std::size_t o = 0; o < dout; ++o)
        for (std::size_t i = 0; i < din; ++i) {
          const cplx kv = std::conj(k(o, i));
          if (kv == cplx(0.0)) continue;
          for (std::size_t x = 0; x < r; ++x) out(row, o * r + x) += tmp(row, i * r + x) * kv;
        }
  }
  std::vector<Label> labels = out_labels;
  labels.insert(labels.end(), rest.begin(), rest.end());
  std::vector<std::size_t> dims = out_dims;
  dims.insert(dims.end(), rest_dims.begin(), rest_dims.end());
  return {std::move(out), std::move(labels), std::move(dims)};
}

/// One stage of a chain of Kraus maps acting on (system ⊗ memory). The
/// Kraus operators have rows ordered (out, memory_out) and columns ordered
/// (in, memory_in).
struct ChainStep {
  std::vector<ComplexMatrix> kraus;
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
};

/// Operators of a composed chain, stored as columns |X_j⟩⟩ where each X_j
/// maps (in_1 ⊗ … ⊗ in_M) to (out_1 ⊗ … ⊗ out_M ⊗ memory_M).
struct ChainPaths {
  ComplexMatrix columns;  // rows = O·A·I
  std::size_t outs = 1, memory = 1, ins = 1;
};

namespace detail {
// Replaces the columns of V by a factor M with M M† = V V† when that is
// narrower.
inline ComplexMatrix compress_columns(const ComplexMatrix& v) {
  if (v.cols() <= v.rows()) return v;
  return low_rank_factor(v * v.adjoint(), 1e-14);
}
}  // namespace detail

/// Sequential composition of a chain of Kraus maps: memory_dims holds the
/// memory sizes A_0..A_M (A_0 must be 1).
inline ChainPaths chain_compose(const std::vector<ChainStep>& steps, const std::vector<std::size_t>& memory_dims) {
  if (memory_dims.size() != steps.size() + 1) throw ShapeError("chain_compose: need one memory size per link");
  if (memory_dims.front() != 1) throw ShapeError("chain_compose: the initial memory must be trivial");
  ChainPaths p;
  p.columns = ComplexMatrix{{1.0}};
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const auto& st = steps[s];
    const std::size_t a = memory_dims[s], a2 = memory_dims[s + 1];
    const std::size_t O = p.outs, I = p.ins;
    const std::size_t o2 = st.out_dim, i2 = st.in_dim;
    for (const auto& k : st.kraus)
      if (k.rows() != o2 * a2 || k.cols() != i2 * a)
        throw ShapeError("chain_compose: block " + std::to_string(s + 1) + " has shape " + std::to_string(k.rows()) +
                         "x" + std::to_string(k.cols()) + ", expected " + std::to_string(o2 * a2) + "x" +
                         std::to_string(i2 * a));
    const std::size_t new_rows = O * o2 * a2 * I * i2;
    const std::size_t ncol = p.columns.cols();
    ComplexMatrix next(new_rows, ncol * st.kraus.size());
    for (std::size_t c = 0; c < ncol; ++c)
      for (std::size_t kk = 0; kk < st.kraus.size(); ++kk) {
        const auto& k = st.kraus[kk];
        const std::size_t col = c * st.kraus.size() + kk;
        // X[(o,a), i] = columns((o·a_dim + a)·I + i, c)
        for (std::size_t o = 0; o < O; ++o)
          for (std::size_t ai = 0; ai < a; ++ai)
            for (std::size_t i = 0; i < I; ++i) {
              const cplx x = p.columns((o * a + ai) * I + i, c);
              if (x == cplx(0.0)) continue;
              for (std::size_t op = 0; op < o2; ++op)
                for (std::size_t ap = 0; ap < a2; ++ap)
                  for (std::size_t ip = 0; ip < i2; ++ip) {
                    const cplx kv = k(op * a2 + ap, ip * a + ai);
                    if (kv == cplx(0.0)) continue;
                    const std::size_t row = (((o * o2 + op) * a2 + ap) * I + i) * i2 + ip;
                    next(row, col) += kv * x;
                  }
            }
      }
    p.columns = detail::compress_columns(next);
    p.outs = O * o2;
    p.ins = I * i2;
    p.memory = a2;
  }
  return p;
}

/// N-use memory channel: Choi operator on spaces 0..2N−1 in ascending order
/// (even = inputs, odd = outputs).
class MemoryChannel {
 public:
  MemoryChannel() = default;
  explicit MemoryChannel(LabeledOperator choi) : choi_(choi.sorted()) {
    const auto& ls = choi_.labels();
    if (ls.empty() || ls.size() % 2 != 0) throw ShapeError("MemoryChannel: expected an even, nonzero number of spaces");
    for (std::size_t k = 0; k < ls.size(); ++k)
      if (ls[k] != Label(k)) throw ShapeError("MemoryChannel: spaces must be labeled 0..2N-1");
  }
  const LabeledOperator& choi() const { return choi_; }
  std::size_t uses() const { return choi_.labels().size() / 2; }
  std::size_t dim(Label l) const { return choi_.dim(l); }
  const std::vector<std::size_t>& dims() const { return choi_.dims(); }

 private:
  LabeledOperator choi_;
};

/// Kraus realization of a comb: block n maps (space 2n−2 ⊗ A_{n−1}) to
/// (space 2n−1 ⊗ A_n); A_0 is trivial and A_N is discarded.
struct CombRealization {
  std::vector<ChainStep> blocks;
  std::vector<std::size_t> memory_dims;  // A_1..A_N

  std::size_t uses() const { return blocks.size(); }
  std::vector<std::size_t> space_dims() const {
    std::vector<std::size_t> d;
    for (const auto& b : blocks) {
      d.push_back(b.in_dim);
      d.push_back(b.out_dim);
    }
    return d;
  }
  std::vector<std::size_t> chain_memory() const {
    std::vector<std::size_t> m{1};
    m.insert(m.end(), memory_dims.begin(), memory_dims.end());
    return m;
  }
};

/// Comb realized by a chain of isometries or unitaries (one Kraus operator
/// per block).
inline CombRealization realization_from_isometries(const std::vector<ComplexMatrix>& blocks,
                                                   const std::vector<std::size_t>& memory_dims) {
  if (blocks.empty()) throw ShapeError("comb realization: no blocks");
  if (memory_dims.size() != blocks.size()) throw ShapeError("comb realization: need one memory size per block");
  CombRealization r;
  r.memory_dims = memory_dims;
  std::size_t prev = 1;
  for (std::size_t n = 0; n < blocks.size(); ++n) {
    const auto& b = blocks[n];
    if (b.cols() % prev != 0 || b.rows() % memory_dims[n] != 0)
      throw ShapeError("comb realization: block " + std::to_string(n + 1) + " does not factor through the memory sizes");
    r.blocks.push_back({{b}, b.cols() / prev, b.rows() / memory_dims[n]});
    prev = memory_dims[n];
  }
  return r;
}

inline MemoryChannel comb_from_realization(const CombRealization& r) {
  if (r.blocks.empty()) throw ShapeError("comb realization: no blocks");
  if (r.memory_dims.size() != r.blocks.size()) throw ShapeError("comb realization: need one memory size per block");
  const auto mem = r.chain_memory();
  for (std::size_t n = 0; n < r.blocks.size(); ++n) {
    const std::size_t cols = r.blocks[n].in_dim * mem[n];
    ComplexMatrix s(cols, cols);
    for (const auto& k : r.blocks[n].kraus) {
      if (k.cols() != cols || k.rows() != r.blocks[n].out_dim * mem[n + 1])
        throw ShapeError("comb realization: block " + std::to_string(n + 1) + " has the wrong shape");
      s += k.adjoint() * k;
    }
    const double defect = (s - ComplexMatrix::identity(cols)).frobenius_norm();
    if (defect > 1e-9)
      throw DomainError("comb realization: block " + std::to_string(n + 1) + " is not trace preserving (defect " +
                        std::to_string(defect) + ")");
  }
  const ChainPaths p = chain_compose(r.blocks, r.chain_memory());
  const std::size_t N = r.blocks.size();
  const std::size_t side = p.outs * p.ins;
  // Each column splits into one operator out ⊗ in per final memory index.
  ComplexMatrix v(side, p.columns.cols() * p.memory);
  for (std::size_t c = 0; c < p.columns.cols(); ++c)
    for (std::size_t o = 0; o < p.outs; ++o)
      for (std::size_t a = 0; a < p.memory; ++a)
        for (std::size_t i = 0; i < p.ins; ++i)
          v(o * p.ins + i, c * p.memory + a) = p.columns((o * p.memory + a) * p.ins + i, c);
  const ComplexMatrix f = detail::compress_columns(v);
  std::vector<Label> labels;
  std::vector<std::size_t> dims;
  for (std::size_t n = 0; n < N; ++n) {
    labels.push_back(Label(2 * n + 1));
    dims.push_back(r.blocks[n].out_dim);
  }
  for (std::size_t n = 0; n < N; ++n) {
    labels.push_back(Label(2 * n));
    dims.push_back(r.blocks[n].in_dim);
  }
  return MemoryChannel(LabeledOperator(f * f.adjoint(), labels, dims));
}

inline MemoryChannel comb_from_isometries(const std::vector<ComplexMatrix>& blocks,
                                          const std::vector<std::size_t>& memory_dims) {
  return comb_from_realization(realization_from_isometries(blocks, memory_dims));
}

/// Memoryless comb: channel j acts on spaces 2j → 2j+1.
inline MemoryChannel comb_from_sequence(const std::vector<Channel>& channels) {
  if (channels.empty()) throw ShapeError("comb_from_sequence: empty list");
  LabeledOperator c = choi_from_kraus(channels[0], 0, 1);
  for (std::size_t j = 1; j < channels.size(); ++j)
    c = tensor(c, choi_from_kraus(channels[j], Label(2 * j), Label(2 * j + 1)));
  return MemoryChannel(c);
}

/// Realization of a memoryless comb (trivial memories).
inline CombRealization realization_from_sequence(const std::vector<Channel>& channels) {
  CombRealization r;
  for (const auto& ch : channels) {
    r.blocks.push_back({ch.kraus(), ch.in_dim(), ch.out_dim()});
    r.memory_dims.push_back(1);
  }
  return r;
}

struct CombValidation {
  bool valid = false;
  std::vector<double> level_residuals;  // index n−1 holds level n
  double normalization_residual = 0;    // |C^(0) − 1|
  double min_eigenvalue = 0;  // of the Hermitian part
  bool hermitian = true;
  double max_residual = 0;
};

namespace detail {
// Smallest eigenvalue, or a cheap certified lower bound when a pivoted
// Cholesky factorization leaves a negligible remainder.
inline double psd_lower_bound(const ComplexMatrix& h) {
  const double scale = std::max(h.max_abs(), 1e-300);
  const ComplexMatrix m = low_rank_factor(h, 1e-14);
  if (m.cols() < h.rows() / 2) {
    const double rem = (h - m * m.adjoint()).frobenius_norm();
    if (rem <= 1e-11 * scale) return -rem;
  }
  return min_eigenvalue(h.hermitian_part());
}
}  // namespace detail

/// Recursive causal constraints of the comb hierarchy, checked level by
/// level: C^(n−1) = Tr_{2n−2,2n−1} C^(n) / d_{2n−2}, residual
/// ‖Tr_{2n−1} C^(n) − I ⊗ C^(n−1)‖_F, and finally C^(0) = 1.
inline CombValidation validate_comb(const MemoryChannel& mc, double tol = 1e-9) {
  CombValidation v;
  const std::size_t N = mc.uses();
  v.level_residuals.assign(N, 0.0);
  LabeledOperator cur = mc.choi();
  for (std::size_t n = N; n >= 1; --n) {
    const Label in = Label(2 * n - 2), out = Label(2 * n - 1);
    const LabeledOperator t = partial_trace(cur, {out});
    const double din = double(t.dim(in));
    LabeledOperator cand = partial_trace(t, {in});
    cand *= 1.0 / din;
    const LabeledOperator rebuilt = tensor(LabeledOperator::identity({in}, {t.dim(in)}), cand);
    v.level_residuals[n - 1] = frobenius_distance(t, rebuilt);
    cur = std::move(cand);
  }
  v.normalization_residual = std::abs(cur.matrix()(0, 0) - cplx(1.0));
  v.hermitian = is_hermitian(mc.choi().matrix(), 1e-10);
  v.min_eigenvalue = detail::psd_lower_bound(mc.choi().matrix().hermitian_part());
  v.max_residual = v.normalization_residual;
  for (double r : v.level_residuals) v.max_residual = std::max(v.max_residual, r);
  v.valid = v.hermitian && v.max_residual <= tol && v.min_eigenvalue >= -std::max(tol, 1e-10);
  return v;
}

}  // namespace qcomb
