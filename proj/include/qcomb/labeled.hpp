#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "qcomb/linalg.hpp"

namespace qcomb {

using Label = int;

/// Square operator on a tensor product of labeled subsystems. Tensor factors
/// appear in the order of `labels` (first label = most significant index).
class LabeledOperator {
 public:
  LabeledOperator() = default;
  LabeledOperator(ComplexMatrix m, std::vector<Label> labels, std::vector<std::size_t> dims)
      : m_(std::move(m)), labels_(std::move(labels)), dims_(std::move(dims)) {
    if (labels_.size() != dims_.size()) throw ShapeError("LabeledOperator: labels and dims differ in length");
    if (!m_.is_square()) throw ShapeError("LabeledOperator: matrix is not square");
    std::size_t side = 1;
    for (auto d : dims_) {
      if (d == 0) throw ShapeError("LabeledOperator: zero dimension");
      side *= d;
    }
    if (side != m_.rows())
      throw ShapeError("LabeledOperator: product of dims " + std::to_string(side) + " does not match matrix side " +
                       std::to_string(m_.rows()));
    auto s = labels_;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ShapeError("LabeledOperator: repeated label");
  }

  static LabeledOperator identity(std::vector<Label> labels, std::vector<std::size_t> dims) {
    std::size_t side = 1;
    for (auto d : dims) side *= d;
    return {ComplexMatrix::identity(side), std::move(labels), std::move(dims)};
  }
  /// Scalar (no subsystems).
  static LabeledOperator scalar(cplx v) { return {ComplexMatrix{{v}}, {}, {}}; }

  const ComplexMatrix& matrix() const { return m_; }
  ComplexMatrix& matrix() { return m_; }
  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t side() const { return m_.rows(); }

  bool has(Label l) const { return std::find(labels_.begin(), labels_.end(), l) != labels_.end(); }
  std::size_t position(Label l) const {
    auto it = std::find(labels_.begin(), labels_.end(), l);
    if (it == labels_.end()) throw ShapeError("unknown label " + std::to_string(l));
    return std::size_t(it - labels_.begin());
  }
  std::size_t dim(Label l) const { return dims_[position(l)]; }
  /// Product of the dims of the given labels.
  std::size_t dim(const std::vector<Label>& ls) const {
    std::size_t p = 1;
    for (auto l : ls) p *= dim(l);
    return p;
  }

  /// Same operator with tensor factors reordered to `order` (a permutation of labels()).
  LabeledOperator permuted(const std::vector<Label>& order) const;
  /// Factors sorted by ascending label.
  LabeledOperator sorted() const {
    auto order = labels_;
    std::sort(order.begin(), order.end());
    return permuted(order);
  }

  LabeledOperator& operator*=(cplx s) {
    m_ *= s;
    return *this;
  }

 private:
  ComplexMatrix m_;
  std::vector<Label> labels_;
  std::vector<std::size_t> dims_;
};

namespace detail {

inline std::vector<std::size_t> strides_of(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> s(dims.size(), 1);
  for (std::size_t k = dims.size(); k-- > 1;) s[k - 1] = s[k] * dims[k];
  return s;
}

// Full-space offsets for every multi-index over the chosen positions,
// enumerated with the first chosen position most significant.
inline std::vector<std::size_t> offsets_over(const std::vector<std::size_t>& positions,
                                             const std::vector<std::size_t>& dims,
                                             const std::vector<std::size_t>& strides) {
  std::vector<std::size_t> out{0};
  for (auto p : positions) {
    std::vector<std::size_t> next;
    next.reserve(out.size() * dims[p]);
    for (auto base : out)
      for (std::size_t i = 0; i < dims[p]; ++i) next.push_back(base + i * strides[p]);
    out = std::move(next);
  }
  return out;
}

}  // namespace detail

inline LabeledOperator LabeledOperator::permuted(const std::vector<Label>& order) const {
  if (order.size() != labels_.size()) throw ShapeError("permuted: order is not a permutation of the labels");
  std::vector<std::size_t> pos;
  std::vector<std::size_t> new_dims;
  for (auto l : order) {
    pos.push_back(position(l));
    new_dims.push_back(dims_[pos.back()]);
  }
  {
    auto s = pos;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ShapeError("permuted: repeated label in order");
  }
  if (order == labels_) return *this;
  const auto map = detail::offsets_over(pos, dims_, detail::strides_of(dims_));
  const std::size_t n = map.size();
  ComplexMatrix r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r(i, j) = m_(map[i], map[j]);
  return {std::move(r), order, std::move(new_dims)};
}

/// a ⊗ b with concatenated labels.
inline LabeledOperator tensor(const LabeledOperator& a, const LabeledOperator& b) {
  for (auto l : b.labels())
    if (a.has(l)) throw ShapeError("tensor: label " + std::to_string(l) + " appears in both operands");
  auto labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  auto dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  return {kron(a.matrix(), b.matrix()), std::move(labels), std::move(dims)};
}

/// Partial trace over the listed labels; remaining labels keep their order.
inline LabeledOperator partial_trace(const LabeledOperator& a, const std::vector<Label>& over) {
  std::vector<std::size_t> tpos;
  for (auto l : over) {
    if (!a.has(l)) throw ShapeError("partial_trace: unknown label " + std::to_string(l));
    tpos.push_back(a.position(l));
  }
  std::vector<std::size_t> kpos;
  std::vector<Label> klabels;
  std::vector<std::size_t> kdims;
  for (std::size_t p = 0; p < a.labels().size(); ++p)
    if (std::find(tpos.begin(), tpos.end(), p) == tpos.end()) {
      kpos.push_back(p);
      klabels.push_back(a.labels()[p]);
      kdims.push_back(a.dims()[p]);
    }
  const auto strides = detail::strides_of(a.dims());
  const auto ko = detail::offsets_over(kpos, a.dims(), strides);
  const auto to = detail::offsets_over(tpos, a.dims(), strides);
  const auto& m = a.matrix();
  ComplexMatrix r(ko.size(), ko.size());
  for (std::size_t i = 0; i < ko.size(); ++i)
    for (std::size_t j = 0; j < ko.size(); ++j) {
      cplx s = 0;
      for (auto t : to) s += m(ko[i] + t, ko[j] + t);
      r(i, j) = s;
    }
  return {std::move(r), std::move(klabels), std::move(kdims)};
}

/// Brings b to a's label order (labels must coincide as sets).
inline LabeledOperator aligned_to(const LabeledOperator& b, const LabeledOperator& a) {
  if (b.labels().size() != a.labels().size()) throw ShapeError("operators act on different label sets");
  for (auto l : a.labels())
    if (!b.has(l) || b.dim(l) != a.dim(l)) throw ShapeError("operators act on different spaces (label " + std::to_string(l) + ")");
  return b.permuted(a.labels());
}

/// Product a·b, with b reordered to a's labels.
inline LabeledOperator operator*(const LabeledOperator& a, const LabeledOperator& b) {
  return {a.matrix() * aligned_to(b, a).matrix(), a.labels(), a.dims()};
}
inline LabeledOperator operator+(const LabeledOperator& a, const LabeledOperator& b) {
  return {a.matrix() + aligned_to(b, a).matrix(), a.labels(), a.dims()};
}
inline LabeledOperator operator-(const LabeledOperator& a, const LabeledOperator& b) {
  return {a.matrix() - aligned_to(b, a).matrix(), a.labels(), a.dims()};
}
inline LabeledOperator operator*(cplx s, LabeledOperator a) { return a *= s; }
inline LabeledOperator operator*(double s, LabeledOperator a) { return a *= s; }

/// Identity on the labels of `target` missing from x, tensored onto x, in
/// target's label order.
inline LabeledOperator extend_to(const LabeledOperator& x, const LabeledOperator& target) {
  std::vector<Label> extra;
  std::vector<std::size_t> extra_dims;
  for (std::size_t p = 0; p < target.labels().size(); ++p) {
    const Label l = target.labels()[p];
    if (x.has(l)) {
      if (x.dim(l) != target.dims()[p]) throw ShapeError("extend_to: dimension mismatch on label " + std::to_string(l));
    } else {
      extra.push_back(l);
      extra_dims.push_back(target.dims()[p]);
    }
  }
  if (x.labels().size() + extra.size() != target.labels().size())
    throw ShapeError("extend_to: operator has labels outside the target space");
  return tensor(LabeledOperator::identity(extra, extra_dims), x).permuted(target.labels());
}

/// Frobenius distance after aligning label order.
inline double frobenius_distance(const LabeledOperator& a, const LabeledOperator& b) {
  return (a.matrix() - aligned_to(b, a).matrix()).frobenius_norm();
}

inline LabeledOperator psd_sqrt(const LabeledOperator& h) { return {psd_sqrt(h.matrix()), h.labels(), h.dims()}; }
inline LabeledOperator psd_inv_sqrt(const LabeledOperator& h) {
  return {psd_inv_sqrt(h.matrix()), h.labels(), h.dims()};
}

}  // namespace qcomb
