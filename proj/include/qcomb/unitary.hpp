#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "qcomb/linalg.hpp"
#include "qcomb/random.hpp"

namespace qcomb {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Eigenphases in [0, 2π), ascending, with multiplicity.
struct EigenphaseSet {
  std::vector<double> phases;
};

inline double wrap_phase(double ph) {
  ph = std::fmod(ph, kTwoPi);
  if (ph < 0) ph += kTwoPi;
  if (ph >= kTwoPi) ph -= kTwoPi;
  return ph;
}

inline EigenphaseSet eigenphases(const ComplexMatrix& u) {
  EigenphaseSet s{eig_unitary(u).phases};
  for (auto& p : s.phases) p = wrap_phase(p);
  std::sort(s.phases.begin(), s.phases.end());
  return s;
}

namespace detail {
// Position (in sorted order) right after the largest circular gap, and the
// gap itself. Ties go to the first gap encountered.
inline std::pair<std::size_t, double> largest_gap(const std::vector<double>& sorted) {
  const std::size_t n = sorted.size();
  std::size_t best = n - 1;
  double gap = sorted.front() + kTwoPi - sorted.back();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double g = sorted[k + 1] - sorted[k];
    if (g > gap) {
      gap = g;
      best = k;
    }
  }
  return {(best + 1) % n, gap};
}
}  // namespace detail

/// Length of the shortest arc covering all phases.
inline double spread_of(const EigenphaseSet& s) {
  if (s.phases.empty()) throw ShapeError("spread_of: empty phase set");
  return kTwoPi - detail::largest_gap(s.phases).second;
}

inline double angular_spread(const ComplexMatrix& u) { return spread_of(eigenphases(u)); }

/// max{0, cos(Θ/2)}: the overlap left when discriminating u from the identity.
inline double discriminability(const ComplexMatrix& u) {
  return std::max(0.0, std::cos(angular_spread(u) / 2.0));
}

/// Number of distinct eigenvalues (phases closer than tol are merged).
inline std::size_t distinct_eigenvalues(const ComplexMatrix& u, double tol = 1e-9) {
  const auto s = eigenphases(u).phases;
  std::size_t c = 1;
  for (std::size_t k = 1; k < s.size(); ++k)
    if (s[k] - s[k - 1] > tol) ++c;
  if (c > 1 && s.front() + kTwoPi - s.back() <= tol) --c;
  return c;
}

struct SpreadLawReport {
  double theta_x = 0, theta_y = 0;
  double theta_product = 0;     // Θ(xy)
  double theta_tensor = 0;      // Θ(x⊗y)
  double theta_conjugated = 0;  // Θ(T x T†)
  bool guard = false;           // Θ(x) + Θ(y) < 2π
  double subadditivity_slack = 0;  // Θ(x)+Θ(y) − Θ(xy)
  double tensor_gap = 0;           // Θ(x⊗y) − Θ(x) − Θ(y)
  double conjugation_gap = 0;      // Θ(TxT†) − Θ(x)
  bool subadditive = true, tensor_additive = true, conjugation_invariant = true;
};

inline SpreadLawReport check_spread_laws(const ComplexMatrix& x, const ComplexMatrix& y, const ComplexMatrix& t,
                                         double tol = 1e-9) {
  if (x.rows() != y.rows() || t.rows() != x.rows()) throw ShapeError("check_spread_laws: dimension mismatch");
  SpreadLawReport r;
  r.theta_x = angular_spread(x);
  r.theta_y = angular_spread(y);
  r.theta_product = angular_spread(x * y);
  r.theta_tensor = angular_spread(kron(x, y));
  r.theta_conjugated = angular_spread(t * x * t.adjoint());
  r.guard = r.theta_x + r.theta_y < kTwoPi;
  r.subadditivity_slack = r.theta_x + r.theta_y - r.theta_product;
  r.tensor_gap = r.theta_tensor - r.theta_x - r.theta_y;
  r.conjugation_gap = r.theta_conjugated - r.theta_x;
  r.conjugation_invariant = std::abs(r.conjugation_gap) <= tol;
  if (r.guard) {
    r.subadditive = r.subadditivity_slack >= -tol;
    r.tensor_additive = std::abs(r.tensor_gap) <= tol;
  }
  return r;
}

inline SpreadLawReport check_spread_laws(const ComplexMatrix& x, const ComplexMatrix& y, Rng& rng,
                                         double tol = 1e-9) {
  return check_spread_laws(x, y, haar_unitary(x.rows(), rng), tol);
}

/// (T_j† V_j): discriminating this sequence from identities is equivalent to
/// discriminating (V_j) from (T_j).
inline std::vector<ComplexMatrix> reduce_sequences(const std::vector<ComplexMatrix>& t_list,
                                                   const std::vector<ComplexMatrix>& v_list) {
  if (t_list.size() != v_list.size()) throw ShapeError("reduce_sequences: lists differ in length");
  std::vector<ComplexMatrix> out;
  for (std::size_t j = 0; j < t_list.size(); ++j) {
    if (!is_unitary(t_list[j]) || !is_unitary(v_list[j]))
      throw DomainError("reduce_sequences: element " + std::to_string(j) + " is not unitary");
    if (t_list[j].rows() != v_list[j].rows()) throw ShapeError("reduce_sequences: dimension mismatch at " + std::to_string(j));
    out.push_back(t_list[j].adjoint() * v_list[j]);
  }
  return out;
}

namespace detail {
// Eigenvector indices ordered along the covering arc, from its start to its end.
inline std::vector<std::size_t> arc_order(const std::vector<double>& phases) {
  const std::size_t n = phases.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t k = 0; k < n; ++k) idx[k] = k;
  std::vector<double> wrapped(n);
  for (std::size_t k = 0; k < n; ++k) wrapped[k] = wrap_phase(phases[k]);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return wrapped[a] < wrapped[b]; });
  std::vector<double> sorted(n);
  for (std::size_t k = 0; k < n; ++k) sorted[k] = wrapped[idx[k]];
  const std::size_t start = largest_gap(sorted).first;
  std::vector<std::size_t> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = idx[(start + k) % n];
  return out;
}
}  // namespace detail

/// Unitary T sending the eigenbasis of v onto that of u, with the arc
/// extremes paired (start with start, end with end) and the remaining
/// eigenvectors paired in arc order.
inline ComplexMatrix matching_conjugation(const ComplexMatrix& u, const ComplexMatrix& v) {
  if (u.rows() != v.rows()) throw ShapeError("matching_conjugation: dimension mismatch");
  const UnitaryEigen eu = eig_unitary(u), ev = eig_unitary(v);
  const auto ou = detail::arc_order(eu.phases), ov = detail::arc_order(ev.phases);
  const std::size_t n = u.rows();
  ComplexMatrix t(n, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) t(i, j) += eu.vectors(i, ou[k]) * std::conj(ev.vectors(j, ov[k]));
  return t;
}

struct ParallelOptimalityReport {
  std::size_t n = 1;
  double theta = 0;             // Θ(u)
  double theta_tensor = 0;      // Θ(u^{⊗n}) computed directly
  double predicted = 0;         // n·Θ(u)
  bool guard = false;           // n·Θ(u) < 2π
  bool additive = false;        // |Θ(u^{⊗n}) − n·Θ(u)| ≤ tol under the guard
  std::optional<std::size_t> threshold;         // min n with n·Θ(u) ≥ π
  std::optional<std::size_t> direct_threshold;  // min k ≤ n with Θ(u^{⊗k}) ≥ π, by direct computation
  bool two_level = false;       // u has exactly two distinct eigenvalues
};

inline ParallelOptimalityReport parallel_optimality_check(const ComplexMatrix& u, std::size_t n, double tol = 1e-9) {
  if (n == 0) throw DomainError("parallel_optimality_check: n must be at least 1");
  ParallelOptimalityReport r;
  r.n = n;
  r.theta = angular_spread(u);
  r.predicted = double(n) * r.theta;
  r.guard = r.predicted < kTwoPi;
  r.two_level = distinct_eigenvalues(u) == 2;
  if (r.theta > tol) r.threshold = std::size_t(std::ceil(std::numbers::pi / r.theta - 1e-12));
  ComplexMatrix p = u;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k > 1) p = kron(p, u);
    const double th = angular_spread(p);
    if (!r.direct_threshold && th >= std::numbers::pi - tol) r.direct_threshold = k;
    if (k == n) r.theta_tensor = th;
  }
  r.additive = !r.guard || std::abs(r.theta_tensor - r.predicted) <= tol;
  return r;
}

struct SpreadSuiteReport {
  std::size_t samples = 0;
  std::size_t guarded = 0;  // pairs with Θ(x)+Θ(y) < 2π
  std::size_t conjugation_failures = 0;
  std::size_t subadditivity_failures = 0;
  std::size_t tensor_failures = 0;
  double worst_conjugation_gap = 0;
  double worst_subadditivity_slack = 0;  // most negative slack seen
  double worst_tensor_gap = 0;
  // Same counts restricted to Θ(x)+Θ(y) ≤ π.
  std::size_t half_guarded = 0;
  std::size_t half_tensor_failures = 0;
  std::size_t half_subadditivity_failures = 0;
};

/// Spread laws over Haar-random pairs with dimensions cycling through 2..max_dim.
inline SpreadSuiteReport run_spread_suite(std::size_t samples, std::size_t max_dim, std::uint64_t seed,
                                          double tol = 1e-9) {
  if (max_dim < 2) throw DomainError("run_spread_suite: max_dim must be at least 2");
  Rng rng(seed);
  SpreadSuiteReport s;
  s.samples = samples;
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t d = 2 + i % (max_dim - 1);
    const ComplexMatrix x = haar_unitary(d, rng), y = haar_unitary(d, rng);
    const SpreadLawReport r = check_spread_laws(x, y, rng, tol);
    if (!r.conjugation_invariant) ++s.conjugation_failures;
    s.worst_conjugation_gap = std::max(s.worst_conjugation_gap, std::abs(r.conjugation_gap));
    if (!r.guard) continue;
    ++s.guarded;
    if (!r.subadditive) ++s.subadditivity_failures;
    if (!r.tensor_additive) ++s.tensor_failures;
    s.worst_subadditivity_slack = std::min(s.worst_subadditivity_slack, r.subadditivity_slack);
    s.worst_tensor_gap = std::max(s.worst_tensor_gap, std::abs(r.tensor_gap));
    if (r.theta_x + r.theta_y <= std::numbers::pi) {
      ++s.half_guarded;
      if (!r.tensor_additive) ++s.half_tensor_failures;
      if (!r.subadditive) ++s.half_subadditivity_failures;
    }
  }
  return s;
}

struct MatchingSuiteReport {
  std::size_t samples = 0;
  std::size_t guarded = 0;
  std::size_t failures = 0;  // |Θ(u T v T†) − Θ(u⊗v)| > tol among guarded pairs
  double worst_gap = 0;
  std::size_t half_guarded = 0;
  std::size_t half_failures = 0;
};

/// matching_conjugation against Θ(u⊗v) over Haar-random pairs (d = 2, 3).
inline MatchingSuiteReport run_matching_suite(std::size_t samples, std::uint64_t seed, double tol = 1e-9) {
  Rng rng(seed);
  MatchingSuiteReport s;
  s.samples = samples;
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t d = 2 + i % 2;
    const ComplexMatrix u = haar_unitary(d, rng), v = haar_unitary(d, rng);
    const double tu = angular_spread(u), tv = angular_spread(v);
    if (tu + tv >= kTwoPi) continue;
    ++s.guarded;
    const ComplexMatrix t = matching_conjugation(u, v);
    const double gap = std::abs(angular_spread(u * t * v * t.adjoint()) - angular_spread(kron(u, v)));
    s.worst_gap = std::max(s.worst_gap, gap);
    if (gap > tol) ++s.failures;
    if (tu + tv <= std::numbers::pi) {
      ++s.half_guarded;
      if (gap > tol) ++s.half_failures;
    }
  }
  return s;
}

}  // namespace qcomb
