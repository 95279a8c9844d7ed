#pragma once

// Two-use memory channels that a parallel scheme cannot discriminate while
// an adaptive one can, with dimensions 0→d, 1→d², 2→d, 3→d.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "qcomb/discrimination.hpp"

namespace qcomb {

/// Cyclic shift Z|n⟩ = |n+1 mod d⟩.
inline ComplexMatrix shift_operator(std::size_t d) {
  ComplexMatrix z(d, d);
  for (std::size_t n = 0; n < d; ++n) z((n + 1) % d, n) = 1.0;
  return z;
}

/// Clock U|n⟩ = e^{2πin/d}|n⟩.
inline ComplexMatrix clock_operator(std::size_t d) {
  ComplexMatrix u(d, d);
  for (std::size_t n = 0; n < d; ++n) u(n, n) = std::polar(1.0, 2.0 * std::numbers::pi * double(n) / double(d));
  return u;
}

/// W_{p,q} = Z^p U^q.
inline ComplexMatrix shift_multiply(std::size_t p, std::size_t q, std::size_t d) {
  if (d == 0 || p >= d || q >= d)
    throw DomainError("shift_multiply: indices must satisfy 0 <= p, q < d (got p=" + std::to_string(p) +
                      ", q=" + std::to_string(q) + ", d=" + std::to_string(d) + ")");
  ComplexMatrix w(d, d);
  for (std::size_t n = 0; n < d; ++n)
    w((n + p) % d, n) = std::polar(1.0, 2.0 * std::numbers::pi * double(n * q % d) / double(d));
  return w;
}

struct ExampleInstance {
  std::size_t d = 2;
  MemoryChannel c0, c1;
  CombRealization r0, r1;
  ComplexMatrix shift, clock;
  double construction_residual = 0;  // dilation vs closed form, max over both combs
};

namespace detail {

inline ComplexMatrix basis_projector(std::size_t dim, std::size_t k) {
  ComplexMatrix p(dim, dim);
  p(k, k) = 1.0;
  return p;
}

// Closed-form Choi operators on spaces (0, 1, 2, 3), summing p, q over
// [first, d).
inline LabeledOperator example_c0(std::size_t d, std::size_t first = 0) {
  const std::size_t side = d * d * d * d * d;
  LabeledOperator acc(ComplexMatrix(side, side), {1, 3, 2, 0}, {d * d, d, d, d});
  for (std::size_t p = first; p < d; ++p)
    for (std::size_t q = first; q < d; ++q) {
      const ComplexMatrix k = double_ket(shift_multiply(p, q, d));
      const ComplexMatrix term =
          kron(kron(basis_projector(d * d, p * d + q), k * k.adjoint()), ComplexMatrix::identity(d));
      acc.matrix().add_scaled(term, 1.0 / double(d * d));
    }
  return acc.sorted();
}

inline LabeledOperator example_c1(std::size_t d) {
  const ComplexMatrix m = kron(kron(ComplexMatrix::identity(d * d), basis_projector(d, 0)), ComplexMatrix::identity(d * d));
  LabeledOperator c(m * (1.0 / double(d * d)), {1, 3, 0, 2}, {d * d, d, d, d});
  return c.sorted();
}

}  // namespace detail

/// Kraus dilations: the first use records (p, q) in a d²-dimensional
/// memory, the second applies W_{p,q} conditioned on it; the alternative
/// channel forgets its input and outputs |0⟩.
inline ExampleInstance build_example(std::size_t d) {
  if (d < 2) throw DomainError("build_example: d must be at least 2");
  ExampleInstance inst;
  inst.d = d;
  inst.shift = shift_operator(d);
  inst.clock = clock_operator(d);
  const std::size_t dd = d * d;
  const double s = 1.0 / double(d);

  ChainStep w0{{}, d, dd};  // (0) → (1 ⊗ A), A = d²
  for (std::size_t pq = 0; pq < dd; ++pq)
    for (std::size_t n = 0; n < d; ++n) {
      ComplexMatrix k(dd * dd, d);
      k(pq * dd + pq, n) = s;
      w0.kraus.push_back(std::move(k));
    }
  ChainStep z0{{}, d, d};  // (2 ⊗ A) → (3)
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t q = 0; q < d; ++q) {
      const ComplexMatrix w = shift_multiply(p, q, d);
      ComplexMatrix k(d, d * dd);
      for (std::size_t o = 0; o < d; ++o)
        for (std::size_t i = 0; i < d; ++i) k(o, i * dd + p * d + q) = w(o, i);
      z0.kraus.push_back(std::move(k));
    }
  inst.r0.blocks = {w0, z0};
  inst.r0.memory_dims = {dd, 1};

  ChainStep w1{{}, d, dd};
  for (std::size_t pq = 0; pq < dd; ++pq)
    for (std::size_t n = 0; n < d; ++n) {
      ComplexMatrix k(dd, d);
      k(pq, n) = s;
      w1.kraus.push_back(std::move(k));
    }
  ChainStep z1{{}, d, d};
  for (std::size_t n = 0; n < d; ++n) {
    ComplexMatrix k(d, d);
    k(0, n) = 1.0;
    z1.kraus.push_back(std::move(k));
  }
  inst.r1.blocks = {w1, z1};
  inst.r1.memory_dims = {1, 1};

  inst.c0 = comb_from_realization(inst.r0);
  inst.c1 = comb_from_realization(inst.r1);
  inst.construction_residual = std::max(frobenius_distance(inst.c0.choi(), detail::example_c0(d)),
                                        frobenius_distance(inst.c1.choi(), detail::example_c1(d)));
  return inst;
}

struct ParallelImpossibilityReport {
  LabeledOperator reduced;        // Tr₁₃[C₀C₁] on spaces 0, 2
  double identity_residual = 0;   // ‖Tr₁₃[C₀C₁] − I/d²‖_F
  double fitted_scale = 0;        // s with Tr₁₃[C₀C₁] ≈ s·I
  double fitted_residual = 0;     // ‖Tr₁₃[C₀C₁] − s·I‖_F
  // Same quantities with the sums in C₀ restricted to p, q ≥ 1.
  double one_based_identity_residual = 0;
  double one_based_comb_residual = 0;  // hierarchy residual of that C₀
  FeasibilityReport solver;
};

inline ParallelImpossibilityReport verify_parallel_impossible(const ExampleInstance& inst, const SolverOptions& opt = {},
                                                              bool run_solver = true) {
  const std::size_t d = inst.d;
  ParallelImpossibilityReport r;
  auto reduce = [&](const LabeledOperator& a) {
    const LabeledOperator prod = a * inst.c1.choi();
    return partial_trace(prod, {1, 3});
  };
  r.reduced = reduce(inst.c0.choi());
  const ComplexMatrix target = ComplexMatrix::identity(d * d) * (1.0 / double(d * d));
  r.identity_residual = (r.reduced.matrix() - target).frobenius_norm();
  r.fitted_scale = r.reduced.matrix().trace().real() / double(d * d);
  r.fitted_residual = (r.reduced.matrix() - ComplexMatrix::identity(d * d) * r.fitted_scale).frobenius_norm();
  const LabeledOperator one_based = detail::example_c0(d, 1);
  r.one_based_identity_residual = (reduce(one_based).matrix() - target).frobenius_norm();
  r.one_based_comb_residual = validate_comb(MemoryChannel(one_based)).max_residual;
  if (run_solver) r.solver = parallel_discriminable(inst.c0, inst.c1, opt);
  return r;
}

/// Delayed-measurement form of the adaptive protocol: send ψ, record the
/// outcome (p, q) of system 1 coherently in B₂ while preparing W†_{p,q}|1⟩
/// for the second use, then test system 3 for |1⟩.
inline TesterCircuit protocol_circuit(std::size_t d, const ComplexMatrix& psi) {
  if (psi.cols() != 1 || psi.rows() != d) throw ShapeError("protocol_circuit: ψ must be a column vector of size d");
  const double n = psi.frobenius_norm();
  if (std::abs(n - 1.0) > 1e-9) throw DomainError("protocol_circuit: ψ is not normalized (norm " + std::to_string(n) + ")");
  const std::size_t dd = d * d;
  TesterCircuit tc;
  tc.input_state = psi * psi.adjoint();
  tc.memory_dims = {1, dd};
  ComplexMatrix v(d * dd, dd);  // (1 ⊗ B₁) → (2 ⊗ B₂)
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t q = 0; q < d; ++q) {
      const std::size_t o = p * d + q;
      const ComplexMatrix wd = shift_multiply(p, q, d).adjoint();
      for (std::size_t e = 0; e < d; ++e) v(e * dd + o, o) = wd(e, 1);
    }
  tc.blocks.push_back({{v}, dd, d});
  const ComplexMatrix m0 = kron(detail::basis_projector(d, 1), ComplexMatrix::identity(dd));
  tc.povm = {m0, ComplexMatrix::identity(d * dd) - m0};
  return tc;
}

/// Tester of the protocol written down directly:
/// P₀ = Σ_{p,q} (ψψ†)ᵀ ⊗ |p,q⟩⟨p,q| ⊗ (φφ†)ᵀ ⊗ |1⟩⟨1| with φ = W†_{p,q}|1⟩.
inline Tester protocol_tester(std::size_t d, const ComplexMatrix& psi) {
  const std::size_t dd = d * d;
  const ComplexMatrix rho_t = (psi * psi.adjoint()).transpose();
  const ComplexMatrix one = detail::basis_projector(d, 1);
  const ComplexMatrix rest = ComplexMatrix::identity(d) - one;
  const std::size_t side = d * dd * d * d;
  ComplexMatrix p0(side, side), p1(side, side);
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t q = 0; q < d; ++q) {
      const ComplexMatrix wd = shift_multiply(p, q, d).adjoint();
      ComplexMatrix phi(d, 1);
      for (std::size_t e = 0; e < d; ++e) phi(e, 0) = wd(e, 1);
      const ComplexMatrix head = kron(kron(rho_t, detail::basis_projector(dd, p * d + q)), (phi * phi.adjoint()).transpose());
      p0 += kron(head, one);
      p1 += kron(head, rest);
    }
  const std::vector<Label> labels{0, 1, 2, 3};
  const std::vector<std::size_t> dims{d, dd, d, d};
  Tester t;
  t.elements = {LabeledOperator(p0, labels, dims), LabeledOperator(p1, labels, dims)};
  t.chain = chain_from_sum(t.elements[0] + t.elements[1]);
  return t;
}

struct ProtocolReport {
  Tester tester;                         // from the circuit
  std::vector<std::vector<double>> probabilities;  // [i][j] = Tr[P_i C_j]
  double delta_error = 0;                // max |Tr[P_i C_j] − δ_ij|
  double hand_built_gap = 0;             // max gap to the hand-built tester's probabilities
  double simulation_gap = 0;             // max gap to explicit circuit simulation
  TesterValidation validation;
};

inline ProtocolReport causal_protocol(const ExampleInstance& inst, const ComplexMatrix& psi) {
  const std::size_t d = inst.d;
  const TesterCircuit tc = protocol_circuit(d, psi);
  ProtocolReport r;
  r.tester = tester_from_circuit(tc);
  const Tester hand = protocol_tester(d, psi);
  const auto a0 = born_probabilities(r.tester, inst.c0), a1 = born_probabilities(r.tester, inst.c1);
  const auto h0 = born_probabilities(hand, inst.c0), h1 = born_probabilities(hand, inst.c1);
  const auto s0 = simulate_tester_circuit(tc, inst.r0), s1 = simulate_tester_circuit(tc, inst.r1);
  r.probabilities = {{a0[0], a1[0]}, {a0[1], a1[1]}};
  for (std::size_t i = 0; i < 2; ++i) {
    r.delta_error = std::max({r.delta_error, std::abs(a0[i] - (i == 0 ? 1.0 : 0.0)), std::abs(a1[i] - (i == 1 ? 1.0 : 0.0))});
    r.hand_built_gap = std::max({r.hand_built_gap, std::abs(a0[i] - h0[i]), std::abs(a1[i] - h1[i])});
    r.simulation_gap = std::max({r.simulation_gap, std::abs(a0[i] - s0[i]), std::abs(a1[i] - s1[i])});
  }
  r.validation = validate_tester(r.tester);
  return r;
}

}  // namespace qcomb
