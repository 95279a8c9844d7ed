#pragma once

// Seeded random instances used by the tests, the acceptance suite and the
// CLI property reports.

#include <vector>

#include "qcomb/random.hpp"
#include "qcomb/testers.hpp"

namespace qcomb {

inline Channel random_channel(std::size_t in, std::size_t out, std::size_t kraus_count, Rng& rng) {
  return Channel(random_kraus(in, out, kraus_count, rng), in, out);
}

/// Random isometric comb: block n is an isometry (d_{2n−2}·A_{n−1}) →
/// (d_{2n−1}·A_n); `dims` lists d_0..d_{2N−1}.
inline CombRealization random_comb_realization(const std::vector<std::size_t>& dims,
                                               const std::vector<std::size_t>& memory_dims, Rng& rng) {
  if (dims.size() != 2 * memory_dims.size()) throw ShapeError("random_comb_realization: dims/memory mismatch");
  std::vector<ComplexMatrix> blocks;
  std::size_t prev = 1;
  for (std::size_t n = 0; n < memory_dims.size(); ++n) {
    blocks.push_back(random_isometry(dims[2 * n + 1] * memory_dims[n], dims[2 * n] * prev, rng));
    prev = memory_dims[n];
  }
  return realization_from_isometries(blocks, memory_dims);
}

/// Default tester memories: B_1 = d_0 and B_{k+1} = B_k · d_{2k−1}.
inline std::vector<std::size_t> default_tester_memory(const std::vector<std::size_t>& dims) {
  const std::size_t N = dims.size() / 2;
  std::vector<std::size_t> b{dims[0]};
  for (std::size_t k = 1; k < N; ++k) b.push_back(b.back() * dims[2 * k - 1]);
  return b;
}

/// Random two-outcome tester circuit: mixed input state, isometric blocks
/// and a random projective-free POVM {M, I − M}.
inline TesterCircuit random_tester_circuit(const std::vector<std::size_t>& dims, Rng& rng,
                                           std::vector<std::size_t> memory_dims = {}) {
  const std::size_t N = dims.size() / 2;
  if (memory_dims.empty()) memory_dims = default_tester_memory(dims);
  TesterCircuit tc;
  tc.memory_dims = memory_dims;
  tc.input_state = random_density(dims[0] * memory_dims[0], rng);
  for (std::size_t k = 1; k < N; ++k) {
    const auto v = random_isometry(dims[2 * k] * memory_dims[k], dims[2 * k - 1] * memory_dims[k - 1], rng);
    tc.blocks.push_back({{v}, dims[2 * k - 1], dims[2 * k]});
  }
  const std::size_t m = dims[2 * N - 1] * memory_dims[N - 1];
  // M = U diag(w) U† with weights in [0, 1].
  const ComplexMatrix u = haar_unitary(m, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> w(m);
  for (auto& x : w) x = unif(rng);
  const ComplexMatrix e0 = u * ComplexMatrix::diagonal(std::span<const double>(w)) * u.adjoint();
  tc.povm = {e0.hermitian_part(), (ComplexMatrix::identity(m) - e0).hermitian_part()};
  return tc;
}

}  // namespace qcomb
