#pragma once

#include <random>
#include <vector>

#include "qcomb/matrix.hpp"

namespace qcomb {

using Rng = std::mt19937_64;

inline ComplexMatrix ginibre(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix g(rows, cols);
  for (auto& z : g.data()) z = cplx(n(rng), n(rng));
  return g;
}

/// Haar-distributed n×n unitary (Gram–Schmidt on a Ginibre matrix; the
/// positive-diagonal R convention makes the law exactly Haar).
inline ComplexMatrix haar_unitary(std::size_t n, Rng& rng) {
  ComplexMatrix q = ginibre(n, n, rng);
  for (std::size_t j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) {
        cplx dot = 0;
        for (std::size_t i = 0; i < n; ++i) dot += std::conj(q(i, k)) * q(i, j);
        for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
      }
    double nrm = 0;
    for (std::size_t i = 0; i < n; ++i) nrm += std::norm(q(i, j));
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
  }
  return q;
}

/// Isometry rows×cols (rows ≥ cols): the first columns of a Haar unitary.
inline ComplexMatrix random_isometry(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows < cols) throw ShapeError("random_isometry: rows must be at least cols");
  const ComplexMatrix u = haar_unitary(rows, rng);
  ComplexMatrix v(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) v(i, j) = u(i, j);
  return v;
}

/// Kraus operators of a random channel, obtained by slicing a random
/// isometry in → out ⊗ env.
inline std::vector<ComplexMatrix> random_kraus(std::size_t in, std::size_t out, std::size_t count, Rng& rng) {
  const ComplexMatrix v = random_isometry(out * count, in, rng);
  std::vector<ComplexMatrix> ks(count, ComplexMatrix(out, in));
  for (std::size_t o = 0; o < out; ++o)
    for (std::size_t e = 0; e < count; ++e)
      for (std::size_t i = 0; i < in; ++i) ks[e](o, i) = v(o * count + e, i);
  return ks;
}

/// Random density matrix of the given rank (Ginibre ensemble).
inline ComplexMatrix random_density(std::size_t n, Rng& rng, std::size_t rank = 0) {
  const ComplexMatrix g = ginibre(n, rank ? rank : n, rng);
  ComplexMatrix rho = g * g.adjoint();
  return rho * (1.0 / rho.trace().real());
}

/// Haar-random unit vector as an n×1 matrix.
inline ComplexMatrix random_pure(std::size_t n, Rng& rng) {
  ComplexMatrix g = ginibre(n, 1, rng);
  return g * (1.0 / g.frobenius_norm());
}

}  // namespace qcomb
