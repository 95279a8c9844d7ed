#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qcomb/labeled.hpp"
#include "qcomb/random.hpp"

using namespace qcomb;

namespace {

double max_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).max_abs(); }

ComplexMatrix random_hermitian(std::size_t n, Rng& rng) { return ginibre(n, n, rng).hermitian_part(); }

const ComplexMatrix kPauliX{{0.0, 1.0}, {1.0, 0.0}};

}  // namespace

TEST(Tensor, IdentityTimesIdentity) {
  const auto a = LabeledOperator::identity({0}, {2});
  const auto b = LabeledOperator::identity({1}, {2});
  const auto t = tensor(a, b);
  EXPECT_EQ(t.labels(), (std::vector<Label>{0, 1}));
  EXPECT_EQ(max_diff(t.matrix(), ComplexMatrix::identity(4)), 0.0);
}

TEST(Tensor, BasisProjectors) {
  const ComplexMatrix p0{{1.0, 0.0}, {0.0, 0.0}}, p1{{0.0, 0.0}, {0.0, 1.0}};
  const auto t = tensor(LabeledOperator(p0, {0}, {2}), LabeledOperator(p1, {1}, {2}));
  ComplexMatrix expected(4, 4);
  expected(1, 1) = 1.0;
  EXPECT_EQ(max_diff(t.matrix(), expected), 0.0);
}

TEST(Tensor, MatchesIndexLoopKronecker) {
  Rng rng(3);
  const ComplexMatrix z{{1.0, 0.0}, {0.0, -1.0}};
  const ComplexMatrix u = haar_unitary(2, rng);
  EXPECT_LT(max_diff(kron(z, u), oracle::kron(z, u)), 1e-15);
  const ComplexMatrix a = ginibre(3, 2, rng), b = ginibre(2, 4, rng);
  EXPECT_LT(max_diff(kron(a, b), oracle::kron(a, b)), 1e-15);
}

TEST(Tensor, RejectsSharedLabels) {
  const auto a = LabeledOperator::identity({0}, {2});
  EXPECT_THROW(tensor(a, a), ShapeError);
}

TEST(PartialTrace, IdentityGivesDimension) {
  const auto r = partial_trace(LabeledOperator::identity({0, 1}, {2, 2}), {1});
  EXPECT_EQ(r.labels(), (std::vector<Label>{0}));
  EXPECT_EQ(max_diff(r.matrix(), 2.0 * ComplexMatrix::identity(2)), 0.0);
}

TEST(PartialTrace, MaximallyEntangledGivesMixed) {
  const ComplexMatrix phi = double_ket(ComplexMatrix::identity(2)) * (1.0 / std::sqrt(2.0));
  const LabeledOperator p(phi * phi.adjoint(), {0, 1}, {2, 2});
  EXPECT_LT(max_diff(partial_trace(p, {1}).matrix(), 0.5 * ComplexMatrix::identity(2)), 1e-15);
}

TEST(PartialTrace, MatchesIndexContraction) {
  Rng rng(5);
  const std::vector<std::size_t> dims{2, 3, 2};
  const ComplexMatrix m = ginibre(12, 12, rng);
  const LabeledOperator op(m, {4, 7, 9}, dims);
  EXPECT_LT(max_diff(partial_trace(op, {7}).matrix(), oracle::partial_trace(m, dims, {false, true, false})), 1e-13);
  EXPECT_LT(max_diff(partial_trace(op, {4, 9}).matrix(), oracle::partial_trace(m, dims, {true, false, true})), 1e-13);
  EXPECT_NEAR(std::abs(partial_trace(op, {4, 7, 9}).matrix()(0, 0) - m.trace()), 0.0, 1e-12);
}

TEST(PartialTrace, UnknownLabelThrows) {
  EXPECT_THROW(partial_trace(LabeledOperator::identity({0}, {2}), {3}), ShapeError);
}

TEST(Permute, RoundTripAndAlignment) {
  Rng rng(8);
  const std::vector<std::size_t> dims{2, 3, 2};
  const LabeledOperator op(ginibre(12, 12, rng), {0, 1, 2}, dims);
  const auto p = op.permuted({2, 0, 1});
  EXPECT_EQ(p.dims(), (std::vector<std::size_t>{2, 2, 3}));
  EXPECT_EQ(max_diff(p.permuted({0, 1, 2}).matrix(), op.matrix()), 0.0);
  // Tracing commutes with relabeling order.
  EXPECT_LT(max_diff(partial_trace(p, {1}).permuted({0, 2}).matrix(), partial_trace(op, {1}).matrix()), 1e-14);
}

TEST(Eigh, DiagonalAndPauli) {
  const double d[] = {3.0, 1.0, 2.0};
  const auto es = eigh(ComplexMatrix::diagonal(std::span<const double>(d)));
  EXPECT_NEAR(es.values[0], 1.0, 1e-14);
  EXPECT_NEAR(es.values[1], 2.0, 1e-14);
  EXPECT_NEAR(es.values[2], 3.0, 1e-14);
  const auto ex = eigh(kPauliX);
  EXPECT_NEAR(ex.values[0], -1.0, 1e-14);
  EXPECT_NEAR(ex.values[1], 1.0, 1e-14);
}

TEST(Eigh, ReconstructsRandomHermitian) {
  Rng rng(11);
  for (std::size_t n : {1u, 2u, 5u, 8u, 33u}) {
    const ComplexMatrix h = random_hermitian(n, rng);
    const auto es = eigh(h);
    const ComplexMatrix back = es.vectors * ComplexMatrix::diagonal(std::span<const double>(es.values)) * es.vectors.adjoint();
    EXPECT_LT(max_diff(back, h), 1e-9) << "n = " << n;
    EXPECT_TRUE(is_unitary(es.vectors, 1e-10));
    for (std::size_t k = 1; k < n; ++k) EXPECT_LE(es.values[k - 1], es.values[k]);
  }
}

TEST(Eigh, RejectsNonHermitian) {
  const ComplexMatrix a{{0.0, 1.0}, {0.0, 0.0}};
  EXPECT_THROW(eigh(a), DomainError);
}

TEST(TraceNorm, Examples) {
  EXPECT_EQ(trace_norm(ComplexMatrix(3, 3)), 0.0);
  Rng rng(2);
  EXPECT_NEAR(trace_norm(haar_unitary(4, rng)), 4.0, 1e-10);
  const ComplexMatrix d{{1.0, 0.0}, {0.0, -2.0}};
  EXPECT_NEAR(trace_norm(d), 3.0, 1e-14);
  // Nilpotent: singular values 1 and 0.
  const ComplexMatrix n{{0.0, 1.0}, {0.0, 0.0}};
  EXPECT_NEAR(trace_norm(n), 1.0, 1e-12);
}

TEST(TraceNorm, NonHermitianMatchesSingularValues) {
  Rng rng(9);
  const ComplexMatrix a = ginibre(4, 4, rng);
  double s = 0;
  for (double v : eigvalsh((a.adjoint() * a).hermitian_part())) s += std::sqrt(std::max(v, 0.0));
  EXPECT_NEAR(trace_norm(a), s, 1e-10);
}

TEST(DoubleKet, Examples) {
  const ComplexMatrix v = double_ket(ComplexMatrix::identity(2));
  EXPECT_EQ(v.rows(), 4u);
  EXPECT_EQ(v(0, 0), cplx(1.0));
  EXPECT_EQ(v(1, 0), cplx(0.0));
  EXPECT_EQ(v(2, 0), cplx(0.0));
  EXPECT_EQ(v(3, 0), cplx(1.0));
  ComplexMatrix e01(2, 2);
  e01(0, 1) = 1.0;
  const ComplexMatrix w = double_ket(e01);
  EXPECT_EQ(w(1, 0), cplx(1.0));
  EXPECT_EQ(w.frobenius_norm(), 1.0);
  Rng rng(4);
  const ComplexMatrix r = ginibre(2, 3, rng);
  EXPECT_EQ(max_diff(double_ket(r), oracle::double_ket(r)), 0.0);
}

TEST(PsdSqrt, Examples) {
  EXPECT_LT(max_diff(psd_sqrt(ComplexMatrix::identity(3)), ComplexMatrix::identity(3)), 1e-14);
  const ComplexMatrix d{{4.0, 0.0}, {0.0, 0.0}};
  const ComplexMatrix s = psd_sqrt(d), si = psd_inv_sqrt(d);
  EXPECT_NEAR(s(0, 0).real(), 2.0, 1e-14);
  EXPECT_NEAR(std::abs(s(1, 1)), 0.0, 1e-14);
  EXPECT_NEAR(si(0, 0).real(), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(si(1, 1)), 0.0, 1e-14);
}

TEST(PsdSqrt, ReconstructsRandomPsd) {
  Rng rng(6);
  const ComplexMatrix g = ginibre(6, 4, rng);
  const ComplexMatrix h = g * g.adjoint();
  const ComplexMatrix s = psd_sqrt(h);
  EXPECT_LT(max_diff(s * s, h), 1e-9);
  const LabeledOperator lh(h, {0, 1}, {2, 3});
  const LabeledOperator ls = psd_sqrt(lh);
  EXPECT_EQ(ls.labels(), lh.labels());
  EXPECT_LT(max_diff(ls.matrix() * ls.matrix(), h), 1e-9);
}

TEST(PsdSqrt, ClipsTinyNegativesAndRejectsLargeOnes) {
  const ComplexMatrix tiny{{1.0, 0.0}, {0.0, -1e-11}};
  EXPECT_NO_THROW(psd_sqrt(tiny));
  const ComplexMatrix neg{{1.0, 0.0}, {0.0, -1e-3}};
  EXPECT_THROW(psd_sqrt(neg), DomainError);
}

TEST(LowRankFactor, ReproducesProduct) {
  Rng rng(12);
  const ComplexMatrix g = ginibre(7, 3, rng);
  const ComplexMatrix h = g * g.adjoint();
  const ComplexMatrix m = low_rank_factor(h);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_LT(max_diff(m * m.adjoint(), h), 1e-12);
}

TEST(EigUnitary, DiagonalizesRandomAndDegenerate) {
  Rng rng(13);
  for (const ComplexMatrix& u : {haar_unitary(4, rng), kron(kPauliX, ComplexMatrix::identity(2))}) {
    const auto ue = eig_unitary(u);
    ComplexMatrix d(u.rows(), u.rows());
    for (std::size_t k = 0; k < u.rows(); ++k) d(k, k) = std::polar(1.0, ue.phases[k]);
    EXPECT_TRUE(is_unitary(ue.vectors, 1e-9));
    EXPECT_LT(max_diff(ue.vectors * d * ue.vectors.adjoint(), u), 1e-9);
  }
}

TEST(Hermiticity, ToleranceIsRelative) {
  ComplexMatrix h = 1e6 * ComplexMatrix::identity(2);
  h(0, 1) = 1e-6;
  EXPECT_TRUE(is_hermitian(h));
  h(0, 1) = 1e-2;
  EXPECT_FALSE(is_hermitian(h));
}
