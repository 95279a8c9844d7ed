#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qcomb/random.hpp"
#include "qcomb/unitary.hpp"

using namespace qcomb;

namespace {

constexpr double kPi = std::numbers::pi;

ComplexMatrix phases(std::initializer_list<double> ph) {
  std::vector<cplx> d;
  for (double p : ph) d.push_back(std::polar(1.0, p));
  return ComplexMatrix::diagonal(std::span<const cplx>(d));
}

ComplexMatrix hadamard() {
  const double s = 1.0 / std::sqrt(2.0);
  return ComplexMatrix{{s, s}, {s, -s}};
}

}  // namespace

TEST(AngularSpread, Examples) {
  EXPECT_NEAR(angular_spread(ComplexMatrix::identity(3)), 0.0, 1e-12);
  EXPECT_NEAR(angular_spread(phases({0, kPi})), kPi, 1e-12);
  EXPECT_NEAR(angular_spread(phases({0, kPi / 2, kPi})), kPi, 1e-12);
  // Phases straddling the branch cut.
  EXPECT_NEAR(angular_spread(phases({-0.3, 0.2})), 0.5, 1e-12);
  EXPECT_NEAR(angular_spread(phases({0, 2 * kPi / 3, 4 * kPi / 3})), 4 * kPi / 3, 1e-12);
}

TEST(AngularSpread, GlobalPhaseAndConjugationInvariant) {
  Rng rng(61);
  const ComplexMatrix u = haar_unitary(4, rng), t = haar_unitary(4, rng);
  const double th = angular_spread(u);
  EXPECT_NEAR(angular_spread(u * std::polar(1.0, 1.234)), th, 1e-9);
  EXPECT_NEAR(angular_spread(t * u * t.adjoint()), th, 1e-9);
}

TEST(Discriminability, Examples) {
  EXPECT_NEAR(discriminability(ComplexMatrix::identity(2)), 1.0, 1e-12);
  EXPECT_NEAR(discriminability(phases({0, kPi})), 0.0, 1e-12);
  EXPECT_NEAR(discriminability(phases({0, kPi / 2})), std::sqrt(2.0) / 2, 1e-12);
  EXPECT_NEAR(discriminability(phases({0, 2.0, 4.0})), 0.0, 1e-12);
  // Largest gap 3.5, so the phases fit in an arc shorter than π.
  EXPECT_NEAR(discriminability(phases({0, 0.5, 4.0})), std::cos((2 * kPi - 3.5) / 2), 1e-12);
}

TEST(SpreadLaws, IdentityPair) {
  Rng rng(62);
  const auto r = check_spread_laws(ComplexMatrix::identity(2), ComplexMatrix::identity(2), rng);
  EXPECT_TRUE(r.subadditive && r.tensor_additive && r.conjugation_invariant);
  EXPECT_NEAR(r.subadditivity_slack, 0.0, 1e-12);
  EXPECT_NEAR(r.tensor_gap, 0.0, 1e-12);
}

TEST(SpreadLaws, DiagonalPairIsTensorAdditive) {
  Rng rng(63);
  const double a = 1.1, b = 2.3;
  const auto r = check_spread_laws(phases({0, a}), phases({0, b}), rng);
  EXPECT_TRUE(r.guard);
  EXPECT_NEAR(r.theta_tensor, a + b, 1e-12);
  EXPECT_TRUE(r.tensor_additive);
  EXPECT_TRUE(r.subadditive);
}

TEST(SpreadLaws, HaarPairsUnderHalfGuard) {
  const auto s = run_spread_suite(200, 4, 64);
  EXPECT_EQ(s.conjugation_failures, 0u);
  EXPECT_GT(s.half_guarded, 0u);
  EXPECT_EQ(s.half_subadditivity_failures, 0u);
  EXPECT_EQ(s.half_tensor_failures, 0u);
}

TEST(ReduceSequences, Examples) {
  Rng rng(65);
  const std::vector<ComplexMatrix> t{haar_unitary(2, rng), haar_unitary(3, rng)};
  for (const auto& u : reduce_sequences(t, t)) EXPECT_LT((u - ComplexMatrix::identity(u.rows())).max_abs(), 1e-12);
  const std::vector<ComplexMatrix> ids{ComplexMatrix::identity(2), ComplexMatrix::identity(3)};
  const auto same = reduce_sequences(ids, t);
  for (std::size_t j = 0; j < t.size(); ++j) EXPECT_EQ((same[j] - t[j]).max_abs(), 0.0);
  const std::vector<ComplexMatrix> v{haar_unitary(2, rng), haar_unitary(3, rng)};
  for (const auto& u : reduce_sequences(t, v)) EXPECT_TRUE(is_unitary(u, 1e-12));
  EXPECT_THROW(reduce_sequences(t, {v[0]}), ShapeError);
  EXPECT_THROW(reduce_sequences({ComplexMatrix::identity(2) * 2.0}, {v[0]}), DomainError);
}

TEST(MatchingConjugation, CommonEigenbasis) {
  const double a = 1.2;
  const ComplexMatrix u = phases({0, a});
  const ComplexMatrix t = matching_conjugation(u, u);
  EXPECT_TRUE(is_unitary(t, 1e-10));
  EXPECT_NEAR(angular_spread(u * t * u * t.adjoint()), 2 * a, 1e-9);
  EXPECT_NEAR(angular_spread(kron(u, u)), 2 * a, 1e-9);
}

TEST(MatchingConjugation, RealignsRotatedBasis) {
  const double a = 0.9, b = 1.7;
  const ComplexMatrix u = phases({0, a});
  const ComplexMatrix v = hadamard() * phases({0, b}) * hadamard();
  const ComplexMatrix t = matching_conjugation(u, v);
  EXPECT_TRUE(is_unitary(t, 1e-10));
  EXPECT_NEAR(angular_spread(u * t * v * t.adjoint()), a + b, 1e-9);
}

TEST(MatchingConjugation, HaarPairsUnderHalfGuard) {
  const auto s = run_matching_suite(200, 66);
  EXPECT_GT(s.half_guarded, 0u);
  EXPECT_EQ(s.half_failures, 0u);
}

TEST(ParallelOptimality, Examples) {
  const auto q = parallel_optimality_check(phases({0, kPi / 2}), 2);
  EXPECT_NEAR(q.theta_tensor, kPi, 1e-9);
  ASSERT_TRUE(q.threshold.has_value());
  EXPECT_EQ(*q.threshold, 2u);
  EXPECT_EQ(q.direct_threshold, std::optional<std::size_t>(2));
  const auto id = parallel_optimality_check(ComplexMatrix::identity(2), 4);
  EXPECT_NEAR(id.theta_tensor, 0.0, 1e-12);
  EXPECT_FALSE(id.threshold.has_value());
  EXPECT_FALSE(id.direct_threshold.has_value());
}

TEST(ParallelOptimality, ThresholdMatchesDirectTensorPowers) {
  Rng rng(67);
  int checked = 0;
  for (int k = 0; k < 30; ++k) {
    const ComplexMatrix u = haar_unitary(2, rng);
    const auto r = parallel_optimality_check(u, 4);
    EXPECT_TRUE(r.two_level);
    if (4 * r.theta <= kPi) EXPECT_NEAR(r.theta_tensor, 4 * r.theta, 1e-9);
    if (r.threshold && *r.threshold <= 4) {
      EXPECT_EQ(r.direct_threshold, r.threshold);
      ++checked;
    } else {
      EXPECT_FALSE(r.direct_threshold.has_value());
    }
  }
  EXPECT_GT(checked, 0);
}
