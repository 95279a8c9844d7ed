#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qcomb/distances.hpp"
#include "qcomb/paper_example.hpp"
#include "qcomb/samplers.hpp"

using namespace qcomb;

namespace {

const ComplexMatrix kPauliX{{0.0, 1.0}, {1.0, 0.0}};

ComplexMatrix phase_gate(double theta) { return ComplexMatrix{{1.0, 0.0}, {0.0, std::polar(1.0, theta)}}; }

LabeledOperator choi_of(const ComplexMatrix& u) { return choi_from_kraus(Channel(u)); }

}  // namespace

TEST(UnitaryOracle, Examples) {
  Rng rng(51);
  const ComplexMatrix u = haar_unitary(3, rng);
  EXPECT_NEAR(unitary_cb_oracle(u, u), 0.0, 1e-6);
  EXPECT_NEAR(unitary_cb_oracle(ComplexMatrix::identity(2), phase_gate(std::numbers::pi)), 2.0, 1e-12);
  for (double th : {0.3, 1.0, 2.5})
    EXPECT_NEAR(unitary_cb_oracle(ComplexMatrix::identity(2), phase_gate(th)), 2 * std::sin(th / 2), 1e-12);
}

TEST(UnitaryOracle, AgreesWithConvexHullGeometry) {
  Rng rng(52);
  for (int k = 0; k < 50; ++k) {
    const std::size_t d = 2 + k % 2;
    const ComplexMatrix u = haar_unitary(d, rng), v = haar_unitary(d, rng);
    EXPECT_NEAR(unitary_cb_oracle(u, v), oracle::unitary_cb(u, v), 1e-9);
  }
}

TEST(CbDistance, IdenticalChannelsGiveZero) {
  Rng rng(53);
  const auto c = choi_from_kraus(random_channel(2, 2, 2, rng));
  EXPECT_NEAR(cb_distance(c, c).value, 0.0, 1e-9);
}

TEST(CbDistance, UnitaryExamples) {
  EXPECT_NEAR(cb_distance(choi_of(ComplexMatrix::identity(2)), choi_of(kPauliX)).value, 2.0, 1e-4);
  EXPECT_NEAR(cb_distance(choi_of(ComplexMatrix::identity(2)), choi_of(phase_gate(std::numbers::pi / 2))).value,
              std::sqrt(2.0), 1e-3);
}

TEST(CbDistance, MatchesOracleOnRandomUnitaries) {
  Rng rng(54);
  DistanceOptions opt;
  opt.restarts = 5;
  for (int k = 0; k < 10; ++k) {
    const std::size_t d = 2 + k % 2;
    const ComplexMatrix u = haar_unitary(d, rng), v = haar_unitary(d, rng);
    const double expected = oracle::unitary_cb(u, v);
    const auto e = cb_distance(choi_of(u), choi_of(v), opt);
    EXPECT_NEAR(e.value, expected, 1e-3 * expected);
    EXPECT_LE(e.value, 2.0);
    EXPECT_NEAR(e.achiever.matrix().trace().real(), 1.0, 1e-10);
  }
}

TEST(CbDistance, IsBoundedAndSymmetric) {
  Rng rng(55);
  DistanceOptions opt;
  opt.restarts = 4;
  const auto a = choi_from_kraus(random_channel(2, 2, 3, rng)), b = choi_from_kraus(random_channel(2, 2, 3, rng));
  const double ab = cb_distance(a, b, opt).value, ba = cb_distance(b, a, opt).value;
  EXPECT_GT(ab, 0.0);
  EXPECT_LE(ab, 2.0);
  EXPECT_NEAR(ab, ba, 1e-6);
  // Never below the distance without an ancilla at the maximally mixed input.
  const ComplexMatrix half = ComplexMatrix::identity(2) * 0.5;
  const LabeledOperator s(half, {0}, {2});
  const auto lifted = [&](const LabeledOperator& c) {
    return (tensor(LabeledOperator::identity({1}, {2}), psd_sqrt(s)) * c * tensor(LabeledOperator::identity({1}, {2}), psd_sqrt(s)));
  };
  EXPECT_GE(ab + 1e-9, trace_norm((lifted(a) - lifted(b)).matrix().hermitian_part()));
}

TEST(MemoryDistance, IdenticalGiveZero) {
  Rng rng(56);
  const auto c = comb_from_realization(random_comb_realization({2, 2, 2, 2}, {2, 2}, rng));
  DistanceOptions opt;
  opt.restarts = 2;
  EXPECT_NEAR(memory_distance(c, c, opt).value, 0.0, 1e-9);
}

TEST(MemoryDistance, ReducesToCbForSingleUse) {
  Rng rng(57);
  DistanceOptions opt;
  opt.restarts = 5;
  for (int k = 0; k < 4; ++k) {
    const auto a = comb_from_sequence({random_channel(2, 2, 2, rng)});
    const auto b = comb_from_sequence({random_channel(2, 2, 2, rng)});
    EXPECT_NEAR(memory_distance(a, b, opt).value, cb_distance(a, b, opt).value, 1e-4);
  }
}

TEST(MemoryDistance, ExampleSaturatesBound) {
  const auto inst = build_example(2);
  DistanceOptions opt;
  opt.restarts = 2;
  const auto e = memory_distance(inst.c0, inst.c1, opt);
  EXPECT_GE(e.value, 2.0 - 1e-3);
  EXPECT_LE(e.value, 2.0);
}
