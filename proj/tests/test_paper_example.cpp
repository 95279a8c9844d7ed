#include <gtest/gtest.h>

#include "qcomb/discrimination.hpp"
#include "qcomb/paper_example.hpp"
#include "qcomb/random.hpp"

using namespace qcomb;

namespace {

ComplexMatrix ket0(std::size_t d) {
  ComplexMatrix psi(d, 1);
  psi(0, 0) = 1.0;
  return psi;
}

}  // namespace

TEST(ShiftMultiply, Definitions) {
  EXPECT_EQ((shift_multiply(0, 0, 3) - ComplexMatrix::identity(3)).max_abs(), 0.0);
  const ComplexMatrix z = shift_multiply(1, 0, 2);
  EXPECT_LT((z - ComplexMatrix{{0.0, 1.0}, {1.0, 0.0}}).max_abs(), 1e-15);
  EXPECT_THROW(shift_multiply(2, 0, 2), DomainError);
}

TEST(ShiftMultiply, BasisIsTraceOrthogonal) {
  const std::size_t d = 3;
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t q = 0; q < d; ++q)
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t s = 0; s < d; ++s) {
          const cplx ip = trace_of_product(shift_multiply(p, q, d).adjoint(), shift_multiply(r, s, d));
          EXPECT_NEAR(std::abs(ip - cplx(p == r && q == s ? double(d) : 0.0)), 0.0, 1e-12);
        }
}

TEST(BuildExample, CombsAreValid) {
  for (std::size_t d : {2u, 3u, 4u}) {
    const auto inst = build_example(d);
    EXPECT_LT(inst.construction_residual, 1e-12);
    EXPECT_TRUE(validate_comb(inst.c0, 1e-10).valid) << "d = " << d;
    EXPECT_TRUE(validate_comb(inst.c1, 1e-10).valid) << "d = " << d;
  }
  EXPECT_THROW(build_example(1), DomainError);
}

TEST(ParallelImpossibility, ReducedProductIsProportionalToIdentity) {
  // The contraction is a multiple of the identity on spaces 0 and 2, with
  // scale 1/d³; the identity residual against I/d² is reported separately.
  for (std::size_t d : {2u, 3u}) {
    const auto r = verify_parallel_impossible(build_example(d), {}, false);
    EXPECT_LT(r.fitted_residual, 1e-12);
    EXPECT_NEAR(r.fitted_scale, 1.0 / double(d * d * d), 1e-14);
    EXPECT_EQ(r.reduced.labels(), (std::vector<Label>{0, 2}));
  }
}

TEST(ParallelImpossibility, OneBasedSumsBreakNormalization) {
  const auto r = verify_parallel_impossible(build_example(2), {}, false);
  EXPECT_GT(r.one_based_comb_residual, 0.1);
  EXPECT_GT(r.one_based_identity_residual, 0.1);
}

TEST(ParallelImpossibility, SolverStaysAwayFromZero) {
  SolverOptions opt;
  opt.restarts = 5;
  const auto r = verify_parallel_impossible(build_example(2), opt);
  EXPECT_NE(r.solver.verdict, Verdict::feasible);
  EXPECT_GT(r.solver.residual, 1e-3);
}

TEST(CausalProtocol, QubitBasisState) {
  const auto inst = build_example(2);
  const auto r = causal_protocol(inst, ket0(2));
  EXPECT_LE(r.delta_error, 1e-10);
  EXPECT_LE(r.hand_built_gap, 1e-10);
  EXPECT_LE(r.simulation_gap, 1e-10);
  EXPECT_TRUE(r.validation.valid);
  EXPECT_LT(r.validation.max_residual, 1e-10);
}

TEST(CausalProtocol, RandomStatesAllDimensions) {
  Rng rng(71);
  for (std::size_t d : {3u, 4u}) {
    const auto r = causal_protocol(build_example(d), random_pure(d, rng));
    EXPECT_LE(r.delta_error, 1e-10) << "d = " << d;
    EXPECT_TRUE(r.validation.valid);
  }
}

TEST(CausalProtocol, RejectsUnnormalizedState) {
  ComplexMatrix psi(2, 1);
  psi(0, 0) = 2.0;
  EXPECT_THROW(protocol_circuit(2, psi), DomainError);
}

TEST(CausalDiscriminable, ExampleIsFeasibleAndCertified) {
  const auto inst = build_example(2);
  SolverOptions opt;
  opt.restarts = 5;
  const auto r = causal_discriminable(inst.c0, inst.c1, opt);
  ASSERT_EQ(r.verdict, Verdict::feasible);
  const Tester t = synthesize_tester(inst.c0, inst.c1, r.witness);
  EXPECT_TRUE(validate_tester(t).valid);
  EXPECT_LE(delta_error(t, inst.c0, inst.c1), 1e-6);
}

TEST(SynthesizeTester, ProtocolNormalizationGivesExactDelta) {
  const auto inst = build_example(2);
  const Tester proto = protocol_tester(2, ket0(2));
  const Tester t = synthesize_tester(inst.c0, inst.c1, proto.normalization());
  EXPECT_LE(delta_error(t, inst.c0, inst.c1), 1e-10);
}
