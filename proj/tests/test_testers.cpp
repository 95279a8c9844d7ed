#include <gtest/gtest.h>

#include "qcomb/paper_example.hpp"
#include "qcomb/samplers.hpp"
#include "qcomb/testers.hpp"

using namespace qcomb;

namespace {

ComplexMatrix projector(std::size_t dim, std::size_t k) {
  ComplexMatrix p(dim, dim);
  p(k, k) = 1.0;
  return p;
}

TesterCircuit single_use_circuit(const ComplexMatrix& rho, std::vector<ComplexMatrix> povm) {
  TesterCircuit tc;
  tc.input_state = rho;
  tc.memory_dims = {1};
  tc.povm = std::move(povm);
  return tc;
}

}  // namespace

TEST(TesterFromCircuit, PrepareAndMeasureSingleUse) {
  const auto t = tester_from_circuit(single_use_circuit(projector(2, 0), {projector(2, 0), projector(2, 1)}));
  ASSERT_EQ(t.uses(), 1u);
  EXPECT_LT((t.normalization().matrix() - projector(2, 0)).max_abs(), 1e-14);
  EXPECT_TRUE(validate_tester(t).valid);
}

TEST(TesterFromCircuit, SingleUseNormalizationIsTransposedState) {
  ComplexMatrix rho{{0.7, cplx(0.1, 0.2)}, {cplx(0.1, -0.2), 0.3}};
  const auto t = tester_from_circuit(single_use_circuit(rho, {projector(2, 0), projector(2, 1)}));
  EXPECT_LT((t.normalization().matrix() - rho.transpose()).max_abs(), 1e-14);
  EXPECT_NEAR(t.normalization().matrix().trace().real(), 1.0, 1e-14);
  // Elements are M_i ⊗ ρᵀ on (output 1, input 0).
  const auto e0 = t.elements[0].permuted({1, 0});
  EXPECT_LT((e0.matrix() - kron(projector(2, 0), rho.transpose())).max_abs(), 1e-14);
}

TEST(TesterFromCircuit, RandomCircuitsValidate) {
  Rng rng(31);
  for (int k = 0; k < 10; ++k) {
    const auto t = tester_from_circuit(random_tester_circuit({2, 2, 2, 2}, rng));
    const auto v = validate_tester(t);
    EXPECT_TRUE(v.valid);
    EXPECT_LT(v.max_residual, 1e-9);
  }
  const auto t3 = tester_from_circuit(random_tester_circuit({2, 3, 2, 2, 3, 2}, rng));
  EXPECT_TRUE(validate_tester(t3).valid);
}

TEST(ValidateTester, RejectsRescaledElements) {
  Rng rng(32);
  Tester t = tester_from_circuit(random_tester_circuit({2, 2, 2, 2}, rng));
  const double norm_xi = kron(ComplexMatrix::identity(2), t.normalization().matrix()).frobenius_norm();
  for (auto& e : t.elements) e *= 1.1;
  const auto v = validate_tester(t);
  EXPECT_FALSE(v.valid);
  EXPECT_NEAR(v.sum_residual, 0.1 * norm_xi, 1e-10);
}

TEST(ValidateTester, RejectsBrokenChain) {
  Rng rng(33);
  Tester t = tester_from_circuit(random_tester_circuit({2, 2, 2, 2}, rng));
  t.chain[0] *= 1.5;
  EXPECT_FALSE(validate_tester(t).valid);
}

TEST(BornRule, DeterministicOutcome) {
  const auto t = tester_from_circuit(single_use_circuit(projector(2, 0), {projector(2, 0), projector(2, 1)}));
  const auto p = born_probabilities(t, comb_from_sequence({Channel(ComplexMatrix::identity(2))}));
  EXPECT_NEAR(p[0], 1.0, 1e-14);
  EXPECT_NEAR(p[1], 0.0, 1e-14);
}

TEST(BornRule, MatchesSimulation) {
  Rng rng(34);
  for (int k = 0; k < 20; ++k) {
    const std::vector<std::size_t> dims{2, 2, 2, 2};
    const auto tc = random_tester_circuit(dims, rng);
    const auto r = random_comb_realization(dims, {2, 2}, rng);
    const auto born = born_probabilities(tester_from_circuit(tc), comb_from_realization(r));
    const auto sim = simulate_tester_circuit(tc, r);
    ASSERT_EQ(born.size(), sim.size());
    double total = 0;
    for (std::size_t i = 0; i < born.size(); ++i) {
      EXPECT_NEAR(born[i], sim[i], 1e-10);
      total += born[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Simulation, IdentityChannelTrivialTester) {
  const auto tc = single_use_circuit(projector(2, 0), {projector(2, 0), projector(2, 1)});
  const auto p = simulate_tester_circuit(tc, realization_from_sequence({Channel(ComplexMatrix::identity(2))}));
  EXPECT_NEAR(p[0], 1.0, 1e-14);
  EXPECT_NEAR(p[1], 0.0, 1e-14);
}

TEST(Simulation, RejectsMismatchedComb) {
  Rng rng(35);
  const auto tc = random_tester_circuit({2, 2, 2, 2}, rng);
  EXPECT_THROW(simulate_tester_circuit(tc, realization_from_sequence({Channel(ComplexMatrix::identity(2))})), ShapeError);
}

TEST(PovmFromTester, UniformNormalization) {
  const std::size_t d = 3;
  const auto t = tester_from_circuit(
      single_use_circuit(ComplexMatrix::identity(d) * (1.0 / d), {projector(d, 0), ComplexMatrix::identity(d) - projector(d, 0)}));
  const auto povm = povm_from_tester(t);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_LT((povm[i].matrix() - double(d) * t.elements[i].matrix()).max_abs(), 1e-12);
  Rng rng(36);
  const auto mc = comb_from_sequence({random_channel(d, d, 2, rng)});
  const auto red = reduced_state(mc, t);
  EXPECT_LT((red.matrix() - mc.choi().matrix() * (1.0 / d)).max_abs(), 1e-12);
}

TEST(PovmFromTester, PreservesProbabilities) {
  Rng rng(37);
  for (int k = 0; k < 5; ++k) {
    const std::vector<std::size_t> dims{2, 2, 2, 2};
    const auto t = tester_from_circuit(random_tester_circuit(dims, rng));
    const auto mc = comb_from_realization(random_comb_realization(dims, {2, 2}, rng));
    const auto povm = povm_from_tester(t);
    const auto red = reduced_state(mc, t);
    const auto p = born_probabilities(t, mc);
    LabeledOperator sum = povm[0];
    for (std::size_t i = 0; i < povm.size(); ++i) {
      EXPECT_NEAR(trace_of_product(povm[i].matrix(), aligned_to(red, povm[i]).matrix()).real(), p[i], 1e-10);
      if (i > 0) sum = sum + povm[i];
    }
    EXPECT_LT((sum.matrix() - ComplexMatrix::identity(sum.side())).max_abs(), 1e-10);
    EXPECT_NEAR(red.matrix().trace().real(), 1.0, 1e-10);
  }
}

TEST(PovmFromTester, ProtocolReducedStatesAreOrthogonal) {
  const auto inst = build_example(2);
  ComplexMatrix psi(2, 1);
  psi(0, 0) = 1.0;
  const auto t = tester_from_circuit(protocol_circuit(2, psi));
  const auto r0 = reduced_state(inst.c0, t), r1 = reduced_state(inst.c1, t);
  EXPECT_LE(std::abs(trace_of_product(r0.matrix(), aligned_to(r1, r0).matrix())), 1e-10);
}

TEST(NormalizationSet, ProjectionLandsInSetAndFixesMembers) {
  Rng rng(38);
  const NormalizationSet set({2, 2, 2});
  EXPECT_DOUBLE_EQ(set.trace(), 2.0);
  EXPECT_LT(set.violation(set.uniform()), 1e-14);
  for (int k = 0; k < 5; ++k) {
    const ComplexMatrix g = ginibre(8, 8, rng);
    const ComplexMatrix x = set.project(g * g.adjoint());
    EXPECT_LT(set.violation(x), 1e-9);
    EXPECT_LT((set.project(x) - x).max_abs(), 1e-7);
    const ComplexMatrix a = set.affine_project(g);
    EXPECT_LT((set.affine_project(a) - a).max_abs(), 1e-12);
  }
  // Tester normalizations are members.
  const auto t = tester_from_circuit(random_tester_circuit({2, 2, 2, 2}, rng));
  EXPECT_LT(set.violation(t.normalization().matrix()), 1e-10);
  EXPECT_LT((set.affine_project(t.normalization().matrix()) - t.normalization().matrix()).max_abs(), 1e-12);
}

TEST(NormalizationSet, SingleUseIsDensityProjection) {
  const NormalizationSet set({3});
  const double w[] = {2.0, -1.0, 0.5};
  const ComplexMatrix x = set.project(ComplexMatrix::diagonal(std::span<const double>(w)));
  EXPECT_NEAR(x.trace().real(), 1.0, 1e-14);
  EXPECT_NEAR(x(0, 0).real(), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(x(1, 1)), 0.0, 1e-14);
}
