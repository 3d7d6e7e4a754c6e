#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "specfact/divisors.hpp"
#include "specfact/example_model.hpp"
#include "specfact/factors.hpp"
#include "support/random_models.hpp"

namespace specfact {
namespace {

Matrix diag(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v.asDiagonal();
}

const ConjugatePhase& example_phase() {
  static const ConjugatePhase cp = conjugate_phase(example::outer_factor());
  return cp;
}

Matrix line(double theta) {
  Matrix v(2, 1);
  v << std::cos(theta), std::sin(theta);
  return v;
}

/// diag((1 - p z)/(z - p), 1): all-pass with a single pole at p.
Realization blaschke_channel(double p) {
  Matrix a(1, 1), b(1, 2), c(2, 1);
  a << p;
  b << 1.0 - p * p, 0.0;
  c << 1.0, 0.0;
  return Realization(a, b, c, diag({-p, 1.0}));
}

TEST(MinimalFactor, ZeroProjectorGivesOuterFactor) {
  const AllPassDivisor d = divisor_from_projector(example_phase(), Matrix::Zero(4, 4));
  const Factor f = minimal_factor(example::outer_factor(), d);
  EXPECT_EQ(f.report.degree, 2);
  EXPECT_LT(transfer_distance(f.w, example::outer_factor()), 1e-14);
  EXPECT_TRUE(f.report.pass);
}

TEST(MinimalFactor, WholeABlockMatchesPrintedBarMinus) {
  const AllPassDivisor d = divisor_from_projector(example_phase(), diag({0, 0, 1, 1}));
  const Factor f = minimal_factor(example::outer_factor(), d);
  EXPECT_LT(orthogonal_factor_distance(f.w, example::bar_minus_factor()), 1e-10);
  EXPECT_TRUE(multisets_match(expand(f.report.poles_zeros.poles), {2.0, 2.0}, 1e-10));
}

TEST(MinimalFactor, ThetaHalfPi) {
  const AllPassDivisor d =
      divisor_from_spec(example_phase(), SubspaceSpec{BlockSelection{}, line(std::numbers::pi / 2)});
  EXPECT_LT(max_abs(d.d_p - diag({1, 2})), 1e-12);
  const Factor f = minimal_factor(example::outer_factor(), d);
  EXPECT_EQ(f.report.degree, 2);
  EXPECT_LT(f.report.spectrum_residual, 1e-12);
}

TEST(ExtractLeftDivisor, OuterFactorItself) {
  const ExtractedDivisor ex = extract_left_divisor(example::outer_factor(), example::outer_factor());
  EXPECT_EQ(ex.report.degree, 0);
  EXPECT_EQ(ex.complement_degree, 4);
  EXPECT_LT(max_abs(CMatrix(eval(ex.t_minus, 0.7) - CMatrix::Identity(2, 2))), 1e-12);
}

TEST(ExtractLeftDivisor, PrintedBarMinus) {
  const ExtractedDivisor ex =
      extract_left_divisor(example::outer_factor(), example::bar_minus_factor());
  EXPECT_EQ(ex.report.degree, 2);
  EXPECT_EQ(ex.complement_degree, 2);
  EXPECT_TRUE(is_all_pass(ex.t_minus, 1e-10));
  EXPECT_LT(orthogonal_factor_distance(example::bar_divisor(), ex.t_minus), 1e-10);
}

TEST(ExtractLeftDivisor, NonFactorIsRejected) {
  const Realization w = example::outer_factor();
  const Realization doubled(w.a(), 2.0 * w.b(), w.c(), w.d());
  try {
    (void)extract_left_divisor(w, doubled);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotAFactor);
  }
}

TEST(VerifyFactor, Examples) {
  const Realization w = example::outer_factor();
  EXPECT_TRUE(verify_factor(w, w).pass);

  const FactorReport full = verify_factor(series(w, example_phase().t), w);
  EXPECT_TRUE(full.pass);
  EXPECT_TRUE(multisets_match(expand(full.poles_zeros.poles), {2.0, 2.0}, 1e-10));

  // An all-pass factor whose pole is not cancelled raises the degree.
  const Realization wrong = series(w, blaschke_channel(0.7));
  EXPECT_TRUE(is_all_pass(blaschke_channel(0.7), 1e-12));
  const FactorReport rep = verify_factor(wrong, w);
  EXPECT_EQ(rep.degree, 3);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.reasons.empty());

  const FactorReport scaled = verify_factor(Realization(w.a(), w.b(), 2.0 * w.c(), 2.0 * w.d()), w);
  EXPECT_FALSE(scaled.pass);
  EXPECT_GT(scaled.spectrum_residual, 1.0);
}

TEST(FactorFamily, ThreeSubclassesOfTheABlock) {
  std::vector<SubspaceSpec> specs = {SubspaceSpec{}, SubspaceSpec::select({}, {0})};
  for (const SubspaceSpec& s : sample_continuum(example_phase(), SubspaceSpec::select({}, {0}), 8))
    specs.push_back(s);
  const auto members = factor_family(example_phase(), specs);
  ASSERT_EQ(members.size(), 10u);
  for (const FamilyMember& m : members) {
    EXPECT_EQ(m.factor.report.degree, 2);
    EXPECT_LT(m.factor.report.spectrum_residual, 1e-10);
  }
  EXPECT_TRUE(factor_family(example::outer_factor(), {}).empty());
}

TEST(FactorFamily, AllEnumerableClassesWithThetaGrids) {
  const ConjugatePhase& cp = example_phase();
  std::vector<SubspaceSpec> specs;
  for (BlockSelection g : {BlockSelection{}, BlockSelection{0}, BlockSelection{1},
                           BlockSelection{0, 1}})
    for (const SubspaceSpec& s : sample_continuum(cp, SubspaceSpec::select(g, {0}), 4))
      specs.push_back(s);
  ASSERT_EQ(specs.size(), 16u);
  for (const FamilyMember& m : factor_family(cp, specs)) {
    EXPECT_TRUE(verify_factor(m.factor.w, example::outer_factor()).pass);
    for (complex p : expand(m.factor.report.poles_zeros.poles))
      EXPECT_TRUE(std::abs(p - 0.5) < 1e-8 || std::abs(p - 2.0) < 1e-8);
  }
}

TEST(FactorFamily, RoundTripOnRandomModels) {
  for (std::uint64_t seed = 300; seed < 306; ++seed) {
    const Index n = 1 + static_cast<Index>(seed % 3);
    const Realization w = testing::random_outer_model(seed, n, 2);
    const ConjugatePhase cp = conjugate_phase(w);
    const DivisorEnumeration en = enumerate_divisors(cp);
    const Eigen::VectorXcd poles = eigenvalues(w.a());
    for (const EnumeratedDivisor& item : en.divisors) {
      const Factor f = minimal_factor(w, item.divisor);
      EXPECT_EQ(f.report.degree, n);
      const ExtractedDivisor ex = extract_left_divisor(w, f.w);
      EXPECT_LT(orthogonal_factor_distance(item.divisor.t_ell, ex.t_minus), 1e-7);
      // Poles split between those of W_- and their reciprocals.
      for (complex p : expand(f.report.poles_zeros.poles)) {
        double best = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < poles.size(); ++i)
          best = std::min({best, std::abs(p - poles(i)), std::abs(p - 1.0 / poles(i))});
        EXPECT_LT(best, 1e-8);
      }
    }
  }
}

TEST(Moebius, ImproperModelThroughTheMap) {
  // Pole at the origin: the pipeline runs on moebius(W_-, a). Factors that
  // keep the A-part of the subspace empty stay proper after mapping back.
  const Realization w = testing::random_outer_model(77, 2, 2, /*pole_at_origin=*/true);
  ASSERT_TRUE(needs_moebius(w));
  EXPECT_THROW(validate_outer(w), Error);
  const double a = moebius_parameter_for(w);
  const ConjugatePhase cp = conjugate_phase(moebius(w, a));
  std::vector<SubspaceSpec> specs;
  for (const EnumeratedDivisor& item : enumerate_divisors(cp).divisors)
    if (item.a_selection.empty()) specs.push_back(SubspaceSpec::select(item.gamma_selection, {}));
  ASSERT_FALSE(specs.empty());
  for (const FamilyMember& m : factor_family_moebius(w, specs, a)) {
    EXPECT_TRUE(m.factor.report.pass) << m.factor.report.spectrum_residual;
    EXPECT_EQ(m.factor.report.degree, 2);
  }
  // The reflected pole of the origin lands at infinity, which a proper
  // realization cannot carry.
  EXPECT_THROW((void)factor_family_moebius(w, {SubspaceSpec::select({}, {0, 1})}, a), Error);
}

TEST(MoebiusParameter, AvoidsDensityPolesAndZeros) {
  const double a = moebius_parameter_for(example::outer_factor());
  for (double p : {0.5, 2.0, 0.25, 4.0, 1.0 / 3.0, 3.0}) EXPECT_GT(std::abs(1.0 / a - p), 1e-6);
}

}  // namespace
}  // namespace specfact
