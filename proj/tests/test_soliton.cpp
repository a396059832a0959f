#include <gtest/gtest.h>

#include <cmath>

#include "hrf/harnack.hpp"
#include "hrf/soliton.hpp"

using namespace hrf;

namespace {

ExactSolution exact(ExactKind kind, int n, double c0, double alpha) {
    ExactParams p;
    p.n = n;
    p.c0 = c0;
    p.alpha = alpha;
    return construct_exact(kind, p);
}

ExactSolution gaussian() { return exact(ExactKind::Gaussian, 3, 1.0, 1.0); }
ExactSolution round_sphere() { return exact(ExactKind::RoundSphere, 2, 2.0, 1.0); }
ExactSolution coupled_sphere() { return exact(ExactKind::CoupledSphere, 2, 1.0, 0.5); }

SolitonSpec bumped(SolitonSpec spec, double eps) {
    const auto& e = std::get<EuclideanState>(spec.state);
    for (std::size_t j = 0; j < spec.f.size(); ++j) spec.f[j] += eps * std::exp(-e.r(j) * e.r(j));
    return spec;
}

std::vector<double> gaussian_potential(const EuclideanState& e, double tau) {
    std::vector<double> f;
    for (std::size_t j = 0; j < e.J; ++j) f.push_back(e.r(j) * e.r(j) / (4.0 * tau));
    return f;
}

}  // namespace

TEST(SolitonResidual, ExactSolitonsVanish) {
    for (const auto& s : {gaussian(), coupled_sphere(), round_sphere()}) {
        const auto r = soliton_residual(s.spec);
        EXPECT_LE(r.metric, 1e-10);
        EXPECT_LE(r.map, 1e-10);
    }
}

TEST(SolitonResidual, GrowsLinearlyWithPerturbation) {
    const auto spec = gaussian().spec;
    const double r1 = soliton_residual(bumped(spec, 1e-4)).metric;
    const double r2 = soliton_residual(bumped(spec, 2e-4)).metric;
    EXPECT_GT(r1, 1e-6);
    EXPECT_NEAR(r2 / r1, 2.0, 1e-3);
}

TEST(CanonicalForm, ExactTrajectoriesAtInteriorTimes) {
    for (const auto& s : {coupled_sphere(), round_sphere()})
        for (double t : {0.0, 0.5, 0.9}) {
            const auto slice = s.trajectory.state_at(t);
            EXPECT_LE(canonical_form_residual(slice, t, {1.0}, s.T).metric, 1e-10);
        }
    const auto g = gaussian();
    for (double t : {0.0, 0.5}) {
        const auto slice = g.trajectory.state_at(t);
        const auto f = gaussian_potential(std::get<EuclideanState>(slice), g.T - t);
        EXPECT_LE(canonical_form_residual(slice, t, f, g.T).metric, 1e-10);
    }
}

TEST(CanonicalForm, RejectsTimesAtOrPastSingularity) {
    const auto s = round_sphere();
    EXPECT_THROW(canonical_form_residual(s.trajectory.states.front(), 1.0, {1.0}, 1.0), DomainError);
}

TEST(CanonicalForm, NoncanonicalFixtureIsASolitonButNotCanonical) {
    for (double t : {0.2, 0.5}) {
        const auto spec = noncanonical_fixture(t);
        EXPECT_LE(soliton_residual(spec).metric, 1e-12);
        EXPECT_GT(canonical_form_residual(spec.state, t, spec.f, 1.0).metric, 1e-2);
    }
    EXPECT_THROW(noncanonical_fixture(1.0), DomainError);
}

TEST(Normalize, ShiftRemovesConstant) {
    auto spec = gaussian().spec;
    const auto f0 = spec.f;
    for (double& v : spec.f) v += 0.3;
    const auto r = normalize(spec);
    EXPECT_TRUE(r.k_constant);
    EXPECT_NEAR(r.shift, 0.3, 1e-10);
    for (std::size_t j = 0; j < f0.size(); ++j) EXPECT_NEAR(r.spec.f[j], f0[j], 1e-10);
    EXPECT_LE(r.trace_defect, 1e-10);
}

TEST(Normalize, IsIdempotent) {
    const auto once = normalize(coupled_sphere().spec);
    const auto twice = normalize(once.spec);
    EXPECT_NEAR(twice.shift, 0.0, 1e-14);
    EXPECT_EQ(once.spec.f, twice.spec.f);
}

TEST(Normalize, FlagsNonSolitonAndSteady) {
    EXPECT_FALSE(normalize(bumped(gaussian().spec, 1e-2)).k_constant);
    auto steady = coupled_sphere().spec;
    steady.sigma = 0.0;
    EXPECT_THROW(normalize(steady), DomainError);
}

TEST(Rigidity, CoupledSphereHasPositiveSh) {
    const auto r = rigidity_check(coupled_sphere().spec);
    EXPECT_TRUE(r.sh_lower_bound);
    EXPECT_FALSE(r.equality_case);
    EXPECT_TRUE(r.implication_holds);
    EXPECT_LE(r.elliptic_residual, 1e-10);
}

TEST(Rigidity, GaussianIsTheEqualityCase) {
    const auto r = rigidity_check(gaussian().spec);
    EXPECT_TRUE(r.equality_case);
    EXPECT_TRUE(r.flat);
    EXPECT_TRUE(r.constant_map);
    EXPECT_TRUE(r.implication_holds);
}

TEST(Rigidity, StrongCouplingBreaksLowerBound) {
    SolitonSpec spec;
    spec.state = HomogeneousState{2, 1.0, MapKind::IdentityEigenmap, 2.0};
    spec.f = {1.0};
    spec.sigma = -0.5;
    spec.alpha = 2.0;
    const auto r = rigidity_check(spec);
    EXPECT_LT(r.sh_min, 0.0);
    EXPECT_FALSE(r.sh_lower_bound);
    spec.sigma = 0.5;
    spec.kind = SolitonKind::Expanding;
    EXPECT_THROW(rigidity_check(spec), DomainError);
}

TEST(Exact, TrajectoriesMatchClosedForms) {
    const auto r = round_sphere();
    for (std::size_t i = 0; i < r.trajectory.times.size(); ++i)
        EXPECT_DOUBLE_EQ(std::get<HomogeneousState>(r.trajectory.states[i]).c, 2.0 - 2.0 * r.trajectory.times[i]);
    const auto c = coupled_sphere();
    EXPECT_DOUBLE_EQ(c.T, 1.0);
    EXPECT_LT(1.0 - c.trajectory.times.back(), 1e-9);
    EXPECT_EQ(kind_from_sigma(c.spec.sigma), SolitonKind::Shrinking);
}

TEST(Harnack, GaussianKernelHasZeroV) {
    const auto g = gaussian();
    const auto r = harnack_check(g.trajectory, Point{}, 0.9);
    EXPECT_FALSE(r.slices.empty());
    EXPECT_LE(std::abs(r.max_v_relative), 1e-10);
}

TEST(Harnack, RoundSphereIsNonPositive) {
    const auto s = round_sphere();
    const auto r = harnack_check(s.trajectory, Point{}, 0.5);
    EXPECT_LE(r.max_v_relative, 1e-3);
    EXPECT_FALSE(r.increase_K);
}

TEST(Harnack, TruncatedExpansionAsksForMoreModes) {
    HarnackOptions o;
    o.K_sph = 4;
    EXPECT_TRUE(harnack_check(round_sphere().trajectory, Point{}, 0.5, o).increase_K);
}

TEST(Harnack, HarmonicDimensions) {
    for (int k = 0; k < 6; ++k) {
        EXPECT_DOUBLE_EQ(harmonic_dimension(2, k), 2.0 * k + 1.0);
        EXPECT_DOUBLE_EQ(harmonic_dimension(3, k), (k + 1.0) * (k + 1.0));
    }
}
