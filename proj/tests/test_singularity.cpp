#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "hrf/config.hpp"
#include "hrf/scenario.hpp"
#include "hrf/singularity.hpp"
#include "hrf/soliton.hpp"

using namespace hrf;

namespace {

constexpr double pi = std::numbers::pi;

std::shared_ptr<FlowTrajectory> exact(ExactKind kind, double c0, double alpha) {
    ExactParams p;
    p.n = 2;
    p.c0 = c0;
    p.alpha = alpha;
    return std::make_shared<FlowTrajectory>(construct_exact(kind, p).trajectory);
}

std::shared_ptr<FlowTrajectory> round_sphere() { return exact(ExactKind::RoundSphere, 2.0, 1.0); }
std::shared_ptr<FlowTrajectory> coupled_sphere() { return exact(ExactKind::CoupledSphere, 1.0, 0.5); }

FlowTrajectory static_sphere() {
    FlowConfig fc;
    fc.initial = HomogeneousState{2, 1.0, MapKind::IdentityEigenmap, 1.0};
    fc.schedule = CouplingSchedule::constant(1.0);
    fc.integrator.t_max = 1.0;
    return run_flow(fc);
}

const std::shared_ptr<FlowTrajectory>& neckpinch() {
    static const auto traj = simulate(load_config(HRF_SOURCE_DIR "/scenarios/neckpinch.cfg"));
    return traj;
}

}  // namespace

TEST(TypeI, RoundSphereConstant) {
    const auto r = type_I_constant(*round_sphere());
    EXPECT_NEAR(r.typeI_C, 1.0, 0.02);
    EXPECT_NEAR(r.typeA_r, 1.0, 0.05);
    EXPECT_TRUE(r.is_type_I);
}

TEST(TypeI, CoupledSphereConstant) {
    const auto r = type_I_constant(*coupled_sphere());
    EXPECT_NEAR(r.typeI_C, 2.0, 0.04);
    EXPECT_NEAR(r.typeA_r, 1.0, 0.05);
}

TEST(TypeI, StaticFlowHasNoSingularTime) {
    EXPECT_THROW(type_I_constant(static_sphere()), DomainError);
}

TEST(Blowup, RoundSphereQualifiesEverywhereAndThresholdCutsOff) {
    const auto traj = round_sphere();
    const auto seq = detect_essential_blowup(*traj, 0.1);
    EXPECT_FALSE(seq.records.empty());
    ASSERT_EQ(seq.limit_mask.size(), 1u);
    EXPECT_EQ(seq.limit_mask[0], 1);
    EXPECT_TRUE(detect_essential_blowup(*traj, 10.0).records.empty());
}

TEST(SingularSets, RoundSphereIsAllSingular) {
    const auto s = classify_singular_sets(*round_sphere());
    EXPECT_EQ(SingularSets::count(s.sigma), 1u);
    EXPECT_EQ(SingularSets::count(s.sigma_I), 1u);
    EXPECT_EQ(SingularSets::count(s.sigma_S), 1u);
}

TEST(SingularSets, NonSingularRunHasEmptyMasks) {
    const auto s = classify_singular_sets(static_sphere());
    EXPECT_EQ(SingularSets::count(s.sigma) + SingularSets::count(s.sigma_I) + SingularSets::count(s.sigma_S), 0u);
}

TEST(Rescale, CoupledSphereIsSelfSimilar) {
    const auto traj = coupled_sphere();
    for (double lambda : {10.0, 100.0, 1000.0}) {
        const auto r = rescale(traj, lambda, Point{});
        for (double t : {-1.0, -0.5, -0.01})
            EXPECT_NEAR(std::get<HomogeneousState>(r.state_at(t)).c, -t, 1e-12 * (1.0 - t));
    }
}

TEST(Rescale, UnitLambdaIsTimeShift) {
    const auto traj = round_sphere();
    const auto r = rescale(traj, 1.0, Point{}, 0.5);
    EXPECT_NEAR(std::get<HomogeneousState>(r.state_at(-0.25)).c,
                std::get<HomogeneousState>(traj->state_at(0.75)).c, 1e-14);
}

TEST(Rescale, TypeIBoundMarginIsTightOnRoundSphere) {
    const auto r = rescale(round_sphere(), 10.0, Point{});
    EXPECT_NEAR(r.bound_margin, 0.0, 1e-9);
}

TEST(Rescale, WindowBeyondDataListsAchievableRange) {
    try {
        rescale(round_sphere(), 10.0, Point{}, 5.0);
        FAIL() << "expected a domain error";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("achievable window"), std::string::npos);
    }
}

TEST(Convergence, CoupledSphereDistancesAndResiduals) {
    const auto traj = coupled_sphere();
    std::vector<RescaledTrajectory> rs;
    for (double lambda : {10.0, 100.0, 1000.0}) rs.push_back(rescale(traj, lambda, Point{}));
    const auto d = convergence_diagnostic(rs, -1.0);
    EXPECT_LE(d.max_distance, 1e-6);
    for (double r : d.soliton_residual) EXPECT_LE(r, 1e-3);
    EXPECT_THROW(convergence_diagnostic({rs.front()}, -1.0), DomainError);
}

TEST(SingularVolume, RoundSphereClosedForm) {
    const auto traj = round_sphere();
    const auto v = singular_volume(*traj, {1});
    for (std::size_t i = 0; i < v.times.size(); ++i)
        EXPECT_NEAR(v.volume[i], 4.0 * pi * (2.0 - 2.0 * v.times[i]), 1e-12);
    EXPECT_TRUE(v.decreasing_final_decade);
    const auto e = singular_volume(*traj, {0});
    for (double x : e.volume) EXPECT_EQ(x, 0.0);
}

TEST(Nonoscillation, RoundSphereConstantAndEmptyMask) {
    const auto traj = round_sphere();
    const auto r = nonoscillation_check(*traj, {1});
    EXPECT_NEAR(r.constant, 1.0, 1e-6);
    EXPECT_TRUE(r.flagged.empty());
    EXPECT_TRUE(nonoscillation_check(*traj, {0}).empty());
}

TEST(Neckpinch, SingularSetsAgreeAtTheNeck) {
    const auto& traj = neckpinch();
    const auto rep = analyze_singularity(*traj);
    EXPECT_GT(SingularSets::count(rep.sets.sigma_I), 0u);
    EXPECT_GE(rep.sets.max_mask_distance(), 0);
    EXPECT_LE(rep.sets.max_mask_distance(), 2);
    EXPECT_EQ(rep.sets.violations_I + rep.sets.violations_S, 0u);
    EXPECT_GE(rep.nonoscillation.constant, 1e-3 * rep.type_I.typeI_C);
    EXPECT_TRUE(rep.volume.decreasing_final_decade);

    // Blow-up chains concentrate at the neck minimum of w.
    const auto& w = std::get<WarpedState>(traj->states.back());
    const auto neck = static_cast<long>(std::min_element(w.w.begin(), w.w.end()) - w.w.begin());
    const long J = static_cast<long>(w.size());
    for (const auto& rec : rep.sequences.records) {
        const long d = std::abs(static_cast<long>(rec.index) - neck);
        EXPECT_LE(std::min(d, J - d), 2);
    }
}

TEST(Neckpinch, RescaledResidualsDoNotIncrease) {
    const auto& traj = neckpinch();
    const Point p = default_base_point(*traj);
    std::vector<RescaledTrajectory> rs;
    for (double lambda : {10.0, 100.0, 1000.0}) rs.push_back(rescale(traj, lambda, p));
    const auto d = convergence_diagnostic(rs, -1.0);
    EXPECT_TRUE(d.residual_nonincreasing);
}
