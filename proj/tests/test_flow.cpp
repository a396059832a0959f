#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <omp.h>

#include "hrf/flow.hpp"
#include "support.hpp"

using namespace hrf;
using hrf::testing::sample_warped;

namespace {

FlowConfig sphere_config(double c0, MapKind map, double alpha) {
    FlowConfig fc;
    fc.initial = HomogeneousState{2, c0, map, alpha};
    fc.schedule = CouplingSchedule::constant(alpha);
    return fc;
}

double homogeneous_c(const FlowTrajectory& traj, std::size_t i) {
    return std::get<HomogeneousState>(traj.states[i]).c;
}

double sup_difference(const WarpedState& x, const WarpedState& y) {
    double d = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        d = std::max({d, std::abs(x.a[j] - y.a[j]), std::abs(x.w[j] - y.w[j]),
                      std::abs(x.phi[j] - y.phi[j])});
    return d;
}

WarpedState evolve(WarpedState s, const CouplingSchedule& sch, double dt, double t_end) {
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    for (std::size_t k = 0; k < steps; ++k) s = step_warped(s, dt * k, dt, sch, 1e-8, Exec::Serial).state;
    return s;
}

}  // namespace

TEST(Coupling, ScheduleSlopesAndValidation) {
    const auto s = CouplingSchedule::piecewise_linear({{0.0, 1.0}, {1.0, 0.5}, {2.0, 0.5}});
    EXPECT_DOUBLE_EQ(s.alpha(0.5), 0.75);
    EXPECT_DOUBLE_EQ(s.alpha_dot(0.5), -0.5);
    EXPECT_DOUBLE_EQ(s.alpha_dot(1.0), -0.5);
    EXPECT_DOUBLE_EQ(s.alpha_dot(3.0), 0.0);
    EXPECT_THROW(CouplingSchedule::piecewise_linear({{0.0, 0.5}, {1.0, 1.0}}).validate(), DomainError);
}

TEST(StepHomogeneous, ConstantMapSphereIsLinear) {
    const auto sch = CouplingSchedule::constant(1.0);
    HomogeneousState s{2, 2.0, MapKind::ConstantMap, 1.0};
    for (int k = 0; k < 8; ++k) s = step_homogeneous(s, k / 16.0, 1.0 / 16.0, sch).state;
    EXPECT_DOUBLE_EQ(s.c, 2.0 - 2.0 * 0.5);
}

TEST(StepHomogeneous, EigenmapSlopeAndStaticBalance) {
    HomogeneousState s{2, 1.0, MapKind::IdentityEigenmap, 0.5};
    s = step_homogeneous(s, 0.0, 0.25, CouplingSchedule::constant(0.5)).state;
    EXPECT_DOUBLE_EQ(s.c, 0.75);
    HomogeneousState b{3, 1.0, MapKind::IdentityEigenmap, 2.0};
    EXPECT_DOUBLE_EQ(step_homogeneous(b, 0.0, 0.5, CouplingSchedule::constant(2.0)).state.c, 1.0);
}

TEST(StepHomogeneous, PastSingularTimeIsSignalled) {
    HomogeneousState s{2, 0.1, MapKind::ConstantMap, 1.0};
    EXPECT_EQ(step_homogeneous(s, 0.0, 0.1, CouplingSchedule::constant(1.0)).status,
              StepStatus::PastSingularTime);
}

TEST(StepWarped, FlatWindingMapHasZeroTension) {
    const auto s = sample_warped(3, 64, [](double) { return 1.0; }, [](double) { return 1.0; }, {}, 1);
    const auto rhs = warped_rhs(s, curvature_warped(s));
    for (double v : rhs.phi) EXPECT_NEAR(v, 0.0, 1e-13);
}

TEST(StepWarped, XHomogeneousDataStaysHomogeneous) {
    auto s = sample_warped(3, 64, [](double) { return 1.3; }, [](double) { return 0.8; }, {}, 1);
    const auto sch = CouplingSchedule::constant(1.0);
    for (int k = 0; k < 20; ++k) s = step_warped(s, k * 1e-3, 1e-3, sch).state;
    for (std::size_t j = 1; j < s.size(); ++j) {
        EXPECT_EQ(s.a[j], s.a[0]);
        EXPECT_EQ(s.w[j], s.w[0]);
    }
}

TEST(StepWarped, RichardsonRatioOfFourthOrder) {
    const auto s0 = sample_warped(3, 64, [](double) { return 1.0; },
                                  [](double x) { return 1.0 + 0.01 * std::cos(x); },
                                  [](double x) { return 0.05 * std::sin(x); }, 1);
    const auto sch = CouplingSchedule::constant(1.0);
    const double T = 0.05;
    const auto u1 = evolve(s0, sch, 0.01, T);
    const auto u2 = evolve(s0, sch, 0.005, T);
    const auto u4 = evolve(s0, sch, 0.0025, T);
    const double ratio = sup_difference(u1, u2) / sup_difference(u2, u4);
    EXPECT_NEAR(ratio, 16.0, 0.25 * 16.0);
}

TEST(StepWarped, SerialAndParallelAreBitIdentical) {
    std::mt19937_64 rng(5);
    const auto a = hrf::testing::random_profile(rng), w = hrf::testing::random_profile(rng);
    const auto s = sample_warped(3, 512, a, w, [](double x) { return 0.2 * std::cos(2 * x); }, 1);
    const auto sch = CouplingSchedule::constant(0.8);
    omp_set_num_threads(4);
    const auto rs = step_warped(s, 0.0, 1e-4, sch, 1e-8, Exec::Serial).state;
    const auto rp = step_warped(s, 0.0, 1e-4, sch, 1e-8, Exec::Parallel).state;
    EXPECT_EQ(rs.a, rp.a);
    EXPECT_EQ(rs.w, rp.w);
    EXPECT_EQ(rs.phi, rp.phi);
}

TEST(RunFlow, RoundSphereReproducesClosedForm) {
    const auto traj = run_flow(sphere_config(2.0, MapKind::ConstantMap, 1.0));
    EXPECT_EQ(traj.termination, Termination::CurvatureBlowup);
    ASSERT_TRUE(traj.T_est());
    EXPECT_NEAR(*traj.T_est(), 1.0, 1e-6);
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        EXPECT_NEAR(homogeneous_c(traj, i), 2.0 - 2.0 * traj.times[i], 1e-6 * (2.0 - 2.0 * traj.times[i]));
}

TEST(RunFlow, CoupledSphereReproducesClosedForm) {
    const auto traj = run_flow(sphere_config(1.0, MapKind::IdentityEigenmap, 0.5));
    ASSERT_TRUE(traj.T_est());
    EXPECT_NEAR(*traj.T_est(), 1.0, 1e-6);
    for (std::size_t i = 0; i < traj.times.size(); ++i)
        EXPECT_NEAR(homogeneous_c(traj, i), 1.0 - traj.times[i], 1e-6 * (1.0 - traj.times[i]));
}

TEST(RunFlow, BalancedCouplingRunsToTmax) {
    auto fc = sphere_config(1.0, MapKind::IdentityEigenmap, 1.0);
    fc.integrator.t_max = 1.0;
    const auto traj = run_flow(fc);
    EXPECT_EQ(traj.termination, Termination::ReachedTmax);
    EXPECT_FALSE(traj.T_est());
    EXPECT_THROW(estimate_singular_time(traj), DomainError);
}

TEST(RunFlow, WarpedRunKeepsWindingAndShMinMonotone) {
    FlowConfig fc;
    fc.initial = sample_warped(3, 64, [](double) { return 1.0; },
                               [](double x) { return 1.0 + 0.2 * std::cos(x); }, {}, 1);
    fc.schedule = CouplingSchedule::constant(1.0);
    fc.integrator.t_max = 0.1;
    fc.integrator.snapshot_dt = 1.0 / 64.0;
    const auto traj = run_flow(fc);
    EXPECT_TRUE(traj.winding_preserved);
    EXPECT_EQ(traj.sh_min_violations, 0u);
    for (std::size_t i = 1; i < traj.monitors.size(); ++i)
        EXPECT_GE(traj.monitors[i].sh_min,
                  traj.monitors[i - 1].sh_min - 1e-8 * std::abs(traj.monitors[i - 1].sh_min));
    for (const auto& d : traj.distortion) EXPECT_TRUE(d.pass()) << d.t0 << " " << d.t1;
}

TEST(EvolutionResidual, ConstantMapGradientResidualVanishes) {
    const auto traj = run_flow(sphere_config(2.0, MapKind::ConstantMap, 1.0));
    const auto r = evolution_residual(traj, 0.25);
    EXPECT_EQ(r.grad_phi_residual, 0.0);
    EXPECT_THROW(evolution_residual(traj, 0.0), DomainError);
}

TEST(EvolutionResidual, ShResidualIsSecondOrderInSnapshotSpacing) {
    std::vector<double> res;
    for (double h : {1.0 / 16.0, 1.0 / 32.0}) {
        auto fc = sphere_config(1.0, MapKind::IdentityEigenmap, 0.5);
        fc.integrator.snapshot_dt = h;
        res.push_back(evolution_residual(run_flow(fc), 0.25).sh_residual);
    }
    EXPECT_LT(res[1], 1e-2);
    EXPECT_GT(hrf::testing::observed_order(res[0], res[1]), 1.9);
}

TEST(Distortion, RoundSphereLowerBound) {
    const auto traj = run_flow(sphere_config(2.0, MapKind::ConstantMap, 1.0));
    const auto r = distortion_monitor(traj, Point{0.0, 0.0}, Point{1.0, 0.0}, 0.0, 0.5);
    EXPECT_NEAR(r.ratio, 1.0 / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(r.lower_bound, std::exp(-0.5), 1e-12);
    EXPECT_TRUE(r.pass());
}

TEST(Distortion, StaticFlowHasUnitRatio) {
    auto fc = sphere_config(1.0, MapKind::IdentityEigenmap, 1.0);
    fc.integrator.t_max = 1.0;
    const auto traj = run_flow(fc);
    const auto r = distortion_monitor(traj, Point{0.0, 0.0}, Point{2.0, 0.0}, 0.0, 0.5);
    EXPECT_EQ(r.ratio, 1.0);
    EXPECT_TRUE(r.pass());
}
