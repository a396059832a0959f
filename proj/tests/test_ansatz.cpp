#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <omp.h>

#include "hrf/ansatz.hpp"
#include "hrf/fd_oracle.hpp"
#include "support.hpp"

using namespace hrf;
using hrf::testing::observed_order;
using hrf::testing::random_profile;
using hrf::testing::sample_warped;

namespace {

constexpr double pi = std::numbers::pi;

WarpedState cylinder(std::size_t J = 64, int winding = 0) {
    return sample_warped(3, J, [](double) { return 1.0; }, [](double) { return 1.0; }, {}, winding);
}

}  // namespace

TEST(Homogeneous, RoundSphereConstantMap) {
    const auto p = curvature_homogeneous(HomogeneousState{2, 2.0, MapKind::ConstantMap, 1.0});
    EXPECT_NEAR(p.sc[0], 1.0, 1e-15);
    EXPECT_NEAR(p.rm_norm[0], std::sqrt(2.0 * 2 * 1) / 2.0, 1e-15);
    EXPECT_NEAR(p.sh[0], 1.0, 1e-15);
    EXPECT_EQ(p.grad_phi_sq[0], 0.0);
    EXPECT_EQ(p.tension[0], 0.0);
}

TEST(Homogeneous, CoupledSphereEigenmap) {
    const HomogeneousState s{2, 1.0, MapKind::IdentityEigenmap, 0.5};
    const auto p = curvature_homogeneous(s);
    EXPECT_NEAR(p.sh[0], 1.0, 1e-15);
    EXPECT_NEAR(p.grad_phi_sq[0], 2.0, 1e-15);
    EXPECT_EQ(p.tension[0], 0.0);
    EXPECT_EQ(p.grad_phi_sq[0] * s.c, 2.0);
}

TEST(Homogeneous, FlatLimit) {
    const auto p = curvature_homogeneous(HomogeneousState{3, 1e12, MapKind::IdentityEigenmap, 0.5});
    EXPECT_LT(p.rm_norm[0], 1e-11);
    EXPECT_LT(std::abs(p.sh[0]), 1e-11);
}

TEST(Homogeneous, RejectsNonPositiveScale) {
    EXPECT_THROW(curvature_homogeneous(HomogeneousState{2, 0.0, MapKind::ConstantMap, 1.0}),
                 DomainError);
}

TEST(Warped, ProductCylinder) {
    const auto p = curvature_warped(cylinder());
    for (std::size_t j = 0; j < p.size(); ++j) {
        EXPECT_NEAR(p.k_base[j], 0.0, 1e-14);
        EXPECT_NEAR(p.k_fiber[j], 1.0, 1e-14);
        EXPECT_NEAR(p.sc[j], 2.0, 1e-14);
        EXPECT_NEAR(p.sh[j], 2.0, 1e-14);
        EXPECT_NEAR(p.rm_norm[j] * p.rm_norm[j], 4.0, 1e-13);
    }
}

TEST(Warped, WindingMapLowersSh) {
    const auto p = curvature_warped(cylinder(64, 1));
    for (std::size_t j = 0; j < p.size(); ++j) {
        EXPECT_NEAR(p.sh[j], 1.0, 1e-13);
        EXPECT_NEAR(p.tension[j], 0.0, 1e-13);
    }
}

TEST(Warped, RejectsTwoDimensionalDomain) {
    auto s = cylinder();
    s.n = 2;
    EXPECT_THROW(curvature_warped(s), DomainError);
}

TEST(Warped, ShIdentityHoldsToRounding) {
    std::mt19937_64 rng(7);
    const auto a = random_profile(rng), w = random_profile(rng), f = random_profile(rng);
    const auto s = sample_warped(4, 128, a, w, [&](double x) { return f(x) - 1.0; }, 2, 0.7);
    const auto p = curvature_warped(s);
    for (std::size_t j = 0; j < p.size(); ++j)
        EXPECT_NEAR(p.sh[j], p.sc[j] - s.alpha * p.grad_phi_sq[j], 1e-13 * (1.0 + std::abs(p.sc[j])));
}

TEST(Warped, FloorBreachIsReportedNotThrown) {
    auto s = cylinder();
    s.w[5] = 1e-12;
    const auto p = curvature_warped(s);
    EXPECT_TRUE(p.any_singular);
    EXPECT_EQ(p.singular[5], 1);
}

TEST(Warped, SerialAndParallelAreBitIdentical) {
    std::mt19937_64 rng(11);
    const auto a = random_profile(rng), w = random_profile(rng);
    const auto s = sample_warped(3, 1024, a, w, [](double x) { return 0.1 * std::sin(x); }, 1);
    omp_set_num_threads(4);
    const auto ps = curvature_warped(s, 1e-8, Exec::Serial);
    const auto pp = curvature_warped(s, 1e-8, Exec::Parallel);
    EXPECT_EQ(ps.rm_norm, pp.rm_norm);
    EXPECT_EQ(ps.sh, pp.sh);
    EXPECT_EQ(ps.tension, pp.tension);
    EXPECT_EQ(ps.hess_phi_norm, pp.hess_phi_norm);
    const auto ls = laplacian_warped(s, s.w, Exec::Serial);
    const auto lp = laplacian_warped(s, s.w, Exec::Parallel);
    EXPECT_EQ(ls, lp);
}

TEST(Oracle, FlatChartIsFlat) {
    const MetricSampler cartesian = [](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd::Identity(x.size(), x.size()).eval();
    };
    Eigen::VectorXd x(3);
    x << 1.3, 0.9, 0.4;
    for (double v : fd_curvature_oracle(cartesian, x, 1e-3).lowered) EXPECT_LT(std::abs(v), 1e-10);
    // A curvilinear flat chart vanishes at the oracle's truncation order.
    std::vector<double> worst;
    for (double h : {4e-3, 2e-3}) {
        double m = 0.0;
        for (double v : fd_curvature_oracle(euclidean_polar_sampler(3), x, h).lowered)
            m = std::max(m, std::abs(v));
        worst.push_back(m);
    }
    EXPECT_LT(worst[1], 1e-4);
    EXPECT_GT(observed_order(worst[0], worst[1]), 1.9);
}

TEST(Oracle, RoundSphereSectionalCurvature) {
    Eigen::VectorXd x(2);
    x << 1.1, 0.3;
    const auto R = fd_curvature_oracle(round_sphere_sampler(2, 1.0), x, 1e-3);
    EXPECT_NEAR(R.sectional(0, 1), 1.0, 1e-5);
}

TEST(Oracle, CylinderMatchesAnsatz) {
    Eigen::VectorXd x(3);
    x << 0.7, 1.2, 0.5;
    const auto R = fd_curvature_oracle(
        warped_metric_sampler(3, [](double) { return 1.0; }, [](double) { return 1.0; }), x, 1e-3);
    EXPECT_NEAR(R.norm_sq(), 4.0, 1e-5);
}

TEST(Oracle, TensorSymmetries) {
    std::mt19937_64 rng(3);
    const auto a = random_profile(rng), w = random_profile(rng);
    Eigen::VectorXd x(4);
    x << 2.0, 1.0, 1.3, 0.6;
    const double h = 2e-3;
    const auto R = fd_curvature_oracle(warped_metric_sampler(4, a, w), x, h);
    EXPECT_LT(R.symmetry_defect(), 10.0 * h * h);
}

TEST(Oracle, RejectsDegenerateMetricAndBadStep) {
    Eigen::VectorXd x(2);
    x << 0.0, 0.3;
    EXPECT_THROW(fd_curvature_oracle(round_sphere_sampler(2, 1.0), x, 1e-3), DomainError);
    x << 1.0, 0.3;
    EXPECT_THROW(fd_curvature_oracle(round_sphere_sampler(2, 1.0), x, 1.0), DomainError);
}

// curvature_warped on a grid of spacing h against the oracle with step h, at
// a common grid point: the difference is second order in h.
TEST(Oracle, WarpedCurvatureConvergesAtSecondOrder) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 2; ++trial) {
        const auto a = random_profile(rng), w = random_profile(rng);
        std::vector<double> err;
        for (std::size_t J : {1536u, 3072u, 6144u}) {
            const auto s = sample_warped(3, J, a, w);
            const auto p = curvature_warped(s, 1e-8, Exec::Serial);
            const std::size_t j = J / 8 * 3;
            Eigen::VectorXd x(3);
            x << s.x(j), 1.1, 0.4;
            const auto R = fd_curvature_oracle(warped_metric_sampler(3, a, w), x, s.dx());
            err.push_back(std::max({std::abs(p.k_base[j] - R.sectional(0, 1)),
                                    std::abs(p.k_fiber[j] - R.sectional(1, 2)),
                                    std::abs(p.rm_norm[j] - std::sqrt(R.norm_sq()))}));
        }
        EXPECT_GT(observed_order(err[0], err[1]), 1.9);
        EXPECT_GT(observed_order(err[1], err[2]), 1.9);
    }
}

TEST(Distance, HomogeneousAntipodal) {
    const GeometryState s = HomogeneousState{2, 2.0, MapKind::ConstantMap, 1.0};
    EXPECT_NEAR(distance(s, Point{0.0, 0.0}, Point{pi, 0.0}), std::sqrt(2.0) * pi, 1e-14);
    EXPECT_EQ(distance(s, Point{0.4, 1.0}, Point{0.4, 1.0}), 0.0);
}

TEST(Distance, WarpedFlatBase) {
    const GeometryState s = cylinder(64);
    EXPECT_NEAR(distance(s, Point{0.0, 0.0}, Point{pi, 0.0}), pi, 1e-13);
    EXPECT_EQ(distance(s, Point{pi, 0.0}, Point{pi, 0.0}), 0.0);
}

TEST(Isoperimetric, EuclideanConstantGivesUnitBallRatio) {
    for (int n = 2; n <= 5; ++n) {
        const double R = 1.7, om = unit_sphere_volume(n - 1);
        const double area = om * std::pow(R, n - 1), vol = om * std::pow(R, n) / n;
        EXPECT_NEAR(std::pow(area, n) / (euclidean_isoperimetric_constant(n) * std::pow(vol, n - 1)),
                    1.0, 1e-12);
    }
}

TEST(Isoperimetric, CylinderBandClosedForm) {
    const auto s = cylinder(64);
    const double L = 16 * s.dx();
    const double om = 4.0 * pi;
    const double expected = std::pow(2.0 * om, 3) / (euclidean_isoperimetric_constant(3) * std::pow(om * L, 2));
    EXPECT_NEAR(isoperimetric_ratio(s, 0.0, L), expected, 1e-12 * expected);
    EXPECT_THROW(isoperimetric_ratio(s, 1.0, 1.0), DomainError);
}
