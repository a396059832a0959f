#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace hrf {

/// Coordinate metric g_ab(x) of an n-dimensional chart.
using MetricSampler = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

/// All components R_abcd of the Riemann tensor at one point, with the metric
/// used to raise indices. Convention: R(X,Y)Z = [D_X, D_Y]Z - D_[X,Y]Z and
/// R_abcd = <R(e_c, e_d) e_b, e_a>, so the sectional curvature of the plane
/// (e_i, e_j) is R_ijij / |e_i ^ e_j|^2.
struct RiemannTensor {
    int dim = 0;
    std::vector<double> lowered;
    Eigen::MatrixXd metric;

    double operator()(int a, int b, int c, int d) const {
        return lowered[((static_cast<std::size_t>(a) * dim + b) * dim + c) * dim + d];
    }
    double norm_sq() const;
    double sectional(int i, int j) const;
    /// Ricci tensor Ric_bd = g^{ac} R_abcd.
    Eigen::MatrixXd ricci() const;
    double scalar() const;
    /// Largest violation of R_abcd = -R_bacd = -R_abdc = R_cdab.
    double symmetry_defect() const;
};

/// Riemann tensor from second-order central differences of the metric
/// (Christoffels) and of the Christoffels (curvature). Throws DomainError if
/// the metric is degenerate anywhere on the stencil or h is out of range.
RiemannTensor fd_curvature_oracle(const MetricSampler& metric, const Eigen::VectorXd& point,
                                  double h);

/// g = a(x)^2 dx^2 + w(x)^2 g_{S^{n-1}} in coordinates (x, theta_1, ..., theta_{n-1}).
MetricSampler warped_metric_sampler(int n, std::function<double(double)> a,
                                    std::function<double(double)> w);

/// g = c g_{S^n} in hyperspherical coordinates.
MetricSampler round_sphere_sampler(int n, double c);

/// Flat metric in hyperspherical (polar) coordinates on R^n.
MetricSampler euclidean_polar_sampler(int n);

}  // namespace hrf
