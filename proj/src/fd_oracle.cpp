#include "hrf/fd_oracle.hpp"

#include <cmath>

#include "hrf/common.hpp"

namespace hrf {

namespace {

using Christoffel = std::vector<double>;  // Gamma^a_bc at ((a*n + b)*n + c)

Eigen::MatrixXd checked_metric(const MetricSampler& metric, const Eigen::VectorXd& x) {
    Eigen::MatrixXd g = metric(x);
    if (g.rows() != x.size() || g.cols() != x.size())
        throw DomainError("metric sampler returned a matrix of the wrong size");
    if (!(g.determinant() > 0.0)) throw DomainError("degenerate metric on the oracle stencil");
    return g;
}

Christoffel christoffel(const MetricSampler& metric, const Eigen::VectorXd& x, double h) {
    const int n = static_cast<int>(x.size());
    const Eigen::MatrixXd g = checked_metric(metric, x);
    const Eigen::MatrixXd ginv = g.inverse();
    std::vector<Eigen::MatrixXd> dg(n);
    for (int c = 0; c < n; ++c) {
        Eigen::VectorXd xp = x, xm = x;
        xp[c] += h;
        xm[c] -= h;
        dg[c] = (checked_metric(metric, xp) - checked_metric(metric, xm)) / (2.0 * h);
    }
    Christoffel G(static_cast<std::size_t>(n) * n * n, 0.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                double s = 0.0;
                for (int d = 0; d < n; ++d)
                    s += ginv(a, d) * (dg[b](d, c) + dg[c](d, b) - dg[d](b, c));
                G[(a * n + b) * n + c] = 0.5 * s;
            }
    return G;
}

}  // namespace

RiemannTensor fd_curvature_oracle(const MetricSampler& metric, const Eigen::VectorXd& point,
                                  double h) {
    if (!(h >= 1e-5 && h <= 1e-2)) throw DomainError("oracle step h must lie in [1e-5, 1e-2]");
    const int n = static_cast<int>(point.size());
    auto idx = [n](int a, int b, int c) { return (static_cast<std::size_t>(a) * n + b) * n + c; };

    const Christoffel G = christoffel(metric, point, h);
    std::vector<Christoffel> dG(n);
    for (int c = 0; c < n; ++c) {
        Eigen::VectorXd xp = point, xm = point;
        xp[c] += h;
        xm[c] -= h;
        const Christoffel Gp = christoffel(metric, xp, h);
        const Christoffel Gm = christoffel(metric, xm, h);
        dG[c].resize(G.size());
        for (std::size_t i = 0; i < G.size(); ++i) dG[c][i] = (Gp[i] - Gm[i]) / (2.0 * h);
    }

    // R^a_bcd = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb
    std::vector<double> up(static_cast<std::size_t>(n) * n * n * n, 0.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    double r = dG[c][idx(a, d, b)] - dG[d][idx(a, c, b)];
                    for (int e = 0; e < n; ++e)
                        r += G[idx(a, c, e)] * G[idx(e, d, b)] - G[idx(a, d, e)] * G[idx(e, c, b)];
                    up[idx(a, b, c) * n + d] = r;
                }

    RiemannTensor R;
    R.dim = n;
    R.metric = checked_metric(metric, point);
    R.lowered.assign(up.size(), 0.0);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    double s = 0.0;
                    for (int e = 0; e < n; ++e) s += R.metric(a, e) * up[idx(e, b, c) * n + d];
                    R.lowered[idx(a, b, c) * n + d] = s;
                }
    return R;
}

double RiemannTensor::norm_sq() const {
    const Eigen::MatrixXd gi = metric.inverse();
    const int n = dim;
    // Raise all four indices one at a time.
    std::vector<double> t = lowered;
    for (int slot = 0; slot < 4; ++slot) {
        std::vector<double> out(t.size(), 0.0);
        for (std::size_t flat = 0; flat < t.size(); ++flat) {
            int i[4];
            std::size_t rem = flat;
            for (int k = 3; k >= 0; --k) {
                i[k] = static_cast<int>(rem % n);
                rem /= n;
            }
            double s = 0.0;
            for (int e = 0; e < n; ++e) {
                int j[4] = {i[0], i[1], i[2], i[3]};
                j[slot] = e;
                s += gi(i[slot], e) * t[((static_cast<std::size_t>(j[0]) * n + j[1]) * n + j[2]) * n + j[3]];
            }
            out[flat] = s;
        }
        t.swap(out);
    }
    double s = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) s += t[k] * lowered[k];
    return s;
}

double RiemannTensor::sectional(int i, int j) const {
    const double area = metric(i, i) * metric(j, j) - metric(i, j) * metric(i, j);
    return (*this)(i, j, i, j) / area;
}

Eigen::MatrixXd RiemannTensor::ricci() const {
    const Eigen::MatrixXd gi = metric.inverse();
    Eigen::MatrixXd ric = Eigen::MatrixXd::Zero(dim, dim);
    for (int b = 0; b < dim; ++b)
        for (int d = 0; d < dim; ++d)
            for (int a = 0; a < dim; ++a)
                for (int c = 0; c < dim; ++c) ric(b, d) += gi(a, c) * (*this)(a, b, c, d);
    return ric;
}

double RiemannTensor::scalar() const {
    return (metric.inverse().array() * ricci().array()).sum();
}

double RiemannTensor::symmetry_defect() const {
    double m = 0.0;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
            for (int c = 0; c < dim; ++c)
                for (int d = 0; d < dim; ++d) {
                    const double r = (*this)(a, b, c, d);
                    m = std::max({m, std::abs(r + (*this)(b, a, c, d)),
                                  std::abs(r + (*this)(a, b, d, c)),
                                  std::abs(r - (*this)(c, d, a, b))});
                }
    return m;
}

namespace {

// Diagonal of the unit-sphere metric in hyperspherical coordinates.
void sphere_diagonal(const Eigen::VectorXd& theta, int offset, int k, double scale,
                     Eigen::MatrixXd& g) {
    double prod = scale;
    for (int i = 0; i < k; ++i) {
        g(offset + i, offset + i) = prod;
        prod *= std::pow(std::sin(theta[offset + i]), 2);
    }
}

}  // namespace

MetricSampler warped_metric_sampler(int n, std::function<double(double)> a,
                                    std::function<double(double)> w) {
    return [n, a = std::move(a), w = std::move(w)](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
        const double av = a(x[0]);
        const double wv = w(x[0]);
        g(0, 0) = av * av;
        sphere_diagonal(x, 1, n - 1, wv * wv, g);
        return g;
    };
}

MetricSampler round_sphere_sampler(int n, double c) {
    return [n, c](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
        sphere_diagonal(x, 0, n, c, g);
        return g;
    };
}

MetricSampler euclidean_polar_sampler(int n) {
    return [n](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
        g(0, 0) = 1.0;
        sphere_diagonal(x, 1, n - 1, x[0] * x[0], g);
        return g;
    };
}

}  // namespace hrf
