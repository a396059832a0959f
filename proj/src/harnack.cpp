#include "hrf/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gegenbauer.hpp>

#include "hrf/reduced.hpp"

namespace hrf {

namespace {

constexpr double pi = std::numbers::pi;

double integrate(const std::function<double(double)>& f, double a, double b) {
    if (a == b) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-13);
}

}  // namespace

double harmonic_dimension(int n, int k) {
    if (k == 0) return 1.0;
    return (2.0 * k + n - 1.0) / (n - 1.0) *
           boost::math::binomial_coefficient<double>(static_cast<unsigned>(k + n - 2),
                                                     static_cast<unsigned>(k));
}

ZonalConjugateHeat::ZonalConjugateHeat(const FlowTrajectory& traj, double t1,
                                       std::vector<double> coeffs)
    : traj_(&traj), t1_(t1), a1_(std::move(coeffs)) {
    if (!traj.is_class_homogeneous()) throw DomainError("zonal expansion needs a homogeneous trajectory");
    if (a1_.empty()) throw DomainError("zonal expansion needs at least one coefficient");
    n_ = dimension(traj.states.front());
    traj.state_at(t1);
}

double ZonalConjugateHeat::c_at(double t) const {
    return std::get<HomogeneousState>(traj_->state_at(t)).c;
}

std::vector<double> ZonalConjugateHeat::coefficients(double t) const {
    if (t > t1_) throw DomainError("conjugate heat solution runs backward from t1 only");
    const double inv_c = integrate([this](double s) { return 1.0 / c_at(s); }, t, t1_);
    const double sh = integrate(
        [this](double s) {
            return curvature_homogeneous(std::get<HomogeneousState>(traj_->state_at(s))).sh[0];
        },
        t, t1_);
    std::vector<double> a(a1_.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double lk = static_cast<double>(k) * (static_cast<double>(k) + n_ - 1.0);
        a[k] = a1_[k] * std::exp(-lk * inv_c - sh);
    }
    return a;
}

std::vector<ZonalConjugateHeat::Value> ZonalConjugateHeat::evaluate(const std::vector<double>& theta,
                                                                    double t) const {
    const std::vector<double> a = coefficients(t);
    const double c = c_at(t);
    const double lam = 0.5 * (n_ - 1.0);
    std::vector<Value> out(theta.size(), Value{0.0, 0.0, 0.0});
    for (std::size_t k = 0; k < a.size(); ++k) {
        const auto kk = static_cast<unsigned>(k);
        const double norm = boost::math::gegenbauer(kk, lam, 1.0);
        const double lk = static_cast<double>(k) * (static_cast<double>(k) + n_ - 1.0) / c;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double x = std::cos(theta[j]);
            const double Z = boost::math::gegenbauer(kk, lam, x) / norm;
            const double dZ = -std::sin(theta[j]) * boost::math::gegenbauer_prime(kk, lam, x) / norm;
            out[j].u += a[k] * Z;
            out[j].u_theta += a[k] * dZ;
            out[j].lap -= lk * a[k] * Z;
        }
    }
    return out;
}

namespace {

struct VField {
    double max_v = -std::numeric_limits<double>::infinity();
    double max_u = 0.0;
};

// v = tau(-2 Lap u + |grad u|^2 / u + Sh u) + (f - n) u with
// f = -log u - (n/2) log(4 pi tau), on points where u is resolved.
VField v_field(const std::vector<double>& u, const std::vector<double>& grad_sq,
               const std::vector<double>& lap, double sh, double tau, int n) {
    VField r;
    for (double x : u) r.max_u = std::max(r.max_u, x);
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (!(u[j] > 1e-8 * r.max_u)) continue;
        const double f = -std::log(u[j]) - 0.5 * n * std::log(4.0 * pi * tau);
        const double v =
            tau * (-2.0 * lap[j] + grad_sq[j] / u[j] + sh * u[j]) + (f - n) * u[j];
        r.max_v = std::max(r.max_v, v);
    }
    return r;
}

std::vector<double> slice_taus(double eps0, double tau_max, std::size_t count) {
    if (!(tau_max > 2.0 * eps0)) throw DomainError("Harnack window shorter than 2 eps0");
    std::vector<double> taus(count);
    for (std::size_t i = 0; i < count; ++i)
        taus[i] = 2.0 * eps0 *
                  std::pow(tau_max / (2.0 * eps0),
                           count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1));
    return taus;
}

}  // namespace

HarnackReport harnack_check(const FlowTrajectory& traj, const Point& p, double t_end,
                            const HarnackOptions& opts) {
    (void)p;
    const auto [lo, hi] = traj.window();
    if (t_end <= lo || t_end > hi || (traj.exact && t_end >= hi))
        throw DomainError("t_end outside the trajectory window");
    if (!(opts.eps0 > 0.0)) throw DomainError("eps0 must be positive");
    const auto taus = slice_taus(opts.eps0, opts.tau_max_fraction * (t_end - lo), opts.slices);
    HarnackReport rep;
    const GeometryState g0 = traj.states.front();
    if (std::holds_alternative<EuclideanState>(g0)) {
        for (const double tau : taus) {
            const auto e = std::get<EuclideanState>(traj.state_at(t_end - tau));
            std::vector<double> u(e.J);
            for (std::size_t j = 0; j < e.J; ++j)
                u[j] = std::pow(4.0 * pi * tau, -0.5 * e.n) * std::exp(-e.r(j) * e.r(j) / (4.0 * tau));
            std::vector<double> g(e.J), lap(e.J);
            for (std::size_t j = 0; j < e.J; ++j) {
                const double r = e.r(j);
                g[j] = r * r / (4.0 * tau * tau) * u[j] * u[j];
                lap[j] = (r * r / (4.0 * tau * tau) - 0.5 * e.n / tau) * u[j];
            }
            const VField vf = v_field(u, g, lap, 0.0, tau, e.n);
            rep.slices.push_back(HarnackSlice{t_end - tau, vf.max_v, vf.max_u});
        }
    } else if (std::holds_alternative<HomogeneousState>(g0)) {
        if (opts.K_sph < 4) throw DomainError("spectral truncation too small");
        const auto hs = std::get<HomogeneousState>(traj.state_at(t_end));
        const int n = hs.n;
        const double vol = std::pow(hs.c, 0.5 * n) * unit_sphere_volume(n);
        std::vector<double> a(opts.K_sph + 1);
        for (std::size_t k = 0; k < a.size(); ++k)
            a[k] = harmonic_dimension(n, static_cast<int>(k)) / vol;
        const ZonalConjugateHeat heat(traj, t_end, a);
        const std::vector<double> theta = zonal_grid(opts.theta_nodes);
        for (const double tau : taus) {
            const double t = t_end - tau;
            const auto vals = heat.evaluate(theta, t);
            const double c = heat.c_at(t);
            const double sh = curvature_homogeneous(std::get<HomogeneousState>(traj.state_at(t))).sh[0];
            std::vector<double> u(theta.size()), g(theta.size()), lap(theta.size());
            for (std::size_t j = 0; j < theta.size(); ++j) {
                u[j] = vals[j].u;
                g[j] = vals[j].u_theta * vals[j].u_theta / c;
                lap[j] = vals[j].lap;
            }
            const VField vf = v_field(u, g, lap, sh, tau, n);
            rep.slices.push_back(HarnackSlice{t, vf.max_v, vf.max_u});
        }
        const auto ak = heat.coefficients(t_end - taus.front());
        double u0 = 0.0;
        for (double x : ak) u0 += x;
        rep.tail = std::abs(ak.back()) / std::abs(u0);
        rep.increase_K = rep.tail > 1e-6;
    } else {
        throw DomainError("Harnack check supports homogeneous and Euclidean trajectories");
    }
    rep.max_v_relative = -std::numeric_limits<double>::infinity();
    for (const auto& s : rep.slices)
        rep.max_v_relative = std::max(rep.max_v_relative, s.max_v / s.max_u);
    return rep;
}

}  // namespace hrf
