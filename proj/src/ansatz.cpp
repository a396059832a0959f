#include "hrf/ansatz.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

namespace hrf {

ConfigError::ConfigError(std::vector<std::string> v)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration:";
          for (const auto& s : v) msg += "\n  " + s;
          return msg;
      }()),
      violations(std::move(v)) {}

double unit_sphere_volume(int k) {
    const double h = 0.5 * (k + 1);
    return 2.0 * std::pow(std::numbers::pi, h) / boost::math::tgamma(h);
}

void HomogeneousState::validate() const {
    if (n < 2) throw DomainError("homogeneous state requires n >= 2");
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("homogeneous state requires c > 0");
    if (!(alpha > 0.0)) throw DomainError("coupling alpha must be positive");
}

std::vector<double> WarpedState::phi_periodic() const {
    std::vector<double> out(phi.size());
    for (std::size_t j = 0; j < phi.size(); ++j) out[j] = phi[j] - winding * x(j);
    return out;
}

void WarpedState::validate() const {
    if (n < 3) throw DomainError("warped state requires n >= 3");
    if (a.size() < 16) throw DomainError("warped state requires J >= 16");
    if (w.size() != a.size() || phi.size() != a.size())
        throw DomainError("warped state arrays have mismatched sizes");
    if (!(alpha > 0.0)) throw DomainError("coupling alpha must be positive");
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (!std::isfinite(a[j]) || !std::isfinite(w[j]) || !std::isfinite(phi[j]))
            throw DomainError("warped state contains non-finite values");
        if (!(a[j] > 0.0)) throw DomainError("warped state requires a > 0");
    }
}

void EuclideanState::validate() const {
    if (n < 1) throw DomainError("euclidean state requires n >= 1");
    if (!(r_max > 0.0) || J < 2) throw DomainError("euclidean radial grid is empty");
}

int dimension(const GeometryState& s) {
    return std::visit([](const auto& g) { return g.n; }, s);
}

double coupling_of(const GeometryState& s) {
    if (const auto* h = std::get_if<HomogeneousState>(&s)) return h->alpha;
    if (const auto* w = std::get_if<WarpedState>(&s)) return w->alpha;
    return 0.0;
}

void CurvaturePacket::resize(std::size_t n) {
    for (auto* v : {&rm_norm, &k_base, &k_fiber, &ric_base, &ric_fiber, &sc, &s_base, &s_fiber, &sh,
                    &grad_phi_sq, &tension, &hess_phi_norm})
        v->assign(n, 0.0);
    singular.assign(n, 0);
    any_singular = false;
}

double CurvaturePacket::s_norm_sq(std::size_t j, int n) const {
    return s_base[j] * s_base[j] + (n - 1) * s_fiber[j] * s_fiber[j];
}

double CurvaturePacket::max_rm() const {
    double m = 0.0;
    for (double v : rm_norm) m = std::max(m, v);
    return m;
}

double CurvaturePacket::min_sh() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : sh) m = std::min(m, v);
    return m;
}

CurvaturePacket curvature_homogeneous(const HomogeneousState& s) {
    s.validate();
    const double n = s.n;
    const double eig = s.map == MapKind::IdentityEigenmap ? 1.0 : 0.0;
    CurvaturePacket p;
    p.resize(1);
    p.k_base[0] = p.k_fiber[0] = 1.0 / s.c;
    p.rm_norm[0] = std::sqrt(2.0 * n * (n - 1.0)) / s.c;
    p.ric_base[0] = p.ric_fiber[0] = (n - 1.0) / s.c;
    p.sc[0] = n * (n - 1.0) / s.c;
    p.grad_phi_sq[0] = eig * n / s.c;
    p.s_base[0] = p.s_fiber[0] = (n - 1.0 - s.alpha * eig) / s.c;
    p.sh[0] = p.sc[0] - s.alpha * p.grad_phi_sq[0];
    return p;
}

CurvaturePacket curvature_euclidean(const EuclideanState& s) {
    s.validate();
    CurvaturePacket p;
    p.resize(s.J);
    return p;
}

namespace {

struct Stencil {
    double f;
    double fx;
    double fxx;
};

inline Stencil periodic_stencil(const std::vector<double>& f, std::size_t j, double dx) {
    const std::size_t J = f.size();
    const double fm = f[(j + J - 1) % J];
    const double fp = f[(j + 1) % J];
    return {f[j], (fp - fm) / (2.0 * dx), (fp - 2.0 * f[j] + fm) / (dx * dx)};
}

}  // namespace

CurvaturePacket curvature_warped(const WarpedState& s, double w_floor, Exec exec) {
    s.validate();
    const std::size_t J = s.size();
    const double dx = s.dx();
    const double n = s.n;
    const std::vector<double> psi = s.phi_periodic();
    CurvaturePacket p;
    p.resize(J);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    for_each_index(exec, J, [&](std::size_t j) {
        const Stencil A = periodic_stencil(s.a, j, dx);
        const Stencil W = periodic_stencil(s.w, j, dx);
        const Stencil F = periodic_stencil(psi, j, dx);
        const double a = A.f;
        const double w = W.f;
        if (w <= w_floor) p.singular[j] = 1;
        if (!(w > 0.0)) {
            p.rm_norm[j] = std::numeric_limits<double>::infinity();
            for (auto* v : {&p.k_base, &p.k_fiber, &p.ric_base, &p.ric_fiber, &p.sc, &p.s_base,
                            &p.s_fiber, &p.sh, &p.grad_phi_sq, &p.tension, &p.hess_phi_norm})
                (*v)[j] = nan;
            return;
        }
        const double ws = W.fx / a;
        const double wss = (W.fxx - A.fx / a * W.fx) / (a * a);
        const double phix = F.fx + s.winding;
        const double phis = phix / a;
        const double phiss = (F.fxx - A.fx / a * phix) / (a * a);

        const double k1 = -wss / w;
        const double k2 = (1.0 - ws * ws) / (w * w);
        p.k_base[j] = k1;
        p.k_fiber[j] = k2;
        p.rm_norm[j] =
            2.0 * std::sqrt((n - 1.0) * k1 * k1 + 0.5 * (n - 1.0) * (n - 2.0) * k2 * k2);
        p.ric_base[j] = (n - 1.0) * k1;
        p.ric_fiber[j] = k1 + (n - 2.0) * k2;
        p.sc[j] = 2.0 * (n - 1.0) * k1 + (n - 1.0) * (n - 2.0) * k2;
        p.grad_phi_sq[j] = phis * phis;
        p.s_base[j] = p.ric_base[j] - s.alpha * p.grad_phi_sq[j];
        p.s_fiber[j] = p.ric_fiber[j];
        p.sh[j] = p.sc[j] - s.alpha * p.grad_phi_sq[j];
        const double fiber_hess = ws * phis / w;
        p.tension[j] = phiss + (n - 1.0) * fiber_hess;
        p.hess_phi_norm[j] = std::sqrt(phiss * phiss + (n - 1.0) * fiber_hess * fiber_hess);
    });
    p.any_singular = std::any_of(p.singular.begin(), p.singular.end(), [](auto v) { return v != 0; });
    return p;
}

CurvaturePacket curvature(const GeometryState& s, double w_floor, Exec exec) {
    if (const auto* h = std::get_if<HomogeneousState>(&s)) return curvature_homogeneous(*h);
    if (const auto* w = std::get_if<WarpedState>(&s)) return curvature_warped(*w, w_floor, exec);
    return curvature_euclidean(std::get<EuclideanState>(s));
}

ArclengthDerivatives arclength_derivatives(const WarpedState& s, const std::vector<double>& f,
                                           Exec exec) {
    if (f.size() != s.size()) throw DomainError("field size does not match the grid");
    const double dx = s.dx();
    ArclengthDerivatives d{std::vector<double>(f.size()), std::vector<double>(f.size())};
    for_each_index(exec, f.size(), [&](std::size_t j) {
        const Stencil A = periodic_stencil(s.a, j, dx);
        const Stencil F = periodic_stencil(f, j, dx);
        d.ds[j] = F.fx / A.f;
        d.dss[j] = (F.fxx - A.fx / A.f * F.fx) / (A.f * A.f);
    });
    return d;
}

std::vector<double> laplacian_warped(const WarpedState& s, const std::vector<double>& f,
                                     Exec exec) {
    const ArclengthDerivatives d = arclength_derivatives(s, f, exec);
    const ArclengthDerivatives dw = arclength_derivatives(s, s.w, exec);
    std::vector<double> out(f.size());
    for_each_index(exec, f.size(), [&](std::size_t j) {
        out[j] = d.dss[j] + (s.n - 1.0) * dw.ds[j] / s.w[j] * d.ds[j];
    });
    return out;
}

RadialDerivatives radial_derivatives(const EuclideanState& s, const std::vector<double>& f) {
    const std::size_t J = s.J;
    if (f.size() != J || J < 4) throw DomainError("field size does not match the radial grid");
    const double h = s.dr();
    RadialDerivatives d{std::vector<double>(J), std::vector<double>(J)};
    for (std::size_t j = 0; j + 1 < J; ++j) {
        const double fm = j == 0 ? f[0] : f[j - 1];
        d.dr[j] = (f[j + 1] - fm) / (2.0 * h);
        d.drr[j] = (f[j + 1] - 2.0 * f[j] + fm) / (h * h);
    }
    const std::size_t k = J - 1;
    d.dr[k] = (3.0 * f[k] - 4.0 * f[k - 1] + f[k - 2]) / (2.0 * h);
    d.drr[k] = (2.0 * f[k] - 5.0 * f[k - 1] + 4.0 * f[k - 2] - f[k - 3]) / (h * h);
    return d;
}

namespace {

std::array<double, 3> unit_vector(const Point& p) {
    return {std::sin(p.x) * std::cos(p.psi), std::sin(p.x) * std::sin(p.psi), std::cos(p.x)};
}

double sphere_angle(const Point& p, const Point& q) {
    const auto u = unit_vector(p);
    const auto v = unit_vector(q);
    const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    const double cx = u[1] * v[2] - u[2] * v[1];
    const double cy = u[2] * v[0] - u[0] * v[2];
    const double cz = u[0] * v[1] - u[1] * v[0];
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

std::size_t grid_index(const WarpedState& s, double x) {
    const double u = wrap_angle(x) / s.dx();
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-6) throw DomainError("warped point is not on a grid node");
    return static_cast<std::size_t>(r) % s.size();
}

}  // namespace

double distance(const GeometryState& s, const Point& p, const Point& q) {
    if (const auto* h = std::get_if<HomogeneousState>(&s)) {
        h->validate();
        return std::sqrt(h->c) * sphere_angle(p, q);
    }
    if (const auto* e = std::get_if<EuclideanState>(&s)) {
        (void)e;
        const double dx = p.x * std::cos(p.psi) - q.x * std::cos(q.psi);
        const double dy = p.x * std::sin(p.psi) - q.x * std::sin(q.psi);
        return std::hypot(dx, dy);
    }
    const auto& w = std::get<WarpedState>(s);
    w.validate();
    const std::size_t J = w.size();
    const std::size_t ip = grid_index(w, p.x);
    const std::size_t iq = grid_index(w, q.x);
    const double fiber_angle = std::abs(principal_angle(q.psi - p.psi));

    // cum[j]: trapezoid length of the base arc from node 0 to node j.
    std::vector<double> cum(J + 1, 0.0);
    for (std::size_t j = 0; j < J; ++j)
        cum[j + 1] = cum[j] + 0.5 * (w.a[j] + w.a[(j + 1) % J]) * w.dx();
    const double total = cum[J];
    auto base_dist = [&](std::size_t i, std::size_t k) {
        const double d = std::abs(cum[i] - cum[k]);
        return std::min(d, total - d);
    };
    if (fiber_angle == 0.0) return base_dist(ip, iq);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < J; ++c)
        best = std::min(best, base_dist(ip, c) + w.w[c] * fiber_angle + base_dist(c, iq));
    return best;
}

double euclidean_isoperimetric_constant(int n) {
    return std::pow(static_cast<double>(n), n - 1) * unit_sphere_volume(n - 1);
}

double isoperimetric_ratio(const WarpedState& s, double x0, double x1) {
    s.validate();
    if (!(x1 > x0)) throw DomainError("isoperimetric band is empty");
    const double dx = s.dx();
    const auto i0 = static_cast<std::size_t>(std::llround(x0 / dx));
    const auto i1 = static_cast<std::size_t>(std::llround(x1 / dx));
    if (i1 <= i0 || i1 - i0 >= s.size()) throw DomainError("isoperimetric band is empty");
    const std::size_t J = s.size();
    const double om = unit_sphere_volume(s.n - 1);
    auto fiber = [&](std::size_t j) { return om * std::pow(s.w[j % J], s.n - 1); };
    const double area = fiber(i0) + fiber(i1);
    double vol = 0.0;
    for (std::size_t j = i0; j < i1; ++j)
        vol += 0.5 * dx * (s.a[j % J] * fiber(j) + s.a[(j + 1) % J] * fiber(j + 1));
    return std::pow(area, s.n) / (euclidean_isoperimetric_constant(s.n) * std::pow(vol, s.n - 1));
}

}  // namespace hrf
