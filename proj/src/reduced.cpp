#include "hrf/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <boost/math/tools/minima.hpp>

namespace hrf {

namespace {

constexpr double pi = std::numbers::pi;

std::vector<double> squared(const std::vector<double>& f) {
    std::vector<double> r(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) r[j] = f[j] * f[j];
    return r;
}

bool frozen_fiber(const GeometryState& s) { return !std::holds_alternative<WarpedState>(s); }

bool time_in_window(const FlowTrajectory& traj, double t) {
    const auto [lo, hi] = traj.window();
    return t >= lo && (traj.exact ? t < hi : t <= hi);
}

// Runs body(i) for i < count on OpenMP threads and rethrows the first
// exception after the loop.
template <class F>
void parallel_tasks(std::size_t count, F&& body) {
    std::exception_ptr error;
    std::mutex guard;
    for_each_index(Exec::Parallel, count, [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!error) error = std::current_exception();
        }
    });
    if (error) std::rethrow_exception(error);
}

struct GaussRule {
    std::vector<double> x, w;
};

// Gauss-Legendre nodes on [a, b] by Newton iteration on P_N.
GaussRule gauss_legendre(std::size_t N, double a, double b) {
    GaussRule r{std::vector<double>(N), std::vector<double>(N)};
    const int n = static_cast<int>(N);
    for (std::size_t i = 0; i < N; ++i) {
        double x = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(N) + 0.5));
        for (int it = 0; it < 100; ++it) {
            const double dx = boost::math::legendre_p(n, x) / boost::math::legendre_p_prime(n, x);
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = boost::math::legendre_p_prime(n, x);
        r.x[i] = 0.5 * (a + b) + 0.5 * (b - a) * x;
        r.w[i] = (b - a) / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

// Segment energy and its derivatives in (u_k, v_k, u_{k+1}, v_{k+1}).
struct SegmentTerms {
    double E = 0.0;
    Eigen::Vector4d g = Eigen::Vector4d::Zero();
    Eigen::Matrix4d H = Eigen::Matrix4d::Zero();
};

double segment_energy(const SliceField& f, double h, double sm, double u0, double v0, double u1,
                      double v1) {
    const auto F = f(0.5 * (u0 + u1));
    const double du = u1 - u0, dv = v1 - v0;
    return 0.5 * (F.m1 * du * du + F.m2 * dv * dv) / h + 2.0 * h * sm * sm * F.sh;
}

SegmentTerms segment_terms(const SliceField& f, double h, double sm, double u0, double v0,
                           double u1, double v1) {
    const auto F = f(0.5 * (u0 + u1));
    const double du = u1 - u0, dv = v1 - v0;
    const double P = 2.0 * h * sm * sm;
    SegmentTerms s;
    s.E = 0.5 * (F.m1 * du * du + F.m2 * dv * dv) / h + P * F.sh;
    const Eigen::Vector3d A(0.5 * (F.m1u * du * du + F.m2u * dv * dv) / h + P * F.shu,
                            F.m1 * du / h, F.m2 * dv / h);
    Eigen::Matrix3d HA;
    HA << 0.5 * (F.m1uu * du * du + F.m2uu * dv * dv) / h + P * F.shuu, F.m1u * du / h,
        F.m2u * dv / h,  //
        F.m1u * du / h, F.m1 / h, 0.0,  //
        F.m2u * dv / h, 0.0, F.m2 / h;
    Eigen::Matrix<double, 3, 4> J;
    J << 0.5, 0.0, 0.5, 0.0,  //
        -1.0, 0.0, 1.0, 0.0,  //
        0.0, -1.0, 0.0, 1.0;
    s.g = J.transpose() * A;
    s.H = J.transpose() * HA * J;
    return s;
}

struct BlockSystem {
    std::vector<Eigen::Matrix2d> D;  // diagonal blocks of interior nodes
    std::vector<Eigen::Matrix2d> U;  // coupling of node i to node i + 1
    std::vector<Eigen::Vector2d> G;
    double gnorm = 0.0;
    double pscale = 0.0;
    double dscale = 0.0;
};

BlockSystem assemble(const ActionField& field, const std::vector<double>& u,
                     const std::vector<double>& v, bool freeze_v) {
    const auto& sg = field.sigma();
    const std::size_t K = field.segments();
    const std::size_t m = K - 1;
    BlockSystem sys;
    sys.D.assign(m, Eigen::Matrix2d::Zero());
    sys.U.assign(m > 0 ? m - 1 : 0, Eigen::Matrix2d::Zero());
    sys.G.assign(m, Eigen::Vector2d::Zero());
    for (std::size_t k = 0; k < K; ++k) {
        const double h = sg[k + 1] - sg[k];
        const double sm = 0.5 * (sg[k] + sg[k + 1]);
        const SegmentTerms t = segment_terms(field.slice(k), h, sm, u[k], v[k], u[k + 1], v[k + 1]);
        sys.pscale = std::max(sys.pscale, std::abs(t.g(3)) + std::abs(t.g(2)));
        if (k >= 1) {
            sys.D[k - 1] += t.H.block<2, 2>(0, 0);
            sys.G[k - 1] += t.g.segment<2>(0);
        }
        if (k + 1 <= m) {
            sys.D[k] += t.H.block<2, 2>(2, 2);
            sys.G[k] += t.g.segment<2>(2);
        }
        if (k >= 1 && k + 1 <= m) sys.U[k - 1] = t.H.block<2, 2>(0, 2);
    }
    if (freeze_v) {
        for (auto& d : sys.D) {
            d(0, 1) = d(1, 0) = 0.0;
            d(1, 1) = 1.0;
        }
        for (auto& c : sys.U) {
            c.row(1).setZero();
            c.col(1).setZero();
        }
        for (auto& g : sys.G) g(1) = 0.0;
    }
    for (std::size_t i = 0; i < m; ++i) {
        sys.gnorm = std::max(sys.gnorm, sys.G[i].cwiseAbs().maxCoeff());
        sys.dscale = std::max(sys.dscale, sys.D[i].cwiseAbs().maxCoeff());
    }
    return sys;
}

// Block-Thomas solve of (H + mu I) x = -G. False when a pivot block is not
// positive definite.
bool block_solve(const BlockSystem& s, double mu, std::vector<Eigen::Vector2d>& x) {
    const std::size_t m = s.D.size();
    x.assign(m, Eigen::Vector2d::Zero());
    if (m == 0) return true;
    std::vector<Eigen::LLT<Eigen::Matrix2d>> piv(m);
    std::vector<Eigen::Vector2d> gp(m);
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d Dp = s.D[0] + mu * I;
    gp[0] = -s.G[0];
    for (std::size_t i = 0; i < m; ++i) {
        piv[i].compute(Dp);
        if (piv[i].info() != Eigen::Success || !(Dp(0, 0) > 0.0)) return false;
        if (i + 1 == m) break;
        const Eigen::Matrix2d L = s.U[i].transpose() * piv[i].solve(I);
        Dp = s.D[i + 1] + mu * I - L * s.U[i];
        gp[i + 1] = -s.G[i + 1] - L * gp[i];
    }
    x[m - 1] = piv[m - 1].solve(gp[m - 1]);
    for (std::size_t i = m - 1; i-- > 0;) x[i] = piv[i].solve(gp[i] - s.U[i] * x[i + 1]);
    for (const auto& xi : x)
        if (!xi.allFinite()) return false;
    return true;
}

struct SolveState {
    std::vector<double> u, v;
    double S = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    double gnorm = 0.0;
};

bool gradient_small(const BlockSystem& sys, double tol) {
    return sys.gnorm <= tol * (1.0 + sys.pscale);
}

SolveState newton_minimize(const ActionField& field, std::vector<double> u, std::vector<double> v,
                           bool freeze_v) {
    const auto& opts = field.options();
    SolveState st;
    st.S = discrete_action(field, u, v);
    const std::size_t m = field.segments() - 1;
    std::vector<Eigen::Vector2d> d;
    std::vector<double> ut(u.size()), vt(v.size());
    auto trial = [&](double a) {
        for (std::size_t i = 0; i < m; ++i) {
            ut[i + 1] = u[i + 1] + a * d[i](0);
            vt[i + 1] = v[i + 1] + a * d[i](1);
        }
        ut.front() = u.front();
        ut.back() = u.back();
        vt.front() = v.front();
        vt.back() = v.back();
        const double S = discrete_action(field, ut, vt);
        return std::isfinite(S) ? S : std::numeric_limits<double>::infinity();
    };
    for (; st.iterations < opts.max_iter; ++st.iterations) {
        const BlockSystem sys = assemble(field, u, v, freeze_v);
        st.gnorm = sys.gnorm;
        if (gradient_small(sys, opts.grad_tol)) {
            st.converged = true;
            break;
        }
        double mu = 0.0;
        bool accepted = false;
        for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
            if (!block_solve(sys, mu, d)) {
                mu = mu == 0.0 ? 1e-10 * (1.0 + sys.dscale) : 10.0 * mu;
                continue;
            }
            const double S1 = trial(1.0);
            double a = 1.0, Sa = S1;
            const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(st.S);
            if (!(S1 < st.S || (mu == 0.0 && S1 <= st.S + slack))) {
                const auto r = boost::math::tools::brent_find_minima(
                    trial, 0.0, 1.0, std::numeric_limits<double>::digits / 2);
                a = r.first;
                Sa = r.second;
            }
            if (Sa < st.S || (mu == 0.0 && a == 1.0 && Sa <= st.S + slack)) {
                trial(a);
                u = ut;
                v = vt;
                st.S = Sa;
                accepted = true;
            } else {
                mu = mu == 0.0 ? 1e-8 * (1.0 + sys.dscale) : 10.0 * mu;
            }
        }
        if (!accepted) {
            // No descent left at working precision.
            st.converged = gradient_small(sys, 100.0 * opts.grad_tol);
            break;
        }
    }
    st.u = std::move(u);
    st.v = std::move(v);
    return st;
}

// Linear-in-integral initial guess: u follows the cumulative sum of h / m1.
void initial_guess(const ActionField& field, double u0, double u1, double v1, bool freeze_v,
                   std::vector<double>& u, std::vector<double>& v) {
    const auto& sg = field.sigma();
    const std::size_t K = field.segments();
    std::vector<double> C(K + 1, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const double frac = (static_cast<double>(k) + 0.5) / static_cast<double>(K);
        const double m1 = field.slice(k)(u0 + frac * (u1 - u0)).m1;
        C[k + 1] = C[k] + (sg[k + 1] - sg[k]) / std::max(m1, 1e-300);
    }
    u.assign(K + 1, u0);
    v.assign(K + 1, 0.0);
    for (std::size_t k = 0; k <= K; ++k) {
        const double w = C[K] > 0.0 ? C[k] / C[K] : static_cast<double>(k) / static_cast<double>(K);
        u[k] = u0 + w * (u1 - u0);
        if (!freeze_v) v[k] = w * v1;
    }
    u[K] = u1;
    if (!freeze_v) v[K] = v1;
}

double sigma_bar_of(const ActionField& field) { return field.sigma().back(); }

void check_field_time(const ActionField& field, double t_bar) {
    const double s = sigma_bar_of(field);
    const double t = field.t0() - s * s;
    if (std::abs(t - t_bar) > 1e-9 * std::max(1.0, std::abs(t_bar)))
        throw DomainError("action field was built for a different t_bar");
}

MinimizeResult package(const ActionField& field, const Point& p, const Point& q, double t_bar,
                       const SolveState& st) {
    MinimizeResult r;
    const auto& sg = field.sigma();
    const std::size_t K = field.segments();
    r.curve.sigma = sg;
    r.curve.times.resize(K + 1);
    r.curve.positions.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        r.curve.times[k] = field.t0() - sg[k] * sg[k];
        r.curve.positions[k] = Point{st.u[k], st.v[k]};
    }
    r.curve.times[K] = t_bar;
    r.curve.base = p;
    r.curve.t0 = field.t0();
    r.curve.foot = q;
    r.curve.t_bar = t_bar;
    r.L = st.S;
    r.l = st.S / (2.0 * sg[K]);
    r.converged = st.converged;
    r.iterations = st.iterations;
    r.grad_norm = st.gnorm;
    const SegmentTerms last = segment_terms(field.slice(K - 1), sg[K] - sg[K - 1],
                                            0.5 * (sg[K] + sg[K - 1]), st.u[K - 1], st.v[K - 1],
                                            st.u[K], st.v[K]);
    r.foot_momentum = last.g(2);
    r.foot_momentum_v = last.g(3);
    return r;
}

}  // namespace

SliceField::SliceField(const GeometryState& s) {
    if (const auto* h = std::get_if<HomogeneousState>(&s)) {
        kind_ = Kind::Homogeneous;
        c_ = h->c;
        sh_ = curvature_homogeneous(*h).sh[0];
    } else if (const auto* w = std::get_if<WarpedState>(&s)) {
        kind_ = Kind::Warped;
        const CurvaturePacket pk = curvature_warped(*w, 1e-8, Exec::Serial);
        a2_ = PeriodicSpline(squared(w->a), two_pi);
        w2_ = PeriodicSpline(squared(w->w), two_pi);
        shs_ = PeriodicSpline(pk.sh, two_pi);
    } else {
        kind_ = Kind::Euclidean;
    }
}

SliceField::Value SliceField::operator()(double u) const {
    Value r{};
    switch (kind_) {
    case Kind::Homogeneous: {
        const double s = std::sin(u), c = std::cos(u);
        r.m1 = c_;
        r.m2 = c_ * s * s;
        r.m2u = 2.0 * c_ * s * c;
        r.m2uu = 2.0 * c_ * (c * c - s * s);
        r.sh = sh_;
        break;
    }
    case Kind::Euclidean:
        r.m1 = 1.0;
        r.m2 = u * u;
        r.m2u = 2.0 * u;
        r.m2uu = 2.0;
        break;
    case Kind::Warped: {
        const auto A = a2_(u), W = w2_(u), S = shs_(u);
        r.m1 = A.f;
        r.m1u = A.df;
        r.m1uu = A.ddf;
        r.m2 = W.f;
        r.m2u = W.df;
        r.m2uu = W.ddf;
        r.sh = S.f;
        r.shu = S.df;
        r.shuu = S.ddf;
        break;
    }
    }
    return r;
}

std::vector<double> sigma_grid(double sigma_bar, std::size_t segments, std::optional<double> scale) {
    if (segments < 2) throw DomainError("sigma grid needs at least 2 segments");
    if (!(sigma_bar > 0.0)) throw DomainError("sigma grid needs sigma_bar > 0");
    std::vector<double> s(segments + 1);
    const double K = static_cast<double>(segments);
    if (!scale || !(*scale > 0.0) || sigma_bar / *scale < 4.0) {
        for (std::size_t k = 0; k <= segments; ++k) s[k] = sigma_bar * static_cast<double>(k) / K;
    } else {
        const double beta = std::asinh(sigma_bar / *scale);
        for (std::size_t k = 0; k <= segments; ++k)
            s[k] = *scale * std::sinh(beta * static_cast<double>(k) / K);
    }
    s[segments] = sigma_bar;
    return s;
}

ActionField::ActionField(const FlowTrajectory& traj, double t0, double t_bar,
                         const MinimizerOptions& opts)
    : t0_(t0), options_(opts) {
    if (!(t_bar < t0)) throw DomainError("reduced length needs t_bar < t0");
    const auto [lo, hi] = traj.window();
    if (t_bar < lo || t0 > hi) throw DomainError("t_bar or t0 outside the trajectory window");
    const double sigma_bar = std::sqrt(t0 - t_bar);
    std::optional<double> scale;
    if (opts.stretch) {
        if (const auto T = traj.T_est(); T && *T >= t0)
            scale = std::max(std::sqrt(*T - t0), 1e-8 * sigma_bar);
    }
    sigma_ = sigma_grid(sigma_bar, opts.nodes, scale);
    build(traj);
}

ActionField::ActionField(const FlowTrajectory& traj, double t0, std::vector<double> sigma)
    : t0_(t0), sigma_(std::move(sigma)) {
    if (sigma_.size() < 3 || sigma_.front() != 0.0)
        throw DomainError("sigma nodes must start at 0 and have at least 2 segments");
    for (std::size_t k = 1; k < sigma_.size(); ++k)
        if (!(sigma_[k] > sigma_[k - 1])) throw DomainError("sigma nodes must increase");
    options_.nodes = sigma_.size() - 1;
    build(traj);
}

void ActionField::build(const FlowTrajectory& traj) {
    const std::size_t K = sigma_.size() - 1;
    slices_.clear();
    slices_.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double sm = 0.5 * (sigma_[k] + sigma_[k + 1]);
        slices_.emplace_back(traj.state_at(t0_ - sm * sm));
    }
}

double discrete_action(const ActionField& field, const std::vector<double>& u,
                       const std::vector<double>& v) {
    const auto& sg = field.sigma();
    const std::size_t K = field.segments();
    if (u.size() != K + 1 || v.size() != K + 1) throw DomainError("curve size does not match the field");
    double S = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double h = sg[k + 1] - sg[k];
        S += segment_energy(field.slice(k), h, 0.5 * (sg[k] + sg[k + 1]), u[k], v[k], u[k + 1],
                            v[k + 1]);
    }
    return S;
}

double l_length(const SpaceTimeCurve& curve, const FlowTrajectory& traj, double t0) {
    const ActionField field(traj, t0, curve.sigma);
    std::vector<double> u(curve.positions.size()), v(curve.positions.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        u[k] = curve.positions[k].x;
        v[k] = curve.positions[k].psi;
    }
    return discrete_action(field, u, v);
}

TrackEndpoints track_endpoints(const GeometryState& s, const Point& p, const Point& q) {
    TrackEndpoints e;
    if (std::holds_alternative<HomogeneousState>(s)) {
        const double d = distance(HomogeneousState{dimension(s), 1.0}, p, q);
        e.u1 = {d, d - two_pi};
    } else if (std::holds_alternative<EuclideanState>(s)) {
        e.u1 = {distance(s, p, q)};
    } else {
        e.u0 = p.x;
        const double dx = principal_angle(q.x - p.x);
        e.u1 = {p.x + dx, p.x + dx - (dx >= 0.0 ? two_pi : -two_pi)};
        e.v1 = std::abs(principal_angle(q.psi - p.psi));
    }
    return e;
}

MinimizeResult minimize_l(const FlowTrajectory& traj, const Point& p, double t0, const Point& q,
                          double t_bar, const MinimizerOptions& opts) {
    const ActionField field(traj, t0, t_bar, opts);
    return minimize_l(field, traj.state_at(t_bar), p, q, t_bar);
}

MinimizeResult minimize_l(const ActionField& field, const GeometryState& geometry, const Point& p,
                          const Point& q, double t_bar) {
    check_field_time(field, t_bar);
    const TrackEndpoints ends = track_endpoints(geometry, p, q);
    const bool freeze = frozen_fiber(geometry);
    std::optional<SolveState> best;
    for (const double u1 : ends.u1) {
        std::vector<double> u, v;
        initial_guess(field, ends.u0, u1, ends.v1, freeze, u, v);
        SolveState st = newton_minimize(field, std::move(u), std::move(v), freeze);
        if (!best || st.S < best->S) best = std::move(st);
    }
    return package(field, p, q, t_bar, *best);
}

MinimizeResult minimize_l_reference(const ActionField& field, const GeometryState& geometry,
                                    const Point& p, const Point& q, double t_bar,
                                    std::size_t max_sweeps) {
    check_field_time(field, t_bar);
    const TrackEndpoints ends = track_endpoints(geometry, p, q);
    const bool freeze = frozen_fiber(geometry);
    const auto& sg = field.sigma();
    const std::size_t K = field.segments();
    const double tol = field.options().grad_tol;
    std::optional<SolveState> best;
    for (const double u1 : ends.u1) {
        SolveState st;
        initial_guess(field, ends.u0, u1, ends.v1, freeze, st.u, st.v);
        std::vector<double> ru(K + 1, std::abs(u1 - ends.u0) / static_cast<double>(K) + 1e-3);
        std::vector<double> rv(K + 1, ends.v1 / static_cast<double>(K) + 1e-3);
        auto local = [&](std::size_t i) {
            return segment_energy(field.slice(i - 1), sg[i] - sg[i - 1], 0.5 * (sg[i] + sg[i - 1]),
                                  st.u[i - 1], st.v[i - 1], st.u[i], st.v[i]) +
                   segment_energy(field.slice(i), sg[i + 1] - sg[i], 0.5 * (sg[i + 1] + sg[i]),
                                  st.u[i], st.v[i], st.u[i + 1], st.v[i + 1]);
        };
        auto relax = [&](std::size_t i, std::vector<double>& x, std::vector<double>& r) {
            const double x0 = x[i];
            auto f = [&](double y) {
                x[i] = y;
                return local(i);
            };
            const auto m = boost::math::tools::brent_find_minima(
                f, x0 - r[i], x0 + r[i], std::numeric_limits<double>::digits / 2);
            x[i] = m.first;
            const double moved = std::abs(m.first - x0);
            r[i] = moved > 0.9 * r[i] ? 2.0 * r[i] : std::max(4.0 * moved, 1e-12 * (1.0 + std::abs(x0)));
        };
        for (; st.iterations < max_sweeps; ++st.iterations) {
            const BlockSystem sys = assemble(field, st.u, st.v, freeze);
            st.gnorm = sys.gnorm;
            if (gradient_small(sys, tol)) {
                st.converged = true;
                break;
            }
            for (std::size_t i = 1; i < K; ++i) {
                relax(i, st.u, ru);
                if (!freeze) relax(i, st.v, rv);
            }
        }
        st.S = discrete_action(field, st.u, st.v);
        if (!best || st.S < best->S) best = std::move(st);
    }
    return package(field, p, q, t_bar, *best);
}

namespace {

using ShootVec = std::array<double, 5>;  // u, v, u', v', accumulated action

struct ShootSystem {
    const FlowTrajectory& traj;
    double t0;
    bool freeze_v;
    double delta;

    SliceField::Value at(double sigma, double u) const {
        return SliceField(traj.state_at(t0 - sigma * sigma))(u);
    }

    ShootVec operator()(double sigma, const ShootVec& y) const {
        const auto F = at(sigma, y[0]);
        const double sp = sigma + delta, sm = sigma - delta;
        const bool up_ok = time_in_window(traj, t0 - sp * sp);
        const bool dn_ok = time_in_window(traj, t0 - sm * sm);
        double m1dot = 0.0, m2dot = 0.0;
        if (up_ok && dn_ok) {
            const auto Fp = at(sp, y[0]), Fm = at(sm, y[0]);
            m1dot = (Fp.m1 - Fm.m1) / (2.0 * delta);
            m2dot = (Fp.m2 - Fm.m2) / (2.0 * delta);
        } else if (dn_ok) {
            const auto Fm = at(sm, y[0]);
            m1dot = (F.m1 - Fm.m1) / delta;
            m2dot = (F.m2 - Fm.m2) / delta;
        }
        const double up = y[2], vp = y[3];
        ShootVec d{};
        d[0] = up;
        d[1] = freeze_v ? 0.0 : vp;
        d[2] = (-0.5 * F.m1u * up * up + 0.5 * F.m2u * vp * vp + 2.0 * sigma * sigma * F.shu -
                m1dot * up) /
               F.m1;
        d[3] = freeze_v ? 0.0 : (-m2dot * vp - F.m2u * up * vp) / F.m2;
        d[4] = 0.5 * (F.m1 * up * up + F.m2 * vp * vp) + 2.0 * sigma * sigma * F.sh;
        return d;
    }
};

ShootVec rk4_step(const ShootSystem& sys, double s, const ShootVec& y, double h) {
    auto axpy = [](const ShootVec& a, double c, const ShootVec& b) {
        ShootVec r;
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] + c * b[i];
        return r;
    };
    const ShootVec k1 = sys(s, y);
    const ShootVec k2 = sys(s + 0.5 * h, axpy(y, 0.5 * h, k1));
    const ShootVec k3 = sys(s + 0.5 * h, axpy(y, 0.5 * h, k2));
    const ShootVec k4 = sys(s + h, axpy(y, h, k3));
    ShootVec r;
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return r;
}

bool finite(const ShootVec& y) {
    return std::all_of(y.begin(), y.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

ShootResult l_geodesic_shoot(const FlowTrajectory& traj, const Point& p, double t0,
                             std::array<double, 2> v0, double t_bar, std::size_t steps) {
    if (!(t_bar < t0)) throw DomainError("shooting needs t_bar < t0");
    if (steps < 2) throw DomainError("shooting needs at least 2 steps");
    const GeometryState g0 = traj.state_at(t0 - 0.0);
    const bool freeze = frozen_fiber(g0);
    if (freeze && v0[1] != 0.0)
        throw DomainError("isotropic classes shoot along a meridian: the fiber velocity must be 0");
    const double sigma_bar = std::sqrt(t0 - t_bar);
    const ShootSystem sys{traj, t0, freeze, 1e-5 * std::max(sigma_bar, 1e-3)};
    ShootResult r;
    r.curve.base = p;
    r.curve.t0 = t0;
    r.curve.t_bar = t_bar;
    const double u0 = freeze ? 0.0 : p.x;
    ShootVec y{u0, 0.0, 2.0 * v0[0], 2.0 * v0[1], 0.0};
    const double h = sigma_bar / static_cast<double>(steps);
    auto record = [&](double s) {
        r.curve.sigma.push_back(s);
        r.curve.times.push_back(t0 - s * s);
        r.curve.positions.push_back(Point{y[0], y[1]});
    };
    record(0.0);
    try {
        for (std::size_t k = 0; k < steps; ++k) {
            y = rk4_step(sys, h * static_cast<double>(k), y, h);
            if (!finite(y)) {
                r.ok = false;
                break;
            }
            record(k + 1 == steps ? sigma_bar : h * static_cast<double>(k + 1));
        }
    } catch (const DomainError&) {
        r.ok = false;
    }
    r.curve.times.back() = r.ok ? t_bar : r.curve.times.back();
    r.curve.foot = r.curve.positions.back();
    r.L = y[4];
    return r;
}

std::array<double, 2> initial_velocity_from_first_variation(const FlowTrajectory& traj,
                                                            const Point& p, double t0,
                                                            const Point& q, double t_bar,
                                                            const MinimizerOptions& opts) {
    const MinimizeResult m = minimize_l(traj, p, t0, q, t_bar, opts);
    const GeometryState gq = traj.state_at(t_bar);
    const bool freeze = frozen_fiber(gq);
    const double sigma_bar = std::sqrt(t0 - t_bar);
    const Point foot = m.curve.positions.back();
    const auto F = SliceField(gq)(foot.x);
    ShootVec y{foot.x, foot.psi, m.foot_momentum / F.m1,
               freeze ? 0.0 : m.foot_momentum_v / F.m2, 0.0};
    const ShootSystem sys{traj, t0, freeze, 1e-5 * std::max(sigma_bar, 1e-3)};
    const std::size_t steps = 4 * opts.nodes;
    const double h = sigma_bar / static_cast<double>(steps);
    for (std::size_t k = steps; k > 0; --k) {
        y = rk4_step(sys, h * static_cast<double>(k), y, -h);
        if (!finite(y)) throw DomainError("backward integration of the L-geodesic failed");
    }
    return {0.5 * y[2], 0.5 * y[3]};
}

std::vector<Probe> default_probes(const FlowTrajectory& traj, const Point& p, double T,
                                  std::size_t points, std::size_t times) {
    if (points == 0 || times < 2) throw DomainError("probe set needs points >= 1 and times >= 2");
    const GeometryState g = traj.states.front();
    std::vector<Point> qs;
    for (std::size_t k = 0; k < points; ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(points);
        if (std::holds_alternative<HomogeneousState>(g)) {
            double x = p.x + pi * f, psi = p.psi;
            if (x > pi) {
                x = two_pi - x;
                psi += pi;
            }
            qs.push_back(Point{x, psi});
        } else if (std::holds_alternative<EuclideanState>(g)) {
            qs.push_back(Point{p.x + 3.0 * std::sqrt(0.5 * T) * f, p.psi});
        } else {
            const auto& w = std::get<WarpedState>(g);
            const auto J = static_cast<long>(w.size());
            const long j0 = std::lround(wrap_angle(p.x) / w.dx());
            const long j = (j0 + static_cast<long>(k) * J / static_cast<long>(points)) % J;
            qs.push_back(Point{w.x(static_cast<std::size_t>(j)), p.psi});
        }
    }
    std::vector<Probe> probes;
    for (std::size_t i = 0; i < times; ++i) {
        const double tau =
            0.5 * T * std::pow(0.1, static_cast<double>(i) / static_cast<double>(times - 1));
        for (const auto& q : qs) probes.push_back(Probe{q, T - tau});
    }
    return probes;
}

std::vector<double> default_t_sequence(const FlowTrajectory& traj, std::size_t count) {
    const auto T = traj.T_est();
    if (!T) throw DomainError("t_i sequence needs an estimated singular time");
    if (count < 2) throw DomainError("t_i sequence needs at least 2 entries");
    std::vector<double> seq;
    for (std::size_t k = 0; k < count; ++k) {
        const double gap =
            *T * std::pow(10.0, -3.0 - 7.0 * static_cast<double>(k) / static_cast<double>(count - 1));
        const double t = *T - gap;
        if (time_in_window(traj, t)) seq.push_back(t);
    }
    if (seq.size() < 2) {
        seq.clear();
        const std::size_t n = traj.times.size();
        for (std::size_t k = n > count ? n - count : 0; k < n; ++k) seq.push_back(traj.times[k]);
    }
    return seq;
}

namespace {

struct LocalOps {
    double lap = 0.0;
    double grad_sq = 0.0;
};

// l at a probe of the isotropic classes, in the chart centred at the base.
double l_isotropic(const ActionField& f, const GeometryState& g, double r, double t_bar) {
    return minimize_l(f, g, Point{0.0, 0.0}, Point{r, 0.0}, t_bar).l;
}

std::optional<InequalityMargins> margins_at(const FlowTrajectory& traj, const Point& p, double t0,
                                            const Probe& pr, const MinimizerOptions& opts) {
    const double tb = pr.t_bar;
    const double tau = t0 - tb;
    const double dt = 1e-3 * tau;
    if (!time_in_window(traj, tb - dt)) return std::nullopt;
    const GeometryState g = traj.state_at(tb), gp = traj.state_at(tb + dt),
                        gm = traj.state_at(tb - dt);
    const ActionField f0(traj, t0, tb, opts), fp(traj, t0, tb + dt, opts), fm(traj, t0, tb - dt, opts);
    const int n = dimension(g);
    const SliceField slice(g);
    double l = 0.0, lt = 0.0, sh = 0.0;
    LocalOps ops;
    if (!std::holds_alternative<WarpedState>(g)) {
        const bool sphere = std::holds_alternative<HomogeneousState>(g);
        const double r = track_endpoints(g, p, pr.q).u1.front();
        const double c = sphere ? std::get<HomogeneousState>(g).c : 1.0;
        const double d = sphere ? 1e-2 : 1e-2 * std::sqrt(tau);
        if (sphere && r + d > pi - 1e-9) return std::nullopt;
        l = l_isotropic(f0, g, r, tb);
        lt = (l_isotropic(fp, gp, r, tb + dt) - l_isotropic(fm, gm, r, tb - dt)) / (2.0 * dt);
        sh = slice(r).sh;
        if (r < 0.5 * d) {
            const double lrr = 2.0 * (l_isotropic(f0, g, d, tb) - l) / (d * d);
            ops.lap = n * lrr / c;
        } else {
            const double lp = l_isotropic(f0, g, r + d, tb), lm = l_isotropic(f0, g, r - d, tb);
            const double lr = (lp - lm) / (2.0 * d), lrr = (lp - 2.0 * l + lm) / (d * d);
            const double cot = sphere ? std::cos(r) / std::sin(r) : 1.0 / r;
            ops.lap = (lrr + (n - 1) * cot * lr) / c;
            ops.grad_sq = lr * lr / c;
        }
    } else {
        auto L = [&](const ActionField& f, const GeometryState& gg, double x, double psi, double t) {
            return minimize_l(f, gg, p, Point{x, psi}, t).l;
        };
        const double x = pr.q.x, psi = pr.q.psi;
        const double dx = 2e-2, dpsi = 2e-2;
        l = L(f0, g, x, psi, tb);
        lt = (L(fp, gp, x, psi, tb + dt) - L(fm, gm, x, psi, tb - dt)) / (2.0 * dt);
        const double lp = L(f0, g, x + dx, psi, tb), lm = L(f0, g, x - dx, psi, tb);
        const double lx = (lp - lm) / (2.0 * dx), lxx = (lp - 2.0 * l + lm) / (dx * dx);
        const auto F = slice(x);
        sh = F.sh;
        const double a = std::sqrt(F.m1), ax = F.m1u / (2.0 * a);
        const double w = std::sqrt(F.m2), wx = F.m2u / (2.0 * w);
        const double ls = lx / a, lss = (lxx - ax / a * lx) / (a * a), ws = wx / a;
        const double v1 = std::abs(principal_angle(psi - p.psi));
        double fib_lap = 0.0, fib_grad = 0.0;
        if (v1 < 0.5 * dpsi) {
            const double lpp = 2.0 * (L(f0, g, x, p.psi + dpsi, tb) - l) / (dpsi * dpsi);
            fib_lap = (n - 1) * lpp;
        } else if (v1 + dpsi < pi) {
            const double l1 = L(f0, g, x, p.psi + v1 + dpsi, tb);
            const double l2 = L(f0, g, x, p.psi + v1 - dpsi, tb);
            const double lv = (l1 - l2) / (2.0 * dpsi), lvv = (l1 - 2.0 * l + l2) / (dpsi * dpsi);
            fib_lap = lvv + (n - 2) * std::cos(v1) / std::sin(v1) * lv;
            fib_grad = lv * lv;
        } else {
            return std::nullopt;
        }
        ops.lap = lss + (n - 1) * ws / w * ls + fib_lap / (w * w);
        ops.grad_sq = ls * ls + fib_grad / (w * w);
    }
    InequalityMargins m;
    m.probe = pr;
    m.m1 = -lt - ops.lap + ops.grad_sq - sh + n / (2.0 * tau);
    m.m2 = -(-ops.grad_sq + sh + (l - n) / tau + 2.0 * ops.lap);
    m.m3 = std::abs(-2.0 * lt + ops.grad_sq - sh + l / tau);
    return m;
}

}  // namespace

SingularLengthReport reduced_length_singular(const FlowTrajectory& traj, const Point& p,
                                             const std::vector<double>& t_seq,
                                             const std::vector<Probe>& probes,
                                             const MinimizerOptions& opts, bool with_margins) {
    if (t_seq.empty()) throw DomainError("empty t_i sequence");
    for (std::size_t i = 1; i < t_seq.size(); ++i)
        if (!(t_seq[i] > t_seq[i - 1])) throw DomainError("t_i sequence must increase");
    for (const auto& pr : probes)
        if (!(pr.t_bar < t_seq.front())) throw DomainError("probe time must precede every t_i");
    SingularLengthReport rep;
    rep.t_seq = t_seq;
    rep.probes = probes;
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t j = 0; j < probes.size(); ++j) groups[probes[j].t_bar].push_back(j);
    for (const double ti : t_seq) {
        std::vector<double> row(probes.size());
        std::vector<std::uint8_t> ok(probes.size(), 1);
        for (const auto& [tb, idx] : groups) {
            const ActionField field(traj, ti, tb, opts);
            const GeometryState g = traj.state_at(tb);
            parallel_tasks(idx.size(), [&](std::size_t k) {
                const auto r = minimize_l(field, g, p, probes[idx[k]].q, tb);
                row[idx[k]] = r.l;
                ok[idx[k]] = r.converged;
            });
        }
        for (auto c : ok) rep.all_converged = rep.all_converged && c;
        rep.l.push_back(std::move(row));
    }
    for (std::size_t i = 1; i < rep.l.size(); ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < probes.size(); ++j)
            d = std::max(d, std::abs(rep.l[i][j] - rep.l[i - 1][j]));
        rep.cauchy.push_back(d);
        if (rep.cauchy.size() >= 2 && d > rep.cauchy[rep.cauchy.size() - 2]) rep.cauchy_decreasing = false;
    }
    rep.l_T = rep.l.back();
    if (with_margins) {
        std::vector<std::optional<InequalityMargins>> ms(probes.size());
        parallel_tasks(probes.size(), [&](std::size_t j) {
            ms[j] = margins_at(traj, p, t_seq.back(), probes[j], opts);
        });
        for (auto& m : ms)
            if (m) rep.margins.push_back(*m);
    }
    return rep;
}

ReducedVolume reduced_volume(const FlowTrajectory& traj, const ReducedBase& base, double t_bar,
                             const VolumeOptions& opts) {
    if (!(t_bar < base.t0)) throw DomainError("reduced volume needs t_bar < t0");
    double tau = base.t0 - t_bar;
    if (base.singular) {
        const auto T = traj.T_est();
        if (!T) throw DomainError("singular base needs an estimated singular time");
        tau = *T - t_bar;
    }
    const ActionField field(traj, base.t0, t_bar, opts.minimizer);
    const GeometryState g = traj.state_at(t_bar);
    const int n = dimension(g);
    const double heat = std::pow(4.0 * pi * tau, -0.5 * n);
    ReducedVolume rv;
    rv.t_bar = t_bar;
    std::vector<Point> nodes;
    std::vector<double> weight;
    std::vector<std::size_t> column;  // profile index of each node
    double tail = 0.0;
    const Point origin{0.0, 0.0};
    Point anchor = origin;
    if (const auto* h = std::get_if<HomogeneousState>(&g)) {
        const GaussRule r = gauss_legendre(opts.radial_nodes, 0.0, pi);
        const double vol = std::pow(h->c, 0.5 * n) * unit_sphere_volume(n - 1);
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            nodes.push_back(Point{r.x[i], 0.0});
            weight.push_back(r.w[i] * vol * std::pow(std::sin(r.x[i]), n - 1));
            column.push_back(i);
            rv.coordinate.push_back(r.x[i]);
        }
    } else if (std::holds_alternative<EuclideanState>(g)) {
        const double R = opts.gaussian_window * std::sqrt(tau);
        const GaussRule r = gauss_legendre(opts.radial_nodes, 0.0, R);
        for (std::size_t i = 0; i < r.x.size(); ++i) {
            nodes.push_back(Point{r.x[i], 0.0});
            weight.push_back(r.w[i] * unit_sphere_volume(n - 1) * std::pow(r.x[i], n - 1));
            column.push_back(i);
            rv.coordinate.push_back(r.x[i]);
        }
        tail = boost::math::gamma_q(0.5 * n, R * R / (4.0 * tau));
    } else {
        const auto& w = std::get<WarpedState>(g);
        anchor = base.p;
        const auto& w0 = std::get<WarpedState>(traj.state_at(base.t0));
        const double a_min = std::min(*std::min_element(w.a.begin(), w.a.end()),
                                      *std::min_element(w0.a.begin(), w0.a.end()));
        const double w_min = std::min(*std::min_element(w.w.begin(), w.w.end()),
                                      *std::min_element(w0.w.begin(), w0.w.end()));
        const double reach = opts.gaussian_window * std::sqrt(tau);
        const PeriodicSpline as(w.a, two_pi), ws(w.w, two_pi);
        std::vector<double> xs, xw;
        if (reach / a_min < pi) {
            const GaussRule r = gauss_legendre(opts.radial_nodes, base.p.x - reach / a_min,
                                               base.p.x + reach / a_min);
            xs = r.x;
            xw = r.w;
        } else {
            const std::size_t stride = std::max<std::size_t>(opts.x_stride, 1);
            const std::size_t M = std::max<std::size_t>(w.size() / stride, 1);
            const double dxs = two_pi / static_cast<double>(M);
            for (std::size_t k = 0; k < M; ++k) {
                xs.push_back(base.p.x - pi + (static_cast<double>(k) + 0.5) * dxs);
                xw.push_back(dxs);
            }
        }
        const GaussRule r = gauss_legendre(opts.fiber_nodes, 0.0, std::min(pi, reach / w_min));
        const double omega = unit_sphere_volume(n - 2);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            rv.coordinate.push_back(xs[j]);
            const double aj = as(xs[j]).f, wj = ws(xs[j]).f;
            for (std::size_t i = 0; i < r.x.size(); ++i) {
                nodes.push_back(Point{xs[j], base.p.psi + r.x[i]});
                weight.push_back(xw[j] * r.w[i] * omega * std::pow(std::sin(r.x[i]), n - 2) * aj *
                                 std::pow(wj, n - 1));
                column.push_back(j);
            }
        }
    }
    std::vector<double> lv(nodes.size());
    std::vector<std::uint8_t> ok(nodes.size(), 1);
    parallel_tasks(nodes.size(), [&](std::size_t i) {
        const auto m = minimize_l(field, g, anchor, nodes[i], t_bar);
        lv[i] = m.l;
        ok[i] = m.converged;
    });
    rv.integrand.assign(rv.coordinate.size(), 0.0);
    double V = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double contrib = weight[i] * heat * std::exp(-lv[i]);
        V += contrib;
        rv.integrand[column[i]] += contrib;
        rv.all_converged = rv.all_converged && ok[i];
    }
    rv.V = V + tail;
    return rv;
}

MonotonicityVerdict monotonicity_monitor(std::vector<std::pair<double, double>> series, double tol) {
    if (series.size() < 3) throw DomainError("monotonicity monitor needs at least 3 samples");
    std::sort(series.begin(), series.end());
    MonotonicityVerdict v;
    for (std::size_t i = 0; i < series.size(); ++i) {
        v.max_V = std::max(v.max_V, series[i].second);
        if (i == 0) continue;
        const double prev = series[i - 1].second;
        const double drop = (prev - series[i].second) / std::abs(prev);
        v.worst_drop = std::max(v.worst_drop, drop);
    }
    v.pass = v.worst_drop <= tol;
    v.bounded = v.max_V <= 1.0 + tol;
    return v;
}

std::vector<double> zonal_grid(std::size_t M) {
    std::vector<double> th(M);
    for (std::size_t j = 0; j < M; ++j)
        th[j] = (static_cast<double>(j) + 0.5) * pi / static_cast<double>(M);
    return th;
}

namespace {

// Spatial operators applied to a fiber-symmetric field on one slice.
struct SliceOps {
    std::vector<double> lap, grad_sq, hess_b, hess_f, map_sq;
};

struct SliceCurvature {
    std::vector<double> sh, s_b, s_f, grad_phi_sq;
    double alpha = 0.0;
};

SliceCurvature slice_curvature(const GeometryState& g, std::size_t size) {
    const CurvaturePacket pk = curvature(g, 1e-8, Exec::Serial);
    SliceCurvature c;
    c.alpha = coupling_of(g);
    auto expand = [size](const std::vector<double>& v) {
        return v.size() == size ? v : std::vector<double>(size, v.front());
    };
    c.sh = expand(pk.sh);
    c.s_b = expand(pk.s_base);
    c.s_f = expand(pk.s_fiber);
    c.grad_phi_sq = expand(pk.grad_phi_sq);
    return c;
}

SliceOps slice_ops(const GeometryState& g, const std::vector<double>& f) {
    const std::size_t N = f.size();
    SliceOps o;
    o.lap.resize(N);
    o.grad_sq.resize(N);
    o.hess_b.resize(N);
    o.hess_f.resize(N);
    o.map_sq.assign(N, 0.0);
    const int n = dimension(g);
    if (const auto* h = std::get_if<HomogeneousState>(&g)) {
        const double dth = pi / static_cast<double>(N);
        const auto th = zonal_grid(N);
        const bool eig = h->map == MapKind::IdentityEigenmap;
        for (std::size_t j = 0; j < N; ++j) {
            const double fm = f[j == 0 ? 0 : j - 1], fp = f[j + 1 == N ? N - 1 : j + 1];
            const double ft = (fp - fm) / (2.0 * dth), ftt = (fp - 2.0 * f[j] + fm) / (dth * dth);
            o.hess_b[j] = ftt / h->c;
            o.hess_f[j] = std::cos(th[j]) / std::sin(th[j]) * ft / h->c;
            o.grad_sq[j] = ft * ft / h->c;
            o.lap[j] = o.hess_b[j] + (n - 1) * o.hess_f[j];
            if (eig) o.map_sq[j] = o.grad_sq[j] / h->c;
        }
    } else if (const auto* e = std::get_if<EuclideanState>(&g)) {
        if (N != e->J) throw DomainError("field size does not match the radial grid");
        const RadialDerivatives d = radial_derivatives(*e, f);
        for (std::size_t j = 0; j < N; ++j) {
            o.hess_b[j] = d.drr[j];
            o.hess_f[j] = d.dr[j] / e->r(j);
            o.grad_sq[j] = d.dr[j] * d.dr[j];
            o.lap[j] = o.hess_b[j] + (n - 1) * o.hess_f[j];
        }
    } else {
        const auto& w = std::get<WarpedState>(g);
        if (N != w.size()) throw DomainError("field size does not match the warped grid");
        const ArclengthDerivatives d = arclength_derivatives(w, f, Exec::Serial);
        const ArclengthDerivatives dw = arclength_derivatives(w, w.w, Exec::Serial);
        const ArclengthDerivatives dp = arclength_derivatives(w, w.phi_periodic(), Exec::Serial);
        const CurvaturePacket pk = curvature_warped(w, 1e-8, Exec::Serial);
        for (std::size_t j = 0; j < N; ++j) {
            o.hess_b[j] = d.dss[j];
            o.hess_f[j] = dw.ds[j] / w.w[j] * d.ds[j];
            o.grad_sq[j] = d.ds[j] * d.ds[j];
            o.lap[j] = o.hess_b[j] + (n - 1) * o.hess_f[j];
            const double phis = dp.ds[j] + w.winding / w.a[j];
            const double m = pk.tension[j] - phis * d.ds[j];
            o.map_sq[j] = m * m;
        }
    }
    return o;
}

}  // namespace

WResidual w_residual(const FlowTrajectory& traj, const ScalarSlices& l, double T) {
    const auto& t = l.times;
    if (!(t[0] < t[1] && t[1] < t[2])) throw DomainError("slice times must increase");
    if (std::abs((t[2] - t[1]) - (t[1] - t[0])) > 1e-9 * (t[2] - t[0]))
        throw DomainError("slice times must be equally spaced");
    if (!(t[2] < T)) throw DomainError("slices must precede T");
    const std::size_t N = l.values[1].size();
    if (N < 3 || l.values[0].size() != N || l.values[2].size() != N)
        throw DomainError("slice fields must have equal size >= 3");
    std::array<std::vector<double>, 3> w, v;
    GeometryState g1;
    SliceCurvature c1;
    SliceOps o1;
    for (std::size_t k = 0; k < 3; ++k) {
        const GeometryState g = traj.state_at(t[k]);
        const int n = dimension(g);
        const double tau = T - t[k];
        const SliceCurvature c = slice_curvature(g, N);
        const SliceOps o = slice_ops(g, l.values[k]);
        w[k].resize(N);
        v[k].resize(N);
        for (std::size_t j = 0; j < N; ++j) {
            const double lj = l.values[k][j];
            v[k][j] = std::pow(4.0 * pi * tau, -0.5 * n) * std::exp(-lj);
            w[k][j] = (tau * (2.0 * o.lap[j] - o.grad_sq[j] + c.sh[j]) + lj - n) * v[k][j];
        }
        if (k == 1) {
            g1 = g;
            c1 = c;
            o1 = o;
        }
    }
    const int n = dimension(g1);
    const double tau = T - t[1];
    const double alpha_dot = traj.schedule.alpha_dot(t[1]);
    const SliceOps ow = slice_ops(g1, w[1]);
    WResidual r;
    r.lhs.resize(N);
    r.rhs.resize(N);
    for (std::size_t j = 0; j < N; ++j) {
        const double wt = (w[2][j] - w[0][j]) / (t[2] - t[0]);
        r.lhs[j] = -wt - ow.lap[j] + c1.sh[j] * w[1][j];
        const double eb = c1.s_b[j] + o1.hess_b[j] - 0.5 / tau;
        const double ef = c1.s_f[j] + o1.hess_f[j] - 0.5 / tau;
        r.rhs[j] = -2.0 * tau *
                   (eb * eb + (n - 1) * ef * ef + c1.alpha * o1.map_sq[j] -
                    alpha_dot * c1.grad_phi_sq[j]) *
                   v[1][j];
        r.lhs_sup = std::max(r.lhs_sup, std::abs(r.lhs[j]));
        r.rhs_sup = std::max(r.rhs_sup, std::abs(r.rhs[j]));
        r.defect = std::max(r.defect, std::abs(r.lhs[j] - r.rhs[j]));
    }
    return r;
}

}  // namespace hrf
