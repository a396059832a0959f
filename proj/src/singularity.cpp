#include "hrf/singularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "hrf/soliton.hpp"

namespace hrf {

namespace {

double require_T(const FlowTrajectory& traj) {
    const auto T = traj.T_est();
    if (!T) throw DomainError("trajectory has no estimated singular time");
    return *T;
}

std::vector<double> sup_rm_series(const FlowTrajectory& traj) {
    std::vector<double> out(traj.states.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = i < traj.monitors.size() ? traj.monitors[i].sup_rm
                                          : curvature(traj.states[i], traj.w_floor).max_rm();
    return out;
}

std::size_t periodic_distance(std::size_t i, std::size_t j, std::size_t J) {
    const std::size_t d = i > j ? i - j : j - i;
    return std::min(d, J - d);
}

}  // namespace

TypeIResult type_I_constant(const FlowTrajectory& traj) {
    const double T = require_T(traj);
    const std::vector<double> sup = sup_rm_series(traj);
    TypeIResult r;
    for (std::size_t i = 0; i < sup.size(); ++i)
        if (traj.times[i] < T) r.typeI_C = std::max(r.typeI_C, (T - traj.times[i]) * sup[i]);

    std::vector<double> lx, ly;
    for (std::size_t i : late_snapshots(traj)) {
        if (!(sup[i] > 0.0)) continue;
        lx.push_back(std::log(T - traj.times[i]));
        ly.push_back(std::log(sup[i]));
    }
    r.fit_points = lx.size();
    if (lx.size() < 5) {
        r.low_confidence = true;
        if (lx.size() < 2) return r;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) mx += lx[k], my += ly[k];
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxy += (lx[k] - mx) * (ly[k] - my);
        sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    if (!(sxx > 0.0)) {
        r.low_confidence = true;
        return r;
    }
    const double slope = sxy / sxx;
    r.typeA_r = -slope;
    r.typeA_C = std::exp(my - slope * mx);
    r.is_type_I = std::abs(r.typeA_r - 1.0) <= 0.1;
    return r;
}

std::vector<std::size_t> late_snapshots(const FlowTrajectory& traj) {
    const double T = require_T(traj);
    std::vector<std::size_t> idx;
    std::size_t last = traj.times.size();
    while (last > 0 && !(traj.times[last - 1] < T)) --last;
    if (last == 0) return idx;
    const double gap = T - traj.times[last - 1];
    for (std::size_t i = 0; i < last; ++i)
        if (T - traj.times[i] <= 10.0 * gap) idx.push_back(i);
    return idx;
}

BlowupSequences detect_essential_blowup(const FlowTrajectory& traj, double c_threshold,
                                        std::size_t persistence, std::size_t proximity) {
    if (!(c_threshold > 0.0)) throw DomainError("blow-up threshold must be positive");
    const double T = require_T(traj);
    const std::vector<std::size_t> late = late_snapshots(traj);
    BlowupSequences out;
    if (late.empty()) return out;
    const std::size_t J = curvature(traj.states[late.front()], traj.w_floor).size();
    out.limit_mask.assign(J, 0);
    std::vector<std::uint8_t> persistent(J, 1);
    const std::size_t first_persist = late.size() > persistence ? late.size() - persistence : 0;

    std::optional<std::size_t> prev_index;
    for (std::size_t k = 0; k < late.size(); ++k) {
        const std::size_t i = late[k];
        const double tau = T - traj.times[i];
        const CurvaturePacket p = curvature(traj.states[i], traj.w_floor);
        std::size_t arg = 0;
        for (std::size_t j = 0; j < J; ++j) {
            if (p.rm_norm[j] > p.rm_norm[arg]) arg = j;
            if (k >= first_persist && !(tau * p.rm_norm[j] >= c_threshold)) persistent[j] = 0;
        }
        const double rate = tau * p.rm_norm[arg];
        if (!(rate >= c_threshold)) {
            prev_index.reset();
            continue;
        }
        if (!prev_index || periodic_distance(arg, *prev_index, J) > proximity) ++out.chains;
        double x = 0.0;
        if (const auto* w = std::get_if<WarpedState>(&traj.states[i])) x = w->x(arg);
        out.records.push_back({x, arg, traj.times[i], rate, out.chains - 1});
        prev_index = arg;
    }
    out.limit_mask = persistent;
    return out;
}

std::size_t SingularSets::count(const std::vector<std::uint8_t>& m) {
    return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto v) { return v != 0; }));
}

long SingularSets::max_mask_distance() const {
    const std::vector<const std::vector<std::uint8_t>*> masks = {&sigma, &sigma_I, &sigma_S};
    long worst = 0;
    for (std::size_t a = 0; a < masks.size(); ++a)
        for (std::size_t b = a + 1; b < masks.size(); ++b) {
            const auto& A = *masks[a];
            const auto& B = *masks[b];
            const std::size_t na = count(A), nb = count(B);
            if (na == 0 && nb == 0) continue;
            if (na == 0 || nb == 0) return -1;
            const std::size_t J = A.size();
            auto directed = [J](const auto& X, const auto& Y) {
                std::size_t h = 0;
                for (std::size_t i = 0; i < J; ++i) {
                    if (!X[i]) continue;
                    std::size_t best = J;
                    for (std::size_t k = 0; k < J; ++k)
                        if (Y[k]) best = std::min(best, periodic_distance(i, k, J));
                    h = std::max(h, best);
                }
                return h;
            };
            worst = std::max<long>(worst, static_cast<long>(std::max(directed(A, B), directed(B, A))));
        }
    return worst;
}

SingularSets classify_singular_sets(const FlowTrajectory& traj, const SingularSetOptions& opts) {
    SingularSets out;
    const std::size_t J = curvature(traj.states.back(), traj.w_floor).size();
    out.sigma.assign(J, 0);
    out.sigma_I.assign(J, 0);
    out.sigma_S.assign(J, 0);
    out.raw_I.assign(J, 0);
    out.raw_S.assign(J, 0);
    const auto T = traj.T_est();
    if (!T) return out;

    const TypeIResult type_I = type_I_constant(traj);
    out.typeI_C = type_I.typeI_C;
    out.c_threshold = opts.c_threshold_fraction * type_I.typeI_C;
    out.c_S = opts.c_s_fraction * type_I.typeI_C;
    if (!(out.c_threshold > 0.0)) return out;

    const std::vector<double> sup = sup_rm_series(traj);
    const double cap = opts.bound_cap * sup.front();
    std::size_t last = traj.times.size() - 1;
    while (last > 0 && !(traj.times[last] < *T)) --last;
    const CurvaturePacket pl = curvature(traj.states[last], traj.w_floor);
    const std::size_t r = std::min(opts.stencil_radius, J / 2);
    for (std::size_t j = 0; j < J; ++j) {
        double m = 0.0;
        for (std::size_t k = 0; k <= 2 * r; ++k) m = std::max(m, pl.rm_norm[(j + J + k - r) % J]);
        out.sigma[j] = m >= cap ? 1 : 0;
    }

    out.raw_I = detect_essential_blowup(traj, out.c_threshold, opts.persistence).limit_mask;
    if (out.raw_I.size() != J) out.raw_I.assign(J, 0);

    std::vector<double> inf_rate(J, std::numeric_limits<double>::infinity());
    for (std::size_t i : late_snapshots(traj)) {
        const double tau = *T - traj.times[i];
        const CurvaturePacket p = curvature(traj.states[i], traj.w_floor);
        for (std::size_t j = 0; j < J; ++j) inf_rate[j] = std::min(inf_rate[j], tau * std::abs(p.sh[j]));
    }
    for (std::size_t j = 0; j < J; ++j) out.raw_S[j] = inf_rate[j] >= out.c_S && std::isfinite(inf_rate[j]);

    for (std::size_t j = 0; j < J; ++j) {
        out.sigma_I[j] = out.raw_I[j] && out.sigma[j];
        out.sigma_S[j] = out.raw_S[j] && out.sigma_I[j];
        if (out.raw_I[j] && !out.sigma[j]) ++out.violations_I;
        if (out.raw_S[j] && !out.raw_I[j]) ++out.violations_S;
    }
    return out;
}

GeometryState rescale_state(const GeometryState& s, double lambda) {
    if (const auto* h = std::get_if<HomogeneousState>(&s)) {
        HomogeneousState r = *h;
        r.c *= lambda;
        return r;
    }
    if (const auto* w = std::get_if<WarpedState>(&s)) {
        WarpedState r = *w;
        const double k = std::sqrt(lambda);
        for (std::size_t j = 0; j < r.size(); ++j) r.a[j] *= k, r.w[j] *= k;
        return r;
    }
    return s;
}

GeometryState RescaledTrajectory::state_at(double t) const {
    if (t < t_lo || t > t_hi || !(t < 0.0))
        throw DomainError("rescaled time outside the rescaled window");
    const auto [lo, hi] = source->window();
    double s = T + t / lambda;
    if (source->exact) {
        s = std::max(s, lo);
    } else {
        s = std::clamp(s, lo, hi);
    }
    GeometryState g = rescale_state(source->state_at(s), lambda);
    std::visit(
        [&](auto& st) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(st)>, EuclideanState>)
                st.alpha = alpha_at(t);
        },
        g);
    return g;
}

double RescaledTrajectory::alpha_at(double t) const {
    return source->schedule.alpha(T + t / lambda);
}

RescaledTrajectory rescale(std::shared_ptr<const FlowTrajectory> traj, double lambda, Point p,
                           std::optional<double> T_window) {
    if (!traj) throw DomainError("rescale needs a source trajectory");
    if (!(lambda > 0.0)) throw DomainError("rescale needs lambda > 0");
    const double T = require_T(*traj);
    const auto [lo, hi] = traj->window();
    RescaledTrajectory r;
    r.lambda = lambda;
    r.base = p;
    r.T = T;
    r.source = traj;
    const double achievable_lo = lambda * (lo - T);
    const double achievable_hi = traj->exact ? 0.0 : lambda * (hi - T);
    const double window = T_window.value_or(T - lo);
    r.t_lo = -lambda * window;
    r.t_hi = achievable_hi;
    if (!(window > 0.0) || r.t_lo < achievable_lo * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "requested rescaled window [" << r.t_lo << ", 0) exceeds stored data; achievable window is ["
            << achievable_lo << ", " << achievable_hi << "]";
        throw DomainError(msg.str());
    }
    r.t_lo = std::max(r.t_lo, achievable_lo);
    r.typeI_C = type_I_constant(*traj).typeI_C;
    const std::vector<double> sup = sup_rm_series(*traj);
    r.bound_margin = 1.0;
    for (std::size_t i = 0; i < traj->times.size(); ++i) {
        const double t = lambda * (traj->times[i] - T);
        if (t < r.t_lo || !(t < 0.0)) continue;
        r.times.push_back(t);
        if (r.typeI_C > 0.0)
            r.bound_margin = std::min(r.bound_margin, 1.0 - (-t) * (sup[i] / lambda) / r.typeI_C);
    }
    return r;
}

namespace {

std::size_t nearest_index(const WarpedState& w, double x) {
    return static_cast<std::size_t>(std::llround(wrap_angle(x) / w.dx())) % w.size();
}

struct Profile {
    std::vector<double> s, w, phis;
};

Profile warped_profile(const WarpedState& w, std::size_t base, std::size_t half) {
    const std::size_t J = w.size();
    const ArclengthDerivatives dp = arclength_derivatives(w, w.phi_periodic());
    Profile pr;
    const long H = static_cast<long>(half);
    double s = 0.0;
    std::vector<double> sv, wv, pv;
    // Arclength measured from the base node in both directions.
    std::vector<double> left{0.0}, right{0.0};
    for (long k = 1; k <= H; ++k) {
        const std::size_t j1 = (base + J + k) % J, j0 = (base + J + k - 1) % J;
        right.push_back(right.back() + 0.5 * (w.a[j0] + w.a[j1]) * w.dx());
        const std::size_t m1 = (base + J - k) % J, m0 = (base + J - k + 1) % J;
        left.push_back(left.back() + 0.5 * (w.a[m0] + w.a[m1]) * w.dx());
    }
    for (long k = -H; k <= H; ++k) {
        const std::size_t j = (base + J + static_cast<std::size_t>(k + H) - static_cast<std::size_t>(H)) % J;
        s = k < 0 ? -left[static_cast<std::size_t>(-k)] : right[static_cast<std::size_t>(k)];
        pr.s.push_back(s);
        pr.w.push_back(w.w[j]);
        pr.phis.push_back(dp.ds[j] + w.winding / w.a[j]);
    }
    return pr;
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    const std::size_t i = static_cast<std::size_t>(it - xs.begin());
    const double u = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return ys[i - 1] + u * (ys[i] - ys[i - 1]);
}

double warped_best_fit_residual(const WarpedState& w, double tau, std::size_t base,
                                std::size_t half) {
    const std::size_t J = w.size();
    const CurvaturePacket p = curvature_warped(w);
    const ArclengthDerivatives dw = arclength_derivatives(w, w.w);
    const ArclengthDerivatives dp = arclength_derivatives(w, w.phi_periodic());
    const std::size_t M = 2 * half + 1;
    const double dx = w.dx();
    const int n = w.n;
    const double shift = 1.0 / (2.0 * tau);
    auto node = [&](std::size_t k) { return (base + J + k - half) % J; };

    const std::size_t rows = 3 * (M - 2);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<long>(rows), static_cast<long>(M));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<long>(rows));
    const double wf = std::sqrt(n - 1.0);
    for (std::size_t k = 1; k + 1 < M; ++k) {
        const std::size_t j = node(k);
        const double a = w.a[j];
        const double ax = (w.a[(j + 1) % J] - w.a[(j + J - 1) % J]) / (2.0 * dx);
        // f_s and f_ss stencils on (k-1, k, k+1).
        const double fs[3] = {-1.0 / (2.0 * dx * a), 0.0, 1.0 / (2.0 * dx * a)};
        double fss[3];
        for (int q = 0; q < 3; ++q) {
            const double fxx = (q == 1 ? -2.0 : 1.0) / (dx * dx);
            const double fx = (q == 0 ? -1.0 : q == 2 ? 1.0 : 0.0) / (2.0 * dx);
            fss[q] = (fxx - ax / a * fx) / (a * a);
        }
        const double phis = dp.ds[j] + w.winding / a;
        const long r0 = static_cast<long>(3 * (k - 1));
        for (int q = 0; q < 3; ++q) {
            const long col = static_cast<long>(k + q - 1);
            A(r0, col) += fss[q];
            A(r0 + 1, col) += wf * dw.ds[j] / w.w[j] * fs[q];
            A(r0 + 2, col) += -phis * fs[q];
        }
        b(r0) = shift - p.s_base[j];
        b(r0 + 1) = wf * (shift - p.s_fiber[j]);
        b(r0 + 2) = -p.tension[j];
    }
    const Eigen::VectorXd f = A.completeOrthogonalDecomposition().solve(b);
    const Eigen::VectorXd res = A * f - b;
    double worst = 0.0;
    for (std::size_t k = 0; k + 2 < M; ++k) {
        const double rb = res(static_cast<long>(3 * k));
        const double rf = res(static_cast<long>(3 * k + 1));
        const double rm = res(static_cast<long>(3 * k + 2));
        worst = std::max({worst, std::sqrt(rb * rb + rf * rf), std::abs(rm)});
    }
    return worst;
}

// Cells needed on each side of base to cover arclength `reach` both ways.
std::size_t parabolic_half_width(const WarpedState& w, std::size_t base, double reach,
                                 std::size_t min_half) {
    const std::size_t J = w.size();
    const std::size_t cap = J / 2 - 1;
    std::size_t half = 0;
    double left = 0.0, right = 0.0;
    while (half < cap && (left < reach || right < reach)) {
        ++half;
        right += 0.5 * (w.a[(base + half - 1) % J] + w.a[(base + half) % J]) * w.dx();
        left += 0.5 * (w.a[(base + J - half + 1) % J] + w.a[(base + J - half) % J]) * w.dx();
    }
    return std::min(std::max(half, min_half), cap);
}

}  // namespace

double rescaled_soliton_residual(const RescaledTrajectory& r, double t, const ProfileWindow& window) {
    const GeometryState s = r.state_at(t);
    const double tau = -t;
    if (const auto* w = std::get_if<WarpedState>(&s))
        return warped_best_fit_residual(*w, tau, nearest_index(*w, r.base.x),
                                        parabolic_half_width(*w, nearest_index(*w, r.base.x),
                                                             window.parabolic_radius * std::sqrt(tau),
                                                             window.min_half));
    std::vector<double> f;
    if (const auto* e = std::get_if<EuclideanState>(&s)) {
        for (std::size_t j = 0; j < e->J; ++j) f.push_back(e->r(j) * e->r(j) / (4.0 * tau));
    } else {
        f = {0.5 * dimension(s)};
    }
    const SolitonResidual res = canonical_form_residual(s, t, f, 0.0);
    return std::max(res.metric, res.map);
}

ConvergenceDiagnostic convergence_diagnostic(const std::vector<RescaledTrajectory>& rescaled,
                                             double t_probe, const ProfileWindow& window) {
    if (rescaled.size() < 2) throw DomainError("convergence diagnostic needs at least two rescalings");
    const std::size_t kinds = rescaled.front().source->states.front().index();
    for (const auto& r : rescaled)
        if (r.source->states.front().index() != kinds)
            throw DomainError("rescaled trajectories belong to different geometry classes");

    ConvergenceDiagnostic out;
    const std::size_t m = rescaled.size();
    out.distance.assign(m, std::vector<double>(m, 0.0));
    std::vector<GeometryState> slices;
    for (const auto& r : rescaled) {
        out.lambdas.push_back(r.lambda);
        slices.push_back(r.state_at(t_probe));
        out.soliton_residual.push_back(rescaled_soliton_residual(r, t_probe, window));
    }

    if (std::holds_alternative<WarpedState>(slices.front())) {
        std::vector<Profile> prof;
        double S = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            const auto& w = std::get<WarpedState>(slices[i]);
            prof.push_back(warped_profile(w, nearest_index(w, rescaled[i].base.x), window.half_width));
            S = std::min({S, -prof.back().s.front(), prof.back().s.back()});
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = i + 1; k < m; ++k) {
                double d = 0.0;
                for (std::size_t q = 0; q < window.samples; ++q) {
                    const double s = -S + 2.0 * S * q / (window.samples - 1.0);
                    d = std::max({d, std::abs(interp(prof[i].s, prof[i].w, s) - interp(prof[k].s, prof[k].w, s)),
                                  std::abs(interp(prof[i].s, prof[i].phis, s) -
                                           interp(prof[k].s, prof[k].phis, s))});
                }
                out.distance[i][k] = out.distance[k][i] = d;
            }
    } else if (std::holds_alternative<HomogeneousState>(slices.front())) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = i + 1; k < m; ++k)
                out.distance[i][k] = out.distance[k][i] =
                    std::abs(std::get<HomogeneousState>(slices[i]).c - std::get<HomogeneousState>(slices[k]).c);
    }
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m; ++k) out.max_distance = std::max(out.max_distance, out.distance[i][k]);

    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return out.lambdas[a] < out.lambdas[b]; });
    for (std::size_t i = 1; i < m; ++i)
        if (out.soliton_residual[order[i]] > out.soliton_residual[order[i - 1]] * (1.0 + 1e-9) + 1e-14)
            out.residual_nonincreasing = false;
    return out;
}

VolumeSeries singular_volume(const FlowTrajectory& traj, const std::vector<std::uint8_t>& mask) {
    VolumeSeries out;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const GeometryState& s = traj.states[i];
        double vol = 0.0;
        if (const auto* h = std::get_if<HomogeneousState>(&s)) {
            if (!mask.empty() && mask[0]) vol = std::pow(h->c, 0.5 * h->n) * unit_sphere_volume(h->n);
        } else if (const auto* w = std::get_if<WarpedState>(&s)) {
            if (mask.size() != w->size()) throw DomainError("mask does not match the warped grid");
            const double om = unit_sphere_volume(w->n - 1);
            for (std::size_t j = 0; j < w->size(); ++j)
                if (mask[j]) vol += w->a[j] * om * std::pow(w->w[j], w->n - 1) * w->dx();
        }
        out.times.push_back(traj.times[i]);
        out.volume.push_back(vol);
    }
    out.last = out.volume.empty() ? 0.0 : out.volume.back();
    if (traj.T_est()) {
        const std::vector<std::size_t> late = late_snapshots(traj);
        for (std::size_t k = 1; k < late.size(); ++k)
            if (out.volume[late[k]] > out.volume[late[k - 1]]) out.decreasing_final_decade = false;
    }
    return out;
}

NonoscillationReport nonoscillation_check(const FlowTrajectory& traj,
                                          const std::vector<std::uint8_t>& sigma_I) {
    NonoscillationReport out;
    if (SingularSets::count(sigma_I) == 0) return out;
    const double T = require_T(traj);
    const double C = type_I_constant(traj).typeI_C;
    const std::vector<std::size_t> late = late_snapshots(traj);
    std::vector<CurvaturePacket> packets;
    for (std::size_t i : late) packets.push_back(curvature(traj.states[i], traj.w_floor));
    out.constant = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < sigma_I.size(); ++j) {
        if (!sigma_I[j]) continue;
        double inf = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < late.size(); ++k)
            inf = std::min(inf, (T - traj.times[late[k]]) * packets[k].rm_norm[j]);
        out.points.push_back(j);
        out.inf_rate.push_back(inf);
        out.constant = std::min(out.constant, inf);
        if (inf < 1e-3 * C) out.flagged.push_back(j);
    }
    return out;
}

SingularityReport analyze_singularity(const FlowTrajectory& traj, const SingularSetOptions& opts) {
    SingularityReport r;
    r.T_est = require_T(traj);
    r.type_I = type_I_constant(traj);
    r.sets = classify_singular_sets(traj, opts);
    if (r.sets.c_threshold > 0.0)
        r.sequences = detect_essential_blowup(traj, r.sets.c_threshold, opts.persistence);
    r.nonoscillation = nonoscillation_check(traj, r.sets.sigma_I);
    r.volume = singular_volume(traj, r.sets.sigma);
    return r;
}

}  // namespace hrf
