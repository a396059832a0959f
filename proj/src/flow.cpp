#include "hrf/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hrf {

const char* to_string(Termination t) {
    switch (t) {
        case Termination::ReachedTmax: return "reached_t_max";
        case Termination::CurvatureBlowup: return "curvature_blowup";
        case Termination::SingularGeometry: return "singular_geometry";
        case Termination::StepLimit: return "step_limit";
        case Termination::Analytic: return "analytic";
    }
    return "unknown";
}

namespace {

double c_rate(const HomogeneousState& s, double alpha) {
    const double eig = s.map == MapKind::IdentityEigenmap ? 1.0 : 0.0;
    return -2.0 * (s.n - 1) + 2.0 * alpha * eig;
}

}  // namespace

double homogeneous_stability_cap(const HomogeneousState& s, double alpha, double factor) {
    const double r = std::abs(c_rate(s, alpha));
    return r == 0.0 ? std::numeric_limits<double>::infinity() : factor * s.c / r;
}

StepResult<HomogeneousState> step_homogeneous(const HomogeneousState& s, double t, double dt,
                                              const CouplingSchedule& schedule) {
    s.validate();
    if (!(dt > 0.0)) throw DomainError("step size must be positive");
    StepResult<HomogeneousState> out{s, StepStatus::Ok, {}};
    HomogeneousState tmp = s;
    auto rhs = [&](double c, double tt) {
        tmp.c = c;
        return c_rate(tmp, schedule.alpha(tt));
    };
    const double k1 = rhs(s.c, t);
    const double k2 = rhs(s.c + 0.5 * dt * k1, t + 0.5 * dt);
    const double k3 = rhs(s.c + 0.5 * dt * k2, t + 0.5 * dt);
    const double k4 = rhs(s.c + dt * k3, t + dt);
    const double c = s.c + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    const double stage_min = std::min({s.c + 0.5 * dt * k1, s.c + 0.5 * dt * k2, s.c + dt * k3, c});
    if (!std::isfinite(c)) {
        out.status = StepStatus::Fault;
        return out;
    }
    if (!(stage_min > 0.0)) {
        out.status = StepStatus::PastSingularTime;
        return out;
    }
    out.state.c = c;
    out.state.alpha = schedule.alpha(t + dt);
    return out;
}

WarpedRhs warped_rhs(const WarpedState& s, const CurvaturePacket& p, Exec exec) {
    const std::size_t J = s.size();
    WarpedRhs r{std::vector<double>(J), std::vector<double>(J), std::vector<double>(J)};
    for_each_index(exec, J, [&](std::size_t j) {
        r.a[j] = -s.a[j] * p.s_base[j];
        r.w[j] = -s.w[j] * p.ric_fiber[j];
        r.phi[j] = p.tension[j];
    });
    return r;
}

double warped_cfl_limit(const WarpedState& s, const CurvaturePacket& p, double cfl) {
    double amin = std::numeric_limits<double>::infinity();
    double scale = 1.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        amin = std::min(amin, s.a[j]);
        scale = std::max(scale, p.rm_norm[j] * s.w[j] * s.w[j]);
    }
    const double h = amin * s.dx();
    return cfl * h * h / (2.0 * scale);
}

StepResult<WarpedState> step_warped(const WarpedState& s, double t, double dt,
                                    const CouplingSchedule& schedule, double w_floor, Exec exec) {
    s.validate();
    if (!(dt > 0.0)) throw DomainError("step size must be positive");
    const std::size_t J = s.size();
    StepResult<WarpedState> out{s, StepStatus::Ok, {}};

    auto stage = [&](const WarpedState& base, const WarpedRhs* k, double h, double tt,
                     WarpedState& st) -> StepStatus {
        st = base;
        if (k) {
            for_each_index(exec, J, [&](std::size_t j) {
                st.a[j] = base.a[j] + h * k->a[j];
                st.w[j] = base.w[j] + h * k->w[j];
                st.phi[j] = base.phi[j] + h * k->phi[j];
            });
        }
        st.alpha = schedule.alpha(tt);
        for (std::size_t j = 0; j < J; ++j) {
            if (!std::isfinite(st.a[j]) || !std::isfinite(st.w[j]) || !std::isfinite(st.phi[j]))
                return StepStatus::Fault;
            if (!(st.a[j] > 0.0)) return StepStatus::Fault;
        }
        std::vector<std::uint8_t> mask(J, 0);
        bool hit = false;
        for (std::size_t j = 0; j < J; ++j)
            if (st.w[j] <= w_floor) mask[j] = 1, hit = true;
        if (hit) {
            out.mask = std::move(mask);
            return StepStatus::SingularGeometry;
        }
        return StepStatus::Ok;
    };

    WarpedState st;
    WarpedRhs k[4];
    const double offs[4] = {0.0, 0.5 * dt, 0.5 * dt, dt};
    for (int i = 0; i < 4; ++i) {
        const StepStatus status = stage(s, i == 0 ? nullptr : &k[i - 1], offs[i], t + offs[i], st);
        if (status != StepStatus::Ok) {
            out.status = status;
            return out;
        }
        k[i] = warped_rhs(st, curvature_warped(st, w_floor, exec), exec);
    }
    WarpedState next = s;
    for_each_index(exec, J, [&](std::size_t j) {
        next.a[j] = s.a[j] + dt * (k[0].a[j] + 2.0 * k[1].a[j] + 2.0 * k[2].a[j] + k[3].a[j]) / 6.0;
        next.w[j] = s.w[j] + dt * (k[0].w[j] + 2.0 * k[1].w[j] + 2.0 * k[2].w[j] + k[3].w[j]) / 6.0;
        next.phi[j] =
            s.phi[j] + dt * (k[0].phi[j] + 2.0 * k[1].phi[j] + 2.0 * k[2].phi[j] + k[3].phi[j]) / 6.0;
    });
    const StepStatus status = stage(next, nullptr, 0.0, t + dt, st);
    out.status = status;
    if (status == StepStatus::Ok) out.state = std::move(st);
    return out;
}

int measured_winding(const WarpedState& s) {
    const std::size_t J = s.size();
    double total = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        const double a = wrap_angle(s.phi[j]);
        const double b = wrap_angle(s.phi[(j + 1) % J]);
        total += principal_angle(b - a);
    }
    return static_cast<int>(std::lround(total / two_pi));
}

TensorBounds tensor_bounds(const CurvaturePacket& p) {
    TensorBounds b{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()};
    for (std::size_t j = 0; j < p.size(); ++j) {
        b.s_max = std::max({b.s_max, p.s_base[j], p.s_fiber[j]});
        b.s_min = std::min({b.s_min, p.s_base[j], p.s_fiber[j]});
        b.ric_max = std::max({b.ric_max, p.ric_base[j], p.ric_fiber[j]});
    }
    return b;
}

std::pair<double, double> FlowTrajectory::window() const {
    if (times.empty()) throw DomainError("trajectory is empty");
    if (exact) return {times.front(), exact_limit};
    return {times.front(), times.back()};
}

bool FlowTrajectory::is_class_homogeneous() const {
    return !states.empty() && std::holds_alternative<HomogeneousState>(states.front());
}

bool FlowTrajectory::is_class_warped() const {
    return !states.empty() && std::holds_alternative<WarpedState>(states.front());
}

GeometryState FlowTrajectory::state_at(double t) const {
    const auto [lo, hi] = window();
    if (exact) {
        if (t < lo || t >= hi) throw DomainError("time outside the analytic window");
        return exact(t);
    }
    if (t < lo || t > hi) throw DomainError("time outside the stored window");
    auto it = std::lower_bound(times.begin(), times.end(), t);
    const std::size_t i1 = static_cast<std::size_t>(it - times.begin());
    if (times[i1] == t) return states[i1];
    const std::size_t i0 = i1 - 1;
    const double u = (t - times[i0]) / (times[i1] - times[i0]);
    auto lerp = [u](double x, double y) { return x + u * (y - x); };
    const double alpha = schedule.alpha(t);
    if (const auto* h0 = std::get_if<HomogeneousState>(&states[i0])) {
        HomogeneousState h = *h0;
        h.c = lerp(h0->c, std::get<HomogeneousState>(states[i1]).c);
        h.alpha = alpha;
        return h;
    }
    if (const auto* w0 = std::get_if<WarpedState>(&states[i0])) {
        const auto& w1 = std::get<WarpedState>(states[i1]);
        WarpedState w = *w0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            w.a[j] = lerp(w0->a[j], w1.a[j]);
            w.w[j] = lerp(w0->w[j], w1.w[j]);
            w.phi[j] = lerp(w0->phi[j], w1.phi[j]);
        }
        w.alpha = alpha;
        return w;
    }
    return states[i0];
}

std::size_t FlowTrajectory::snapshot_index(double t) const {
    auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end() || *it != t) throw DomainError("time is not a stored snapshot");
    return static_cast<std::size_t>(it - times.begin());
}

namespace {

MonitorRecord make_monitor(double t, const GeometryState& s, const CurvaturePacket& p) {
    MonitorRecord m;
    m.t = t;
    m.sup_rm = p.max_rm();
    m.sh_min = p.min_sh();
    m.w_min = std::numeric_limits<double>::quiet_NaN();
    for (double g : p.grad_phi_sq) m.sup_grad_phi_sq = std::max(m.sup_grad_phi_sq, g);
    if (const auto* w = std::get_if<WarpedState>(&s)) {
        m.w_min = *std::min_element(w->w.begin(), w->w.end());
        m.winding = measured_winding(*w);
    }
    return m;
}

}  // namespace

void FlowTrajectory::rebuild_monitors() {
    monitors.clear();
    sh_min_violations = 0;
    winding_preserved = true;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const CurvaturePacket p = curvature(states[i], w_floor);
        monitors.push_back(make_monitor(times[i], states[i], p));
        if (i > 0) {
            const double prev = monitors[i - 1].sh_min;
            if (monitors[i].sh_min < prev - 1e-8 * std::abs(prev)) ++sh_min_violations;
            if (monitors[i].winding != monitors[0].winding) winding_preserved = false;
        }
    }
}

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

struct MonitorPoints {
    Point p, q;
};

MonitorPoints default_monitor_points(const FlowTrajectory& traj) {
    if (traj.is_class_warped()) {
        const auto& w = std::get<WarpedState>(traj.states.back());
        const std::size_t J = w.size();
        const auto neck = static_cast<std::size_t>(
            std::min_element(w.w.begin(), w.w.end()) - w.w.begin());
        return {{w.x((neck + J - J / 8) % J), 0.0}, {w.x((neck + J / 8) % J), 0.0}};
    }
    if (traj.is_class_homogeneous()) return {{0.0, 0.0}, {std::numbers::pi, 0.0}};
    return {{0.0, 0.0}, {1.0, 0.0}};
}

}  // namespace

void attach_online_monitors(FlowTrajectory& traj) {
    traj.rebuild_monitors();
    traj.distortion.clear();
    traj.residuals.clear();
    const MonitorPoints mp = default_monitor_points(traj);
    for (std::size_t i = 0; i + 1 < traj.times.size(); ++i)
        traj.distortion.push_back(
            distortion_monitor(traj, mp.p, mp.q, traj.times[i], traj.times[i + 1]));
    for (std::size_t i = 1; i + 1 < traj.times.size(); ++i)
        traj.residuals.push_back(evolution_residual(traj, traj.times[i]));
}

FlowTrajectory run_flow(const FlowConfig& config) {
    const IntegratorConfig& ic = config.integrator;
    config.schedule.validate();
    if (!(ic.dt0 > 0.0) || !(ic.t_max > 0.0) || !(ic.snapshot_dt > 0.0))
        throw DomainError("integrator step, t_max and snapshot cadence must be positive");

    FlowTrajectory traj;
    traj.schedule = config.schedule;
    traj.w_floor = ic.w_floor;
    traj.provenance.config_hash = config.config_hash;

    GeometryState state = config.initial;
    std::visit(
        [&](auto& s) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(s)>, EuclideanState>)
                s.alpha = config.schedule.alpha(0.0);
            s.validate();
        },
        state);

    double t = 0.0;
    CurvaturePacket packet = curvature(state, ic.w_floor, ic.exec);
    const double rm0 = std::max(packet.max_rm(), 1e-300);
    double last_snap_rm = rm0;
    double next_uniform = ic.snapshot_dt;
    double dt_prev = ic.dt0;
    std::size_t steps = 0;
    traj.times.push_back(t);
    traj.states.push_back(state);

    auto store = [&] {
        if (traj.times.back() == t) return;
        traj.times.push_back(t);
        traj.states.push_back(state);
        last_snap_rm = packet.max_rm();
    };

    while (true) {
        if (t >= ic.t_max) {
            traj.termination = Termination::ReachedTmax;
            break;
        }
        if (steps >= ic.max_steps) {
            traj.termination = Termination::StepLimit;
            store();
            break;
        }
        const double rm = packet.max_rm();
        double dt = std::min(ic.dt0, 2.0 * dt_prev);
        double cap = std::numeric_limits<double>::infinity();
        if (const auto* h = std::get_if<HomogeneousState>(&state))
            cap = homogeneous_stability_cap(*h, config.schedule.alpha(t), ic.homogeneous_cap);
        else if (const auto* w = std::get_if<WarpedState>(&state))
            cap = warped_cfl_limit(*w, packet, ic.cfl);
        while (rm * dt > ic.rm_dt || dt > cap) dt *= 0.5;
        dt = std::min({dt, next_uniform - t, ic.t_max - t});

        GeometryState next;
        StepStatus status = StepStatus::Ok;
        std::vector<std::uint8_t> mask;
        for (int attempt = 0; attempt < 40; ++attempt) {
            if (const auto* h = std::get_if<HomogeneousState>(&state)) {
                auto r = step_homogeneous(*h, t, dt, config.schedule);
                status = r.status;
                next = r.state;
            } else if (const auto* w = std::get_if<WarpedState>(&state)) {
                auto r = step_warped(*w, t, dt, config.schedule, ic.w_floor, ic.exec);
                status = r.status;
                next = std::move(r.state);
                mask = std::move(r.mask);
            } else {
                next = state;
            }
            if (status == StepStatus::Ok || status == StepStatus::Fault) break;
            dt *= 0.5;
        }
        if (status == StepStatus::Fault)
            throw IntegratorFault("non-finite state produced by the integrator", state, t);
        if (status != StepStatus::Ok) {
            traj.termination = Termination::SingularGeometry;
            store();
            break;
        }
        t += dt;
        ++steps;
        dt_prev = dt;
        state = std::move(next);
        packet = curvature(state, ic.w_floor, ic.exec);

        const double rm_now = packet.max_rm();
        const bool uniform = t >= next_uniform;
        if (uniform) next_uniform += ic.snapshot_dt;
        if (packet.any_singular) {
            traj.termination = Termination::SingularGeometry;
            store();
            break;
        }
        if (rm_now >= ic.blowup_cap * rm0) {
            traj.termination = Termination::CurvatureBlowup;
            store();
            break;
        }
        if (uniform || rm_now >= last_snap_rm * ic.snapshot_growth) store();
    }
    traj.provenance.steps = steps;

    if (traj.termination == Termination::CurvatureBlowup ||
        traj.termination == Termination::SingularGeometry) {
        traj.rebuild_monitors();
        try {
            traj.fit = estimate_singular_time(traj);
        } catch (const DomainError&) {
            traj.fit.reset();
        }
    }
    attach_online_monitors(traj);
    return traj;
}

SingularTimeFit estimate_singular_time(const FlowTrajectory& traj) {
    if (traj.termination != Termination::CurvatureBlowup &&
        traj.termination != Termination::SingularGeometry &&
        traj.termination != Termination::Analytic)
        throw DomainError("trajectory did not terminate by curvature blow-up");
    std::vector<double> sup(traj.states.size());
    for (std::size_t i = 0; i < sup.size(); ++i)
        sup[i] = i < traj.monitors.size() ? traj.monitors[i].sup_rm
                                          : curvature(traj.states[i], traj.w_floor).max_rm();
    const double final_sup = sup.back();
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < sup.size(); ++i)
        if (sup[i] >= final_sup / 10.0 && std::isfinite(sup[i])) idx.push_back(i);
    if (idx.size() < 10)
        throw DomainError("fewer than 10 snapshots in the final decade of curvature growth");

    double tm = 0.0, ym = 0.0;
    for (std::size_t i : idx) tm += traj.times[i], ym += 1.0 / sup[i];
    tm /= idx.size();
    ym /= idx.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i : idx) {
        const double dx = traj.times[i] - tm;
        sxy += dx * (1.0 / sup[i] - ym);
        sxx += dx * dx;
    }
    const double slope = sxy / sxx;
    SingularTimeFit fit;
    fit.points = idx.size();
    double ss = 0.0;
    for (std::size_t i : idx) {
        const double r = 1.0 / sup[i] - (ym + slope * (traj.times[i] - tm));
        ss += r * r;
    }
    fit.residual = std::sqrt(ss / idx.size()) / ym;
    for (std::size_t k = 1; k < idx.size(); ++k)
        if (sup[idx[k]] < sup[idx[k - 1]]) fit.low_confidence = true;
    const double t_last = traj.times.back();
    if (!(slope < 0.0)) {
        fit.low_confidence = true;
        fit.T = std::nextafter(t_last, std::numeric_limits<double>::infinity());
        return fit;
    }
    fit.T = tm - ym / slope;
    if (!(fit.T > t_last)) {
        fit.low_confidence = true;
        fit.T = std::nextafter(t_last, std::numeric_limits<double>::infinity());
    }
    return fit;
}

namespace {

struct Fields {
    std::vector<double> sh, grad_sq, s_sq, tension_sq, hess_sq, gg_sq, target_term;
};

Fields scalar_fields(const GeometryState& s, const CurvaturePacket& p) {
    const std::size_t J = p.size();
    const int n = dimension(s);
    Fields f;
    f.sh = p.sh;
    f.grad_sq = p.grad_phi_sq;
    f.s_sq.resize(J);
    f.tension_sq.resize(J);
    f.hess_sq.resize(J);
    f.gg_sq.resize(J);
    f.target_term.assign(J, 0.0);
    for (std::size_t j = 0; j < J; ++j) {
        f.s_sq[j] = p.s_norm_sq(j, n);
        f.tension_sq[j] = p.tension[j] * p.tension[j];
        f.hess_sq[j] = p.hess_phi_norm[j] * p.hess_phi_norm[j];
        f.gg_sq[j] = p.grad_phi_sq[j] * p.grad_phi_sq[j];
    }
    if (const auto* h = std::get_if<HomogeneousState>(&s)) {
        if (h->map == MapKind::IdentityEigenmap) {
            // |grad phi (x) grad phi|^2 = |g_S|^2_g and the unit-sphere target
            // curvature term sum |d phi e_i|^2 |d phi e_j|^2 - <.,.>^2.
            f.gg_sq[0] = n / (h->c * h->c);
            f.target_term[0] = n * (n - 1.0) / (h->c * h->c);
        }
    }
    return f;
}

std::vector<double> spatial_laplacian(const GeometryState& s, const std::vector<double>& f) {
    if (const auto* w = std::get_if<WarpedState>(&s)) return laplacian_warped(*w, f);
    return std::vector<double>(f.size(), 0.0);
}

}  // namespace

EvolutionResidual evolution_residual(const FlowTrajectory& traj, double t) {
    const std::size_t i = traj.snapshot_index(t);
    if (i == 0 || i + 1 >= traj.times.size())
        throw DomainError("evolution residual needs neighbouring snapshots");
    const double h1 = traj.times[i] - traj.times[i - 1];
    const double h2 = traj.times[i + 1] - traj.times[i];
    const double cm = -h2 / (h1 * (h1 + h2));
    const double c0 = (h2 - h1) / (h1 * h2);
    const double cp = h1 / (h2 * (h1 + h2));

    const GeometryState& s = traj.states[i];
    const CurvaturePacket pm = curvature(traj.states[i - 1], traj.w_floor);
    const CurvaturePacket p0 = curvature(s, traj.w_floor);
    const CurvaturePacket pp = curvature(traj.states[i + 1], traj.w_floor);
    const Fields f = scalar_fields(s, p0);
    const double alpha = traj.schedule.alpha(t);
    const double alpha_dot = traj.schedule.alpha_dot(t);
    const std::vector<double> lap_sh = spatial_laplacian(s, p0.sh);
    const std::vector<double> lap_grad = spatial_laplacian(s, p0.grad_phi_sq);

    EvolutionResidual r;
    r.t = t;
    const std::size_t J = p0.size();
    r.sh_defect.resize(J);
    r.grad_phi_defect.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        const double dsh = cm * pm.sh[j] + c0 * p0.sh[j] + cp * pp.sh[j];
        const double dgrad = cm * pm.grad_phi_sq[j] + c0 * p0.grad_phi_sq[j] + cp * pp.grad_phi_sq[j];
        r.sh_defect[j] = dsh - lap_sh[j] - 2.0 * f.s_sq[j] - 2.0 * alpha * f.tension_sq[j] +
                         alpha_dot * f.grad_sq[j];
        r.grad_phi_defect[j] = dgrad - lap_grad[j] + 2.0 * alpha * f.gg_sq[j] + 2.0 * f.hess_sq[j] -
                               2.0 * f.target_term[j];
    }
    r.sh_residual = max_abs(r.sh_defect);
    r.grad_phi_residual = max_abs(r.grad_phi_defect);
    return r;
}

DistortionRecord distortion_monitor(const FlowTrajectory& traj, const Point& p, const Point& q,
                                    double t0, double t1) {
    if (!(t0 < t1)) throw DomainError("distortion monitor requires t0 < t1");
    const std::size_t i0 = traj.snapshot_index(t0);
    const std::size_t i1 = traj.snapshot_index(t1);
    DistortionRecord r;
    r.t0 = t0;
    r.t1 = t1;
    r.d0 = distance(traj.states[i0], p, q);
    r.d1 = distance(traj.states[i1], p, q);
    const int n = dimension(traj.states[i0]);
    if (!(r.d0 > 0.0)) {
        r.note = "not applicable: coincident points";
        return r;
    }
    r.ratio = r.d1 / r.d0;
    double s_max = -std::numeric_limits<double>::infinity();
    double s_min = std::numeric_limits<double>::infinity();
    double ric_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = i0; i <= i1; ++i) {
        const TensorBounds b = tensor_bounds(curvature(traj.states[i], traj.w_floor));
        s_max = std::max(s_max, b.s_max);
        s_min = std::min(s_min, b.s_min);
        ric_max = std::max(ric_max, b.ric_max);
    }
    const double dt = t1 - t0;
    const double tol = 1e-12;
    r.k_upper = s_max;
    r.lower_bound = std::exp(-s_max * dt);
    r.lower_pass = r.ratio >= r.lower_bound * (1.0 - tol);
    r.k_lower = -s_min;
    r.upper_bound = std::exp(r.k_lower * dt);
    r.upper_pass = r.ratio <= r.upper_bound * (1.0 + tol);

    r.k_ric = ric_max;
    const double half = 0.5 * std::min(r.d0, r.d1);
    if (!(half > 0.0) || !std::isfinite(ric_max)) {
        r.note = "rate check not applicable";
        return r;
    }
    r.r0 = ric_max > 0.0 ? std::min(half, std::sqrt(1.5 * (n - 1) / ric_max)) : half;
    r.rate_applicable = true;
    r.rate = (r.d1 - r.d0) / dt;
    r.rate_bound = -2.0 * ((2.0 / 3.0) * std::max(ric_max, 0.0) * r.r0 + (n - 1) / r.r0);
    r.rate_pass = r.rate >= r.rate_bound - tol * std::abs(r.rate_bound);
    return r;
}

}  // namespace hrf
