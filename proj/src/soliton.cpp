#include "hrf/soliton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hrf {

SolitonKind kind_from_sigma(double sigma) {
    if (sigma < 0.0) return SolitonKind::Shrinking;
    if (sigma > 0.0) return SolitonKind::Expanding;
    return SolitonKind::Steady;
}

const char* to_string(SolitonKind k) {
    switch (k) {
        case SolitonKind::Shrinking: return "shrinking";
        case SolitonKind::Steady: return "steady";
        case SolitonKind::Expanding: return "expanding";
    }
    return "unknown";
}

const char* to_string(ExactKind k) {
    switch (k) {
        case ExactKind::Gaussian: return "gaussian";
        case ExactKind::RoundSphere: return "round_sphere";
        case ExactKind::CoupledSphere: return "coupled_sphere";
    }
    return "unknown";
}

PotentialDerivatives potential_derivatives(const GeometryState& s, const std::vector<double>& f) {
    const std::size_t J = f.size();
    PotentialDerivatives d;
    d.ds.assign(J, 0.0);
    d.hess_base.assign(J, 0.0);
    d.hess_fiber.assign(J, 0.0);
    d.grad_sq.assign(J, 0.0);
    d.laplacian.assign(J, 0.0);
    const int n = dimension(s);
    if (const auto* w = std::get_if<WarpedState>(&s)) {
        if (J != w->size()) throw DomainError("potential does not match the warped grid");
        const ArclengthDerivatives df = arclength_derivatives(*w, f);
        const ArclengthDerivatives dw = arclength_derivatives(*w, w->w);
        for (std::size_t j = 0; j < J; ++j) {
            d.ds[j] = df.ds[j];
            d.hess_base[j] = df.dss[j];
            d.hess_fiber[j] = dw.ds[j] / w->w[j] * df.ds[j];
        }
    } else if (const auto* e = std::get_if<EuclideanState>(&s)) {
        if (J != e->J) throw DomainError("potential does not match the radial grid");
        const RadialDerivatives df = radial_derivatives(*e, f);
        for (std::size_t j = 0; j < J; ++j) {
            d.ds[j] = df.dr[j];
            d.hess_base[j] = df.drr[j];
            d.hess_fiber[j] = df.dr[j] / e->r(j);
        }
    } else if (J != 1) {
        throw DomainError("homogeneous potentials are spatially constant");
    }
    for (std::size_t j = 0; j < J; ++j) {
        d.grad_sq[j] = d.ds[j] * d.ds[j];
        d.laplacian[j] = d.hess_base[j] + (n - 1) * d.hess_fiber[j];
    }
    return d;
}

namespace {

SolitonResidual residual_with_shift(const GeometryState& s, const std::vector<double>& f,
                                    double shift) {
    const CurvaturePacket p = curvature(s);
    if (f.size() != p.size()) throw DomainError("potential does not match the geometry grid");
    const PotentialDerivatives d = potential_derivatives(s, f);
    const int n = dimension(s);
    SolitonResidual r;
    r.metric_pointwise.resize(f.size());
    r.map_pointwise.resize(f.size());
    std::vector<double> phis(f.size(), 0.0);
    if (const auto* w = std::get_if<WarpedState>(&s)) {
        const ArclengthDerivatives dp = arclength_derivatives(*w, w->phi_periodic());
        for (std::size_t j = 0; j < f.size(); ++j) phis[j] = dp.ds[j] + w->winding / w->a[j];
    }
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double rb = p.s_base[j] + d.hess_base[j] + shift;
        const double rf = p.s_fiber[j] + d.hess_fiber[j] + shift;
        r.metric_pointwise[j] = std::sqrt(rb * rb + (n - 1) * rf * rf);
        r.map_pointwise[j] = std::abs(p.tension[j] - phis[j] * d.ds[j]);
        r.metric = std::max(r.metric, r.metric_pointwise[j]);
        r.map = std::max(r.map, r.map_pointwise[j]);
    }
    return r;
}

}  // namespace

SolitonResidual soliton_residual(const SolitonSpec& spec) {
    if (spec.kind != kind_from_sigma(spec.sigma))
        throw DomainError("soliton kind does not match the sign of sigma");
    return residual_with_shift(spec.state, spec.f, spec.sigma);
}

SolitonResidual canonical_form_residual(const GeometryState& slice, double t,
                                        const std::vector<double>& f, double T) {
    if (!(t < T)) throw DomainError("canonical form needs t < T");
    return residual_with_shift(slice, f, -1.0 / (2.0 * (T - t)));
}

NormalizeResult normalize(const SolitonSpec& spec) {
    if (spec.sigma == 0.0) throw DomainError("steady soliton cannot be normalized");
    const CurvaturePacket p = curvature(spec.state);
    const PotentialDerivatives d = potential_derivatives(spec.state, spec.f);
    const int n = dimension(spec.state);
    NormalizeResult out;
    double kmin = std::numeric_limits<double>::infinity();
    double kmax = -kmin;
    double ksum = 0.0;
    for (std::size_t j = 0; j < spec.f.size(); ++j) {
        const double k = p.sh[j] + d.grad_sq[j] + 2.0 * spec.sigma * spec.f[j];
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
        ksum += k;
        out.trace_defect =
            std::max(out.trace_defect, std::abs(p.sh[j] + d.laplacian[j] + spec.sigma * n));
    }
    out.k = ksum / static_cast<double>(spec.f.size());
    out.k_variation = kmax - kmin;
    out.k_constant = out.k_variation <= 1e-6;
    out.shift = out.k / (2.0 * spec.sigma);
    out.spec = spec;
    for (double& v : out.spec.f) v -= out.shift;
    out.spec.normalization_constant = 0.0;
    return out;
}

RigidityReport rigidity_check(const SolitonSpec& spec, bool exact) {
    if (spec.kind != SolitonKind::Shrinking || !(spec.sigma < 0.0))
        throw DomainError("rigidity check applies to shrinking solitons only");
    const CurvaturePacket p = curvature(spec.state);
    const int n = dimension(spec.state);
    RigidityReport r;
    r.sh_min = p.min_sh();
    r.sh_lower_bound = r.sh_min >= -1e-8;
    r.equality_case = r.sh_min <= 1e-8;
    if (r.equality_case && exact) {
        double gmax = 0.0;
        for (double g : p.grad_phi_sq) gmax = std::max(gmax, g);
        r.flat = p.max_rm() <= 1e-8;
        r.constant_map = std::sqrt(gmax) <= 1e-8;
        r.implication_holds = r.flat && r.constant_map;
    }
    const PotentialDerivatives dsh = potential_derivatives(spec.state, p.sh);
    const PotentialDerivatives df = potential_derivatives(spec.state, spec.f);
    const double alpha = coupling_of(spec.state);
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double e = dsh.laplacian[j] - dsh.ds[j] * df.ds[j] + 2.0 * spec.sigma * p.sh[j] +
                         2.0 * p.s_norm_sq(j, n) + 2.0 * alpha * p.tension[j] * p.tension[j];
        r.elliptic_residual = std::max(r.elliptic_residual, std::abs(e));
    }
    return r;
}

namespace {

std::vector<double> exact_times(double T, double min_gap) {
    std::vector<double> t;
    for (int k = 0; k <= 8; ++k) t.push_back(T * k / 16.0);
    double gap = T / 2.0;
    const double ratio = 1.2115276586285884;
    while (gap / ratio > min_gap * T) {
        gap /= ratio;
        t.push_back(T - gap);
    }
    return t;
}

}  // namespace

ExactSolution construct_exact(ExactKind kind, const ExactParams& pr) {
    ExactSolution out;
    FlowTrajectory& traj = out.trajectory;
    traj.termination = Termination::Analytic;
    traj.provenance.integrator = std::string("analytic-") + to_string(kind);
    const int n = pr.n;

    if (kind == ExactKind::Gaussian) {
        if (!(pr.T > 0.0)) throw DomainError("Gaussian soliton needs T > 0");
        EuclideanState e{n, pr.r_max, pr.J};
        e.validate();
        out.T = pr.T;
        traj.schedule = CouplingSchedule::constant(pr.alpha);
        traj.exact = [e](double) { return GeometryState{e}; };
        std::vector<double> f(e.J);
        for (std::size_t j = 0; j < e.J; ++j) f[j] = e.r(j) * e.r(j) / (4.0 * pr.T);
        out.spec = {e, f, -1.0 / (2.0 * pr.T), pr.alpha, SolitonKind::Shrinking, 0.0};
    } else {
        if (n < 2) throw DomainError("sphere solitons need n >= 2");
        if (!(pr.c0 > 0.0)) throw DomainError("sphere solitons need c0 > 0");
        const bool coupled = kind == ExactKind::CoupledSphere;
        if (coupled && !(pr.alpha < n - 1))
            throw DomainError("coupled sphere with alpha >= n-1 is not shrinking");
        const double rate = 2.0 * (n - 1) - (coupled ? 2.0 * pr.alpha : 0.0);
        out.T = pr.c0 / rate;
        const HomogeneousState h0{n, pr.c0,
                                  coupled ? MapKind::IdentityEigenmap : MapKind::ConstantMap,
                                  pr.alpha};
        h0.validate();
        traj.schedule = CouplingSchedule::constant(pr.alpha);
        traj.exact = [h0, rate](double t) {
            HomogeneousState h = h0;
            h.c = h0.c - rate * t;
            return GeometryState{h};
        };
        out.spec = {h0, {0.5 * n}, -1.0 / (2.0 * out.T), pr.alpha, SolitonKind::Shrinking, 0.0};
    }
    traj.exact_limit = out.T;
    traj.times = exact_times(out.T, pr.min_gap);
    for (double t : traj.times) traj.states.push_back(traj.exact(t));
    traj.fit = SingularTimeFit{out.T, 0.0, traj.times.size(), false};
    attach_online_monitors(traj);
    return out;
}

SolitonSpec noncanonical_fixture(double t) {
    if (!(t >= 0.0 && t < 1.0)) throw DomainError("fixture defined for t in [0, 1)");
    const HomogeneousState h{2, 1.0 - t * t, MapKind::IdentityEigenmap, 1.0 - t};
    const double sigma = -(1.0 - h.alpha) / h.c;
    return {h, {1.0}, sigma, h.alpha, kind_from_sigma(sigma), 0.0};
}

}  // namespace hrf
