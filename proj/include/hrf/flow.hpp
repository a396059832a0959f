#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hrf/ansatz.hpp"
#include "hrf/coupling.hpp"

namespace hrf {

struct IntegratorConfig {
    double dt0 = 1.0 / 64.0;      ///< dyadic defaults keep homogeneous runs exact
    double t_max = 8.0;
    double cfl = 0.2;
    double rm_dt = 0.05;          ///< halve dt while sup|Rm| * dt exceeds this
    double homogeneous_cap = 0.1; ///< dt <= cap * c / |c'|
    double snapshot_dt = 1.0 / 16.0;
    double snapshot_growth = 1.2115276586285884;  ///< 10^(1/12)
    double blowup_cap = 1e10;     ///< relative to the initial sup|Rm|
    double w_floor = 1e-8;
    std::size_t max_steps = 5'000'000;
    Exec exec = Exec::Parallel;
};

struct FlowConfig {
    GeometryState initial;
    CouplingSchedule schedule;
    IntegratorConfig integrator;
    std::string config_hash;
};

enum class StepStatus { Ok, PastSingularTime, SingularGeometry, Fault };

template <class S>
struct StepResult {
    S state;
    StepStatus status = StepStatus::Ok;
    std::vector<std::uint8_t> mask;  ///< offending grid points, warped only
};

/// One classical RK4 step of c' = -2(n-1) + 2 alpha(t) [eigenmap].
StepResult<HomogeneousState> step_homogeneous(const HomogeneousState& s, double t, double dt,
                                              const CouplingSchedule& schedule);

/// One classical RK4 step of the method-of-lines system
/// a_t = -a S_ss, w_t = -w Ric_ff, phi_t = tau(phi).
StepResult<WarpedState> step_warped(const WarpedState& s, double t, double dt,
                                    const CouplingSchedule& schedule, double w_floor = 1e-8,
                                    Exec exec = Exec::Parallel);

/// Right-hand side of the warped system; exposed for diagnostics and benches.
struct WarpedRhs {
    std::vector<double> a, w, phi;
};
WarpedRhs warped_rhs(const WarpedState& s, const CurvaturePacket& p, Exec exec = Exec::Parallel);

/// dt <= cfl * min(a dx)^2 / (2 max(1, max_j |Rm|_j w_j^2)).
double warped_cfl_limit(const WarpedState& s, const CurvaturePacket& p, double cfl);

/// 0.1 * c / |c'|, or +inf when c' = 0.
double homogeneous_stability_cap(const HomogeneousState& s, double alpha, double factor = 0.1);

enum class Termination { ReachedTmax, CurvatureBlowup, SingularGeometry, StepLimit, Analytic };

const char* to_string(Termination t);

struct MonitorRecord {
    double t = 0.0;
    double sup_rm = 0.0;
    double sh_min = 0.0;
    double w_min = 0.0;          ///< NaN outside the warped class
    double sup_grad_phi_sq = 0.0;
    int winding = 0;             ///< measured from circle values, warped only
};

struct DistortionRecord {
    double t0 = 0.0, t1 = 0.0;
    double d0 = 0.0, d1 = 0.0;
    double ratio = 1.0;
    double k_upper = 0.0;        ///< sup of the largest eigenvalue of S on [t0, t1]
    double lower_bound = 1.0;    ///< exp(-k_upper (t1 - t0))
    bool lower_pass = true;
    double k_lower = 0.0;        ///< S >= -k_lower on [t0, t1]
    double upper_bound = 1.0;    ///< exp(k_lower (t1 - t0))
    bool upper_pass = true;
    bool rate_applicable = false;
    double rate = 0.0;           ///< (d1 - d0) / (t1 - t0)
    double rate_bound = 0.0;
    double r0 = 0.0;
    double k_ric = 0.0;
    bool rate_pass = true;
    std::string note;

    bool pass() const { return lower_pass && upper_pass && rate_pass; }
};

struct EvolutionResidual {
    double t = 0.0;
    double sh_residual = 0.0;        ///< sup-norm defect of the Sh equation
    double grad_phi_residual = 0.0;  ///< sup-norm defect of the |grad phi|^2 equation
    std::vector<double> sh_defect;
    std::vector<double> grad_phi_defect;
};

struct SingularTimeFit {
    double T = 0.0;
    double residual = 0.0;    ///< RMS residual of the fit relative to the mean of 1/sup|Rm|
    std::size_t points = 0;
    bool low_confidence = false;
};

struct Provenance {
    std::string config_hash;
    std::string integrator = "rk4-adaptive";
    std::size_t steps = 0;
};

struct FlowTrajectory {
    std::vector<double> times;
    std::vector<GeometryState> states;
    CouplingSchedule schedule;
    std::optional<SingularTimeFit> fit;
    Termination termination = Termination::ReachedTmax;
    Provenance provenance;
    double w_floor = 1e-8;

    std::vector<MonitorRecord> monitors;
    std::vector<DistortionRecord> distortion;
    std::vector<EvolutionResidual> residuals;
    std::size_t sh_min_violations = 0;
    bool winding_preserved = true;

    /// Closed-form evaluator for analytic trajectories; when set, state_at
    /// uses it instead of snapshot interpolation.
    std::function<GeometryState(double)> exact;
    /// Upper end of the window where `exact` is valid (the singular time).
    double exact_limit = 0.0;

    std::optional<double> T_est() const {
        return fit ? std::optional<double>(fit->T) : std::nullopt;
    }
    std::pair<double, double> window() const;
    bool is_class_homogeneous() const;
    bool is_class_warped() const;

    /// State at time t: exact when available, else linear interpolation of the
    /// stored fields. Throws DomainError outside the window.
    GeometryState state_at(double t) const;

    /// Index of the stored snapshot at exactly time t, or DomainError.
    std::size_t snapshot_index(double t) const;

    /// Builds MonitorRecords for every stored state.
    void rebuild_monitors();
};

/// Carries the last valid state when the integrator produces non-finite data.
struct IntegratorFault : std::runtime_error {
    IntegratorFault(const std::string& what, GeometryState last, double t)
        : std::runtime_error(what), last_state(std::move(last)), t(t) {}
    GeometryState last_state;
    double t;
};

FlowTrajectory run_flow(const FlowConfig& config);

/// Recomputes monitors, distortion records for a default point pair and
/// evolution residuals at every interior snapshot.
void attach_online_monitors(FlowTrajectory& traj);

/// Least-squares fit of 1/sup|Rm| against t over the final decade of growth.
/// Throws DomainError if the run did not blow up or has fewer than 10
/// snapshots in that decade.
SingularTimeFit estimate_singular_time(const FlowTrajectory& traj);

/// Defects of the Sh and |grad phi|^2 evolution equations at an interior
/// snapshot, by centred time differences and the ansatz spatial operators.
EvolutionResidual evolution_residual(const FlowTrajectory& traj, double t);

/// Distance distortion bounds between two stored snapshots.
DistortionRecord distortion_monitor(const FlowTrajectory& traj, const Point& p, const Point& q,
                                    double t0, double t1);

/// Winding number measured from the circle values of phi (seam included).
int measured_winding(const WarpedState& s);

/// Largest and smallest eigenvalues of S and the largest Ricci eigenvalue.
struct TensorBounds {
    double s_max = 0.0;
    double s_min = 0.0;
    double ric_max = 0.0;
};
TensorBounds tensor_bounds(const CurvaturePacket& p);

}  // namespace hrf
