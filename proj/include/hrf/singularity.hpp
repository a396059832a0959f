#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "hrf/flow.hpp"

namespace hrf {

struct TypeIResult {
    double typeI_C = 0.0;   ///< max over snapshots and grid of (T - t)|Rm|
    double typeA_r = 0.0;   ///< exponent of sup|Rm| ~ C / (T - t)^r
    double typeA_C = 0.0;
    bool is_type_I = false; ///< |r - 1| <= 0.1
    bool low_confidence = false;
    std::size_t fit_points = 0;
};

/// Throws DomainError when the trajectory has no singular time.
TypeIResult type_I_constant(const FlowTrajectory& traj);

/// Indices of snapshots in the final decade of T - t.
std::vector<std::size_t> late_snapshots(const FlowTrajectory& traj);

struct BlowupRecord {
    double x = 0.0;          ///< grid coordinate of the argmax (0 for homogeneous)
    std::size_t index = 0;   ///< grid index
    double t = 0.0;
    double rate = 0.0;       ///< (T - t)|Rm| at (x, t)
    std::size_t chain = 0;
};

struct BlowupSequences {
    std::vector<BlowupRecord> records;
    std::size_t chains = 0;
    /// Grid points qualifying at every one of the last `persistence` late
    /// snapshots: limit points of essential blow-up sequences.
    std::vector<std::uint8_t> limit_mask;
};

/// Late-snapshot argmax points with (T - t)|Rm| >= c_threshold, chained by
/// spatial proximity (at most `proximity` grid cells between consecutive
/// argmax points).
BlowupSequences detect_essential_blowup(const FlowTrajectory& traj, double c_threshold,
                                        std::size_t persistence = 3, std::size_t proximity = 2);

struct SingularSetOptions {
    double bound_cap = 1e6;          ///< relative to the initial sup|Rm|
    std::size_t stencil_radius = 1;  ///< neighbourhoods of 2r + 1 = 3 cells
    double c_threshold_fraction = 0.1;
    double c_s_fraction = 0.01;
    std::size_t persistence = 3;
};

struct SingularSets {
    std::vector<std::uint8_t> sigma, sigma_I, sigma_S;  ///< reported, nested by construction
    std::vector<std::uint8_t> raw_I, raw_S;             ///< before enforcing inclusions
    std::size_t violations_I = 0;  ///< raw_I points outside sigma
    std::size_t violations_S = 0;  ///< raw_S points outside sigma_I
    double typeI_C = 0.0;
    double c_threshold = 0.0;
    double c_S = 0.0;

    /// Largest periodic Hausdorff distance, in grid cells, between any two of
    /// the reported masks; -1 when one mask is empty and another is not.
    long max_mask_distance() const;
    static std::size_t count(const std::vector<std::uint8_t>& m);
};

SingularSets classify_singular_sets(const FlowTrajectory& traj,
                                    const SingularSetOptions& opts = {});

/// Blow-up rescaling g_j(t) = lambda g(T + t/lambda) of a source trajectory.
struct RescaledTrajectory {
    double lambda = 1.0;
    Point base;
    double T = 0.0;
    double t_lo = 0.0;         ///< rescaled window [t_lo, t_hi]
    double t_hi = 0.0;
    std::vector<double> times; ///< rescaled snapshot times inside the window
    double typeI_C = 0.0;
    double bound_margin = 0.0; ///< min over times of 1 - (-t)|Rm_j| / typeI_C
    std::shared_ptr<const FlowTrajectory> source;

    GeometryState state_at(double t) const;
    double alpha_at(double t) const;
};

/// Throws DomainError listing the achievable window when [-lambda *
/// T_window, 0) is not covered by stored data.
RescaledTrajectory rescale(std::shared_ptr<const FlowTrajectory> traj, double lambda, Point p,
                           std::optional<double> T_window = std::nullopt);

GeometryState rescale_state(const GeometryState& s, double lambda);

struct ConvergenceDiagnostic {
    std::vector<double> lambdas;
    std::vector<std::vector<double>> distance;  ///< pairwise profile distances
    std::vector<double> soliton_residual;        ///< canonical-form residual per lambda
    bool residual_nonincreasing = true;
    double max_distance = 0.0;
};

/// Options for warped profile comparison.
struct ProfileWindow {
    std::size_t half_width = 8;  ///< grid cells on each side of the base point
    std::size_t samples = 33;    ///< uniform samples in rescaled arclength
    double parabolic_radius = 1.0;  ///< residual window |s| <= radius * sqrt(-t)
    std::size_t min_half = 2;       ///< residual window floor in grid cells
};

ConvergenceDiagnostic convergence_diagnostic(const std::vector<RescaledTrajectory>& rescaled,
                                             double t_probe, const ProfileWindow& window = {});

/// Canonical-form residual of one rescaled slice at t < 0 (singular time 0).
/// Warped slices use the least-squares best potential on the parabolic
/// window around the base point.
double rescaled_soliton_residual(const RescaledTrajectory& r, double t,
                                 const ProfileWindow& window = {});

struct VolumeSeries {
    std::vector<double> times;
    std::vector<double> volume;
    bool decreasing_final_decade = true;
    double last = 0.0;
};

VolumeSeries singular_volume(const FlowTrajectory& traj, const std::vector<std::uint8_t>& mask);

struct NonoscillationReport {
    std::vector<std::size_t> points;
    std::vector<double> inf_rate;  ///< inf over late times of (T - t)|Rm|(p, t)
    double constant = 0.0;         ///< min over points
    std::vector<std::size_t> flagged;
    bool empty() const { return points.empty(); }
};

NonoscillationReport nonoscillation_check(const FlowTrajectory& traj,
                                          const std::vector<std::uint8_t>& sigma_I);

struct SingularityReport {
    double T_est = 0.0;
    TypeIResult type_I;
    SingularSets sets;
    BlowupSequences sequences;
    NonoscillationReport nonoscillation;
    VolumeSeries volume;
};

SingularityReport analyze_singularity(const FlowTrajectory& traj,
                                      const SingularSetOptions& opts = {});

}  // namespace hrf
