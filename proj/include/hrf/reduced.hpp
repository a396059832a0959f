#pragma once

#include <array>
#include <optional>
#include <vector>

#include "hrf/flow.hpp"
#include "hrf/spline.hpp"

namespace hrf {

/// Discretized space-time curve, parametrized by sigma = sqrt(t0 - t).
///
/// Positions are in the base-adapted chart of the geometry class:
/// homogeneous and Euclidean curves use polar coordinates (x, psi) centred
/// at the base point; warped curves use the base coordinate x and the fiber
/// angle psi measured from the base point's fiber direction.
struct SpaceTimeCurve {
    std::vector<double> sigma;  ///< 0 at the base, sigma_bar at the foot
    std::vector<double> times;  ///< t0 - sigma^2
    std::vector<Point> positions;
    Point base;
    double t0 = 0.0;
    Point foot;
    double t_bar = 0.0;
};

/// Metric coefficients m1 (du^2), m2 (dv^2) and Sh of one time slice along
/// the chart coordinate u.
class SliceField {
public:
    explicit SliceField(const GeometryState& s);

    struct Value {
        double m1, m1u, m1uu;
        double m2, m2u, m2uu;
        double sh, shu, shuu;
    };
    Value operator()(double u) const;

private:
    enum class Kind { Homogeneous, Euclidean, Warped } kind_;
    double c_ = 1.0;
    double sh_ = 0.0;
    PeriodicSpline a2_, w2_, shs_;
};

struct MinimizerOptions {
    std::size_t nodes = 64;      ///< sigma segments
    double grad_tol = 1e-8;
    std::size_t max_iter = 10000;
    bool stretch = true;         ///< sinh-stretched sigma grid near a singular time
};

struct MinimizeResult {
    SpaceTimeCurve curve;
    double L = 0.0;
    double l = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    double grad_norm = 0.0;
    double foot_momentum = 0.0;    ///< dL/du at the foot, first-variation value
    double foot_momentum_v = 0.0;  ///< dL/dv at the foot
};

/// Sigma nodes on [0, sigma_bar]; sinh-stretched when `scale` is much smaller
/// than sigma_bar.
std::vector<double> sigma_grid(double sigma_bar, std::size_t segments, std::optional<double> scale);

/// Precomputed slices at the segment midpoints of one sigma grid.
class ActionField {
public:
    ActionField(const FlowTrajectory& traj, double t0, double t_bar, const MinimizerOptions& opts);
    ActionField(const FlowTrajectory& traj, double t0, std::vector<double> sigma);

    const std::vector<double>& sigma() const { return sigma_; }
    double t0() const { return t0_; }
    const MinimizerOptions& options() const { return options_; }
    const SliceField& slice(std::size_t k) const { return slices_[k]; }
    std::size_t segments() const { return slices_.size(); }

private:
    void build(const FlowTrajectory& traj);
    double t0_;
    MinimizerOptions options_;
    std::vector<double> sigma_;
    std::vector<SliceField> slices_;
};

/// Discrete action sum_k [ (m1 du^2 + m2 dv^2) / (2 h_k) + 2 h_k sigma_m^2 Sh ],
/// the midpoint rule for L in the sigma variable.
double discrete_action(const ActionField& field, const std::vector<double>& u,
                       const std::vector<double>& v);

/// L-length of a curve, evaluated with the curve's own sigma nodes.
double l_length(const SpaceTimeCurve& curve, const FlowTrajectory& traj, double t0);

/// Track coordinates of base and foot for the active class, with every
/// homotopy candidate for the foot.
struct TrackEndpoints {
    double u0 = 0.0;
    std::vector<double> u1;
    double v1 = 0.0;
};
TrackEndpoints track_endpoints(const GeometryState& s, const Point& p, const Point& q);

/// Direct minimization of the discrete action by damped Newton steps on the
/// block-tridiagonal Hessian with a Brent line search.
MinimizeResult minimize_l(const FlowTrajectory& traj, const Point& p, double t0, const Point& q,
                          double t_bar, const MinimizerOptions& opts = {});

/// Same, reusing a precomputed field (one sigma grid shared across probes).
MinimizeResult minimize_l(const ActionField& field, const GeometryState& geometry, const Point& p,
                          const Point& q, double t_bar);

/// Serial reference minimizer: coordinate descent with a Brent line
/// search on each node. Slow; kept for cross-checking the Newton solver.
MinimizeResult minimize_l_reference(const ActionField& field, const GeometryState& geometry,
                                    const Point& p, const Point& q, double t_bar,
                                    std::size_t max_sweeps = 20000);

struct ShootResult {
    SpaceTimeCurve curve;
    double L = 0.0;
    bool ok = true;  ///< false when the curve left the window or blew up
};

/// Integrates the L-geodesic equation in sigma by RK4, starting at the base
/// with L-velocity v0 = lim sqrt(t0 - t) dgamma/dt (chart components).
ShootResult l_geodesic_shoot(const FlowTrajectory& traj, const Point& p, double t0,
                             std::array<double, 2> v0, double t_bar, std::size_t steps = 256);

/// Initial L-velocity of the minimizer to (q, t_bar), recovered from the first
/// variation dL/dq at the foot and a backward integration to the base.
std::array<double, 2> initial_velocity_from_first_variation(const FlowTrajectory& traj,
                                                            const Point& p, double t0,
                                                            const Point& q, double t_bar,
                                                            const MinimizerOptions& opts = {});

struct Probe {
    Point q;
    double t_bar = 0.0;
};

/// Default probe set: 8 points times 6 times geometrically spaced toward T.
std::vector<Probe> default_probes(const FlowTrajectory& traj, const Point& p, double T,
                                  std::size_t points = 8, std::size_t times = 6);

struct InequalityMargins {
    Probe probe;
    double m1 = 0.0;  ///< first inequality, >= 0 expected
    double m2 = 0.0;  ///< negated second inequality, >= 0 expected
    double m3 = 0.0;  ///< |equality defect|
};

struct SingularLengthReport {
    std::vector<double> t_seq;
    std::vector<Probe> probes;
    std::vector<std::vector<double>> l;   ///< [i][probe] for each t_i
    std::vector<double> cauchy;           ///< max |l_i - l_{i-1}| over probes
    bool cauchy_decreasing = true;
    std::vector<double> l_T;              ///< final iterate
    std::vector<InequalityMargins> margins;
    bool all_converged = true;
};

/// Reduced length based at the singular time as the limit of l_{p, t_i}.
SingularLengthReport reduced_length_singular(const FlowTrajectory& traj, const Point& p,
                                             const std::vector<double>& t_seq,
                                             const std::vector<Probe>& probes,
                                             const MinimizerOptions& opts = {},
                                             bool with_margins = true);

/// Default t_i sequence approaching T inside the stored window.
std::vector<double> default_t_sequence(const FlowTrajectory& traj, std::size_t count = 5);

struct VolumeOptions {
    std::size_t radial_nodes = 24;  ///< Gauss-Legendre nodes in the distance variable
    std::size_t fiber_nodes = 16;   ///< Gauss-Legendre nodes in the fiber angle
    std::size_t x_stride = 4;       ///< warped full-circle sampling: every stride-th grid point
    double gaussian_window = 10.0;  ///< quadrature reach in units of sqrt(tau)
    MinimizerOptions minimizer;
};

/// Base of the reduced volume: a regular time t0, or the singular time when
/// `singular` is set (t0 then holds the last t_i used as its proxy).
struct ReducedBase {
    Point p;
    double t0 = 0.0;
    bool singular = false;
};

struct ReducedVolume {
    double t_bar = 0.0;
    double V = 0.0;
    std::vector<double> coordinate;  ///< quadrature node coordinates (distance or x)
    std::vector<double> integrand;   ///< integrand profile at the nodes
    bool all_converged = true;
};

ReducedVolume reduced_volume(const FlowTrajectory& traj, const ReducedBase& base, double t_bar,
                             const VolumeOptions& opts = {});

struct MonotonicityVerdict {
    bool pass = true;
    bool bounded = true;
    double worst_drop = 0.0;  ///< max relative decrease between consecutive samples
    double max_V = 0.0;
};

/// Non-decreasing in t_bar within 1e-3 V and V <= 1 + 1e-3. Needs >= 3 samples.
MonotonicityVerdict monotonicity_monitor(std::vector<std::pair<double, double>> series,
                                         double tol = 1e-3);

/// Fiber-symmetric scalar field sampled at three times t - dt, t, t + dt.
///
/// Homogeneous fields are zonal about a point, sampled at cell centres
/// theta_j = (j + 1/2) pi / M. Euclidean fields are radial on the state grid.
/// Warped fields live on the state grid.
struct ScalarSlices {
    std::array<double, 3> times{};
    std::array<std::vector<double>, 3> values;
};

std::vector<double> zonal_grid(std::size_t M);

struct WResidual {
    double lhs_sup = 0.0;
    double rhs_sup = 0.0;
    double defect = 0.0;  ///< sup |lhs - rhs|
    std::vector<double> lhs, rhs;
};

/// Both sides of box* w = -2 tau [ |S + Hess l - g/(2 tau)|^2 + alpha |tau phi
/// - d phi(grad l)|^2 - alpha_dot |grad phi|^2 ] v at the middle slice.
WResidual w_residual(const FlowTrajectory& traj, const ScalarSlices& l, double T);

}  // namespace hrf
