#pragma once

#include <vector>

#include "hrf/ansatz.hpp"
#include "hrf/flow.hpp"

namespace hrf {

enum class SolitonKind { Shrinking, Steady, Expanding };

SolitonKind kind_from_sigma(double sigma);
const char* to_string(SolitonKind k);

/// Gradient soliton data: S + Hess f + sigma g = 0 and tau(phi) = <grad phi, grad f>.
///
/// Sign convention: a shrinking soliton has sigma < 0. In canonical form at
/// time t with singular time T this reads S + Hess f - g / (2(T - t)) = 0,
/// so sigma = -1/(2(T - t)); the Gaussian soliton f = |x|^2/(4(T - t)) on
/// flat space satisfies it exactly.
struct SolitonSpec {
    GeometryState state;
    std::vector<double> f;  ///< one value per packet point
    double sigma = 0.0;
    double alpha = 1.0;
    SolitonKind kind = SolitonKind::Shrinking;
    double normalization_constant = 0.0;
};

struct SolitonResidual {
    double metric = 0.0;  ///< sup of the tensor norm of the metric equation
    double map = 0.0;     ///< sup of |tau(phi) - <grad phi, grad f>|
    std::vector<double> metric_pointwise;
    std::vector<double> map_pointwise;
};

SolitonResidual soliton_residual(const SolitonSpec& spec);

/// Residual of S + Hess f - g/(2(T - t)) = 0 and the map equation on a slice
/// at time t. Throws DomainError if t >= T.
SolitonResidual canonical_form_residual(const GeometryState& slice, double t,
                                        const std::vector<double>& f, double T);

struct NormalizeResult {
    SolitonSpec spec;
    double k = 0.0;            ///< mean of Sh + |grad f|^2 + 2 sigma f before the shift
    double k_variation = 0.0;  ///< sup - inf of that field
    bool k_constant = true;
    double shift = 0.0;        ///< amount subtracted from f
    double trace_defect = 0.0; ///< sup |Sh + Lap f + sigma n|
};

/// Shifts f so the conserved constant vanishes. Throws DomainError when
/// sigma = 0 (steady solitons cannot be normalized this way).
NormalizeResult normalize(const SolitonSpec& spec);

struct RigidityReport {
    double sh_min = 0.0;
    bool sh_lower_bound = true;   ///< sh_min >= -1e-8
    bool equality_case = false;   ///< sh_min <= 1e-8
    bool flat = false;
    bool constant_map = false;
    bool implication_holds = true;
    double elliptic_residual = 0.0;
};

/// Throws DomainError for non-shrinking specs.
RigidityReport rigidity_check(const SolitonSpec& spec, bool exact = true);

enum class ExactKind { Gaussian, RoundSphere, CoupledSphere };
const char* to_string(ExactKind k);

struct ExactParams {
    int n = 2;
    double alpha = 0.5;
    double c0 = 1.0;
    double T = 1.0;          ///< Gaussian only: canonical time parameter
    double r_max = 12.0;     ///< Gaussian only: chart window
    std::size_t J = 256;     ///< Gaussian only: radial grid
    double min_gap = 1e-10;  ///< smallest stored T - t, relative to T
};

struct ExactSolution {
    FlowTrajectory trajectory;
    SolitonSpec spec;  ///< canonical soliton at t = 0
    double T = 0.0;
};

/// Analytic trajectories that bypass the integrator. Snapshots are stored at
/// a uniform cadence on [0, T/2] and then geometrically toward T.
ExactSolution construct_exact(ExactKind kind, const ExactParams& params);

/// S^2 with alpha(t) = 1 - t, c(t) = 1 - t^2 and the identity map: a
/// soliton that is not in canonical form. Returns the slice at time t with
/// f = n/2, to be checked against T = 1.
SolitonSpec noncanonical_fixture(double t);

/// Potential derivatives on any slice: the radial and tangential Hessian
/// eigenvalues, gradient and Laplacian of a fiber-symmetric field.
struct PotentialDerivatives {
    std::vector<double> ds;
    std::vector<double> hess_base;
    std::vector<double> hess_fiber;
    std::vector<double> grad_sq;
    std::vector<double> laplacian;
};
PotentialDerivatives potential_derivatives(const GeometryState& s, const std::vector<double>& f);

}  // namespace hrf
