#pragma once

#include <vector>

#include "hrf/flow.hpp"

namespace hrf {

/// Zonal solution of the conjugate heat equation -u_t - Lap u + Sh u = 0 on a
/// homogeneous trajectory, expanded in normalized Gegenbauer harmonics about a
/// base point: u(theta, t) = sum_k a_k(t) Z_k(theta), with
/// a_k(t) = a_k(t1) exp(-int_t^t1 (lambda_k / c + Sh)).
class ZonalConjugateHeat {
public:
    ZonalConjugateHeat(const FlowTrajectory& traj, double t1, std::vector<double> coeffs);

    struct Value {
        double u, u_theta, lap;
    };
    /// Throws DomainError for t > t1 or outside the trajectory window.
    std::vector<Value> evaluate(const std::vector<double>& theta, double t) const;
    std::vector<double> coefficients(double t) const;
    double c_at(double t) const;
    int n() const { return n_; }

private:
    const FlowTrajectory* traj_;
    double t1_;
    int n_;
    std::vector<double> a1_;
};

/// dim H_k of degree-k spherical harmonics on S^n.
double harmonic_dimension(int n, int k);

struct HarnackOptions {
    std::size_t K_sph = 64;
    double eps0 = 1e-2;            ///< slices start at tau = 2 eps0
    std::size_t theta_nodes = 128;
    std::size_t slices = 8;        ///< t_end - tau with tau geometric in [2 eps0, tau_max]
    double tau_max_fraction = 0.5; ///< tau_max as a fraction of t_end - window start
};

struct HarnackSlice {
    double t = 0.0;
    double max_v = 0.0;
    double max_u = 0.0;
};

struct HarnackReport {
    std::vector<HarnackSlice> slices;
    double max_v_relative = 0.0;  ///< max over slices of max v / max u
    double tail = 0.0;            ///< last retained mode relative to u(p)
    bool increase_K = false;      ///< tail above 1e-6
};

/// Sign check of v = ((t_end - t)(2 Lap f - |grad f|^2 + Sh) + f - n) u for
/// the fundamental solution u of the conjugate heat equation based at
/// (p, t_end). Homogeneous trajectories use the zonal expansion; Euclidean
/// trajectories use the closed-form heat kernel.
HarnackReport harnack_check(const FlowTrajectory& traj, const Point& p, double t_end,
                            const HarnackOptions& opts = {});

}  // namespace hrf
