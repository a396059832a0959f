#pragma once

#include <utility>
#include <vector>

namespace hrf {

/// Non-increasing coupling function alpha(t).
struct CouplingSchedule {
    enum class Kind { Constant, PiecewiseLinear };

    Kind kind = Kind::Constant;
    std::vector<std::pair<double, double>> samples;  ///< (t, alpha), t increasing
    double alpha_min = 0.0;
    double alpha_max = 0.0;

    static CouplingSchedule constant(double alpha);
    static CouplingSchedule piecewise_linear(std::vector<std::pair<double, double>> samples);

    /// Throws DomainError when samples are unordered, increasing in alpha,
    /// or leave [alpha_min, alpha_max] with alpha_min > 0.
    void validate() const;

    /// Value at t; held constant outside the sampled range.
    double alpha(double t) const;

    /// Slope of the active segment. At a knot the segment ending there is
    /// used; outside the sampled range the slope is zero.
    double alpha_dot(double t) const;
};

}  // namespace hrf
