#pragma once

#include <vector>

namespace hrf {

/// Periodic cubic spline through samples on a uniform grid of [0, period).
class PeriodicSpline {
public:
    PeriodicSpline() = default;
    PeriodicSpline(std::vector<double> values, double period);

    struct Value {
        double f, df, ddf;
    };
    Value operator()(double x) const;
    double period() const { return period_; }

private:
    std::vector<double> f_;
    std::vector<double> m_;  // second derivatives at the nodes
    double period_ = 0.0;
    double h_ = 0.0;
};

}  // namespace hrf
