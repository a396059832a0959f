#include "hrf/coupling.hpp"

#include <algorithm>

#include "hrf/common.hpp"

namespace hrf {

CouplingSchedule CouplingSchedule::constant(double alpha) {
    CouplingSchedule s;
    s.kind = Kind::Constant;
    s.samples = {{0.0, alpha}};
    s.alpha_min = s.alpha_max = alpha;
    s.validate();
    return s;
}

CouplingSchedule CouplingSchedule::piecewise_linear(std::vector<std::pair<double, double>> samples) {
    CouplingSchedule s;
    s.kind = Kind::PiecewiseLinear;
    s.samples = std::move(samples);
    if (!s.samples.empty()) {
        s.alpha_min = s.samples.back().second;
        s.alpha_max = s.samples.front().second;
    }
    s.validate();
    return s;
}

void CouplingSchedule::validate() const {
    if (samples.empty()) throw DomainError("coupling schedule has no samples");
    if (!(alpha_min > 0.0) || alpha_min > alpha_max)
        throw DomainError("coupling bounds must satisfy 0 < alpha_min <= alpha_max");
    if (kind == Kind::Constant && samples.size() != 1)
        throw DomainError("constant coupling takes exactly one sample");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double a = samples[i].second;
        if (a < alpha_min || a > alpha_max) throw DomainError("coupling sample outside bounds");
        if (i > 0) {
            if (!(samples[i].first > samples[i - 1].first))
                throw DomainError("coupling sample times must increase");
            if (a > samples[i - 1].second) throw DomainError("coupling must be non-increasing");
        }
    }
}

double CouplingSchedule::alpha(double t) const {
    if (t <= samples.front().first) return samples.front().second;
    if (t >= samples.back().first) return samples.back().second;
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double v, const auto& s) { return v < s.first; });
    const auto& [t1, a1] = *it;
    const auto& [t0, a0] = *(it - 1);
    return a0 + (a1 - a0) * (t - t0) / (t1 - t0);
}

double CouplingSchedule::alpha_dot(double t) const {
    if (samples.size() < 2 || t <= samples.front().first || t > samples.back().first) return 0.0;
    auto it = std::lower_bound(samples.begin(), samples.end(), t,
                               [](const auto& s, double v) { return s.first < v; });
    const auto& [t1, a1] = *it;
    const auto& [t0, a0] = *(it - 1);
    return (a1 - a0) / (t1 - t0);
}

}  // namespace hrf
