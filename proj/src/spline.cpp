#include "hrf/spline.hpp"

#include <cmath>

#include "hrf/common.hpp"

namespace hrf {

namespace {

// Solves the cyclic system x_{j-1} + 4 x_j + x_{j+1} = r_j by Sherman-Morrison.
std::vector<double> solve_cyclic(const std::vector<double>& r) {
    const std::size_t n = r.size();
    const double gamma = -4.0;
    std::vector<double> diag(n, 4.0);
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;
    auto thomas = [&](std::vector<double> d) {
        std::vector<double> c(n), b = diag;
        c[0] = 1.0 / b[0];
        d[0] /= b[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double m = b[i] - c[i - 1];
            c[i] = 1.0 / m;
            d[i] = (d[i] - d[i - 1]) / m;
        }
        for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
        return d;
    };
    const std::vector<double> y = thomas(r);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = 1.0;
    const std::vector<double> z = thomas(u);
    const double fact = (y[0] + y[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - fact * z[i];
    return x;
}

}  // namespace

PeriodicSpline::PeriodicSpline(std::vector<double> values, double period)
    : f_(std::move(values)), period_(period) {
    const std::size_t n = f_.size();
    if (n < 4 || !(period > 0.0)) throw DomainError("periodic spline needs >= 4 samples");
    h_ = period / static_cast<double>(n);
    std::vector<double> rhs(n);
    for (std::size_t j = 0; j < n; ++j)
        rhs[j] = 6.0 * (f_[(j + 1) % n] - 2.0 * f_[j] + f_[(j + n - 1) % n]) / (h_ * h_);
    m_ = solve_cyclic(rhs);
}

PeriodicSpline::Value PeriodicSpline::operator()(double x) const {
    const std::size_t n = f_.size();
    double u = std::fmod(x, period_);
    if (u < 0.0) u += period_;
    double s = u / h_;
    auto i = static_cast<std::size_t>(s);
    if (i >= n) i = n - 1;
    const double t = s - static_cast<double>(i);
    const std::size_t k = (i + 1) % n;
    const double a = 1.0 - t;
    const double hh = h_ * h_ / 6.0;
    Value v;
    v.f = a * f_[i] + t * f_[k] + hh * ((a * a * a - a) * m_[i] + (t * t * t - t) * m_[k]);
    v.df = (f_[k] - f_[i]) / h_ + h_ / 6.0 * (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * t * t - 1.0) * m_[k]);
    v.ddf = a * m_[i] + t * m_[k];
    return v;
}

}  // namespace hrf
