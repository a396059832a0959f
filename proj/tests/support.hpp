#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hrf/ansatz.hpp"

namespace hrf::testing {

/// 1 + amp * sum_k (c_k cos kx + s_k sin kx) with k = 1..3 and unit-bounded
/// random coefficients.
struct TrigProfile {
    double amp = 0.1;
    std::vector<double> c, s;

    double operator()(double x) const {
        double v = 1.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double kk = static_cast<double>(k + 1);
            v += amp * (c[k] * std::cos(kk * x) + s[k] * std::sin(kk * x)) / static_cast<double>(c.size());
        }
        return v;
    }
};

inline TrigProfile random_profile(std::mt19937_64& rng, double amp = 0.1, std::size_t modes = 3) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TrigProfile p;
    p.amp = amp;
    for (std::size_t k = 0; k < modes; ++k) {
        p.c.push_back(u(rng));
        p.s.push_back(u(rng));
    }
    return p;
}

inline WarpedState sample_warped(int n, std::size_t J, const std::function<double(double)>& a,
                                 const std::function<double(double)>& w,
                                 const std::function<double(double)>& phi_periodic = {},
                                 int winding = 0, double alpha = 1.0) {
    WarpedState s;
    s.n = n;
    s.winding = winding;
    s.alpha = alpha;
    s.a.resize(J);
    s.w.resize(J);
    s.phi.resize(J);
    const double dx = two_pi / static_cast<double>(J);
    for (std::size_t j = 0; j < J; ++j) {
        const double x = dx * static_cast<double>(j);
        s.a[j] = a(x);
        s.w[j] = w(x);
        s.phi[j] = winding * x + (phi_periodic ? phi_periodic(x) : 0.0);
    }
    return s;
}

inline double observed_order(double coarse, double fine, double ratio = 2.0) {
    return std::log(coarse / fine) / std::log(ratio);
}

}  // namespace hrf::testing
