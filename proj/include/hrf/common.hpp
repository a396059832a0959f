#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace hrf {

/// Raised when an operation's preconditions on its inputs do not hold.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Raised for invalid or inconsistent scenario configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(std::vector<std::string> violations);
    std::vector<std::string> violations;
};

/// Raised for filesystem failures; the message carries the offending path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Area of the unit round sphere S^k (k >= 0).
double unit_sphere_volume(int k);

/// A point in the chart of the active geometry class.
///
/// Homogeneous: polar angle `x` and azimuth `psi` on a great 2-sphere.
/// Warped: base coordinate `x` in [0, 2pi) and fiber polar angle `psi`
/// measured from a fixed reference direction of S^{n-1}.
/// Euclidean: polar radius `x` and angle `psi` in a coordinate 2-plane.
struct Point {
    double x = 0.0;
    double psi = 0.0;
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Wrap an angle into [0, 2pi).
inline double wrap_angle(double x) {
    double r = std::fmod(x, two_pi);
    return r < 0.0 ? r + two_pi : r;
}

/// Principal value of an angle difference, in (-pi, pi].
inline double principal_angle(double d) {
    double r = std::remainder(d, two_pi);
    return r == -std::numbers::pi ? std::numbers::pi : r;
}

}  // namespace hrf
