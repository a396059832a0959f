#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hrf/flow.hpp"

namespace hrf {

/// Trigonometric profile mean + sum_k cos_k cos(k x) + sin_k sin(k x).
struct ProfileSpec {
    double mean = 0.0;
    std::vector<double> cos_coeffs;
    std::vector<double> sin_coeffs;

    double operator()(double x) const;
};

struct GeometrySpec {
    enum class Kind { Homogeneous, Warped, Gaussian };
    Kind kind = Kind::Homogeneous;
    int n = 2;
    // homogeneous
    double c0 = 1.0;
    MapKind map = MapKind::ConstantMap;
    // warped
    std::size_t J = 256;
    ProfileSpec a{1.0, {}, {}};
    ProfileSpec w{1.0, {}, {}};
    ProfileSpec phi{0.0, {}, {}};
    int winding = 0;
    // gaussian
    double T = 1.0;
    double r_max = 12.0;
};

struct AnalysisSpec {
    std::vector<std::string> run;  ///< requested analyses, in execution order

    // singularity
    double bound_cap = 1e6;
    double c_threshold_fraction = 0.1;
    double c_s_fraction = 0.01;
    std::size_t persistence = 3;

    // reduced geometry
    std::string volume_base = "singular";  ///< "singular" or "regular"
    double volume_t0_fraction = 0.5;       ///< regular base t0 as a fraction of T_est or t_max
    std::size_t volume_times = 6;
    double volume_tau_max = 0.5;           ///< largest tau as a fraction of the base time
    double volume_tau_min = 0.05;
    double monotonicity_tol = 1e-3;
    std::size_t probe_points = 8;
    std::size_t probe_times = 6;
    std::size_t t_sequence = 5;
    std::size_t minimizer_nodes = 64;
    std::size_t radial_nodes = 24;
    std::size_t fiber_nodes = 16;
    std::size_t x_stride = 4;

    // rescaling
    std::vector<double> lambdas{10.0, 100.0, 1000.0};
    double rescale_t_probe = -1.0;

    // Harnack
    std::size_t harnack_K = 64;
    double harnack_eps0 = 1e-2;
    double harnack_t_end_fraction = 0.5;
};

struct ScenarioConfig {
    std::string name;
    std::uint64_t seed = 0;
    std::string output_dir;
    GeometrySpec geometry;
    CouplingSchedule schedule = CouplingSchedule::constant(1.0);
    IntegratorConfig integrator;
    AnalysisSpec analyses;
    std::string source;  ///< verbatim text the config was parsed from
};

/// Names accepted in `[analyses] run`.
const std::vector<std::string>& known_analyses();

/// Parses the sectioned key = value format:
///
///   # comment
///   name = coupled_sphere
///   [geometry]
///   kind = homogeneous
///   n = 2
///
/// Lists are comma separated; coupling samples are `t:alpha` pairs. Throws
/// ConfigError with every violation found, syntax errors carrying
/// line:column.
ScenarioConfig parse_config(const std::string& text);

ScenarioConfig load_config(const std::string& path);

/// Builds the initial state described by the geometry spec.
GeometryState initial_state(const GeometrySpec& g, double alpha0);

}  // namespace hrf
