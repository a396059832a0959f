#include "hrf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace hrf {

double ProfileSpec::operator()(double x) const {
    double f = mean;
    for (std::size_t k = 0; k < cos_coeffs.size(); ++k)
        f += cos_coeffs[k] * std::cos(static_cast<double>(k + 1) * x);
    for (std::size_t k = 0; k < sin_coeffs.size(); ++k)
        f += sin_coeffs[k] * std::sin(static_cast<double>(k + 1) * x);
    return f;
}

const std::vector<std::string>& known_analyses() {
    static const std::vector<std::string> names{"singularity", "reduced_volume", "reduced_length",
                                                "soliton", "rescale", "harnack"};
    return names;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<long long> to_int(const std::string& s) {
    long long v = 0;
    const char* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) return std::nullopt;
    return v;
}

using Setter = std::function<std::optional<std::string>(const std::string&)>;

Setter real(double& dst) {
    return [&dst](const std::string& v) -> std::optional<std::string> {
        const auto d = to_double(v);
        if (!d) return "expected a number, got '" + v + "'";
        dst = *d;
        return std::nullopt;
    };
}

template <class I>
Setter integer(I& dst, long long lo) {
    return [&dst, lo](const std::string& v) -> std::optional<std::string> {
        const auto d = to_int(v);
        if (!d) return "expected an integer, got '" + v + "'";
        if (*d < lo) return "must be >= " + std::to_string(lo) + " (got " + v + ")";
        dst = static_cast<I>(*d);
        return std::nullopt;
    };
}

Setter real_list(std::vector<double>& dst) {
    return [&dst](const std::string& v) -> std::optional<std::string> {
        dst.clear();
        if (v.empty()) return std::nullopt;
        for (const auto& item : split(v, ',')) {
            const auto d = to_double(item);
            if (!d) return "expected a comma-separated list of numbers, got '" + item + "'";
            dst.push_back(*d);
        }
        return std::nullopt;
    };
}

Setter word_list(std::vector<std::string>& dst) {
    return [&dst](const std::string& v) -> std::optional<std::string> {
        dst.clear();
        if (v.empty()) return std::nullopt;
        for (const auto& item : split(v, ',')) {
            if (item.empty()) return "empty list entry";
            dst.push_back(item);
        }
        return std::nullopt;
    };
}

Setter word(std::string& dst) {
    return [&dst](const std::string& v) -> std::optional<std::string> {
        if (v.empty()) return "expected a value";
        dst = v;
        return std::nullopt;
    };
}

template <class E>
Setter choice(E& dst, std::vector<std::pair<std::string, E>> options) {
    return [&dst, options](const std::string& v) -> std::optional<std::string> {
        std::string allowed;
        for (const auto& [name, e] : options) {
            if (name == v) {
                dst = e;
                return std::nullopt;
            }
            allowed += (allowed.empty() ? "" : ", ") + name;
        }
        return "expected one of {" + allowed + "}, got '" + v + "'";
    };
}

struct Schema {
    std::map<std::string, Setter> setters;  // "section.key", top level uses ".key"
};

Schema make_schema(ScenarioConfig& c, double& alpha, std::vector<double>& samples_flat,
                   std::string& samples_text) {
    Schema s;
    auto& g = c.geometry;
    auto& I = c.integrator;
    auto& A = c.analyses;
    s.setters[".name"] = word(c.name);
    s.setters[".seed"] = integer(c.seed, 0);
    s.setters[".output_dir"] = word(c.output_dir);
    s.setters["geometry.kind"] = choice(g.kind, {{"homogeneous", GeometrySpec::Kind::Homogeneous},
                                                 {"warped", GeometrySpec::Kind::Warped},
                                                 {"gaussian", GeometrySpec::Kind::Gaussian}});
    s.setters["geometry.n"] = integer(g.n, 1);
    s.setters["geometry.c0"] = real(g.c0);
    s.setters["geometry.map"] = choice(g.map, {{"constant", MapKind::ConstantMap},
                                               {"identity", MapKind::IdentityEigenmap}});
    s.setters["geometry.J"] = integer(g.J, 1);
    s.setters["geometry.a_mean"] = real(g.a.mean);
    s.setters["geometry.a_cos"] = real_list(g.a.cos_coeffs);
    s.setters["geometry.a_sin"] = real_list(g.a.sin_coeffs);
    s.setters["geometry.w_mean"] = real(g.w.mean);
    s.setters["geometry.w_cos"] = real_list(g.w.cos_coeffs);
    s.setters["geometry.w_sin"] = real_list(g.w.sin_coeffs);
    s.setters["geometry.phi_cos"] = real_list(g.phi.cos_coeffs);
    s.setters["geometry.phi_sin"] = real_list(g.phi.sin_coeffs);
    s.setters["geometry.winding"] = [&g](const std::string& v) -> std::optional<std::string> {
        const auto d = to_int(v);
        if (!d) return "expected an integer, got '" + v + "'";
        g.winding = static_cast<int>(*d);
        return std::nullopt;
    };
    s.setters["geometry.T"] = real(g.T);
    s.setters["geometry.r_max"] = real(g.r_max);
    s.setters["coupling.alpha"] = real(alpha);
    s.setters["coupling.samples"] = [&samples_flat, &samples_text](const std::string& v)
        -> std::optional<std::string> {
        samples_flat.clear();
        samples_text = v;
        for (const auto& item : split(v, ',')) {
            const auto parts = split(item, ':');
            if (parts.size() != 2) return "expected t:alpha pairs, got '" + item + "'";
            const auto t = to_double(parts[0]), a = to_double(parts[1]);
            if (!t || !a) return "expected t:alpha pairs, got '" + item + "'";
            samples_flat.push_back(*t);
            samples_flat.push_back(*a);
        }
        return std::nullopt;
    };
    s.setters["integrator.dt0"] = real(I.dt0);
    s.setters["integrator.t_max"] = real(I.t_max);
    s.setters["integrator.cfl"] = real(I.cfl);
    s.setters["integrator.rm_dt"] = real(I.rm_dt);
    s.setters["integrator.homogeneous_cap"] = real(I.homogeneous_cap);
    s.setters["integrator.snapshot_dt"] = real(I.snapshot_dt);
    s.setters["integrator.snapshot_growth"] = real(I.snapshot_growth);
    s.setters["integrator.blowup_cap"] = real(I.blowup_cap);
    s.setters["integrator.w_floor"] = real(I.w_floor);
    s.setters["integrator.max_steps"] = integer(I.max_steps, 1);
    s.setters["analyses.run"] = word_list(A.run);
    s.setters["analyses.bound_cap"] = real(A.bound_cap);
    s.setters["analyses.c_threshold_fraction"] = real(A.c_threshold_fraction);
    s.setters["analyses.c_s_fraction"] = real(A.c_s_fraction);
    s.setters["analyses.persistence"] = integer(A.persistence, 1);
    s.setters["analyses.volume_base"] = word(A.volume_base);
    s.setters["analyses.volume_t0_fraction"] = real(A.volume_t0_fraction);
    s.setters["analyses.volume_times"] = integer(A.volume_times, 3);
    s.setters["analyses.volume_tau_max"] = real(A.volume_tau_max);
    s.setters["analyses.volume_tau_min"] = real(A.volume_tau_min);
    s.setters["analyses.monotonicity_tol"] = real(A.monotonicity_tol);
    s.setters["analyses.probe_points"] = integer(A.probe_points, 1);
    s.setters["analyses.probe_times"] = integer(A.probe_times, 2);
    s.setters["analyses.t_sequence"] = integer(A.t_sequence, 2);
    s.setters["analyses.minimizer_nodes"] = integer(A.minimizer_nodes, 2);
    s.setters["analyses.radial_nodes"] = integer(A.radial_nodes, 2);
    s.setters["analyses.fiber_nodes"] = integer(A.fiber_nodes, 2);
    s.setters["analyses.x_stride"] = integer(A.x_stride, 1);
    s.setters["analyses.lambdas"] = real_list(A.lambdas);
    s.setters["analyses.rescale_t_probe"] = real(A.rescale_t_probe);
    s.setters["analyses.harnack_K"] = integer(A.harnack_K, 0);
    s.setters["analyses.harnack_eps0"] = real(A.harnack_eps0);
    s.setters["analyses.harnack_t_end_fraction"] = real(A.harnack_t_end_fraction);
    return s;
}

bool valid_key(const std::string& k) {
    return !k.empty() && std::all_of(k.begin(), k.end(), [](char ch) {
        return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
               ch == '_';
    });
}

std::string loc(std::size_t line, std::size_t col) {
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

void check_semantics(const ScenarioConfig& c, std::vector<std::string>& out) {
    auto need = [&out](bool ok, const std::string& key, const std::string& what) {
        if (!ok) out.push_back(key + ": " + what);
    };
    const auto& g = c.geometry;
    need(!c.name.empty(), "name", "required");
    switch (g.kind) {
    case GeometrySpec::Kind::Homogeneous:
        need(g.n >= 2, "geometry.n", "homogeneous geometry needs n >= 2");
        need(g.c0 > 0.0, "geometry.c0", "must be > 0 (got " + std::to_string(g.c0) + ")");
        break;
    case GeometrySpec::Kind::Warped: {
        need(g.n >= 3, "geometry.n", "warped geometry needs n >= 3");
        need(g.J >= 16, "geometry.J", "must be >= 16");
        if (g.J >= 16) {
            double amin = 1e300, wmin = 1e300;
            for (std::size_t j = 0; j < g.J; ++j) {
                const double x = two_pi * static_cast<double>(j) / static_cast<double>(g.J);
                amin = std::min(amin, g.a(x));
                wmin = std::min(wmin, g.w(x));
            }
            need(amin > 0.0, "geometry.a_mean", "profile a must be positive on the grid");
            need(wmin > 0.0, "geometry.w_mean", "profile w must be positive on the grid");
        }
        break;
    }
    case GeometrySpec::Kind::Gaussian:
        need(g.n >= 1, "geometry.n", "must be >= 1");
        need(g.T > 0.0, "geometry.T", "must be > 0");
        need(g.r_max > 0.0, "geometry.r_max", "must be > 0");
        need(g.J >= 16, "geometry.J", "must be >= 16");
        break;
    }
    try {
        c.schedule.validate();
    } catch (const DomainError& e) {
        out.push_back(std::string("coupling: ") + e.what());
    }
    const auto& I = c.integrator;
    need(I.dt0 > 0.0, "integrator.dt0", "must be > 0");
    need(I.t_max > 0.0, "integrator.t_max", "must be > 0");
    need(I.cfl > 0.0 && I.cfl <= 1.0, "integrator.cfl", "must lie in (0, 1]");
    need(I.rm_dt > 0.0, "integrator.rm_dt", "must be > 0");
    need(I.homogeneous_cap > 0.0, "integrator.homogeneous_cap", "must be > 0");
    need(I.snapshot_dt > 0.0, "integrator.snapshot_dt", "must be > 0");
    need(I.snapshot_growth > 1.0, "integrator.snapshot_growth", "must be > 1");
    need(I.blowup_cap > 1.0, "integrator.blowup_cap", "must be > 1");
    need(I.w_floor > 0.0, "integrator.w_floor", "must be > 0");
    const auto& A = c.analyses;
    for (const auto& r : A.run)
        need(std::find(known_analyses().begin(), known_analyses().end(), r) != known_analyses().end(),
             "analyses.run", "unknown analysis '" + r + "'");
    need(A.bound_cap > 1.0, "analyses.bound_cap", "must be > 1");
    need(A.c_threshold_fraction > 0.0 && A.c_threshold_fraction <= 1.0,
         "analyses.c_threshold_fraction", "must lie in (0, 1]");
    need(A.c_s_fraction > 0.0 && A.c_s_fraction <= 1.0, "analyses.c_s_fraction",
         "must lie in (0, 1]");
    need(A.volume_base == "singular" || A.volume_base == "regular", "analyses.volume_base",
         "expected singular or regular");
    need(A.volume_t0_fraction > 0.0 && A.volume_t0_fraction < 1.0, "analyses.volume_t0_fraction",
         "must lie in (0, 1)");
    need(A.volume_tau_min > 0.0 && A.volume_tau_min < A.volume_tau_max && A.volume_tau_max < 1.0,
         "analyses.volume_tau_min", "need 0 < volume_tau_min < volume_tau_max < 1");
    need(A.monotonicity_tol > 0.0, "analyses.monotonicity_tol", "must be > 0");
    for (double l : A.lambdas) need(l > 1.0, "analyses.lambdas", "every lambda must be > 1");
    need(A.rescale_t_probe < 0.0, "analyses.rescale_t_probe", "must be < 0");
    need(A.harnack_K >= 4, "analyses.harnack_K", "must be >= 4");
    need(A.harnack_eps0 > 0.0, "analyses.harnack_eps0", "must be > 0");
    need(A.harnack_t_end_fraction > 0.0 && A.harnack_t_end_fraction < 1.0,
         "analyses.harnack_t_end_fraction", "must lie in (0, 1)");
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    ScenarioConfig c;
    c.source = text;
    double alpha = 1.0;
    std::vector<double> samples;
    std::string samples_text;
    Schema schema = make_schema(c, alpha, samples, samples_text);
    std::vector<std::string> errors;
    std::set<std::string> seen;
    const std::set<std::string> sections{"geometry", "coupling", "integrator", "analyses"};
    std::string section;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        if (trim(line).empty()) continue;
        const std::size_t col = line.find_first_not_of(" \t") + 1;
        const std::string t = trim(line);
        if (t.front() == '[') {
            if (t.back() != ']') {
                errors.push_back(loc(lineno, col + t.size()) + ": expected ']' to close the section");
                continue;
            }
            section = trim(t.substr(1, t.size() - 2));
            if (!sections.count(section)) {
                errors.push_back(loc(lineno, col + 1) + ": unknown section [" + section + "]");
                section = "?";
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back(loc(lineno, col) + ": expected 'key = value'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!valid_key(key)) {
            errors.push_back(loc(lineno, col) + ": invalid key '" + key + "'");
            continue;
        }
        if (section == "?") continue;
        const std::string full = section + "." + key;
        const std::string shown = section.empty() ? key : full;
        const auto it = schema.setters.find(full);
        if (it == schema.setters.end()) {
            errors.push_back(loc(lineno, col) + ": unknown key '" + shown + "'");
            continue;
        }
        if (!seen.insert(full).second) {
            errors.push_back(loc(lineno, col) + ": duplicate key '" + shown + "'");
            continue;
        }
        if (auto err = it->second(value)) {
            const std::size_t vcol = eq + 1 + (raw.substr(eq + 1).find_first_not_of(" \t")) + 1;
            errors.push_back(loc(lineno, vcol) + ": " + shown + ": " + *err);
        }
    }
    if (!seen.count("geometry.kind")) errors.push_back("geometry.kind: required");
    if (seen.count("coupling.samples") && seen.count("coupling.alpha"))
        errors.push_back("coupling: give either alpha or samples, not both");
    if (seen.count("coupling.samples")) {
        std::vector<std::pair<double, double>> s;
        for (std::size_t i = 0; i + 1 < samples.size(); i += 2) s.emplace_back(samples[i], samples[i + 1]);
        if (s.empty()) {
            errors.push_back("coupling.samples: at least one sample required");
        } else {
            c.schedule.kind = CouplingSchedule::Kind::PiecewiseLinear;
            c.schedule.samples = std::move(s);
            c.schedule.alpha_min = 1e300;
            c.schedule.alpha_max = -1e300;
            for (const auto& [t, a] : c.schedule.samples) {
                c.schedule.alpha_min = std::min(c.schedule.alpha_min, a);
                c.schedule.alpha_max = std::max(c.schedule.alpha_max, a);
            }
        }
    } else {
        c.schedule = CouplingSchedule{CouplingSchedule::Kind::Constant, {{0.0, alpha}}, alpha, alpha};
    }
    if (errors.empty()) check_semantics(c, errors);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    if (c.output_dir.empty()) c.output_dir = "runs/" + c.name;
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

GeometryState initial_state(const GeometrySpec& g, double alpha0) {
    switch (g.kind) {
    case GeometrySpec::Kind::Homogeneous:
        return HomogeneousState{g.n, g.c0, g.map, alpha0};
    case GeometrySpec::Kind::Warped: {
        WarpedState w;
        w.n = g.n;
        w.winding = g.winding;
        w.alpha = alpha0;
        w.a.resize(g.J);
        w.w.resize(g.J);
        w.phi.resize(g.J);
        for (std::size_t j = 0; j < g.J; ++j) {
            const double x = two_pi * static_cast<double>(j) / static_cast<double>(g.J);
            w.a[j] = g.a(x);
            w.w[j] = g.w(x);
            w.phi[j] = g.winding * x + g.phi(x);
        }
        return w;
    }
    case GeometrySpec::Kind::Gaussian:
        return EuclideanState{g.n, g.r_max, g.J};
    }
    throw DomainError("unknown geometry kind");
}

}  // namespace hrf
