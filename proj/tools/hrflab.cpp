// hrflab: scenario runner and analysis front end.
//
// Exit codes: 0 success, 1 invariant failure, 2 usage or configuration
// error, 3 filesystem error.

#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hrf/scenario.hpp"
#include "hrf/soliton.hpp"

namespace {

using namespace hrf;

int cmd_simulate(const std::string& cfg_path, const std::string& out) {
    const ScenarioConfig cfg = load_config(cfg_path);
    const RunResult r = run_scenario(cfg, out);
    std::cout << "run directory: " << r.run_dir << "\n";
    for (const auto& o : r.outcomes)
        std::cout << "  " << o.name << ": " << o.status << (o.detail.empty() ? "" : " (" + o.detail + ")")
                  << "\n";
    return r.invariants_ok ? 0 : 1;
}

int cmd_analyze(const std::string& dir, const std::string& only) {
    const RunResult r =
        analyze_run_dir(dir, only.empty() ? std::nullopt : std::optional<std::string>(only));
    for (const auto& o : r.outcomes)
        std::cout << o.name << ": " << o.status << (o.detail.empty() ? "" : " (" + o.detail + ")") << "\n";
    return r.invariants_ok ? 0 : 1;
}

// --base "x,t0" or "x,T"
int cmd_reduce(const std::string& dir, const std::string& base_arg, std::size_t times) {
    const auto comma = base_arg.find(',');
    if (comma == std::string::npos) throw DomainError("--base expects <x,t0> or <x,T>");
    ReducedBase base;
    base.p.x = std::stod(base_arg.substr(0, comma));
    const std::string tpart = base_arg.substr(comma + 1);
    RunResult r;
    r.config = load_config(dir + "/config.cfg");
    r.run_dir = dir;
    r.trajectory = simulate(r.config);
    const auto& traj = *r.trajectory;
    double span;
    if (tpart == "T") {
        const auto T = traj.T_est();
        if (!T) throw DomainError("--base x,T needs a run with a singular time");
        base.singular = true;
        base.t0 = default_t_sequence(traj, r.config.analyses.t_sequence).back();
        span = *T;
    } else {
        base.t0 = std::stod(tpart);
        span = base.t0;
    }
    const auto& A = r.config.analyses;
    VolumeOptions vo;
    vo.radial_nodes = A.radial_nodes;
    vo.fiber_nodes = A.fiber_nodes;
    vo.x_stride = A.x_stride;
    vo.minimizer.nodes = A.minimizer_nodes;
    Json out = Json::array();
    std::vector<std::pair<double, double>> series;
    for (std::size_t k = 0; k < times; ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(times - 1);
        const double tau = span * A.volume_tau_max * std::pow(A.volume_tau_min / A.volume_tau_max, f);
        const double tb = span - tau;
        const ReducedVolume v = reduced_volume(traj, base, tb, vo);
        series.emplace_back(tb, v.V);
        out.push_back({{"t_bar", tb}, {"V", json_number(v.V)}, {"converged", v.all_converged}});
        std::cout << "t_bar " << format_double(tb) << "  V " << format_double(v.V) << "\n";
    }
    const MonotonicityVerdict m = monotonicity_monitor(series, A.monotonicity_tol);
    write_json(dir + "/reduce.json", Json{{"base_x", base.p.x}, {"base", tpart}, {"series", out},
                                          {"monotone", m.pass}, {"bounded", m.bounded}});
    std::cout << "monotone: " << (m.pass ? "PASS" : "FAIL") << ", bounded: " << (m.bounded ? "PASS" : "FAIL")
              << "\n";
    return m.pass && m.bounded ? 0 : 1;
}

int cmd_soliton_check(const std::string& spec, int n, double alpha, double t) {
    SolitonResidual res;
    std::string what;
    if (spec == "noncanonical") {
        const SolitonSpec s = noncanonical_fixture(t);
        res = canonical_form_residual(s.state, t, s.f, 1.0);
        what = "non-canonical fixture against T = 1";
    } else {
        ExactKind kind;
        if (spec == "round_sphere") kind = ExactKind::RoundSphere;
        else if (spec == "coupled_sphere") kind = ExactKind::CoupledSphere;
        else if (spec == "gaussian") kind = ExactKind::Gaussian;
        else throw DomainError("unknown soliton spec '" + spec + "'");
        ExactParams p;
        p.n = n;
        p.alpha = alpha;
        const ExactSolution e = construct_exact(kind, p);
        res = canonical_form_residual(e.trajectory.state_at(t), t, e.spec.f, e.T);
        if (kind == ExactKind::Gaussian) {
            const auto& g = std::get<EuclideanState>(e.spec.state);
            std::vector<double> f(g.J);
            for (std::size_t j = 0; j < g.J; ++j) f[j] = g.r(j) * g.r(j) / (4.0 * (e.T - t));
            res = canonical_form_residual(e.trajectory.state_at(t), t, f, e.T);
        }
        what = spec;
    }
    const bool ok = res.metric <= 1e-8 && res.map <= 1e-8;
    std::cout << what << ": metric residual " << format_double(res.metric) << ", map residual "
              << format_double(res.map) << " -> " << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? 0 : 1;
}

int cmd_rescale(const std::string& dir, const std::vector<double>& lambdas) {
    RunResult r;
    r.config = load_config(dir + "/config.cfg");
    r.run_dir = dir;
    r.trajectory = simulate(r.config);
    const Point p = default_base_point(*r.trajectory);
    std::vector<RescaledTrajectory> list;
    for (double l : lambdas) list.push_back(rescale(r.trajectory, l, p));
    const ConvergenceDiagnostic d = convergence_diagnostic(list, r.config.analyses.rescale_t_probe);
    Json dist = Json::array();
    for (const auto& row : d.distance) dist.push_back(json_array(row));
    write_json(dir + "/rescale_cli.json", Json{{"lambdas", json_array(d.lambdas)},
                                              {"soliton_residual", json_array(d.soliton_residual)},
                                              {"distance", dist},
                                              {"residual_nonincreasing", d.residual_nonincreasing}});
    for (std::size_t i = 0; i < d.lambdas.size(); ++i)
        std::cout << "lambda " << format_double(d.lambdas[i]) << "  residual "
                  << format_double(d.soliton_residual[i]) << "\n";
    std::cout << "max profile distance " << format_double(d.max_distance) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for harmonic Ricci flow on symmetry-reduced geometries"};
    app.require_subcommand(1);

    std::string cfg, out, dir, only, base, spec;
    std::vector<double> lambdas;
    std::size_t times = 6;
    int n = 2;
    double alpha = 0.5, t = 0.25;

    auto* sim = app.add_subcommand("simulate", "Run a scenario and persist its run directory");
    sim->add_option("config", cfg, "Scenario config file")->required();
    sim->add_option("--out", out, "Output directory (overrides output_dir)");

    auto* ana = app.add_subcommand("analyze", "Re-run analyses for a run directory");
    ana->add_option("run_dir", dir)->required();
    ana->add_option("--only", only, "Single analysis to run");

    auto* red = app.add_subcommand("reduce", "Reduced volume series at a base point");
    red->add_option("run_dir", dir)->required();
    red->add_option("--base", base, "Base as <x,t0> or <x,T>")->required();
    red->add_option("--times", times, "Number of t_bar samples")->check(CLI::Range(3, 64));

    auto* sol = app.add_subcommand("soliton-check", "Canonical-form residual of a soliton fixture");
    sol->add_option("spec", spec, "round_sphere | coupled_sphere | gaussian | noncanonical")->required();
    sol->add_option("--n", n)->check(CLI::Range(1, 16));
    sol->add_option("--alpha", alpha);
    sol->add_option("--t", t, "Slice time");

    auto* res = app.add_subcommand("rescale", "Blow-up rescaling diagnostics");
    res->add_option("run_dir", dir)->required();
    res->add_option("--lambda", lambdas, "Scale factors")->required()->delimiter(',');

    auto* rep = app.add_subcommand("report", "Summarize a run directory");
    rep->add_option("run_dir", dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*sim) return cmd_simulate(cfg, out);
        if (*ana) return cmd_analyze(dir, only);
        if (*red) return cmd_reduce(dir, base, times);
        if (*sol) return cmd_soliton_check(spec, n, alpha, t);
        if (*res) return cmd_rescale(dir, lambdas);
        if (*rep) {
            std::cout << emit_report(dir);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: malformed number: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
