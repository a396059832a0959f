#include "hrf/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>
#include <sstream>

#include "hrf/soliton.hpp"

namespace hrf {

namespace {

constexpr const char* kVersion = "hrflab 1.0.0";

namespace fs = std::filesystem;

bool wants(const RunResult& r, const std::string& name, const std::optional<std::string>& only) {
    if (only) return *only == name;
    const auto& run = r.config.analyses.run;
    return std::find(run.begin(), run.end(), name) != run.end();
}

template <class F>
void timed(RunResult& r, const std::string& stage, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const auto t1 = std::chrono::steady_clock::now();
    r.timings.emplace_back(stage, std::chrono::duration<double>(t1 - t0).count());
}

Json mask_json(const std::vector<std::uint8_t>& m) {
    Json a = Json::array();
    for (std::size_t j = 0; j < m.size(); ++j)
        if (m[j]) a.push_back(j);
    return a;
}

Json residual_json(const SolitonResidual& s) {
    return Json{{"metric", json_number(s.metric)}, {"map", json_number(s.map)}};
}

double require_T(const FlowTrajectory& traj, const char* what) {
    const auto T = traj.T_est();
    if (!T) throw DomainError(std::string(what) + " needs a singular time; the run did not blow up");
    return *T;
}

void analysis_singularity(RunResult& r) {
    const auto& A = r.config.analyses;
    SingularSetOptions o;
    o.bound_cap = A.bound_cap;
    o.c_threshold_fraction = A.c_threshold_fraction;
    o.c_s_fraction = A.c_s_fraction;
    o.persistence = A.persistence;
    require_T(*r.trajectory, "singularity analysis");
    r.singularity = analyze_singularity(*r.trajectory, o);
}

std::vector<double> volume_times(const RunResult& r, double span, double end) {
    const auto& A = r.config.analyses;
    std::vector<double> tb;
    for (std::size_t k = 0; k < A.volume_times; ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(A.volume_times - 1);
        const double tau = span * A.volume_tau_max * std::pow(A.volume_tau_min / A.volume_tau_max, f);
        tb.push_back(end - tau);
    }
    return tb;
}

void analysis_reduced_volume(RunResult& r) {
    const auto& A = r.config.analyses;
    const auto& traj = *r.trajectory;
    ReducedBase base;
    base.p = r.base;
    std::vector<double> tbs;
    if (A.volume_base == "singular") {
        const double T = require_T(traj, "singular-time reduced volume");
        base.singular = true;
        base.t0 = default_t_sequence(traj, A.t_sequence).back();
        tbs = volume_times(r, T, T);
    } else {
        const auto T = traj.T_est();
        const double hi = T ? *T : traj.window().second;
        base.t0 = A.volume_t0_fraction * hi;
        tbs = volume_times(r, base.t0, base.t0);
    }
    VolumeOptions vo;
    vo.radial_nodes = A.radial_nodes;
    vo.fiber_nodes = A.fiber_nodes;
    vo.x_stride = A.x_stride;
    vo.minimizer.nodes = A.minimizer_nodes;
    std::vector<std::pair<double, double>> series;
    double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
    for (const double tb : tbs) {
        r.volumes.push_back(reduced_volume(traj, base, tb, vo));
        series.emplace_back(tb, r.volumes.back().V);
        vmin = std::min(vmin, r.volumes.back().V);
        vmax = std::max(vmax, r.volumes.back().V);
    }
    r.monotonicity = monotonicity_monitor(series, A.monotonicity_tol);
    r.volume_variation = (vmax - vmin) / vmax;
}

void analysis_reduced_length(RunResult& r) {
    const auto& A = r.config.analyses;
    const auto& traj = *r.trajectory;
    const double T = require_T(traj, "singular-time reduced length");
    const auto seq = default_t_sequence(traj, A.t_sequence);
    const auto probes = default_probes(traj, r.base, T, A.probe_points, A.probe_times);
    MinimizerOptions mo;
    mo.nodes = A.minimizer_nodes;
    r.length = reduced_length_singular(traj, r.base, seq, probes, mo, true);
}

Json soliton_slice_report(const GeometryState& s, double t, const std::vector<double>& f, double T,
                          double alpha) {
    Json j;
    j["t"] = t;
    const double sigma = -1.0 / (2.0 * (T - t));
    j["canonical"] = residual_json(canonical_form_residual(s, t, f, T));
    SolitonSpec spec{s, f, sigma, alpha, SolitonKind::Shrinking, 0.0};
    const NormalizeResult nr = normalize(spec);
    j["normalization_k"] = json_number(nr.k);
    j["normalization_k_variation"] = json_number(nr.k_variation);
    j["trace_defect"] = json_number(nr.trace_defect);
    const RigidityReport rg = rigidity_check(nr.spec, true);
    j["sh_min"] = json_number(rg.sh_min);
    j["sh_lower_bound"] = rg.sh_lower_bound;
    j["equality_case"] = rg.equality_case;
    j["implication_holds"] = rg.implication_holds;
    j["elliptic_residual"] = json_number(rg.elliptic_residual);
    return j;
}

void analysis_soliton(RunResult& r) {
    const auto& traj = *r.trajectory;
    Json out;
    const auto T = traj.T_est();
    const GeometryState g0 = traj.states.front();
    out["class"] = std::holds_alternative<HomogeneousState>(g0) ? "homogeneous"
                   : std::holds_alternative<WarpedState>(g0)    ? "warped"
                                                                : "gaussian";
    if (std::holds_alternative<WarpedState>(g0)) {
        out["status"] = "not a self-similar class; see rescale.json for blow-up residuals";
        r.soliton = out;
        return;
    }
    if (!T) {
        // Static solution: steady soliton with constant potential.
        const auto pk = curvature(g0);
        SolitonSpec spec{g0, std::vector<double>(pk.size(), 0.0), 0.0, coupling_of(g0),
                         SolitonKind::Steady, 0.0};
        out["kind"] = "steady";
        out["steady"] = residual_json(soliton_residual(spec));
        r.soliton = out;
        return;
    }
    out["kind"] = "shrinking";
    out["T"] = *T;
    Json slices = Json::array();
    double worst = 0.0;
    const int n = dimension(g0);
    for (const double frac : {0.0, 0.25, 0.5, 0.75, 0.9}) {
        const double t = frac * *T;
        const GeometryState s = traj.state_at(t);
        std::vector<double> f;
        if (const auto* e = std::get_if<EuclideanState>(&s)) {
            for (std::size_t j = 0; j < e->J; ++j) f.push_back(e->r(j) * e->r(j) / (4.0 * (*T - t)));
        } else {
            f = {0.5 * n};
        }
        Json sj = soliton_slice_report(s, t, f, *T, coupling_of(s));
        worst = std::max({worst, sj["canonical"]["metric"].get<double>(),
                          sj["canonical"]["map"].get<double>()});
        // w-residual with l equal to the canonical potential.
        const double dt = 1e-3 * (*T - t);
        if (t - dt >= traj.window().first) {
            ScalarSlices l;
            l.times = {t - dt, t, t + dt};
            for (std::size_t k = 0; k < 3; ++k) {
                const GeometryState sk = traj.state_at(l.times[k]);
                if (const auto* e = std::get_if<EuclideanState>(&sk)) {
                    for (std::size_t j = 0; j < e->J; ++j)
                        l.values[k].push_back(e->r(j) * e->r(j) / (4.0 * (*T - l.times[k])));
                } else {
                    l.values[k].assign(64, 0.5 * n);
                }
            }
            const WResidual w = w_residual(traj, l, *T);
            sj["w_residual"] = json_number(w.defect);
            sj["w_lhs_sup"] = json_number(w.lhs_sup);
        }
        slices.push_back(sj);
    }
    out["slices"] = slices;
    out["max_canonical_residual"] = worst;
    r.soliton = out;
}

void analysis_rescale(RunResult& r) {
    const auto& A = r.config.analyses;
    require_T(*r.trajectory, "rescaling");
    r.rescaled.clear();
    for (const double lambda : A.lambdas) r.rescaled.push_back(rescale(r.trajectory, lambda, r.base));
    r.rescale = convergence_diagnostic(r.rescaled, A.rescale_t_probe);
}

void analysis_harnack(RunResult& r) {
    const auto& A = r.config.analyses;
    const auto& traj = *r.trajectory;
    const auto T = traj.T_est();
    const double hi = T ? *T : traj.window().second;
    HarnackOptions o;
    o.K_sph = A.harnack_K;
    o.eps0 = A.harnack_eps0;
    r.harnack = harnack_check(traj, r.base, A.harnack_t_end_fraction * hi, o);
}

bool trajectory_invariants(const FlowTrajectory& t, std::string& detail) {
    std::size_t bad = 0;
    for (const auto& d : t.distortion) bad += d.pass() ? 0 : 1;
    std::ostringstream s;
    if (bad) s << bad << " distortion records failed; ";
    if (!t.winding_preserved) s << "winding not preserved; ";
    if (t.sh_min_violations) s << t.sh_min_violations << " decreases of min Sh; ";
    detail = s.str();
    return detail.empty();
}

Json singularity_json(const SingularityReport& s, const FlowTrajectory& traj) {
    Json j;
    j["T_est"] = s.T_est;
    if (traj.fit) {
        j["fit"] = {{"residual", json_number(traj.fit->residual)},
                    {"points", traj.fit->points},
                    {"low_confidence", traj.fit->low_confidence}};
    }
    j["type_I"] = {{"C", json_number(s.type_I.typeI_C)},
                   {"typeA_r", json_number(s.type_I.typeA_r)},
                   {"typeA_C", json_number(s.type_I.typeA_C)},
                   {"is_type_I", s.type_I.is_type_I},
                   {"low_confidence", s.type_I.low_confidence},
                   {"fit_points", s.type_I.fit_points}};
    j["sets"] = {{"sigma", mask_json(s.sets.sigma)},
                 {"sigma_I", mask_json(s.sets.sigma_I)},
                 {"sigma_S", mask_json(s.sets.sigma_S)},
                 {"raw_I", mask_json(s.sets.raw_I)},
                 {"raw_S", mask_json(s.sets.raw_S)},
                 {"violations_I", s.sets.violations_I},
                 {"violations_S", s.sets.violations_S},
                 {"c_threshold", json_number(s.sets.c_threshold)},
                 {"c_S", json_number(s.sets.c_S)},
                 {"max_mask_distance", s.sets.max_mask_distance()}};
    Json rec = Json::array();
    for (const auto& b : s.sequences.records)
        rec.push_back({{"t", b.t}, {"index", b.index}, {"x", b.x}, {"rate", b.rate}, {"chain", b.chain}});
    j["blowup_sequences"] = {{"chains", s.sequences.chains},
                             {"records", rec},
                             {"limit_points", mask_json(s.sequences.limit_mask)}};
    Json pts = Json::array();
    for (std::size_t i = 0; i < s.nonoscillation.points.size(); ++i)
        pts.push_back({{"index", s.nonoscillation.points[i]},
                       {"inf_rate", json_number(s.nonoscillation.inf_rate[i])}});
    j["nonoscillation"] = {{"constant", json_number(s.nonoscillation.constant)},
                           {"points", pts},
                           {"flagged", s.nonoscillation.flagged}};
    j["singular_volume"] = {{"times", json_array(s.volume.times)},
                            {"volume", json_array(s.volume.volume)},
                            {"decreasing_final_decade", s.volume.decreasing_final_decade}};
    return j;
}

Json length_json(const SingularLengthReport& L) {
    Json j;
    j["t_sequence"] = json_array(L.t_seq);
    Json probes = Json::array();
    for (const auto& p : L.probes) probes.push_back({{"x", p.q.x}, {"psi", p.q.psi}, {"t_bar", p.t_bar}});
    j["probes"] = probes;
    Json l = Json::array();
    for (const auto& row : L.l) l.push_back(json_array(row));
    j["l"] = l;
    j["cauchy"] = json_array(L.cauchy);
    j["cauchy_decreasing"] = L.cauchy_decreasing;
    j["l_T"] = json_array(L.l_T);
    j["all_converged"] = L.all_converged;
    Json m = Json::array();
    for (const auto& mm : L.margins)
        m.push_back({{"x", mm.probe.q.x},
                     {"psi", mm.probe.q.psi},
                     {"t_bar", mm.probe.t_bar},
                     {"m1", json_number(mm.m1)},
                     {"m2", json_number(mm.m2)},
                     {"m3", json_number(mm.m3)}});
    j["margins"] = m;
    return j;
}

Json rescale_json(const RunResult& r) {
    Json j;
    const auto& d = *r.rescale;
    j["lambdas"] = json_array(d.lambdas);
    j["t_probe"] = r.config.analyses.rescale_t_probe;
    j["soliton_residual"] = json_array(d.soliton_residual);
    Json dist = Json::array();
    for (const auto& row : d.distance) dist.push_back(json_array(row));
    j["distance"] = dist;
    j["max_distance"] = json_number(d.max_distance);
    j["residual_nonincreasing"] = d.residual_nonincreasing;
    Json margins = Json::array();
    for (const auto& rt : r.rescaled) margins.push_back(json_number(rt.bound_margin));
    j["bound_margin"] = margins;
    return j;
}

Json harnack_json(const HarnackReport& h) {
    Json j;
    Json s = Json::array();
    for (const auto& x : h.slices)
        s.push_back({{"t", x.t}, {"max_v", json_number(x.max_v)}, {"max_u", json_number(x.max_u)}});
    j["slices"] = s;
    j["max_v_relative"] = json_number(h.max_v_relative);
    j["tail"] = json_number(h.tail);
    j["increase_K"] = h.increase_K;
    return j;
}

}  // namespace

std::shared_ptr<FlowTrajectory> simulate(const ScenarioConfig& cfg) {
    const auto& g = cfg.geometry;
    if (g.kind == GeometrySpec::Kind::Gaussian) {
        ExactParams p;
        p.n = g.n;
        p.T = g.T;
        p.r_max = g.r_max;
        p.J = g.J;
        auto traj = std::make_shared<FlowTrajectory>(construct_exact(ExactKind::Gaussian, p).trajectory);
        traj->provenance.config_hash = sha256_hex(cfg.source);
        return traj;
    }
    FlowConfig fc;
    fc.initial = initial_state(g, cfg.schedule.alpha(0.0));
    fc.schedule = cfg.schedule;
    fc.integrator = cfg.integrator;
    fc.config_hash = sha256_hex(cfg.source);
    return std::make_shared<FlowTrajectory>(run_flow(fc));
}

Point default_base_point(const FlowTrajectory& traj) {
    if (const auto* w = std::get_if<WarpedState>(&traj.states.back())) {
        const CurvaturePacket p = curvature_warped(*w, traj.w_floor);
        const auto it = std::max_element(p.rm_norm.begin(), p.rm_norm.end());
        return Point{w->x(static_cast<std::size_t>(it - p.rm_norm.begin())), 0.0};
    }
    return Point{0.0, 0.0};
}

void run_analyses(RunResult& r, const std::optional<std::string>& only) {
    if (only && std::find(known_analyses().begin(), known_analyses().end(), *only) ==
                    known_analyses().end())
        throw ConfigError({"unknown analysis '" + *only + "'"});
    r.outcomes.clear();
    r.base = default_base_point(*r.trajectory);
    {
        std::string detail;
        const bool ok = trajectory_invariants(*r.trajectory, detail);
        r.invariants_ok = ok;
        r.outcomes.push_back({"flow_monitors", ok ? "ok" : "failed-invariant", detail});
    }
    const std::vector<std::pair<std::string, void (*)(RunResult&)>> table{
        {"singularity", analysis_singularity}, {"reduced_volume", analysis_reduced_volume},
        {"reduced_length", analysis_reduced_length}, {"soliton", analysis_soliton},
        {"rescale", analysis_rescale}, {"harnack", analysis_harnack}};
    for (const auto& [name, fn] : table) {
        if (!wants(r, name, only)) continue;
        AnalysisOutcome o{name, "ok", ""};
        try {
            timed(r, name, [&] { fn(r); });
        } catch (const std::exception& e) {
            o.status = "error";
            o.detail = e.what();
        }
        if (o.status == "ok") {
            if (name == "reduced_volume" && r.monotonicity &&
                !(r.monotonicity->pass && r.monotonicity->bounded)) {
                o.status = "failed-invariant";
                o.detail = "reduced volume not monotone or above 1";
            }
            if (name == "harnack" && r.harnack &&
                (r.harnack->max_v_relative > 1e-3 || r.harnack->increase_K)) {
                o.status = "failed-invariant";
                o.detail = "Harnack quantity positive or truncation too coarse";
            }
        }
        if (o.status == "failed-invariant") r.invariants_ok = false;
        r.outcomes.push_back(std::move(o));
    }
}

void persist(RunResult& r) {
    const std::string dir = r.run_dir;
    ensure_directory(dir);
    auto path = [&](const std::string& f) { return (fs::path(dir) / f).string(); };
    r.files.clear();
    auto note = [&](const std::string& f) { r.files.push_back(f); };
    const auto& traj = *r.trajectory;

    write_text(path("config.cfg"), r.config.source);
    note("config.cfg");

    const bool homog = traj.is_class_homogeneous();
    std::vector<std::string> th{"t", "alpha", "sup_rm", "sh_min", "w_min", "sup_grad_phi_sq", "winding"};
    if (homog) th.push_back("c");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < traj.monitors.size(); ++i) {
        const auto& m = traj.monitors[i];
        std::vector<double> row{m.t, traj.schedule.alpha(m.t), m.sup_rm, m.sh_min, m.w_min,
                                m.sup_grad_phi_sq, static_cast<double>(m.winding)};
        if (homog) row.push_back(std::get<HomogeneousState>(traj.states[i]).c);
        rows.push_back(std::move(row));
    }
    write_csv(path("trajectory.csv"), th, rows);
    note("trajectory.csv");

    if (traj.is_class_warped()) {
        rows.clear();
        for (std::size_t i = 0; i < traj.states.size(); ++i) {
            const auto& w = std::get<WarpedState>(traj.states[i]);
            for (std::size_t j = 0; j < w.size(); ++j)
                rows.push_back({traj.times[i], w.x(j), w.a[j], w.w[j], w.phi[j]});
        }
        write_csv(path("snapshots.csv"), {"t", "x", "a", "w", "phi"}, rows);
        note("snapshots.csv");
    }

    rows.clear();
    for (const auto& d : traj.distortion)
        rows.push_back({d.t0, d.t1, d.d0, d.d1, d.ratio, d.lower_bound, d.upper_bound, d.rate,
                        d.rate_bound, d.pass() ? 1.0 : 0.0});
    write_csv(path("distortion.csv"),
              {"t0", "t1", "d0", "d1", "ratio", "lower_bound", "upper_bound", "rate", "rate_bound", "pass"},
              rows);
    note("distortion.csv");

    rows.clear();
    for (const auto& e : traj.residuals) rows.push_back({e.t, e.sh_residual, e.grad_phi_residual});
    write_csv(path("evolution_residuals.csv"), {"t", "sh_residual", "grad_phi_residual"}, rows);
    note("evolution_residuals.csv");

    if (r.singularity) {
        write_json(path("singularity_report.json"), singularity_json(*r.singularity, traj));
        note("singularity_report.json");
    }
    if (!r.volumes.empty()) {
        rows.clear();
        for (const auto& v : r.volumes) rows.push_back({v.t_bar, v.V, v.all_converged ? 1.0 : 0.0});
        write_csv(path("reduced_volume.csv"), {"t_bar", "V", "converged"}, rows);
        note("reduced_volume.csv");
        Json j;
        j["base"] = r.config.analyses.volume_base;
        j["variation"] = json_number(r.volume_variation);
        if (r.monotonicity)
            j["monotonicity"] = {{"pass", r.monotonicity->pass},
                                 {"bounded", r.monotonicity->bounded},
                                 {"worst_drop", json_number(r.monotonicity->worst_drop)},
                                 {"max_V", json_number(r.monotonicity->max_V)},
                                 {"tol", r.config.analyses.monotonicity_tol}};
        Json prof = Json::array();
        for (const auto& v : r.volumes)
            prof.push_back({{"t_bar", v.t_bar},
                            {"coordinate", json_array(v.coordinate)},
                            {"integrand", json_array(v.integrand)}});
        j["profiles"] = prof;
        write_json(path("reduced_volume.json"), j);
        note("reduced_volume.json");
    }
    if (r.length) {
        write_json(path("reduced_length.json"), length_json(*r.length));
        note("reduced_length.json");
    }
    if (!r.soliton.is_null()) {
        write_json(path("soliton_residuals.json"), r.soliton);
        note("soliton_residuals.json");
    }
    if (r.rescale) {
        write_json(path("rescale.json"), rescale_json(r));
        note("rescale.json");
    }
    if (r.harnack) {
        write_json(path("harnack.json"), harnack_json(*r.harnack));
        note("harnack.json");
    }

    Json m;
    m["name"] = r.config.name;
    m["version"] = kVersion;
    m["config_hash"] = sha256_hex(r.config.source);
    m["seed"] = r.config.seed;
    m["termination"] = to_string(traj.termination);
    m["steps"] = traj.provenance.steps;
    m["snapshots"] = traj.times.size();
    if (const auto T = traj.T_est()) m["T_est"] = *T;
    Json an = Json::array();
    for (const auto& o : r.outcomes) an.push_back({{"name", o.name}, {"status", o.status}, {"detail", o.detail}});
    m["analyses"] = an;
    m["invariants_ok"] = r.invariants_ok;
    m["outputs"] = r.files;
    write_json(path("manifest.json"), m);
    r.files.push_back("manifest.json");

    std::ostringstream log;
    log << kVersion << "\n";
    for (const auto& [stage, sec] : r.timings) log << stage << " " << sec << " s\n";
    write_text(path("run.log"), log.str());
}

RunResult run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    RunResult r;
    r.config = cfg;
    r.run_dir = out_dir.empty() ? cfg.output_dir : out_dir;
    ensure_directory(r.run_dir);
    timed(r, "simulate", [&] { r.trajectory = simulate(cfg); });
    run_analyses(r);
    persist(r);
    return r;
}

RunResult analyze_run_dir(const std::string& run_dir, const std::optional<std::string>& only) {
    const std::string cfg_path = (fs::path(run_dir) / "config.cfg").string();
    if (!fs::exists(cfg_path)) throw IoError("run directory has no config.cfg: " + run_dir);
    RunResult r;
    r.config = load_config(cfg_path);
    r.run_dir = run_dir;
    timed(r, "simulate", [&] { r.trajectory = simulate(r.config); });
    run_analyses(r, only);
    persist(r);
    return r;
}

std::vector<std::string> deterministic_outputs(const std::string& run_dir) {
    std::vector<std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(run_dir)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), run_dir).string();
        if (rel != "run.log") out.push_back(rel);
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::vector<double> column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return {};
        const auto k = static_cast<std::size_t>(it - header.begin());
        std::vector<double> c;
        for (const auto& r : rows) c.push_back(r[k]);
        return c;
    }
};

Table read_csv(const std::string& path) {
    std::istringstream in(read_text(path));
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV file: " + path);
    std::istringstream h(line);
    for (std::string c; std::getline(h, c, ',');) t.header.push_back(c);
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) row.push_back(std::strtod(c.c_str(), nullptr));
        if (row.size() == t.header.size()) t.rows.push_back(std::move(row));
    }
    return t;
}

void write_series(const std::string& path, const std::vector<double>& x, const std::vector<double>& y) {
    std::string s;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
        s += format_double(x[i]) + " " + format_double(y[i]) + "\n";
    write_text(path, s);
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

}  // namespace

std::string emit_report(const std::string& run_dir) {
    if (!fs::is_directory(run_dir) || fs::is_empty(run_dir))
        throw IoError("empty or missing run directory: " + run_dir);
    auto path = [&](const std::string& f) { return (fs::path(run_dir) / f).string(); };
    std::vector<std::string> missing;
    for (const char* f : {"manifest.json", "config.cfg", "trajectory.csv"})
        if (!fs::exists(path(f))) missing.emplace_back(f);
    if (missing.empty()) {
        const Json m = read_json(path("manifest.json"));
        for (const auto& f : m.value("outputs", Json::array()))
            if (!fs::exists(path(f.get<std::string>()))) missing.push_back(f.get<std::string>());
    }
    if (!missing.empty()) {
        std::string msg = "missing artifacts in " + run_dir + ":";
        for (const auto& f : missing) msg += " " + f;
        throw IoError(msg);
    }
    const Json m = read_json(path("manifest.json"));
    std::ostringstream s;
    s << "scenario: " << m.value("name", "") << "\n";
    s << "termination: " << m.value("termination", "") << " after " << m.value("steps", 0)
      << " steps, " << m.value("snapshots", 0) << " snapshots\n";
    if (m.contains("T_est")) s << "T_est: " << format_double(m["T_est"].get<double>()) << "\n";

    ensure_directory(path("series"));
    const Table tr = read_csv(path("trajectory.csv"));
    const auto t = tr.column("t");
    write_series(path("series/sup_rm.dat"), t, tr.column("sup_rm"));
    write_series(path("series/sh_min.dat"), t, tr.column("sh_min"));
    if (!tr.column("c").empty()) write_series(path("series/c.dat"), t, tr.column("c"));
    double sh_res = 0.0;
    if (fs::exists(path("evolution_residuals.csv"))) {
        const Table er = read_csv(path("evolution_residuals.csv"));
        for (double x : er.column("sh_residual")) sh_res = std::max(sh_res, std::abs(x));
        write_series(path("series/sh_residual.dat"), er.column("t"), er.column("sh_residual"));
    }
    s << "max Sh evolution residual: " << format_double(sh_res) << "\n";

    if (fs::exists(path("singularity_report.json"))) {
        const Json j = read_json(path("singularity_report.json"));
        s << "Type I constant: " << j["type_I"]["C"].dump() << " (exponent " << j["type_I"]["typeA_r"].dump()
          << ")\n";
        s << "singular sets: |Sigma| = " << j["sets"]["sigma"].size()
          << ", |Sigma_I| = " << j["sets"]["sigma_I"].size()
          << ", |Sigma_S| = " << j["sets"]["sigma_S"].size()
          << ", max mask distance = " << j["sets"]["max_mask_distance"].dump() << " cells\n";
        s << "nonoscillation constant: " << j["nonoscillation"]["constant"].dump() << "\n";
        std::vector<double> vt, vv;
        for (const auto& x : j["singular_volume"]["times"]) vt.push_back(x.is_null() ? NAN : x.get<double>());
        for (const auto& x : j["singular_volume"]["volume"]) vv.push_back(x.is_null() ? NAN : x.get<double>());
        write_series(path("series/singular_volume.dat"), vt, vv);
    }
    if (fs::exists(path("reduced_volume.json"))) {
        const Json j = read_json(path("reduced_volume.json"));
        const Table rv = read_csv(path("reduced_volume.csv"));
        write_series(path("series/reduced_volume.dat"), rv.column("t_bar"), rv.column("V"));
        const double var = j["variation"].is_null() ? INFINITY : j["variation"].get<double>();
        if (j.value("base", std::string()) == "singular")
            s << "reduced volume constant within 1.0e-3: " << verdict(var <= 1e-3) << " (variation "
              << format_double(var) << ")\n";
        else
            s << "reduced volume relative variation: " << format_double(var) << "\n";
        if (j.contains("monotonicity")) {
            const auto& mo = j["monotonicity"];
            s << "reduced volume non-decreasing and <= 1: "
              << verdict(mo["pass"].get<bool>() && mo["bounded"].get<bool>())
              << " (worst drop " << mo["worst_drop"].dump() << ", max V " << mo["max_V"].dump() << ")\n";
        }
    }
    if (fs::exists(path("reduced_length.json"))) {
        const Json j = read_json(path("reduced_length.json"));
        double m3 = 0.0;
        for (const auto& x : j["margins"]) m3 = std::max(m3, x["m3"].is_null() ? INFINITY : x["m3"].get<double>());
        s << "reduced length Cauchy trend decreasing: " << verdict(j["cauchy_decreasing"].get<bool>())
          << ", max equality defect " << format_double(m3) << "\n";
    }
    if (fs::exists(path("soliton_residuals.json"))) {
        const Json j = read_json(path("soliton_residuals.json"));
        if (j.contains("max_canonical_residual"))
            s << "max canonical-form residual: " << j["max_canonical_residual"].dump() << "\n";
    }
    if (fs::exists(path("rescale.json"))) {
        const Json j = read_json(path("rescale.json"));
        s << "rescaled residuals: " << j["soliton_residual"].dump() << ", max profile distance "
          << j["max_distance"].dump() << "\n";
    }
    if (fs::exists(path("harnack.json"))) {
        const Json j = read_json(path("harnack.json"));
        s << "Harnack max v / max u: " << j["max_v_relative"].dump()
          << (j["increase_K"].get<bool>() ? " (increase K)" : "") << "\n";
    }
    for (const auto& a : m["analyses"])
        s << "analysis " << a["name"].get<std::string>() << ": " << a["status"].get<std::string>()
          << (a["detail"].get<std::string>().empty() ? "" : " (" + a["detail"].get<std::string>() + ")")
          << "\n";
    s << "invariants: " << verdict(m.value("invariants_ok", false)) << "\n";
    write_text(path("summary.txt"), s.str());
    return s.str();
}

}  // namespace hrf
