#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hrf/config.hpp"
#include "hrf/harnack.hpp"
#include "hrf/io.hpp"
#include "hrf/reduced.hpp"
#include "hrf/singularity.hpp"

namespace hrf {

struct AnalysisOutcome {
    std::string name;
    std::string status;  ///< "ok", "failed-invariant", "skipped" or "error"
    std::string detail;
};

struct RunResult {
    ScenarioConfig config;
    std::string run_dir;
    std::shared_ptr<FlowTrajectory> trajectory;
    Point base;  ///< base point used by the reduced-geometry and rescaling analyses

    std::optional<SingularityReport> singularity;
    std::vector<ReducedVolume> volumes;
    std::optional<MonotonicityVerdict> monotonicity;
    double volume_variation = 0.0;  ///< (max V - min V) / max V
    std::optional<SingularLengthReport> length;
    std::vector<RescaledTrajectory> rescaled;
    std::optional<ConvergenceDiagnostic> rescale;
    std::optional<HarnackReport> harnack;
    Json soliton;

    std::vector<AnalysisOutcome> outcomes;
    std::vector<std::string> files;  ///< outputs written, relative to run_dir
    std::vector<std::pair<std::string, double>> timings;  ///< seconds per stage, run.log only
    bool invariants_ok = true;
};

/// Integrates (or constructs, for the Gaussian) the scenario trajectory.
std::shared_ptr<FlowTrajectory> simulate(const ScenarioConfig& cfg);

/// Base point of the reduced-geometry analyses: the pole for isotropic
/// classes, the grid point of largest final |Rm| for warped runs.
Point default_base_point(const FlowTrajectory& traj);

/// Runs the requested analyses on a trajectory. `only` restricts to one
/// analysis name. Failures are recorded per analysis.
void run_analyses(RunResult& r, const std::optional<std::string>& only = std::nullopt);

/// simulate, analyze and persist. Writes into `out_dir` when non-empty,
/// else into the config's output_dir. Throws IoError on filesystem failure.
RunResult run_scenario(const ScenarioConfig& cfg, const std::string& out_dir = {});

/// Re-runs analyses for an existing run directory from its stored config.
RunResult analyze_run_dir(const std::string& run_dir,
                          const std::optional<std::string>& only = std::nullopt);

/// Writes every artifact of `r` into r.run_dir.
void persist(RunResult& r);

/// Output files compared by determinism checks (run.log excluded).
std::vector<std::string> deterministic_outputs(const std::string& run_dir);

/// One-page summary of a run directory; also writes summary.txt and
/// two-column series under series/. Throws IoError listing missing files.
std::string emit_report(const std::string& run_dir);

}  // namespace hrf
