#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "hrf/config.hpp"
#include "hrf/io.hpp"
#include "hrf/scenario.hpp"

using namespace hrf;
namespace fs = std::filesystem;

namespace {

const std::string scenarios = HRF_SOURCE_DIR "/scenarios/";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hrf_cli_" + name);
    fs::remove_all(p);
    return p;
}

int hrflab(const std::string& args) {
    const std::string cmd = std::string(HRF_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_errors(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

std::string minimal(const std::string& geometry_extra = {}) {
    return "name = t\n[geometry]\nkind = homogeneous\nn = 2\n" + geometry_extra + "[coupling]\nalpha = 1\n";
}

}  // namespace

TEST(Config, ShippedScenariosParse) {
    for (const char* f : {"coupled_sphere", "round_sphere", "gaussian", "static_sphere", "neckpinch"}) {
        const auto c = load_config(scenarios + f + ".cfg");
        EXPECT_EQ(c.name, f);
    }
    const auto c = load_config(scenarios + "coupled_sphere.cfg");
    EXPECT_EQ(c.geometry.map, MapKind::IdentityEigenmap);
    EXPECT_DOUBLE_EQ(c.schedule.alpha(0.0), 0.5);
}

TEST(Config, NegativeScaleNamesTheKey) {
    EXPECT_NE(config_errors(minimal("c0 = -1\n")).find("geometry.c0"), std::string::npos);
}

TEST(Config, UnknownKeyIsReported) {
    EXPECT_NE(config_errors(minimal() + "foo = 1\n").find("unknown key 'coupling.foo'"), std::string::npos);
}

TEST(Config, SyntaxErrorsCarryLineAndColumn) {
    const auto e = config_errors("name = t\n[geometry]\n  kind homogeneous\n");
    EXPECT_NE(e.find("line 3, column 3"), std::string::npos) << e;
}

TEST(Config, EveryViolationIsListed) {
    try {
        parse_config("name = t\n[geometry]\nkind = homogeneous\nn = 2\nc0 = -1\n[analyses]\nharnack_K = 2\n");
        FAIL() << "expected a config error";
    } catch (const ConfigError& e) {
        EXPECT_GE(e.violations.size(), 2u);
        const std::string m = e.what();
        EXPECT_NE(m.find("geometry.c0"), std::string::npos);
        EXPECT_NE(m.find("analyses.harnack_K"), std::string::npos);
    }
}

TEST(Cli, SuccessfulRunExitsZeroAndHashesConfig) {
    const auto dir = scratch("ok");
    ASSERT_EQ(hrflab("simulate " + scenarios + "coupled_sphere.cfg --out " + dir.string()), 0);
    const Json m = read_json((dir / "manifest.json").string());
    EXPECT_EQ(m["config_hash"].get<std::string>(), sha256_hex(read_text((dir / "config.cfg").string())));
    EXPECT_TRUE(m["invariants_ok"].get<bool>());
    EXPECT_EQ(hrflab("report " + dir.string()), 0);
    EXPECT_EQ(hrflab("analyze " + dir.string() + " --only soliton"), 0);
    fs::remove_all(dir);
}

TEST(Cli, InvariantFailureExitsOne) {
    const auto dir = scratch("invariant");
    fs::create_directories(dir);
    write_text((dir / "coarse.cfg").string(), read_text(scenarios + "round_sphere.cfg") + "harnack_K = 4\n");
    EXPECT_EQ(hrflab("simulate " + (dir / "coarse.cfg").string() + " --out " + (dir / "run").string()), 1);
    fs::remove_all(dir);
}

TEST(Cli, UsageAndConfigErrorsExitTwo) {
    EXPECT_EQ(hrflab(""), 2);
    EXPECT_EQ(hrflab("simulate"), 2);
    EXPECT_EQ(hrflab("frobnicate"), 2);
    const auto dir = scratch("badcfg");
    fs::create_directories(dir);
    write_text((dir / "bad.cfg").string(), minimal("c0 = -1\n"));
    EXPECT_EQ(hrflab("simulate " + (dir / "bad.cfg").string() + " --out " + (dir / "run").string()), 2);
    fs::remove_all(dir);
}

TEST(Cli, UnwritableOutputExitsThree) {
    const auto dir = scratch("io");
    fs::create_directories(dir);
    write_text((dir / "file").string(), "x");
    // A regular file in the output path cannot become a directory, even for root.
    EXPECT_EQ(hrflab("simulate " + scenarios + "coupled_sphere.cfg --out " + (dir / "file" / "run").string()), 3);
    fs::remove_all(dir);
}

TEST(Cli, ReportOnMissingOrEmptyDirectoryExitsThree) {
    const auto dir = scratch("empty");
    EXPECT_EQ(hrflab("report " + dir.string()), 3);
    fs::create_directories(dir);
    EXPECT_EQ(hrflab("report " + dir.string()), 3);
    EXPECT_THROW(emit_report(dir.string()), IoError);
    fs::remove_all(dir);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
    const auto a = scratch("det_a"), b = scratch("det_b");
    ASSERT_EQ(hrflab("simulate " + scenarios + "round_sphere.cfg --out " + a.string()), 0);
    ASSERT_EQ(hrflab("simulate " + scenarios + "round_sphere.cfg --out " + b.string()), 0);
    const auto files = deterministic_outputs(a.string());
    ASSERT_EQ(files, deterministic_outputs(b.string()));
    for (const auto& f : files) EXPECT_EQ(read_text((a / f).string()), read_text((b / f).string())) << f;
    fs::remove_all(a);
    fs::remove_all(b);
}
