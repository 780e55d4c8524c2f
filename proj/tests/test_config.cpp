#include <gtest/gtest.h>

#include <algorithm>

#include "simstack/config.hpp"

using namespace simstack;

namespace {

const char* kMinimalSweep = R"(
[experiment]
kind = layer-sweep
seed = 3
[medium]
provider = dipole
)";

std::vector<std::string> issues_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.issues();
    }
    return {};
}

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
    return std::any_of(issues.begin(), issues.end(),
                       [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Config, DefaultsForLayerSweep) {
    const auto cfg = parse_config(kMinimalSweep);
    EXPECT_EQ(cfg.kind, ExperimentKind::layer_sweep);
    EXPECT_EQ(cfg.name, "layer-sweep");
    EXPECT_EQ(cfg.layer_counts, (std::vector<int>{2, 3, 4, 6}));
    EXPECT_EQ(cfg.total_elements, 72);
    EXPECT_EQ(cfg.modes.size(), 3u);
    EXPECT_EQ(cfg.seed, 3u);
    EXPECT_DOUBLE_EQ(cfg.p_max, 2.0);
    EXPECT_DOUBLE_EQ(cfg.noise_psd, 1.0);
    EXPECT_EQ(cfg.optimizer.max_iters, 100);
    EXPECT_EQ(cfg.geometries().size(), 4u);
}

TEST(Config, ConvergenceCases) {
    const auto cfg = parse_config("[experiment]\nkind = convergence\n[geometry]\ncases = 2,3\n");
    ASSERT_EQ(cfg.cases.size(), 2u);
    EXPECT_DOUBLE_EQ(cfg.cases[0].l_x, 1.0 / 3);
    EXPECT_DOUBLE_EQ(cfg.cases[1].l_x, 1.0 / 3);
    EXPECT_DOUBLE_EQ(cfg.cases[1].l_y, 0.5);
    EXPECT_EQ(cfg.modes, (std::vector<RunMode>{RunMode::EE, RunMode::SE}));
    const auto g = cfg.geometry_for_case(cfg.cases[0]);
    EXPECT_EQ(g.elements(), 36);
    EXPECT_NEAR(g.l_z, g.wavelength / 3, 1e-15);
}

TEST(Config, StandardCases) {
    EXPECT_DOUBLE_EQ(standard_case(1).l_z, 0.5);
    EXPECT_DOUBLE_EQ(standard_case(2).l_y, 1.0 / 3);
    EXPECT_DOUBLE_EQ(standard_case(4).l_x, 0.5);
    EXPECT_DOUBLE_EQ(standard_case(4).l_z, 1.0 / 3);
    EXPECT_THROW(standard_case(5), std::invalid_argument);
}

TEST(Config, ReportsEveryProblemAtOnce) {
    const auto issues = issues_of(R"(
[experiment]
kind = custom
monte_carlo_runs = 0
[geometry]
n_y = 0
l_x = -1
[channel]
users = 0
power = greedy
[optimizer]
backtrack = 2
init = magic
)");
    EXPECT_GE(issues.size(), 7u);
    for (const char* key : {"monte_carlo_runs", "n_y", "l_x", "users", "power", "backtrack", "init"}) {
        EXPECT_TRUE(mentions(issues, key)) << key;
    }
}

TEST(Config, MissingKindIsAnError) {
    EXPECT_TRUE(mentions(issues_of("[channel]\nusers = 2\n"), "experiment.kind"));
    EXPECT_TRUE(mentions(issues_of("[experiment]\nkind = sweep\n"), "unknown kind"));
}

TEST(Config, UnknownAndMisplacedKeysAreRejected) {
    // cases belongs to convergence runs only.
    const auto issues = issues_of(std::string(kMinimalSweep) + "[geometry]\ncases = 1\ncolour = blue\n");
    EXPECT_TRUE(mentions(issues, "geometry.cases"));
    EXPECT_TRUE(mentions(issues, "geometry.colour"));
}

TEST(Config, MalformedNumbersAreRejected) {
    const auto issues = issues_of(std::string(kMinimalSweep) + "[channel]\np_max = two\nusers = 2.5\n");
    EXPECT_TRUE(mentions(issues, "channel.p_max"));
    EXPECT_TRUE(mentions(issues, "channel.users"));
}

TEST(Config, LayerSweepEnforcesSeventyTwoElements) {
    EXPECT_TRUE(mentions(issues_of(std::string(kMinimalSweep) + "[geometry]\ntotal_elements = 48\n"), "total_elements"));
    EXPECT_TRUE(mentions(issues_of(std::string(kMinimalSweep) + "[geometry]\nlayers = 2,5\n"), "L = 5"));
    const auto relaxed = parse_config(
        "[experiment]\nkind = layer-sweep\ncustom_overrides = true\n[geometry]\nlayers = 2\ntotal_elements = 48\n");
    EXPECT_EQ(relaxed.geometry_for_layers(2).elements(), 24);
    // Even with overrides each layer must tile a 6-wide grid.
    EXPECT_TRUE(mentions(
        issues_of(
            "[experiment]\nkind = layer-sweep\ncustom_overrides = true\n[geometry]\nlayers = 4\ntotal_elements = 36\n"),
        "multiple of 6 L"));
}

TEST(Config, ModesParsing) {
    EXPECT_EQ(parse_modes("SS,EE"), (std::vector<RunMode>{RunMode::SS, RunMode::EE}));
    EXPECT_EQ(parse_modes(" SE "), (std::vector<RunMode>{RunMode::SE}));
    EXPECT_THROW(parse_modes("EE,XX"), std::invalid_argument);
    EXPECT_THROW(parse_modes("EE,EE"), std::invalid_argument);
    EXPECT_THROW(parse_modes(""), std::invalid_argument);
}

TEST(Config, SyntaxErrorNamesTheLine) {
    const auto issues = issues_of("[experiment]\nkind = custom\n[geometry\n");
    ASSERT_EQ(issues.size(), 1u);
    EXPECT_TRUE(mentions(issues, "line 3"));
}

TEST(Config, RayleighSommerfeldPatchArea) {
    const auto cfg = parse_config(std::string("[experiment]\nkind = layer-sweep\n[medium]\nprovider = rs\npatch_area = 0.1\n"));
    EXPECT_EQ(cfg.medium, MediumKind::rayleigh_sommerfeld);
    EXPECT_NEAR(cfg.provider().patch_area, 0.1 * cfg.wavelength() * cfg.wavelength(), 1e-18);
    EXPECT_TRUE(mentions(issues_of("[experiment]\nkind = layer-sweep\n[medium]\nprovider = dipole\npatch_area = 1\n"), "medium.patch_area"));
}

TEST(ConfigHash, StableAndSensitive) {
    const auto a = parse_config(kMinimalSweep);
    const auto b = parse_config(kMinimalSweep);
    EXPECT_EQ(a.hash(), b.hash());
    EXPECT_EQ(a.hash().size(), 16u);
    auto c = a;
    c.seed = 4;
    EXPECT_NE(c.hash(), a.hash());
    auto d = a;
    d.optimizer.tol = 1e-7;
    EXPECT_NE(d.hash(), a.hash());
}

TEST(ConfigHash, IgnoresOutputLocation) {
    const auto a = parse_config(kMinimalSweep);
    const auto b = parse_config(std::string(kMinimalSweep) + "[output]\npath = elsewhere\nformat = json\n");
    EXPECT_EQ(a.hash(), b.hash());
}

TEST(ConfigEcho, RoundTripsThroughTheParser) {
    const auto cfg = parse_config(R"(
[experiment]
kind = custom
seed = 9
[geometry]
layers = 2
n_y = 2
n_z = 3
l_x = 0.3
[optimizer]
fd_step = 2e-5
)");
    std::string text;
    std::string section;
    for (const auto& [key, value] : cfg.echo()) {
        const auto dot = key.find('.');
        if (key.substr(0, dot) != section) {
            section = key.substr(0, dot);
            text += "[" + section + "]\n";
        }
        text += key.substr(dot + 1) + " = " + value + "\n";
    }
    EXPECT_EQ(parse_config(text).hash(), cfg.hash());
}

TEST(ConfigGeometry, DipoleOverlapIsReported) {
    const auto cfg = parse_config("[experiment]\nkind = custom\n[geometry]\nlayers = 2\nl_z = 0.2\n");
    EXPECT_THROW(validate_geometries(cfg), ConfigError);
    const auto ok = parse_config("[experiment]\nkind = custom\n[geometry]\nlayers = 2\n");
    EXPECT_NO_THROW(validate_geometries(ok));
}
