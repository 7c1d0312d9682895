#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ratsim/scenario.hpp"

using namespace ratsim;

static const char* kRing = R"(
# a small knowledge-sharing experiment
name = "unit"

[topology]
ring = 5
ids = [10, 20, 30, 40, 50]

[problem]
protocol = "ks"
k = 4
pad_field = 2
prefs = [3, 0, 0, 0, 0]
inputs = [1, 2, 3, 0, 1]

[cheater]
position = 20
d = 6
strategy = "sybil"

[run]
seed = 99
enumerate = true
catalog_max_d = 3
)";

TEST_CASE("scenario files parse into the full experiment description") {
    Scenario s = parse_scenario(kRing);
    CHECK(s.name == "unit");
    CHECK(s.topology.size() == 5);
    CHECK(s.topology.has_edge(10, 20));
    CHECK(s.topology.has_edge(50, 10));
    CHECK(s.cfg.key == "ks");
    CHECK(s.cfg.k == 4);
    CHECK(s.cfg.pad_field == 2);
    CHECK(s.prefs.at(10) == 3);
    CHECK(s.inputs.at(30) == 3);
    REQUIRE(s.cheater.has_value());
    CHECK(s.cheater->position == 20);
    CHECK(s.cheater->d == 6);
    CHECK(s.cheater->strategy == "sybil");
    CHECK(s.seed == 99);
    CHECK(s.enumerate);
    CHECK(s.catalog_max_d == 3);
    // Config plumbing: scripted inputs and preferences resolve by id.
    CHECK(s.cfg.input_of(30) == 3);
    CHECK(scenario_pref_of(s)(10) == OutputValue(3));
    CHECK(scenario_pref_of(s)(20) == OutputValue(0));
}

TEST_CASE("general graphs come from node and edge lists") {
    Scenario s = parse_scenario(R"(
name = "graph"
[topology]
nodes = [1, 2, 3, 4]
edges = "1-2 2-3 3-4 4-1 1-3"
[problem]
protocol = "color-renaming"
k = 4
)");
    CHECK(s.topology.size() == 4);
    CHECK(s.topology.edges().size() == 5);
    CHECK(s.topology.has_edge(1, 3));
    CHECK(!s.topology.layout().has_value());
    // Coloring preference defaults to 1, not 0.
    CHECK(scenario_pref_of(s)(2) == OutputValue(1));
}

TEST_CASE("parse errors carry the offending line number") {
    auto check_line = [](const std::string& text, const std::string& needle) {
        try {
            parse_scenario(text);
            FAIL("expected a config error");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ConfigError);
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    check_line("name = \"x\"\n[topology]\nring = banana\n", ":3");
    check_line("name = \"x\"\nnot a key value line\n", ":2");
    check_line("name = \"x\"\n[problem]\nprotocol = \"ks\"\n", "topology");
}

TEST_CASE("scenario deviations resolve strategies by name") {
    Scenario s = parse_scenario(kRing);
    DeviationSpec dev = scenario_deviation(s);
    CHECK(dev.scheme.cheater == 20);
    CHECK(dev.scheme.virtual_ids.size() == 6);  // sybil: d = n + 1

    Scenario dup = s;
    dup.cheater->strategy = "dup";
    dup.cheater->d = 3;
    DeviationSpec dd = scenario_deviation(dup);
    CHECK(dd.scheme.virtual_ids.size() == 3);
    CHECK(!dd.factory);  // honest emulation of the duplicates

    Scenario fam = s;
    fam.cheater->strategy = "lie-input";
    DeviationSpec fd = scenario_deviation(fam);
    CHECK(fd.name == "lie-input@20");

    Scenario bad = s;
    bad.cheater->strategy = "no-such-strategy";
    CHECK_THROWS_AS(scenario_deviation(bad), Error);
}

TEST_CASE("missing scenario files are a config error") {
    CHECK_THROWS_AS(load_scenario("/nonexistent/path.toml"), Error);
}
