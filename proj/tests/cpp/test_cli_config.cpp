#include <doctest.h>

#include <CLI11.hpp>

#include "dualsr/errors.hpp"
#include "run_config.hpp"

using namespace dualsr;
using dualsr::cli::RunConfig;

TEST_SUITE("cli_config") {
  TEST_CASE("fnv1a known answers") {
    CHECK(cli::fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(cli::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(cli::fnv1a("foobar") == 0x85944171f73967e8ULL);
  }

  TEST_CASE("defaults round trip and hash") {
    const RunConfig d;
    CHECK_NOTHROW(d.validate());
    const RunConfig back = RunConfig::from_json(d.to_json());
    CHECK(back.to_json() == d.to_json());
    const std::string h = cli::config_hash(d);
    CHECK(h.size() == 16);
    CHECK(h == cli::config_hash(back));
    RunConfig other = d;
    other.sigma = 0.1;
    CHECK(cli::config_hash(other) != h);
  }

  TEST_CASE("unknown keys and bad values") {
    CHECK_THROWS_WITH_AS(RunConfig::from_json(nlohmann::json{{"sigmaa", 0.1}}),
                         "sigmaa: unknown config key", InvalidArgument);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"k", -1}}), InvalidArgument);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json{{"refinement", 1}}), InvalidArgument);
    CHECK_THROWS_AS(RunConfig::from_json(nlohmann::json::array()), InvalidArgument);
    const RunConfig p = RunConfig::from_json(nlohmann::json{{"sigma", 0.2}, {"fractions", {0.1, 0.3}}});
    CHECK(p.sigma == 0.2);
    CHECK(p.fractions == std::vector<double>{0.1, 0.3});
    CHECK(p.m == 30);

    RunConfig bad;
    bad.sampling = "grid";
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = {};
    bad.locations = {0.5};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = {};
    bad.neumann_ratio = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  }

  TEST_CASE("flags override only what was passed") {
    CLI::App app;
    RunConfig flags;
    cli::FlagSet set;
    set.bind(app, flags);
    app.parse("--sigma 0.3 --fraction 0.1,0.2 --refinement=false --locations 0.2,0.7", false);
    RunConfig target = RunConfig::from_json(nlohmann::json{{"m", 50}, {"sigma", 0.1}});
    set.apply_overrides(target, flags);
    CHECK(target.sigma == 0.3);
    CHECK(target.m == 50);
    CHECK(target.fractions == std::vector<double>{0.1, 0.2});
    CHECK_FALSE(target.refinement);
    CHECK(target.locations == std::vector<double>{0.2, 0.7});
    CHECK(target.local_reduction);
  }

  TEST_CASE("study configuration mapping") {
    RunConfig c;
    c.sampling = "random";
    c.trials = 12;
    c.series_order = 7;
    const StudyConfig s = c.study_config();
    CHECK(s.instance.sampling == SamplingMode::seeded_random);
    CHECK(s.trial_count == 12);
    CHECK(s.series_order == 7);
    CHECK(c.solver_options().verification_grid == 100001);
  }
}
