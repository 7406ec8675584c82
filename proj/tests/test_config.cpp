#include <catch_amalgamated.hpp>

#include <string>

#include "skt/config.hpp"

using namespace skt;

namespace {

const std::string config_dir = SKT_CONFIG_DIR;

json minimal()
{
    return json::parse(R"({
      "schema_version": 1,
      "model": { "kind": "skt", "d": [1.0, 2.0], "alpha": [[0.3, 0.0], [0.0, 0.2]],
                 "beta": [[0.1, 0.0], [0.0, 0.1]], "k": [0.2, 0.1], "lambda0": 1.0 },
      "domain": { "dim": 2, "lengths": [1.0, 1.0], "nodes": [9, 9] }
    })");
}

Config parse_valid(const json& j)
{
    Config c = parse_config(j);
    validate_config(c);
    return c;
}

} // namespace

TEST_CASE("shipped configs load and build")
{
    for (const char* name : {"heat_1d", "skt_2d", "skt_const_lambda", "exponents_n4"}) {
        INFO(name);
        const Config c = load_config(config_dir + "/" + name + ".json");
        const auto model = c.model.build();
        const Domain d = c.domain.build();
        CHECK(model.m == c.model.m());
        CHECK(d.dim() == c.domain.dim);
        CHECK(c.initial.build(d, model.m).satisfies_dirichlet());
    }
    const Config heat = load_config(config_dir + "/heat_1d.json");
    CHECK(heat.model.kind == "linear");
    CHECK(heat.solver.dt == 1e-4);
    CHECK(heat.solver.steps() == 1000);
    CHECK(heat.seed == 7);
}

TEST_CASE("defaults fill in omitted sections")
{
    const Config c = parse_valid(minimal());
    CHECK(c.solver.scheme == Scheme::fully_implicit);
    CHECK(c.dual.levels == std::vector<int>{2, 4, 8, 16});
    CHECK(c.checks.sigma_grid == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(c.checks.jacobian_tol == 1e-6);
    CHECK(c.checks.samples == 100);
    CHECK(c.model.lambda == "default");
}

TEST_CASE("unknown keys and bad values are config errors")
{
    auto j = minimal();
    j["model"]["gamma"] = 1.0;
    CHECK_THROWS_AS(parse_valid(j), ConfigError);

    j = minimal();
    j["typo"] = 1;
    CHECK_THROWS_AS(parse_valid(j), ConfigError);

    j = minimal();
    j["schema_version"] = 99;
    CHECK_THROWS_AS(parse_valid(j), ConfigError);

    j = minimal();
    j["solver"] = {{"scheme", "explicit"}};
    CHECK_THROWS_AS(parse_valid(j), ConfigError);

    j = minimal();
    j["checks"] = {{"selection", {"no_such_check"}}};
    CHECK_THROWS_AS(parse_valid(j), ConfigError);

    j = minimal();
    j["model"]["d"] = {1.0};
    CHECK_THROWS_AS(parse_valid(j).model.build(), ConfigError);

    j = minimal();
    j["model"]["lambda"] = "quadratic";
    CHECK_THROWS_AS(parse_valid(j).model.build(), ConfigError);

    j = minimal();
    j.erase("model");
    CHECK_THROWS_AS(parse_valid(j), ConfigError);

    CHECK_THROWS_AS(load_config(config_dir + "/missing.json"), ConfigError);
}

TEST_CASE("constant lambda option")
{
    auto j = minimal();
    j["model"]["lambda"] = "constant";
    const auto model = parse_valid(j).model.build();
    Vector u(2);
    u << 3.0, 4.0;
    CHECK(model.lambda(u) == 1.0);
    const auto base = parse_valid(minimal()).model.build();
    CHECK(base.lambda(u) == Catch::Approx(6.0));
    CHECK(model.hash() != base.hash());
}

TEST_CASE("default ladders follow the domain dimension")
{
    auto j = minimal();
    j["domain"] = {{"dim", 1}, {"lengths", {1.0}}, {"nodes", {33}}};
    const Config c = parse_valid(j);
    for (const auto& l : c.checks.ladder) CHECK(l.nodes.size() == 1);
    for (const auto& l : c.uniqueness.ladder) CHECK(l.nodes.size() == 1);

    j["checks"] = {{"ladder", {{{"nodes", {9, 9}}, {"dt", 1e-3}, {"n", 1}}}}};
    CHECK_THROWS_AS(parse_valid(j), ConfigError);
}

TEST_CASE("tolerance overrides")
{
    Config c = parse_valid(minimal());
    apply_tolerance_override(c, "jacobian_tol", 1e-4);
    CHECK(c.checks.jacobian_tol == 1e-4);
    apply_tolerance_override(c, "dual_ceiling", 3.0);
    CHECK(c.dual.ceiling == 3.0);
    CHECK_THROWS_AS(apply_tolerance_override(c, "nope", 1.0), ConfigError);
    CHECK_THROWS_AS(apply_tolerance_override(c, "stability", -1.0), ConfigError);
}

TEST_CASE("canonical dump round-trips and hashes stably")
{
    for (const char* name : {"heat_1d", "skt_2d", "skt_const_lambda", "exponents_n4"}) {
        INFO(name);
        const Config c = load_config(config_dir + "/" + name + ".json");
        const Config back = parse_valid(json::parse(to_json(c).dump()));
        CHECK(to_json(back).dump() == to_json(c).dump());
        CHECK(config_hash(back) == config_hash(c));
        CHECK(config_hash(c).size() == 16);
    }
    Config a = parse_valid(minimal());
    Config b = a;
    b.seed = a.seed + 1;
    CHECK(config_hash(a) != config_hash(b));
    b = a;
    apply_tolerance_override(b, "jacobian_tol", 1e-5);
    CHECK(config_hash(a) != config_hash(b));
}
