// ============================================================================
// Configuration parsing: per-case defaults, overrides, strict key checking
// with line numbers, validation, and serialization round-trips.
// ============================================================================
#include "qinsk/config.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <string>

using namespace qinsk;
using Catch::Approx;

TEST_CASE("minimal file: a bare case gets documented defaults")
{
    RunConfig cfg = parse_config("case = test2\n");
    CHECK(cfg.case_name == "test2");
    CHECK(cfg.case_kind() == InitialCondition::Kind::random);
    CHECK(cfg.mesh.kind == MeshSpec::Kind::interval);
    CHECK(cfg.mesh.a == -1.0);
    CHECK(cfg.mesh.b == 1.0);
    CHECK(cfg.mesh.n == 256);
    CHECK(cfg.degree == 1);
    CHECK_FALSE(cfg.k_is_h2);
    CHECK(cfg.k == 0.01);
    CHECK(cfg.steps == 100);
    CHECK(cfg.model.rho1 == 1.0);
    CHECK(cfg.model.rho2 == 2.0);
    CHECK(cfg.model.gamma == 1e-3);
    CHECK(cfg.model.eta == 1e-3);
    CHECK(cfg.model.m_r == 1e-2);
    CHECK(cfg.model.m_j == 1e-2);
    CHECK(cfg.model.well_A == 0.0);
    CHECK_FALSE(cfg.full_tensor);
    CHECK(cfg.omega == 0.0);
    CHECK(cfg.seed == 1);
    CHECK(cfg.amplitude == 0.01);
}

TEST_CASE("case order does not matter and comments are ignored")
{
    RunConfig cfg = parse_config(
        "# refined run\n"
        "steps = 7        # short\n"
        "mesh = interval 0 1 32\n"
        "case = test2\n");
    CHECK(cfg.steps == 7);
    CHECK(cfg.mesh.n == 32);
    CHECK(cfg.mesh.a == 0.0);
}

TEST_CASE("per-case defaults")
{
    SECTION("test1: stationary profile with the h^2 step policy")
    {
        RunConfig cfg = parse_config("case = test1\n");
        CHECK(cfg.case_kind() == InitialCondition::Kind::steady_tanh);
        CHECK(cfg.k_is_h2);
        CHECK(cfg.steps == 10);
        CHECK(cfg.mesh.n == 256);
    }
    SECTION("test3: bubble lattice on the unit square")
    {
        RunConfig cfg = parse_config("case = test3\n");
        CHECK(cfg.case_kind() == InitialCondition::Kind::bubbles);
        CHECK(cfg.mesh.kind == MeshSpec::Kind::rectangle);
        CHECK(cfg.mesh.x1 == 1.0);
    }
    SECTION("test4: rotating disk with the full stress tensor")
    {
        RunConfig cfg = parse_config("case = test4\n");
        CHECK(cfg.case_kind() == InitialCondition::Kind::rotating_bubble);
        CHECK(cfg.mesh.kind == MeshSpec::Kind::disk);
        CHECK(cfg.full_tensor);
        CHECK(cfg.model.eta1 == 0.001);
        CHECK(cfg.model.eta2 == 0.005);
        CHECK(cfg.omega == 2.0);
    }
    SECTION("test5: heavy-over-light column with gravity")
    {
        RunConfig cfg = parse_config("case = test5\n");
        CHECK(cfg.case_kind() == InitialCondition::Kind::rayleigh_taylor);
        CHECK(cfg.mesh.kind == MeshSpec::Kind::rectangle);
        CHECK(cfg.mesh.y0 == -2.0);
        CHECK(cfg.mesh.y1 == 2.0);
        CHECK(cfg.gravity[1] == 0.01);
    }
    SECTION("test6: high density ratio with the auto-strength modified well")
    {
        RunConfig cfg = parse_config("case = test6\n");
        CHECK(cfg.case_kind() == InitialCondition::Kind::random);
        CHECK(cfg.model.rho2 == 10.0);
        CHECK(cfg.model.well_A == Approx(100.0));  // (rho2/rho1)^2
    }
}

TEST_CASE("well key variants")
{
    CHECK(parse_config("case = test2\nwell = quartic\n").model.well_A == 0.0);
    CHECK(parse_config("case = test2\nwell = modified 4\n").model.well_A == 4.0);
    // bare `modified` resolves against the final density ratio
    RunConfig cfg = parse_config("case = test2\nwell = modified\nrho2 = 5\n");
    CHECK(cfg.model.well_A == Approx(25.0));
    CHECK_THROWS_AS(parse_config("case = test2\nwell = modified -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("case = test2\nwell = sextic\n"), ConfigError);
}

TEST_CASE("timestep policies")
{
    CHECK(parse_config("case = test2\ntimestep = 0.005\n").k == 0.005);
    CHECK(parse_config("case = test2\ntimestep = h^2\n").k_is_h2);
    CHECK(parse_config("case = test2\ntimestep = h2\n").k_is_h2);
    // test1 defaults to h^2 but accepts an explicit number
    RunConfig cfg = parse_config("case = test1\ntimestep = 0.25\n");
    CHECK_FALSE(cfg.k_is_h2);
    CHECK(cfg.k == 0.25);
}

TEST_CASE("errors carry the offending line number")
{
    try {
        parse_config("case = test2\nsteps = 5\nrho3 = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
        CHECK(err.line == 3);
        CHECK(std::string(err.what()).find("rho3") != std::string::npos);
    }

    try {
        parse_config("case = test2\nsteps = soon\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
        CHECK(err.line == 2);
    }

    try {
        parse_config("case = test2\nmesh = interval 0 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& err) {
        CHECK(err.line == 2);
    }
}

TEST_CASE("missing or unknown case")
{
    CHECK_THROWS_AS(parse_config("steps = 5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("case = test99\n"), ConfigError);
}

TEST_CASE("model validation failures surface as config errors")
{
    CHECK_THROWS_AS(parse_config("case = test2\nrho1 = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("case = test2\ngamma = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("case = test2\ndegree = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("case = test4\nomega = 1\nmesh = interval 0 1 8\n"),
                    ConfigError);
}

TEST_CASE("eta1/eta2 switch on the full tensor")
{
    RunConfig cfg = parse_config("case = test2\neta1 = 0.002\neta2 = 0.004\n");
    CHECK(cfg.full_tensor);
    CHECK(cfg.model.eta1 == 0.002);
    CHECK(cfg.model.eta2 == 0.004);
}

TEST_CASE("levels parsing")
{
    RunConfig cfg = parse_config("case = test1\nlevels = 32, 64,128\n");
    REQUIRE(cfg.levels.size() == 3);
    CHECK(cfg.levels[0] == 32);
    CHECK(cfg.levels[2] == 128);
    CHECK_THROWS_AS(parse_config("case = test1\nlevels = ,\n"), ConfigError);
}

TEST_CASE("mesh specifications parse and rebuild")
{
    MeshSpec ms = MeshSpec::parse("rectangle -1 1 -2 2 10 20", 1);
    CHECK(ms.kind == MeshSpec::Kind::rectangle);
    CHECK(ms.nx == 10);
    CHECK(ms.ny == 20);
    Mesh m = ms.build();
    CHECK(m.dim == 2);

    CHECK_THROWS_AS(MeshSpec::parse("interval 1 0 4", 1), ConfigError);
    CHECK_THROWS_AS(MeshSpec::parse("torus 1 4", 1), ConfigError);
    CHECK_THROWS_AS(MeshSpec::parse("disk 1 4 extra", 1), ConfigError);
}

TEST_CASE("serialization round-trips exactly")
{
    const char* text =
        "case = test5\n"
        "mesh = rectangle -1 1 -2 2 16 32\n"
        "degree = 2\n"
        "timestep = 0.0025\n"
        "steps = 42\n"
        "rho2 = 3.5\n"
        "gamma = 0.002\n"
        "sigma = 55\n"
        "seed = 99\n"
        "snapshot_every = 10\n"
        "snapshot_format = columns\n";
    RunConfig cfg = parse_config(text);
    std::string canon = serialize_config(cfg);
    RunConfig back = parse_config(canon);
    CHECK(serialize_config(back) == canon);

    // spot checks that the canonical form kept the overrides
    CHECK(back.mesh.nx == 16);
    CHECK(back.model.rho2 == 3.5);
    CHECK(back.sigma == 55.0);
    CHECK(back.seed == 99);
    CHECK(back.snapshot_format == SnapshotFormat::columns);
    CHECK(back.newton.tolerance == cfg.newton.tolerance);
}

TEST_CASE("solver and pinning selections")
{
    CHECK(parse_config("case = test2\nsolver = sparse-lu\n").newton.solver ==
          NewtonSettings::Solver::sparse_lu);
    CHECK(parse_config("case = test2\nsolver = bicgstab\n").newton.solver ==
          NewtonSettings::Solver::bicgstab);
    CHECK_THROWS_AS(parse_config("case = test2\nsolver = pardiso\n"), ConfigError);

    CHECK(parse_config("case = test2\npin_lambda = on\n").pin_lambda == 1);
    CHECK(parse_config("case = test2\npin_lambda = off\n").pin_lambda == 0);
    CHECK(parse_config("case = test2\npin_lambda = auto\n").pin_lambda == -1);
    CHECK_THROWS_AS(parse_config("case = test2\npin_lambda = maybe\n"), ConfigError);
}
