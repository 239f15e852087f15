#include <doctest.h>

#include "forcedmech/errors.hpp"
#include "forcedmech/reduction.hpp"
#include "forcedmech/simulate.hpp"
#include "forcedmech/systemfile.hpp"

#include <fstream>
#include <string>

using namespace fm;

namespace {

const char* fluid_text = R"(# a body moving through a resisting medium
[coordinates]
q

[parameters]
m = 1
k = 0.1

[lagrangian]
m*qd_q^2/2

[dissipation]
k*qd_q^3/3

[candidates]
X = exp(k/m*q)
Xbad = exp(k/(2*m)*q)

[integration]
h = 1e-3
T = 10
state = 0, 1

[monitor]
C = m*exp(k/m*q)*qd_q   ; conserved along the drag dynamics
E = m*qd_q^2/2
)";

int error_line(const std::string& text) {
    try {
        parse_system_text(text);
    } catch (const ParseError& e) {
        return e.line;
    }
    return -1;
}

} // namespace

TEST_SUITE("systemfile") {

TEST_CASE("the resisting-medium file parses into a forced system") {
    SystemFile sf = parse_system_text(fluid_text);
    REQUIRE(sf.coordinates.size() == 1);
    CHECK(sf.coordinates[0] == "q");
    REQUIRE(sf.parameters.size() == 2);
    CHECK(sf.parameters[0].first == "m");
    CHECK(sf.parameters[0].second == 1.0);
    CHECK(sf.parameters[1].first == "k");
    CHECK(sf.parameters[1].second == 0.1);
    CHECK(!sf.has_force);
    REQUIRE(sf.dissipation.has_value());

    ForcedLagrangianSystem sys = sf.system();
    const ChartedSystem& c = sys.chart();
    Expr k = c.parameter("k");
    // The drag force derived from the dissipation function is k*qd^2 dq.
    CHECK(is_zero(sys.force().comps[0] - k * pow(c.qd(0), 2)));

    REQUIRE(sf.candidates.size() == 2);
    CHECK(sf.candidates[0].name == "X");
    CHECK(sf.candidates[0].components.size() == 1);
    CHECK(sf.candidates[1].name == "Xbad");

    REQUIRE(sf.integration.has_value());
    CHECK(sf.integration->h == 1e-3);
    CHECK(sf.integration->T == 10.0);
    REQUIRE(sf.integration->state.size() == 2);
    CHECK(sf.integration->state[1] == 1.0);

    REQUIRE(sf.monitors.size() == 2);
    CHECK(sf.monitors[0].name == "C");
    CHECK(sf.monitors[1].name == "E");

    // The declared monitor really is conserved along the dynamics.
    Trajectory traj = integrate_lagrangian(sys, sf.integration->state, sf.integration->h,
                                           sf.integration->T, {sf.monitors[0].expr});
    REQUIRE(!traj.truncated);
    CHECK(drift_report(traj)[0].max_rel < 1e-8);
}

TEST_CASE("explicit force sections fill one component per coordinate") {
    SystemFile sf = parse_system_text(R"(
[coordinates]
x, y
[parameters]
c = 2
[lagrangian]
(qd_x^2 + qd_y^2)/2
[force]
c*qd_x
0
)");
    CHECK(sf.has_force);
    ForcedLagrangianSystem sys = sf.system();
    CHECK(is_zero(sys.force().comps[0] - sys.chart().parameter("c") * sys.chart().qd(0)));
    CHECK(is_zero(sys.force().comps[1]));

    CHECK_THROWS_AS(parse_system_text(R"(
[coordinates]
x, y
[lagrangian]
(qd_x^2 + qd_y^2)/2
[force]
qd_x
)"),
                    ParseError);
}

TEST_CASE("force and dissipation are mutually exclusive") {
    std::string text = R"(
[coordinates]
q
[lagrangian]
qd_q^2/2
[force]
qd_q
[dissipation]
qd_q^2/2
)";
    CHECK(error_line(text) == 8); // the later of the two section headers
}

TEST_CASE("undeclared symbols are named with their location") {
    std::string text = "[coordinates]\nq\n[lagrangian]\nqd_q^2/2 + z\n";
    try {
        parse_system_text(text);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 4);
        CHECK(e.column == 12);
        CHECK(std::string(e.what()).find("'z'") != std::string::npos);
    }
}

TEST_CASE("declaration errors") {
    // duplicate coordinate
    CHECK(error_line("[coordinates]\nq q\n[lagrangian]\nqd_q^2\n") == 2);
    // parameter shadowing a coordinate
    CHECK(error_line("[coordinates]\nq\n[parameters]\nq = 1\n[lagrangian]\nqd_q^2\n") == 4);
    // parameter shadowing a velocity
    CHECK(error_line("[coordinates]\nq\n[parameters]\nqd_q = 1\n[lagrangian]\nqd_q^2\n") == 4);
    // reserved names
    CHECK(error_line("[coordinates]\nt\n[lagrangian]\n0\n") == 2);
    CHECK(error_line("[coordinates]\nsin\n[lagrangian]\n0\n") == 2);
    CHECK(error_line("[coordinates]\nqd_x\n[lagrangian]\n0\n") == 2);
    // invalid identifier
    CHECK(error_line("[coordinates]\n2x\n[lagrangian]\n0\n") == 2);
    // duplicate parameter
    CHECK(error_line("[coordinates]\nq\n[parameters]\nm = 1\nm = 2\n[lagrangian]\nqd_q^2\n") == 5);
    // non-constant parameter value
    CHECK(error_line("[coordinates]\nq\n[parameters]\nm = q\n[lagrangian]\nqd_q^2\n") == 4);
}

TEST_CASE("candidate fields live on Q or TQ") {
    std::string head = "[coordinates]\nx y\n[lagrangian]\n(qd_x^2 + qd_y^2)/2\n[candidates]\n";
    SystemFile sf = parse_system_text(head + "W = -y | x\nV = -y | x | qd_x | 0\n");
    REQUIRE(sf.candidates.size() == 2);
    CHECK(sf.candidates[0].components.size() == 2);
    CHECK(sf.candidates[1].components.size() == 4);

    // three components fit neither Q nor TQ
    CHECK(error_line(head + "W = x | y | x\n") == 6);
    // a Q-field cannot depend on velocities
    CHECK(error_line(head + "W = qd_x | 0\n") == 6);
    // duplicate candidate names
    CHECK(error_line(head + "W = x | y\nW = y | x\n") == 7);
}

TEST_CASE("action sections reproduce the rotation algebra") {
    SystemFile sf = parse_system_text(R"(
[coordinates]
q1 q2 q3
[lagrangian]
norm(qd_q1, qd_q2, qd_q3)^2/2 - norm(q1, q2, q3)^2/2
[action]
generator = 0 | -q3 | q2
generator = q3 | 0 | -q1
generator = -q2 | q1 | 0
structure = 1 2 3 1
structure = 2 3 1 1
structure = 3 1 2 1
)");
    ChartedSystem c = sf.chart();
    AlgebraAction parsed = sf.algebra_action(c);
    AlgebraAction expected = rotation_action_3d(c);
    REQUIRE(parsed.generators.size() == 3);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(is_zero(parsed.generators[a].comps[i] - expected.generators[a].comps[i]));
    CHECK(parsed.structure == expected.structure);

    // The Lagrangian written through norm() is the usual quadratic one.
    Expr l = sf.lagrangian;
    Expr direct = Expr::constant(0);
    for (std::size_t i = 0; i < 3; ++i)
        direct = direct + (pow(c.qd(i), 2) - pow(c.q(i), 2)) / 2;
    CHECK(is_zero(l - direct));
}

TEST_CASE("action section errors") {
    std::string head = "[coordinates]\nq1 q2 q3\n[lagrangian]\nqd_q1^2\n[action]\n"
                       "generator = 0 | -q3 | q2\ngenerator = q3 | 0 | -q1\n";
    // index out of range
    CHECK(error_line(head + "structure = 1 2 3 1\n") == 8);
    // duplicate / conflicting assignment (the mirror counts)
    CHECK(error_line(head + "structure = 1 2 2 1\nstructure = 2 1 2 -1\n") == 9);
    // diagonal entries must vanish
    CHECK(error_line(head + "structure = 1 1 2 1\n") == 8);
    // malformed line
    CHECK(error_line(head + "structure = 1 2\n") == 8);
    // unknown key
    CHECK(error_line(head + "bracket = 1 2 1 1\n") == 8);
    // wrong generator arity
    CHECK(error_line("[coordinates]\nq1 q2\n[lagrangian]\nqd_q1^2\n[action]\ngenerator = q1\n") == 6);
    // velocity in a generator
    CHECK(error_line("[coordinates]\nq1 q2\n[lagrangian]\nqd_q1^2\n[action]\ngenerator = qd_q1 | 0\n") ==
          6);
    // no generators at all
    CHECK(error_line("[coordinates]\nq1\n[lagrangian]\nqd_q1^2\n[action]\nstructure = 1 1 1 0\n") == 5);
}

TEST_CASE("integration section errors") {
    std::string head = "[coordinates]\nq\n[lagrangian]\nqd_q^2/2\n[integration]\n";
    CHECK(error_line(head + "h = 1e-3\nT = 1\nstate = 0\n") == 8);         // one value short
    CHECK(error_line(head + "h = 1e-3\nstate = 0, 1\n") == 5);             // missing T
    CHECK(error_line(head + "h = 1e-3\nh = 1e-2\nT = 1\nstate = 0, 1\n") == 7); // duplicate h
    CHECK(error_line(head + "h = 1e-3\nT = 1\nsteps = 7\nstate = 0, 1\n") == 8); // unknown key
    CHECK(error_line(head + "h = 1e-3\nT = 1\nstate = 0, q\n") == 8);      // non-constant entry
}

TEST_CASE("monitors keep order and may reference time") {
    SystemFile sf = parse_system_text(R"(
[coordinates]
q
[lagrangian]
qd_q^2/2
[monitor]
first = q
second = cos(t)*qd_q
)");
    REQUIRE(sf.monitors.size() == 2);
    CHECK(sf.monitors[0].name == "first");
    CHECK(sf.monitors[1].name == "second");
    CHECK(sf.monitors[1].expr.depends_on_kind(SymbolKind::Time));

    CHECK(error_line("[coordinates]\nq\n[lagrangian]\nqd_q^2/2\n[monitor]\nA = q\nA = qd_q\n") == 7);
}

TEST_CASE("structural file errors") {
    CHECK(error_line("q\n[coordinates]\nq\n[lagrangian]\nqd_q^2\n") == 1); // stray content
    CHECK(error_line("[velocity]\nq\n") == 1);                             // unknown section
    CHECK(error_line("[coordinates]\nq\n[coordinates]\nq\n") == 3);        // duplicate section
    CHECK(error_line("[coordinates\nq\n") == 1);                           // malformed header
    CHECK_THROWS_AS(parse_system_text("[coordinates]\nq\n"), ParseError);  // missing lagrangian
    CHECK_THROWS_AS(parse_system_text("[lagrangian]\n0\n"), ParseError);   // missing coordinates
    CHECK_THROWS_AS(parse_system_text(""), ParseError);
    CHECK(error_line("[coordinates]\nq\n[lagrangian]\n") == 3);            // empty expression body
}

TEST_CASE("multi-line expression sections are joined") {
    SystemFile sf = parse_system_text(R"(
[coordinates]
x y
[parameters]
m = 2
[lagrangian]
m*(qd_x^2 + qd_y^2)/2
  - (x^2 + y^2)/2
)");
    ChartedSystem c = sf.chart();
    Expr expected = c.parameter("m") * (pow(c.qd(0), 2) + pow(c.qd(1), 2)) / 2 -
                    (pow(c.q(0), 2) + pow(c.q(1), 2)) / 2;
    CHECK(is_zero(sf.lagrangian - expected));
}

TEST_CASE("files on disk parse identically to in-memory text") {
    const char* path = "/tmp/forcedmech_systemfile_roundtrip.fm";
    {
        std::ofstream out(path);
        out << fluid_text;
    }
    SystemFile from_disk = parse_system(path);
    SystemFile from_text = parse_system_text(fluid_text);
    CHECK(from_disk.coordinates == from_text.coordinates);
    CHECK(from_disk.parameters == from_text.parameters);
    CHECK(is_zero(from_disk.lagrangian - from_text.lagrangian));
    CHECK(is_zero(*from_disk.dissipation - *from_text.dissipation));

    CHECK_THROWS_AS(parse_system("/tmp/forcedmech_no_such_file.fm"), ParseError);
}

} // TEST_SUITE
