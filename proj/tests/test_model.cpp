#include <doctest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include "presymp/report.hpp"
#include "test_util.hpp"

using namespace presymp;

namespace {

const char* affine_model_text = R"(
# comment line
[model]
kind = "lagrangian"
base = [x1, x2]
fields = [y1, y2]
lagrangian = "x2*(y1*v1_2 + y2*v2_2) + y1*y2"

[options]
max_generations = 16
seed = 1
)";

} // namespace

TEST_CASE("model parsing") {
    ModelFile mf = parse_model(affine_model_text);
    CHECK(mf.kind == ModelKind::Lagrangian);
    CHECK(mf.base == std::vector<std::string>{"x1", "x2"});
    CHECK(mf.fields == std::vector<std::string>{"y1", "y2"});
    CHECK(mf.lagrangian == "x2*(y1*v1_2 + y2*v2_2) + y1*y2");
    CHECK(mf.max_generations == 16);
    CHECK(mf.seed == 1);
}

TEST_CASE("model parse errors carry line numbers") {
    try {
        (void)parse_model("[model]\nkind = \"lagrangian\"\nbroken line\n");
        FAIL("expected a model error");
    } catch (const ModelError& e) {
        CHECK(e.line == 3);
    }
    CHECK_THROWS_AS((void)parse_model("[mystery]\n"), ModelError);
    CHECK_THROWS_AS((void)parse_model("[model]\nkind = \"sonata\"\n"), ModelError);
    // affine models must carry the full f table
    CHECK_THROWS_AS((void)parse_model("[model]\nkind = \"affine\"\nbase = [t]\nfields = [q]\n"
                                      "a = \"q\"\n"),
                    ModelError);
}

TEST_CASE("analysis of the shipped lagrangian model") {
    ModelFile mf = parse_model(affine_model_text);
    ModelAnalysis ma = analyze_model(mf);
    CHECK(ma.report.status == AnalysisStatus::FinalSubmanifold);
    REQUIRE(ma.report.generations.size() == 1);
    CHECK(ma.report.generations[0].constraints[0] ==
          parse_expr("y1 - y2", ma.system.chart));
    CHECK(exit_code(ma.report.status) == 0);
    CHECK(ma.system.lagrangian->regularity == Regularity::AlmostRegularCandidate);
    // semi-holonomy of the canonical (zero) representative is obstructed by
    // the velocity block, so no EL residual is reported
    CHECK(!ma.el_applicable);
}

TEST_CASE("premultisymplectic omega entries honor index ordering") {
    ModelFile mf = parse_model(
        "[model]\nkind = \"premultisymplectic\"\nbase = [t]\nfields = [q, p]\n"
        "omega = [\"dq^dt: p\"]\n");
    BuiltSystem bs = build_system(mf);
    // dq^dt = -dt^dq
    CHECK(bs.omega_form.coeff(0b011) == -parse_expr("p", bs.chart));

    ModelAnalysis ma = analyze_model(mf);
    CHECK(ma.report.status == AnalysisStatus::FinalSubmanifold);
    REQUIRE(ma.report.constraints.size() == 1);
    CHECK(ma.report.constraints[0] == parse_expr("p", bs.chart));
}

TEST_CASE("premultisymplectic omega entries validate") {
    CHECK_THROWS_WITH_AS((void)build_system(parse_model(
                             "[model]\nkind = \"premultisymplectic\"\nbase = [t]\n"
                             "fields = [q]\nomega = [\"dq^dq: 1\"]\n")),
                         doctest::Contains("repeats"), std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)build_system(parse_model(
                             "[model]\nkind = \"premultisymplectic\"\nbase = [t]\n"
                             "fields = [q]\nomega = [\"dq: 1\"]\n")),
                         doctest::Contains("degree"), std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)build_system(parse_model(
                             "[model]\nkind = \"premultisymplectic\"\nbase = [t]\n"
                             "fields = [q]\nomega = [\"dq^dz: 1\"]\n")),
                         doctest::Contains("unknown"), std::invalid_argument);
}

TEST_CASE("connection coefficients enter the analysis") {
    ModelFile mf = parse_model(
        "[model]\nkind = \"premultisymplectic\"\nbase = [x1, x2]\nfields = [u]\n"
        "omega = [\"dx1^dx2^du: 0\"]\n"
        "[connection]\nG = [\"u x1: u\", \"u x2: 0\"]\n");
    BuiltSystem bs = build_system(mf);
    CHECK(bs.connection.coefficient(0, 0) == parse_expr("u", bs.chart));
    CHECK(bs.connection.coefficient(0, 1).is_zero());

    // a vanishing form is solvable everywhere, with no constraints
    ModelAnalysis ma = analyze_model(mf);
    CHECK(ma.report.status == AnalysisStatus::FinalSubmanifold);
    CHECK(ma.report.constraints.empty());
    CHECK(ma.report.family.nullspace.size() == 2);
}

TEST_CASE("check suite exercises the numeric spot check with grid options") {
    ModelFile mf = parse_model(
        "[model]\nkind = \"lagrangian\"\nbase = [x1, x2]\nfields = [y1]\n"
        "lagrangian = \"(v1_1^2 + v1_2^2)/2\"\n"
        "[options]\ngrid = [\"x1: 0 1 32\", \"x2: 0 1 32\"]\n"
        "start = [\"y1: 0\", \"v1_1: 0\", \"v1_2: 0\"]\n");
    bool all = false;
    auto checks = run_checks(mf);
    std::string text = render_checks(checks, all);
    CHECK(all);
    CHECK(text.find("numeric-integration") != std::string::npos);
}

TEST_CASE("hamiltonian model runs the momentum-side pipeline") {
    ModelFile mf = parse_model(
        "[model]\nkind = \"hamiltonian\"\nbase = [x1, x2]\nfields = [y1]\n"
        "hamiltonian = \"(p1_1^2 + p1_2^2)/2\"\n");
    ModelAnalysis ma = analyze_model(mf);
    const Chart& c = ma.system.chart;
    CHECK(c.kind() == ChartKind::Momentum);
    CHECK(ma.report.status == AnalysisStatus::FinalSubmanifold);
    CHECK(ma.report.constraints.empty());
    CHECK(ma.report.integrability == IntegrabilityStatus::FlatOnFinal);

    // the solved family is the Hamilton-De Donder-Weyl system for this H:
    // dy/dx^mu pinned to dH/dp_mu = p_mu, momentum block divergence-free
    CHECK(ma.report.canonical.gamma(0, 0) == parse_expr("p1_1", c));
    CHECK(ma.report.canonical.gamma(0, 1) == parse_expr("p1_2", c));
    Expr divergence = ma.report.canonical.gamma(1, 0) + ma.report.canonical.gamma(2, 1);
    CHECK(divergence.is_zero());
    for (auto& v : ma.report.family.nullspace) {
        CHECK(v[0].is_zero());  // y-block is unique
        CHECK(v[1].is_zero());
        CHECK((v[1 * 2 + 0] + v[2 * 2 + 1]).is_zero());  // divergence stays zero
    }
}

TEST_CASE("an unclosed raw form is flagged") {
    ModelFile mf = parse_model(
        "[model]\nkind = \"premultisymplectic\"\nbase = [t]\nfields = [q, p]\n"
        "omega = [\"dq^dp: q\"]\n");  // d(q dq^dp) vanishes only because dq^dq = 0
    ModelAnalysis ok = analyze_model(mf);
    bool flagged = false;
    for (auto& w : ok.report.warnings) flagged = flagged || w.find("not closed") != std::string::npos;
    CHECK(!flagged);

    ModelFile bad = parse_model(
        "[model]\nkind = \"premultisymplectic\"\nbase = [t]\nfields = [q, p]\n"
        "omega = [\"dt^dq: p\"]\n");  // d(p dt^dq) = dp^dt^dq != 0
    ModelAnalysis ma = analyze_model(bad);
    flagged = false;
    for (auto& w : ma.report.warnings) flagged = flagged || w.find("not closed") != std::string::npos;
    CHECK(flagged);
}

TEST_CASE("affine model kind agrees with the lagrangian route") {
    ModelFile mf = parse_model(
        "[model]\nkind = \"affine\"\nbase = [x1, x2]\nfields = [y1, y2]\n"
        "a = \"y1*y2\"\n"
        "f = [\"x1 y1: 0\", \"x1 y2: 0\", \"x2 y1: x2*y1\", \"x2 y2: x2*y2\"]\n");
    ModelAnalysis ma = analyze_model(mf);
    REQUIRE(ma.affine_result.has_value());
    CHECK(ma.affine_result->engine_agrees);
    REQUIRE(ma.report.constraints.size() == 1);
    CHECK(ma.report.constraints[0] == parse_expr("y1 - y2", ma.system.chart));
}

TEST_CASE("structured reports are deterministic and ordered") {
    ModelFile mf = parse_model(affine_model_text);
    ModelAnalysis a = analyze_model(mf);
    ModelAnalysis b = analyze_model(mf);
    std::string ja = structured_report(a).dump(2);
    std::string jb = structured_report(b).dump(2);
    CHECK(ja == jb);
    CHECK(ja.find("\"gamma\"") != std::string::npos);
    CHECK(ja.find("\"final_constraints\"") != std::string::npos);
    // key order is fixed: model_kind leads
    CHECK(ja.find("model_kind") < ja.find("chart"));
}

TEST_CASE("check suite passes on the shipped model and fails on corrupted input") {
    bool all = false;
    auto checks = run_checks(parse_model(affine_model_text));
    (void)render_checks(checks, all);
    CHECK(all);
    for (auto& c : checks)
        if (c.name == "splitting-reconstruction") {
            CHECK(c.detail.find("residual = 0") != std::string::npos);
        }

    // a deliberately corrupted premultisymplectic form: assumption fails
    auto bad = run_checks(parse_model(
        "[model]\nkind = \"premultisymplectic\"\nbase = [x1, x2]\nfields = [q, p, r]\n"
        "omega = [\"dq^dp^dx1: 1\", \"dq^dp^dr: 1\"]\n"));
    bool bad_all = true;
    std::string bad_text = render_checks(bad, bad_all);
    CHECK(!bad_all);
    CHECK(bad_text.find("FAIL") != std::string::npos);
    CHECK(bad_text.find("q") != std::string::npos);
}

TEST_CASE("integration driver enforces constraint-compatible starts") {
    ModelFile mf = parse_model(affine_model_text);
    ModelAnalysis ma = analyze_model(mf);
    std::vector<std::tuple<std::string, double, double, int>> grid{
        {"x1", 0, 1, 8}, {"x2", 0, 1, 8}};
    // y1 != y2 violates the final constraint
    std::vector<std::pair<std::string, double>> bad_start{
        {"y1", 1.0}, {"y2", 0.0}, {"v1_1", 0}, {"v1_2", 0}, {"v2_1", 0}, {"v2_2", 0}};
    CHECK_THROWS_WITH_AS((void)run_integration(ma, bad_start, grid),
                         doctest::Contains("constraint"), std::invalid_argument);

    std::vector<std::pair<std::string, double>> good_start{
        {"y1", 1.0}, {"y2", 1.0}, {"v1_1", 0}, {"v1_2", 0}, {"v2_1", 0}, {"v2_2", 0}};
    GridSection sec = run_integration(ma, good_start, grid);
    CHECK(sec.path_defect < 1e-12);  // canonical solution is the zero section
}

TEST_CASE("structured report matches the committed golden file") {
    ModelFile mf = parse_model(affine_model_text);
    ModelAnalysis ma = analyze_model(mf);
    std::string got = structured_report(ma).dump(2) + "\n";
    std::ifstream f(std::string(TEST_SOURCE_DIR) + "/golden/affine_fields.json",
                    std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    CHECK(got == ss.str());
}

TEST_CASE("chart construction enforces its invariants") {
    CHECK_THROWS_AS((void)Chart::plain({}, {"u"}), std::invalid_argument);
    CHECK_THROWS_AS((void)Chart::plain({"x"}, {}), std::invalid_argument);
    CHECK_THROWS_AS((void)Chart::plain({"x", "x"}, {"u"}), std::invalid_argument);
    CHECK_THROWS_AS((void)Chart::plain({"x"}, {"2u"}), std::invalid_argument);
    // field names colliding with generated velocity names
    CHECK_THROWS_AS((void)Chart::first_jet({"x"}, {"v1_1"}), std::invalid_argument);
    // more than 63 coordinates
    std::vector<std::string> many;
    for (int i = 0; i < 64; ++i) many.push_back("q" + std::to_string(i));
    CHECK_THROWS_AS((void)Chart::plain({"x"}, many), std::invalid_argument);

    Chart jet = Chart::first_jet({"s", "t"}, {"w"});
    CHECK(jet.dim() == 2 + 1 + 2);  // one velocity per (field, base) pair
    CHECK(symbol_name(jet.jet(0, 1)) == "v1_2");
    CHECK(jet.is_vertical(jet.jet(0, 0)));
    CHECK(jet.is_base(jet.base(1)));
}

TEST_CASE("pure operations are safe to run concurrently on shared inputs") {
    Chart c = Chart::first_jet({"x1", "x2"}, {"y1"});
    Expr L = parse_expr("(v1_1^2 + v1_2^2)/2 + y1*v1_1", c);
    std::vector<std::thread> workers;
    std::atomic<int> disagreements{0};
    LagrangianSystem reference = build_lagrangian_system(c, L);
    for (int t = 0; t < 4; ++t) {
        workers.emplace_back([&]() {
            for (int i = 0; i < 5; ++i) {
                LagrangianSystem sys = build_lagrangian_system(c, L);
                if (!(sys.omega_l == reference.omega_l)) ++disagreements;
                auto conn = EhresmannConnection::trivial(c);
                auto rep = run_constraint_algorithm(sys.omega_l, DiffForm::volume(c), conn, {});
                if (rep.status != AnalysisStatus::FinalSubmanifold) ++disagreements;
            }
        });
    }
    for (auto& w : workers) w.join();
    CHECK(disagreements == 0);
}

TEST_CASE("exit codes track the analysis status") {
    CHECK(exit_code(AnalysisStatus::FinalSubmanifold) == 0);
    CHECK(exit_code(AnalysisStatus::NoSolution) == 2);
    CHECK(exit_code(AnalysisStatus::IterationLimit) == 3);
    CHECK(exit_code(AnalysisStatus::StratificationAmbiguous) == 3);
}

TEST_CASE("the generation cap stops an unfinished chain") {
    ModelFile mf = parse_model(affine_model_text);
    mf.max_generations = 1;  // constraints appear in generation 1, no room to settle
    ModelAnalysis ma = analyze_model(mf);
    CHECK(ma.report.status == AnalysisStatus::IterationLimit);
    CHECK(exit_code(ma.report.status) == 3);
    CHECK(ma.report.generations.size() == 1);
}
