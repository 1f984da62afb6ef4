#include <doctest.h>

#include "presymp/fieldtheory.hpp"
#include "test_util.hpp"

using namespace presymp;

namespace {

Chart affine_jet() { return Chart::first_jet({"x1", "x2"}, {"y1", "y2"}); }
Chart harmonic_jet() { return Chart::first_jet({"x1", "x2"}, {"y1"}); }

LagrangianSystem affine_system() {
    Chart c = affine_jet();
    return build_lagrangian_system(c, parse_expr("x2*(y1*v1_2 + y2*v2_2) + y1*y2", c));
}

LagrangianSystem harmonic_system() {
    Chart c = harmonic_jet();
    return build_lagrangian_system(c, parse_expr("(v1_1^2 + v1_2^2)/2", c));
}

} // namespace

TEST_CASE("affine lagrangian build: theta is the pulled-back m-form") {
    LagrangianSystem sys = affine_system();
    const Chart& c = sys.chart;
    // alpha = y1 y2 dx1^dx2 - x2 y1 dy1^dx1 - x2 y2 dy2^dx1, read on the jet chart
    DiffForm alpha = parse_expr("y1*y2", c) * DiffForm::volume(c);
    auto dx1 = DiffForm::coordinate_differential(c, c.base(0));
    alpha = alpha - parse_expr("x2*y1", c) *
                        wedge(DiffForm::coordinate_differential(c, c.field(0)), dx1);
    alpha = alpha - parse_expr("x2*y2", c) *
                        wedge(DiffForm::coordinate_differential(c, c.field(1)), dx1);
    CHECK(sys.theta == alpha);

    for (auto& row : sys.hessian)
        for (auto& e : row) CHECK(e.is_zero());
    CHECK(sys.regularity == Regularity::AlmostRegularCandidate);
}

TEST_CASE("quadratic lagrangian is regular with identity hessian") {
    Chart c = affine_jet();
    Expr L = parse_expr("(v1_1^2 + v1_2^2 + v2_1^2 + v2_2^2)/2", c);
    LagrangianSystem sys = build_lagrangian_system(c, L);
    CHECK(sys.regularity == Regularity::Regular);
    for (size_t i = 0; i < sys.hessian.size(); ++i)
        for (size_t j = 0; j < sys.hessian.size(); ++j)
            CHECK(sys.hessian[i][j] == (i == j ? Expr(1) : Expr(0)));
}

TEST_CASE("harmonic lagrangian form matches the frozen term list") {
    LagrangianSystem sys = harmonic_system();
    const Chart& c = sys.chart;
    // -d theta = -dv1_1^dy1^dx2 + dv1_2^dy1^dx1 + (v1_1 dv1_1 + v1_2 dv1_2)^dx1^dx2
    auto d = [&](VarId v) { return DiffForm::coordinate_differential(c, v); };
    DiffForm expect =
        -wedge(wedge(d(c.jet(0, 0)), d(c.field(0))), d(c.base(1))) +
        wedge(wedge(d(c.jet(0, 1)), d(c.field(0))), d(c.base(0))) +
        wedge(parse_expr("v1_1", c) * d(c.jet(0, 0)) + parse_expr("v1_2", c) * d(c.jet(0, 1)),
              DiffForm::volume(c));
    CHECK(sys.omega_l == expect);
    CHECK(sys.omega_l == lagrangian_omega_direct(c, sys.lagrangian));
}

TEST_CASE("two build routes agree on random polynomial lagrangians") {
    Chart c = harmonic_jet();
    std::mt19937_64 rng(71);
    for (int s = 0; s < 10; ++s) {
        Expr L = testutil::random_poly(rng, c.coords(), 5, 3, 4);
        LagrangianSystem sys = build_lagrangian_system(c, L);  // cross-checks internally
        CHECK(sys.omega_l == lagrangian_omega_direct(c, L));
        CHECK(sys.omega_l == -exterior_derivative(sys.theta, c));
        // triple-vertical contraction vanishes structurally
        CHECK(triple_vertical_witness(sys.omega_l, c).empty());
    }
}

TEST_CASE("legendre map of the affine example") {
    LagrangianSystem sys = affine_system();
    LegendreMap fl = legendre_map(sys);
    const Chart& jc = sys.chart;
    const Chart& mc = fl.target;
    CHECK(fl.assignment.at(mc.momentum_coord(0, 1)) == parse_expr("x2*y1", jc));
    CHECK(fl.assignment.at(mc.momentum_coord(1, 1)) == parse_expr("x2*y2", jc));
    CHECK(fl.assignment.at(mc.momentum_coord(0, 0)).is_zero());
    CHECK(fl.assignment.at(mc.momentum_coord(1, 0)).is_zero());
    CHECK(fl.extended_p == parse_expr("y1*y2", jc));
}

TEST_CASE("legendre map of quadratic lagrangians") {
    LagrangianSystem sys = harmonic_system();
    LegendreMap fl = legendre_map(sys);
    const Chart& jc = sys.chart;
    CHECK(fl.assignment.at(fl.target.momentum_coord(0, 0)) == parse_expr("v1_1", jc));
    CHECK(fl.assignment.at(fl.target.momentum_coord(0, 1)) == parse_expr("v1_2", jc));
    CHECK(fl.extended_p == -sys.lagrangian);
}

TEST_CASE("legendre naturality for the hyper-regular pair") {
    LagrangianSystem sys = harmonic_system();
    LegendreMap fl = legendre_map(sys);
    Expr H = parse_expr("(p1_1^2 + p1_2^2)/2", fl.target);
    HamiltonianSystem ham = build_hamiltonian_system(fl.target, H);
    CHECK(fl.pullback(ham.omega_h) == sys.omega_l);
}

TEST_CASE("hamiltonian builds") {
    Chart mc = Chart::momentum({"x1", "x2"}, {"y1"});
    auto d = [&](VarId v) { return DiffForm::coordinate_differential(mc, v); };

    HamiltonianSystem zero = build_hamiltonian_system(mc, Expr(0));
    DiffForm momentum_block =
        -wedge(wedge(d(mc.momentum_coord(0, 0)), d(mc.field(0))),
               contract_vector(VectorField{{0, Expr(1)}}, DiffForm::volume(mc))) -
        wedge(wedge(d(mc.momentum_coord(0, 1)), d(mc.field(0))),
              contract_vector(VectorField{{1, Expr(1)}}, DiffForm::volume(mc)));
    CHECK(zero.omega_h == momentum_block);

    Expr H = parse_expr("(p1_1^2 + p1_2^2)/2", mc);
    HamiltonianSystem ham = build_hamiltonian_system(mc, H);
    DiffForm dH_block = wedge(parse_expr("p1_1", mc) * d(mc.momentum_coord(0, 0)) +
                                  parse_expr("p1_2", mc) * d(mc.momentum_coord(0, 1)),
                              DiffForm::volume(mc));
    CHECK(ham.omega_h == momentum_block + dH_block);
    CHECK(triple_vertical_witness(ham.omega_h, mc).empty());

    CHECK_THROWS_AS((void)build_hamiltonian_system(Chart::plain({"t"}, {"q"}), Expr(0)),
                    std::invalid_argument);
}

TEST_CASE("hamiltonian builds satisfy the bidegree assumption structurally") {
    Chart mc = Chart::momentum({"x1", "x2"}, {"y1", "y2"});
    std::mt19937_64 rng(73);
    for (int s = 0; s < 10; ++s) {
        Expr H = testutil::random_poly(rng, mc.coords(), 5, 3, 4);
        HamiltonianSystem ham = build_hamiltonian_system(mc, H);
        CHECK(triple_vertical_witness(ham.omega_h, mc).empty());
    }
}

TEST_CASE("semi-holonomy defects and constraints") {
    LagrangianSystem sys = harmonic_system();
    const Chart& jc = sys.chart;
    auto conn = EhresmannConnection::trivial(jc);

    // the horizontal volume itself: defects are minus the velocities
    auto zero_section = CandidateSection::zero(jc);
    SemiHolonomy sh = semi_holonomy(sys, zero_section);
    REQUIRE(sh.defects.size() == 2);
    CHECK(sh.defects[0] == -parse_expr("v1_1", jc));
    CHECK(sh.defects[1] == -parse_expr("v1_2", jc));
    CHECK(sh.s_constraints.size() == 2);

    // the solved family of the regular system forces semi-holonomy
    AnalysisReport rep = run_constraint_algorithm(sys.omega_l, DiffForm::volume(jc), conn, {});
    CHECK(rep.status == AnalysisStatus::FinalSubmanifold);
    CHECK(rep.constraints.empty());
    SemiHolonomy forced = semi_holonomy(sys, rep.canonical);
    CHECK(forced.s_constraints.empty());
}

TEST_CASE("semi-holonomy on the affine example needs the velocity matching") {
    LagrangianSystem sys = affine_system();
    const Chart& jc = sys.chart;
    auto conn = EhresmannConnection::trivial(jc);
    AnalysisReport rep = run_constraint_algorithm(sys.omega_l, DiffForm::volume(jc), conn, {});
    REQUIRE(rep.constraints.size() == 1);

    // representative with equal first-order coefficients: tangent to y1 = y2
    auto section = CandidateSection::zero(jc);
    section.coefficients()[0][0] = parse_expr("v1_1", jc);
    section.coefficients()[0][1] = parse_expr("v1_2", jc);
    section.coefficients()[1][0] = parse_expr("v1_1", jc);
    section.coefficients()[1][1] = parse_expr("v1_2", jc);

    // it satisfies the tangency-extended system modulo the constraint
    LinearProblem p = assemble(sys.omega_l, conn, rep.split.gamma, rep.constraints);
    for (int i = 0; i < p.rows(); ++i) {
        Expr resid(0);
        for (int a = 0; a < jc.fibre_dim(); ++a)
            for (int mu = 0; mu < 2; ++mu)
                resid = resid + p.A[i][a * 2 + mu] * section.gamma(a, mu);
        resid = resid - p.b[i];
        CHECK(reduce_modulo(resid, rep.constraints).is_zero());
    }

    SemiHolonomy sh = semi_holonomy(sys, section, rep.constraints);
    REQUIRE(sh.s_constraints.size() == 2);
    CHECK(sh.s_constraints[0] == parse_expr("v1_1 - v2_1", jc));
    CHECK(sh.s_constraints[1] == parse_expr("v1_2 - v2_2", jc));

    // on that locus the section is an Euler-Lagrange solution
    std::vector<Expr> locus = rep.constraints;
    locus.insert(locus.end(), sh.s_constraints.begin(), sh.s_constraints.end());
    std::vector<Expr> residuals = el_residual(sys, section, locus);
    for (auto& r : residuals) CHECK(r.is_zero());
}

TEST_CASE("euler-lagrange residual instantiation") {
    LagrangianSystem sys = harmonic_system();
    const Chart& jc = sys.chart;

    auto section = CandidateSection::zero(jc);
    section.coefficients()[0][0] = parse_expr("v1_1", jc);
    section.coefficients()[0][1] = parse_expr("v1_2", jc);
    // second-order block (fibre indices 1, 2 are v1_1, v1_2)
    section.coefficients()[1][0] = parse_expr("x1", jc);   // Gamma^{v1_1}_1
    section.coefficients()[2][1] = parse_expr("-x1", jc);  // Gamma^{v1_2}_2
    std::vector<Expr> r = el_residual(sys, section);
    REQUIRE(r.size() == 1);
    CHECK(r[0].is_zero());  // the trace x1 - x1 vanishes

    section.coefficients()[2][1] = parse_expr("x2", jc);
    r = el_residual(sys, section);
    CHECK(r[0] == parse_expr("x1 + x2", jc));  // residual is the trace

    // a lagrangian with no field or velocity dependence has residual zero
    Chart pc = harmonic_jet();
    LagrangianSystem free = build_lagrangian_system(pc, parse_expr("x1*x2", pc));
    auto any = CandidateSection::zero(pc);
    any.coefficients()[0][0] = parse_expr("v1_1", pc);
    any.coefficients()[0][1] = parse_expr("v1_2", pc);
    any.coefficients()[1][1] = parse_expr("y1*x2", pc);
    for (auto& e : el_residual(free, any)) CHECK(e.is_zero());

    // non-semi-holonomic sections are rejected
    auto bad = CandidateSection::zero(pc);
    CHECK_THROWS_AS((void)el_residual(free, bad), std::invalid_argument);
}

TEST_CASE("regular quadratic lagrangians have a 1-nondegenerate residual form") {
    // contraction matrix of the split residual on the coordinate frame has
    // full symbolic rank
    for (const char* src : {"(v1_1^2 + v1_2^2)/2", "(v1_1^2 + v1_2^2)/2 + y1*v1_1"}) {
        Chart c = harmonic_jet();
        LagrangianSystem sys = build_lagrangian_system(c, parse_expr(src, c));
        REQUIRE(sys.regularity == Regularity::Regular);
        auto conn = EhresmannConnection::trivial(c);
        auto split = split_omega(sys.omega_l, conn, DiffForm::volume(c));
        // rows: coordinate fields; columns: m-form components of i(e_i) residual
        std::vector<std::vector<Expr>> M;
        std::vector<Mask> cols;
        for (Mask m = 0; m < (Mask(1) << c.dim()); ++m)
            if (mask_count(m) == 2) cols.push_back(m);
        for (int i = 0; i < c.dim(); ++i) {
            DiffForm w = contract_vector(VectorField{{i, Expr(1)}}, split.residual);
            std::vector<Expr> row;
            for (Mask m : cols) row.push_back(w.coeff(m));
            M.push_back(std::move(row));
        }
        LinearProblem p;
        p.chart = c;
        p.unknowns = static_cast<int>(cols.size());
        p.A = M;
        p.b.assign(c.dim(), Expr(0));
        p.tags.assign(c.dim(), {});
        CHECK(solve(p).rank == c.dim());
    }
}

TEST_CASE("affine analysis of the singular example routes to the engine") {
    Chart c = Chart::plain({"x1", "x2"}, {"y1", "y2"});
    std::vector<std::vector<Expr>> f(2, std::vector<Expr>(2, Expr(0)));
    f[1][0] = parse_expr("x2*y1", c);
    f[1][1] = parse_expr("x2*y2", c);
    AffineLagrangian aff = AffineLagrangian::make(c, parse_expr("y1*y2", c), f);
    CHECK(aff.lagrangian ==
          parse_expr("x2*(y1*v1_2 + y2*v2_2) + y1*y2", aff.jet));

    AffineAnalysis an = affine_analyze(aff);
    CHECK(!an.nondegenerate);
    CHECK(an.routed_to_engine);
    CHECK(an.engine_agrees);
    REQUIRE(an.engine_report.has_value());
    REQUIRE(an.engine_report->constraints.size() == 1);
    CHECK(an.engine_report->constraints[0] == parse_expr("y1 - y2", c));
}

TEST_CASE("affine analysis with one regular block") {
    Chart c = Chart::plain({"x1", "x2"}, {"y1", "y2"});
    std::vector<std::vector<Expr>> f(2, std::vector<Expr>(2, Expr(0)));
    f[0][0] = parse_expr("-3*y2", c);
    f[0][1] = parse_expr("3*y1", c);
    AffineLagrangian aff = AffineLagrangian::make(c, Expr(0), f);
    AffineAnalysis an = affine_analyze(aff);
    CHECK(!an.nondegenerate);  // the second block is zero
    CHECK(an.routed_to_engine);
    CHECK(an.engine_agrees);
    CHECK(an.engine_report->constraints.empty());
    CHECK(an.solution_dimension == 2);  // n(m-1) distinct solutions survive

    // oracle: explicit row reduction of the 2x4 direct system
    // rows: 6 F^1_1 = 0, -6 F^2... the antisymmetric block pairs columns
    CHECK(an.system[0][1 * 2 + 0] == Expr(-6));
    CHECK(an.system[1][0 * 2 + 0] == Expr(6));
    CHECK(an.rhs[0].is_zero());
}

TEST_CASE("affine analysis with a constant form") {
    Chart c = Chart::plain({"x1", "x2"}, {"y1", "y2"});
    std::vector<std::vector<Expr>> f(2, std::vector<Expr>(2, Expr(0)));
    AffineLagrangian aff = AffineLagrangian::make(c, Expr(7), f);
    AffineAnalysis an = affine_analyze(aff);
    CHECK(!an.nondegenerate);
    CHECK(an.engine_report->constraints.empty());
    for (auto& e : an.rhs) CHECK(e.is_zero());
    for (auto& row : an.canonical_f)
        for (auto& e : row) CHECK(e.is_zero());
    CHECK(an.solution_dimension == 4);  // the full coefficient space
}

TEST_CASE("fully nondegenerate affine system solves in closed form") {
    Chart c = Chart::plain({"x1", "x2"}, {"y1", "y2"});
    std::vector<std::vector<Expr>> f(2, std::vector<Expr>(2, Expr(0)));
    f[0][0] = parse_expr("-3*y2", c);
    f[0][1] = parse_expr("3*y1", c);
    f[1][0] = parse_expr("-5*y2", c);
    f[1][1] = parse_expr("5*y1", c);
    AffineLagrangian aff = AffineLagrangian::make(c, parse_expr("y1^2 + y2", c), f);
    AffineAnalysis an = affine_analyze(aff);
    CHECK(an.nondegenerate);
    CHECK(!an.routed_to_engine);
    CHECK(an.engine_agrees);
    CHECK(an.family.conditions.empty());
    CHECK(an.solution_dimension == 2 * (2 - 1));
    // the canonical solution satisfies the direct system identically
    for (int A = 0; A < 2; ++A) {
        Expr acc(0);
        for (int B = 0; B < 2; ++B)
            for (int mu = 0; mu < 2; ++mu)
                acc = acc + an.system[A][B * 2 + mu] * an.canonical_f[B][mu];
        CHECK(acc == an.rhs[A]);
    }
}
