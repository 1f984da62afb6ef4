#pragma once

#include "presymp/model.hpp"

namespace presymp {

/*
 * Model-to-system builder and the analysis entry points shared by the CLI
 * commands and the tests.  Every path is deterministic for a fixed model
 * file and seed.
 */
struct BuiltSystem {
    Chart chart;  // analysis chart: first-jet, momentum, or plain
    EhresmannConnection connection;
    DiffForm omega{0};       // pulled-back base volume
    DiffForm omega_form{0};  // the (m+1)-form
    std::optional<LagrangianSystem> lagrangian;
    std::optional<HamiltonianSystem> hamiltonian;
    std::optional<AffineLagrangian> affine;
    AnalysisOptions opts;
};

namespace detail {

// parse an expression payload, naming the model field on failure
inline Expr parse_payload(const std::string& src, const Chart& chart, const std::string& what) {
    try {
        return parse_expr(src, chart);
    } catch (const ParseError& e) {
        throw std::invalid_argument("in " + what + " expression \"" + src + "\": " + e.what());
    }
}

inline DiffForm omega_from_entries(const ModelFile& mf, const Chart& chart) {
    DiffForm omega(chart.base_dim() + 1);
    for (auto& [index_name, src] : mf.omega_entries) {
        Mask mask = 0;
        int sign = 1;
        std::istringstream is(index_name);
        std::string part;
        while (std::getline(is, part, '^')) {
            part = ModelParser::strip(part);
            if (part.size() < 2 || part[0] != 'd')
                throw std::invalid_argument("omega index '" + index_name +
                                            "' must wedge d<coordinate> factors");
            std::string coord = part.substr(1);
            if (!chart.has_name(coord))
                throw std::invalid_argument("omega index uses unknown coordinate '" + coord + "'");
            Mask bit = Mask(1) << chart.position(chart.lookup(coord));
            if (mask & bit)
                throw std::invalid_argument("omega index '" + index_name + "' repeats a factor");
            sign *= merge_sign(mask, bit);
            mask |= bit;
        }
        if (mask_count(mask) != chart.base_dim() + 1)
            throw std::invalid_argument("omega index '" + index_name + "' must have degree m+1");
        Expr c = parse_payload(src, chart, "omega coefficient");
        if (sign < 0) c = -c;
        omega.set(mask, omega.coeff(mask) + c);
    }
    return omega;
}

} // namespace detail

inline BuiltSystem build_system(const ModelFile& mf) {
    BuiltSystem bs;
    switch (mf.kind) {
        case ModelKind::Lagrangian: {
            bs.chart = Chart::first_jet(mf.base, mf.fields);
            bs.lagrangian =
                build_lagrangian_system(bs.chart,
                                        detail::parse_payload(mf.lagrangian, bs.chart, "lagrangian"),
                                        mf.seed);
            bs.omega_form = bs.lagrangian->omega_l;
            break;
        }
        case ModelKind::Hamiltonian: {
            bs.chart = Chart::momentum(mf.base, mf.fields);
            bs.hamiltonian =
                build_hamiltonian_system(
                bs.chart, detail::parse_payload(mf.hamiltonian, bs.chart, "hamiltonian"));
            bs.omega_form = bs.hamiltonian->omega_h;
            break;
        }
        case ModelKind::Premultisymplectic: {
            bs.chart = Chart::plain(mf.base, mf.fields);
            bs.omega_form = detail::omega_from_entries(mf, bs.chart);
            break;
        }
        case ModelKind::Affine: {
            bs.chart = Chart::plain(mf.base, mf.fields);
            const int m = bs.chart.base_dim(), n = bs.chart.field_dim();
            std::vector<std::vector<Expr>> f(m, std::vector<Expr>(n, Expr(0)));
            for (auto& [mu_name, field_name, src] : mf.affine_f) {
                if (!bs.chart.has_name(mu_name) || !bs.chart.has_name(field_name))
                    throw std::invalid_argument("affine f entry names unknown coordinates");
                int mu = bs.chart.position(bs.chart.lookup(mu_name));
                int a = bs.chart.position(bs.chart.lookup(field_name)) - m;
                if (mu < 0 || mu >= m || a < 0)
                    throw std::invalid_argument("affine f entry '" + mu_name + " " + field_name +
                                                "' is not (base, field)");
                f[mu][a] = detail::parse_payload(src, bs.chart, "affine f");
            }
            bs.affine = AffineLagrangian::make(bs.chart,
                                               detail::parse_payload(mf.affine_a, bs.chart, "affine a"),
                                               std::move(f));
            bs.omega_form = -exterior_derivative(bs.affine->alpha_form(), bs.chart);
            break;
        }
    }
    bs.omega = DiffForm::volume(bs.chart);

    bs.connection = EhresmannConnection::trivial(bs.chart);
    for (auto& [fib, bas, src] : mf.connection_entries) {
        if (!bs.chart.has_name(fib) || !bs.chart.has_name(bas))
            throw std::invalid_argument("connection entry names unknown coordinates");
        int a = bs.chart.position(bs.chart.lookup(fib)) - bs.chart.base_dim();
        int mu = bs.chart.position(bs.chart.lookup(bas));
        if (a < 0 || mu >= bs.chart.base_dim())
            throw std::invalid_argument("connection entry '" + fib + " " + bas +
                                        "' is not (fibre, base)");
        bs.connection.set_coefficient(a, mu, detail::parse_payload(src, bs.chart, "connection"));
    }

    bs.opts.max_generations = mf.max_generations;
    bs.opts.seed = mf.seed;
    return bs;
}

struct ModelAnalysis {
    ModelFile model;
    BuiltSystem system;
    AnalysisReport report;
    std::optional<AffineAnalysis> affine_result;
    std::optional<SemiHolonomy> semiholonomy;
    std::vector<Expr> el_residuals;
    bool el_applicable = false;
};

inline ModelAnalysis analyze_model(const ModelFile& mf) {
    ModelAnalysis ma;
    ma.model = mf;
    ma.system = build_system(mf);
    ma.report = run_constraint_algorithm(ma.system.omega_form, ma.system.omega,
                                         ma.system.connection, ma.system.opts);
    if (mf.kind == ModelKind::Premultisymplectic &&
        ma.system.omega_form.degree() < ma.system.chart.dim() &&
        !exterior_derivative(ma.system.omega_form, ma.system.chart).is_zero())
        ma.report.warnings.push_back("the given (m+1)-form is not closed");
    run_integrability_algorithm(ma.report, ma.report.canonical, ma.system.opts);
    if (ma.system.lagrangian) {
        ma.semiholonomy =
            semi_holonomy(*ma.system.lagrangian, ma.report.canonical, ma.report.constraints);
        ma.el_applicable = ma.semiholonomy->s_constraints.empty();
        if (ma.el_applicable)
            ma.el_residuals =
                el_residual(*ma.system.lagrangian, ma.report.canonical, ma.report.constraints);
    }
    if (ma.system.affine) ma.affine_result = affine_analyze(*ma.system.affine, ma.system.opts);
    return ma;
}

inline int exit_code(AnalysisStatus s) {
    switch (s) {
        case AnalysisStatus::FinalSubmanifold: return 0;
        case AnalysisStatus::NoSolution: return 2;
        case AnalysisStatus::IterationLimit:
        case AnalysisStatus::StratificationAmbiguous: return 3;
    }
    return 3;
}

// --- verification suite (the `check` command) --------------------------------

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

inline CheckResult numeric_spot_check(const ModelAnalysis& ma);
inline GridSection project_fields(const GridSection& sec, int nfields);

inline std::vector<CheckResult> run_checks(const ModelFile& mf) {
    std::vector<CheckResult> out;
    BuiltSystem bs = build_system(mf);
    const Chart& chart = bs.chart;

    OmegaSplit split = split_omega(bs.omega_form, bs.connection, bs.omega);
    {
        CheckResult c{"bidegree-assumption", split.bidegree_ok, ""};
        if (!split.bidegree_ok)
            c.detail = "violating vertical triple (" + split.violating_triple[0] + ", " +
                       split.violating_triple[1] + ", " + split.violating_triple[2] + ")";
        out.push_back(c);
    }
    {
        DiffForm rebuilt = wedge(bs.omega, split.gamma) + split.residual;
        CheckResult c{"splitting-reconstruction", rebuilt == bs.omega_form, ""};
        c.detail = "gamma = " + form_to_string(split.gamma, chart) +
                   "; residual = " + form_to_string(split.residual, chart);
        out.push_back(c);
    }
    if (bs.lagrangian) {
        DiffForm direct = lagrangian_omega_direct(chart, bs.lagrangian->lagrangian);
        out.push_back({"coordinate-expansion-cross-build",
                       direct == bs.lagrangian->omega_l,
                       "two routes to the same (m+1)-form"});
        // triple-vertical contraction is structurally zero for these builds
        out.push_back({"lagrangian-vertical-bidegree",
                       triple_vertical_witness(bs.lagrangian->omega_l, chart).empty(), ""});
    }
    if (bs.hamiltonian)
        out.push_back({"hamiltonian-vertical-bidegree",
                       triple_vertical_witness(bs.hamiltonian->omega_h, chart).empty(), ""});
    if (!split.bidegree_ok) return out;

    ModelAnalysis ma = analyze_model(mf);
    if (bs.affine) {
        const AffineAnalysis& ar = *ma.affine_result;
        CheckResult c{"affine-engine-agreement", ar.engine_agrees, ""};
        if (ar.nondegenerate) {
            const int n = chart.field_dim(), m = chart.base_dim();
            bool dims = ar.solution_dimension == n * (m - 1) &&
                        ma.report.constraints.empty() &&
                        static_cast<int>(ma.report.family.nullspace.size()) == n * (m - 1);
            c.pass = c.pass && dims;
            c.detail = "nondegenerate; solution dimension " +
                       std::to_string(ar.solution_dimension) + " vs n(m-1) = " +
                       std::to_string(n * (m - 1));
        } else {
            c.detail = "singular blocks routed to the constraint engine";
        }
        out.push_back(c);
    }

    if (!mf.grid.empty() && !mf.start.empty()) {
        try {
            out.push_back(numeric_spot_check(ma));
        } catch (const std::exception& ex) {
            out.push_back({"numeric-integration", false, ex.what()});
        }
    }
    return out;
}

// Fibre chart of the analysis chart: base coordinates plus every fibre
// coordinate as a plain field, which is where integral sections live.
inline Chart fibre_chart(const Chart& chart) {
    std::vector<std::string> base, fields;
    for (int mu = 0; mu < chart.base_dim(); ++mu) base.push_back(symbol_name(chart.base(mu)));
    for (int a = 0; a < chart.fibre_dim(); ++a) fields.push_back(symbol_name(chart.fibre(a)));
    return Chart::plain(base, fields);
}

struct IntegrationSetup {
    Chart config;  // fibre chart
    std::vector<std::vector<Expr>> F;
    std::map<VarId, double> start;
    GridSpec grid;
};

inline IntegrationSetup integration_setup(const ModelAnalysis& ma,
                                          const std::vector<std::pair<std::string, double>>& start,
                                          const std::vector<std::tuple<std::string, double, double, int>>& grid) {
    const Chart& chart = ma.system.chart;
    IntegrationSetup setup;
    setup.config = fibre_chart(chart);
    const int m = chart.base_dim(), nf = chart.fibre_dim();
    setup.F.assign(nf, std::vector<Expr>(m));
    for (int a = 0; a < nf; ++a)
        for (int mu = 0; mu < m; ++mu)
            setup.F[a][mu] =
                ma.system.connection.coefficient(a, mu) + ma.report.canonical.gamma(a, mu);

    for (auto& [name, v] : start) {
        if (!setup.config.has_name(name))
            throw std::invalid_argument("start value names unknown coordinate '" + name + "'");
        setup.start[setup.config.lookup(name)] = v;
    }
    for (int mu = 0; mu < m; ++mu) {
        VarId x = setup.config.base(mu);
        bool found = false;
        GridAxis axis;
        for (auto& [name, mn, mx, st] : grid) {
            if (name == symbol_name(x)) {
                axis = GridAxis{mn, mx, st};
                found = true;
            }
        }
        if (!found) throw std::invalid_argument("grid misses base axis '" + symbol_name(x) + "'");
        if (axis.steps < 1 || !(axis.max > axis.min))
            throw std::invalid_argument("bad grid axis '" + symbol_name(x) + "'");
        setup.grid.axes.push_back(axis);
        // integration is anchored at the grid origin
        setup.start[x] = axis.min;
    }

    // the start point must sit on the final constraint set
    for (auto& xi : ma.report.constraints) {
        double v = xi.eval_double(setup.start);
        if (std::abs(v) > 1e-8)
            throw std::invalid_argument("start point violates final constraint " + xi.to_string());
    }
    // and the solution must be integrable there
    for (auto& z : ma.report.integrability_constraints) {
        double v = z.eval_double(setup.start);
        if (std::abs(v) > 1e-8)
            throw std::invalid_argument("solution is not integrable at the start point (" +
                                        z.to_string() + " does not vanish)");
    }
    return setup;
}

inline GridSection run_integration(const ModelAnalysis& ma,
                                   const std::vector<std::pair<std::string, double>>& start,
                                   const std::vector<std::tuple<std::string, double, double, int>>& grid) {
    IntegrationSetup setup = integration_setup(ma, start, grid);
    return integrate_section(setup.config, setup.F, setup.start, setup.grid);
}

inline CheckResult numeric_spot_check(const ModelAnalysis& ma) {
    GridSection sec = run_integration(ma, ma.model.start, ma.model.grid);
    std::ostringstream detail;
    bool pass = true;
    detail << "path defect " << sec.path_defect;
    if (ma.report.integrability == IntegrabilityStatus::FlatOnFinal && sec.path_defect > 1e-8) {
        pass = false;
        detail << " exceeds 1e-8 for a flat solution";
    }

    if (ma.system.lagrangian && ma.el_applicable) {
        // finite-difference Euler-Lagrange residual at h, 2h, 4h on the field block
        const Chart& jc = ma.system.lagrangian->chart;
        std::vector<double> residuals;
        for (int coarsen : {4, 2, 1}) {
            GridSpec g = sec.grid;
            bool ok = true;
            for (auto& ax : g.axes) {
                if (ax.steps % coarsen || ax.steps / coarsen < 4) ok = false;
                ax.steps /= coarsen;
            }
            if (!ok) continue;
            IntegrationSetup setup = integration_setup(ma, ma.model.start, ma.model.grid);
            GridSection coarse = integrate_section(setup.config, setup.F, setup.start, g);
            GridSection fields = project_fields(coarse, jc.field_dim());
            residuals.push_back(numeric_el_check(*ma.system.lagrangian, fields).max_residual);
        }
        if (!residuals.empty()) {
            double finest = residuals.back();
            detail << "; EL residual " << finest;
            bool machine_flat = true;
            for (double r : residuals) machine_flat = machine_flat && r < 5e-9;
            if (machine_flat) {
                detail << " (exact to rounding)";
            } else if (residuals.size() == 3) {
                double o1 = std::log2(residuals[0] / residuals[1]);
                double o2 = std::log2(residuals[1] / residuals[2]);
                detail << "; convergence order " << o1 << ", " << o2;
                pass = pass && std::abs(o1 - 2.0) <= 0.2 && std::abs(o2 - 2.0) <= 0.2;
            }
        }
    }
    return {"numeric-integration", pass, detail.str()};
}

// Keep only the leading `nfields` field columns of a grid section (the
// y-block of a jet-fibre integration), on the matching plain chart.
inline GridSection project_fields(const GridSection& sec, int nfields) {
    std::vector<std::string> base, fields;
    for (int mu = 0; mu < sec.config.base_dim(); ++mu)
        base.push_back(symbol_name(sec.config.base(mu)));
    for (int A = 0; A < nfields; ++A) fields.push_back(symbol_name(sec.config.field(A)));
    GridSection out;
    out.grid = sec.grid;
    out.config = Chart::plain(base, fields);
    out.start = sec.start;
    out.path_defect = sec.path_defect;
    out.values.reserve(sec.values.size());
    for (auto& row : sec.values)
        out.values.emplace_back(row.begin(), row.begin() + nfields);
    return out;
}

} // namespace presymp
