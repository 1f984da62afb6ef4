#pragma once

#include "presymp/constraints.hpp"
#include "presymp/parser.hpp"

namespace presymp {

enum class Regularity { Regular, AlmostRegularCandidate, Degenerate };

inline const char* to_string(Regularity r) {
    switch (r) {
        case Regularity::Regular: return "regular";
        case Regularity::AlmostRegularCandidate: return "almost-regular-candidate";
        case Regularity::Degenerate: return "degenerate";
    }
    return "?";
}

namespace detail {

// Determinant by fraction-free elimination; entries must be atom-free.
inline Expr sym_det(std::vector<std::vector<Expr>> M) {
    const int n = static_cast<int>(M.size());
    if (n == 0) return Expr(1);
    Expr prev(1), det(1);
    int sign = 1;
    for (int c = 0; c < n; ++c) {
        int pr = -1;
        for (int i = c; i < n; ++i)
            if (!M[i][c].is_zero()) {
                pr = i;
                break;
            }
        if (pr < 0) return Expr(0);
        if (pr != c) {
            std::swap(M[pr], M[c]);
            sign = -sign;
        }
        Expr pivot = M[c][c];
        for (int i = c + 1; i < n; ++i)
            for (int j = c + 1; j < n; ++j)
                M[i][j] = (M[i][j] * pivot - M[i][c] * M[c][j]) / prev;
        prev = pivot;
    }
    det = M[n - 1][n - 1];
    return sign < 0 ? -det : det;
}

} // namespace detail

/*
 * First-order Lagrangian system on a jet chart: the Poincare-Cartan forms,
 * the velocity Hessian, and a regularity classification backed by sampled
 * numeric rank (the submersion/connected-fibre half of almost-regularity is
 * not chart-checkable, hence "candidate").
 */
struct LagrangianSystem {
    Chart chart;  // first-jet kind
    Expr lagrangian;
    DiffForm theta{0};  // Poincare-Cartan m-form
    DiffForm omega_l{0};  // -d theta
    std::vector<std::vector<Expr>> hessian;  // (A,alpha)-major square block
    Regularity regularity = Regularity::Degenerate;
    std::vector<int> sampled_ranks;
    int hessian_size = 0;
};

// d^{m-1}x_alpha = i(d/dx^alpha) d^m x
inline DiffForm base_volume_contraction(const Chart& chart, int alpha) {
    VectorField v{{alpha, Expr(1)}};
    return contract_vector(v, DiffForm::volume(chart));
}

// Direct coordinate expansion of the Poincare-Cartan (m+1)-form from the
// second derivatives of L; an independent route used to cross-check -d theta.
inline DiffForm lagrangian_omega_direct(const Chart& chart, const Expr& L) {
    const int m = chart.base_dim(), n = chart.field_dim();
    DiffForm omega(m + 1);
    DiffForm vol = DiffForm::volume(chart);
    auto dcoord = [&](VarId v) { return DiffForm::coordinate_differential(chart, v); };
    for (int B = 0; B < n; ++B) {
        for (int nu = 0; nu < m; ++nu) {
            VarId vBnu = chart.jet(B, nu);
            for (int A = 0; A < n; ++A) {
                for (int al = 0; al < m; ++al) {
                    VarId vAal = chart.jet(A, al);
                    Expr h = L.diff(vAal).diff(vBnu);
                    if (h.is_zero()) continue;
                    // -H dv^B_nu ^ dy^A ^ d^{m-1}x_alpha
                    DiffForm t = wedge(wedge(dcoord(vBnu), dcoord(chart.field(A))),
                                       base_volume_contraction(chart, al));
                    omega = omega - h * t;
                    // +H v^A_alpha dv^B_nu ^ d^m x
                    omega = omega +
                            (h * Expr::symbol(vAal)) * wedge(dcoord(vBnu), vol);
                }
            }
        }
    }
    for (int B = 0; B < n; ++B) {
        for (int A = 0; A < n; ++A) {
            for (int al = 0; al < m; ++al) {
                Expr h = L.diff(chart.jet(A, al)).diff(chart.field(B));
                if (h.is_zero()) continue;
                // -H dy^B ^ dy^A ^ d^{m-1}x_alpha
                omega = omega - h * wedge(wedge(dcoord(chart.field(B)),
                                                dcoord(chart.field(A))),
                                          base_volume_contraction(chart, al));
                // +H v^A_alpha dy^B ^ d^m x
                omega = omega + (h * Expr::symbol(chart.jet(A, al))) *
                                    wedge(dcoord(chart.field(B)), vol);
            }
        }
        Expr c = -L.diff(chart.field(B));
        for (int al = 0; al < m; ++al)
            c = c + L.diff(chart.jet(B, al)).diff(chart.base(al));
        if (!c.is_zero()) omega = omega + c * wedge(dcoord(chart.field(B)), vol);
    }
    return omega;
}

inline LagrangianSystem build_lagrangian_system(const Chart& chart, const Expr& L,
                                                uint64_t seed = 0) {
    if (chart.kind() != ChartKind::FirstJet)
        throw std::invalid_argument("build_lagrangian_system: needs a first-jet chart");
    const int m = chart.base_dim(), n = chart.field_dim();
    LagrangianSystem sys;
    sys.chart = chart;
    sys.lagrangian = L;

    // theta = dL/dv^A_alpha dy^A ^ d^{m-1}x_alpha + (L - v dL/dv) d^m x
    DiffForm theta(m);
    Expr rest = L;
    for (int A = 0; A < n; ++A) {
        for (int al = 0; al < m; ++al) {
            Expr p = L.diff(chart.jet(A, al));
            rest = rest - Expr::symbol(chart.jet(A, al)) * p;
            if (p.is_zero()) continue;
            theta = theta + p * wedge(DiffForm::coordinate_differential(chart, chart.field(A)),
                                      base_volume_contraction(chart, al));
        }
    }
    theta = theta + rest * DiffForm::volume(chart);
    sys.theta = theta;
    sys.omega_l = -exterior_derivative(theta, chart);

    if (!(sys.omega_l == lagrangian_omega_direct(chart, L)))
        throw std::logic_error("build_lagrangian_system: -d theta disagrees with the "
                               "coordinate expansion");

    sys.hessian_size = n * m;
    sys.hessian.assign(sys.hessian_size, std::vector<Expr>(sys.hessian_size));
    for (int A = 0; A < n; ++A)
        for (int al = 0; al < m; ++al)
            for (int B = 0; B < n; ++B)
                for (int nu = 0; nu < m; ++nu)
                    sys.hessian[A * m + al][B * m + nu] =
                        L.diff(chart.jet(A, al)).diff(chart.jet(B, nu));

    // classification: symbolic determinant when decidable, sampled rank always
    bool has_atoms = false;
    for (auto& row : sys.hessian)
        for (auto& e : row) has_atoms = has_atoms || e.has_atom();
    std::mt19937_64 rng(seed ^ 0x5bf03635ULL);
    for (int s = 0; s < 5; ++s) {
        std::map<VarId, double> pt;
        for (VarId v : chart.coords()) pt[v] = random_rational(rng).to_double();
        try {
            sys.sampled_ranks.push_back(numeric_rank(sys.hessian, pt));
        } catch (const DivisionByZero&) {
            --s;
        }
    }
    bool constant_rank = true;
    for (int r : sys.sampled_ranks) constant_rank = constant_rank && r == sys.sampled_ranks[0];
    if (!has_atoms) {
        Expr det = detail::sym_det(sys.hessian);
        if (!det.is_zero())
            sys.regularity = Regularity::Regular;
        else
            sys.regularity = constant_rank ? Regularity::AlmostRegularCandidate
                                           : Regularity::Degenerate;
    } else {
        if (constant_rank && !sys.sampled_ranks.empty() &&
            sys.sampled_ranks[0] == sys.hessian_size)
            sys.regularity = Regularity::Regular;
        else
            sys.regularity = constant_rank ? Regularity::AlmostRegularCandidate
                                           : Regularity::Degenerate;
    }
    return sys;
}

/*
 * Legendre maps as coordinate assignments: the restricted map sends the
 * momentum chart's coordinates to expressions on the jet chart, the extended
 * map additionally fixes the affine momentum p = L - v dL/dv.  (The
 * Hamiltonian-section convention p = -H is the other sign; both values are
 * kept, they are not unified.)
 */
struct LegendreMap {
    Chart source;                       // jet chart
    Chart target;                       // momentum chart
    std::map<VarId, Expr> assignment;   // target coordinate -> jet expression
    Expr extended_p;                    // L - v dL/dv on the jet chart

    Expr pullback_scalar(const Expr& e) const { return e.substitute(assignment); }

    DiffForm pullback(const DiffForm& form) const {
        DiffForm out(form.degree());
        for (auto& [mask, c] : form.terms()) {
            DiffForm piece = DiffForm::scalar(pullback_scalar(c));
            for (int p = 0; p < target.dim(); ++p) {
                if (!(mask & (Mask(1) << p))) continue;
                Expr image = assignment.at(target.coords()[p]);
                DiffForm d(1);
                for (VarId w : image.free_symbols()) {
                    Expr comp = image.diff(w);
                    if (comp.is_zero()) continue;
                    int q = source.position(w);
                    if (q < 0) throw std::logic_error("pullback: image leaves the jet chart");
                    d.set(Mask(1) << q, d.coeff(Mask(1) << q) + comp);
                }
                piece = wedge(piece, d);
            }
            out = out + piece;
        }
        return out;
    }
};

inline LegendreMap legendre_map(const LagrangianSystem& sys) {
    const Chart& jc = sys.chart;
    const int m = jc.base_dim(), n = jc.field_dim();
    std::vector<std::string> base_names, field_names;
    for (int mu = 0; mu < m; ++mu) base_names.push_back(symbol_name(jc.base(mu)));
    for (int A = 0; A < n; ++A) field_names.push_back(symbol_name(jc.field(A)));
    LegendreMap fl;
    fl.source = jc;
    fl.target = Chart::momentum(base_names, field_names);
    for (int mu = 0; mu < m; ++mu)
        fl.assignment[fl.target.base(mu)] = Expr::symbol(jc.base(mu));
    for (int A = 0; A < n; ++A)
        fl.assignment[fl.target.field(A)] = Expr::symbol(jc.field(A));
    Expr p = sys.lagrangian;
    for (int A = 0; A < n; ++A)
        for (int mu = 0; mu < m; ++mu) {
            Expr pa = sys.lagrangian.diff(jc.jet(A, mu));
            fl.assignment[fl.target.momentum_coord(A, mu)] = pa;
            p = p - Expr::symbol(jc.jet(A, mu)) * pa;
        }
    fl.extended_p = p;
    return fl;
}

struct HamiltonianSystem {
    Chart chart;  // momentum kind
    Expr hamiltonian;
    DiffForm omega_h{0};
};

inline HamiltonianSystem build_hamiltonian_system(const Chart& chart, const Expr& H) {
    if (chart.kind() != ChartKind::Momentum)
        throw std::invalid_argument("build_hamiltonian_system: needs a momentum chart");
    const int m = chart.base_dim(), n = chart.field_dim();
    HamiltonianSystem sys;
    sys.chart = chart;
    sys.hamiltonian = H;
    DiffForm omega(m + 1);
    for (int A = 0; A < n; ++A)
        for (int al = 0; al < m; ++al) {
            DiffForm t = wedge(
                wedge(DiffForm::coordinate_differential(chart, chart.momentum_coord(A, al)),
                      DiffForm::coordinate_differential(chart, chart.field(A))),
                base_volume_contraction(chart, al));
            omega = omega - t;
        }
    DiffForm dH(1);
    for (VarId w : H.free_symbols()) {
        int q = chart.position(w);
        if (q < 0) throw std::invalid_argument("hamiltonian depends on a non-chart symbol");
        dH.set(Mask(1) << q, H.diff(w));
    }
    sys.omega_h = omega + wedge(dH, DiffForm::volume(chart));
    return sys;
}

// --- semi-holonomy and the Euler-Lagrange residual ---------------------------

struct SemiHolonomy {
    std::vector<Expr> defects;        // Gamma^{yA}_alpha - v^A_alpha, (A,alpha)-major
    std::vector<Expr> s_constraints;  // the defects that do not vanish (reduced)
};

/// Defect of the first-order block of a section against the jet velocities;
/// the nonvanishing defects cut out the submanifold where a semi-holonomic
/// representative exists.
inline SemiHolonomy semi_holonomy(const LagrangianSystem& sys, const CandidateSection& section,
                                  const std::vector<Expr>& modulo = {}) {
    const Chart& chart = sys.chart;
    const int m = chart.base_dim(), n = chart.field_dim();
    SemiHolonomy out;
    for (int A = 0; A < n; ++A)
        for (int al = 0; al < m; ++al) {
            Expr defect = section.gamma(A, al) - Expr::symbol(chart.jet(A, al));
            out.defects.push_back(defect);
            Expr red = reduce_modulo(defect, modulo);
            if (!red.is_zero()) out.s_constraints.push_back(red);
        }
    return out;
}

/// Euler-Lagrange residual per field index for a semi-holonomic section,
/// with the second-order coefficients read from the section's jet block.
inline std::vector<Expr> el_residual(const LagrangianSystem& sys,
                                     const CandidateSection& section,
                                     const std::vector<Expr>& modulo = {}) {
    const Chart& chart = sys.chart;
    const int m = chart.base_dim(), n = chart.field_dim();
    SemiHolonomy sh = semi_holonomy(sys, section, modulo);
    if (!sh.s_constraints.empty())
        throw std::invalid_argument("el_residual: section is not semi-holonomic on the given set");
    const Expr& L = sys.lagrangian;
    std::vector<Expr> residuals;
    for (int A = 0; A < n; ++A) {
        Expr r(0);
        for (int al = 0; al < m; ++al) {
            Expr dLdv = L.diff(chart.jet(A, al));
            r = r + dLdv.diff(chart.base(al));
            for (int B = 0; B < n; ++B) {
                r = r + dLdv.diff(chart.field(B)) * Expr::symbol(chart.jet(B, al));
                for (int nu = 0; nu < m; ++nu) {
                    // Gamma^B_{alpha nu}: jet-block coefficient of the section
                    const Expr& g2 = section.gamma(n + B * m + nu, al);
                    if (!g2.is_zero()) r = r + dLdv.diff(chart.jet(B, nu)) * g2;
                }
            }
        }
        r = r - L.diff(chart.field(A));
        residuals.push_back(reduce_modulo(r, modulo));
    }
    return residuals;
}

// --- affine Lagrangians -------------------------------------------------------

/*
 * L = a(x,y) + f^mu_B(x,y) v^B_mu, induced by the m-form
 * alpha = a d^m x + f^mu_B dy^B ^ d^{m-1}x_mu on the configuration chart.
 * The solvability system lives on the configuration chart directly.
 */
struct AffineLagrangian {
    Chart config;                        // plain chart (x, y)
    Chart jet;                           // induced first-jet chart
    Expr a;
    std::vector<std::vector<Expr>> f;    // f[mu][B]
    Expr lagrangian;                     // a + f^mu_B v^B_mu on the jet chart

    static AffineLagrangian make(const Chart& config, Expr a_in,
                                 std::vector<std::vector<Expr>> f_in) {
        if (config.kind() != ChartKind::Plain)
            throw std::invalid_argument("affine data lives on a plain chart");
        const int m = config.base_dim(), n = config.field_dim();
        if (static_cast<int>(f_in.size()) != m)
            throw std::invalid_argument("affine: need one f row per base index");
        for (auto& row : f_in)
            if (static_cast<int>(row.size()) != n)
                throw std::invalid_argument("affine: need one f entry per field");
        AffineLagrangian aff;
        aff.config = config;
        std::vector<std::string> bn, fn;
        for (int mu = 0; mu < m; ++mu) bn.push_back(symbol_name(config.base(mu)));
        for (int A = 0; A < n; ++A) fn.push_back(symbol_name(config.field(A)));
        aff.jet = Chart::first_jet(bn, fn);
        aff.a = std::move(a_in);
        aff.f = std::move(f_in);
        aff.lagrangian = aff.a;
        for (int mu = 0; mu < m; ++mu)
            for (int B = 0; B < n; ++B)
                aff.lagrangian =
                    aff.lagrangian + aff.f[mu][B] * Expr::symbol(aff.jet.jet(B, mu));
        return aff;
    }

    DiffForm alpha_form() const {
        const int m = config.base_dim(), n = config.field_dim();
        DiffForm alpha = a * DiffForm::volume(config);
        for (int mu = 0; mu < m; ++mu)
            for (int B = 0; B < n; ++B) {
                if (f[mu][B].is_zero()) continue;
                alpha = alpha +
                        f[mu][B] * wedge(DiffForm::coordinate_differential(config,
                                                                           config.field(B)),
                                         base_volume_contraction(config, mu));
            }
        return alpha;
    }

    // f^mu_{AB} = df^mu_B/dy^A - df^mu_A/dy^B
    std::vector<std::vector<Expr>> block(int mu) const {
        const int n = config.field_dim();
        std::vector<std::vector<Expr>> M(n, std::vector<Expr>(n));
        for (int A = 0; A < n; ++A)
            for (int B = 0; B < n; ++B)
                M[A][B] = f[mu][B].diff(config.field(A)) - f[mu][A].diff(config.field(B));
        return M;
    }
};

struct AffineAnalysis {
    std::vector<std::vector<Expr>> system;  // n x (n m), (B,mu) columns in a-major order
    std::vector<Expr> rhs;
    bool nondegenerate = false;             // every block f^mu is nonsingular
    SolutionFamily family;                  // of the direct system
    int solution_dimension = -1;            // nullspace dimension when solvable
    std::vector<std::vector<Expr>> canonical_f;   // F^A_mu of the particular solution
    std::vector<Expr> integrability;        // zeta^A_{mu nu} of the canonical solution
    bool routed_to_engine = false;
    std::optional<AnalysisReport> engine_report;
    bool engine_agrees = false;             // direct rows match engine rows up to scaling
};

namespace detail {

// engine row == lambda * direct row (including rhs) for a rational lambda?
inline bool rows_match_up_to_scale(const std::vector<Expr>& er, const Expr& eb,
                                   const std::vector<Expr>& dr, const Expr& db) {
    Expr lambda(0);
    for (size_t j = 0; j <= dr.size(); ++j) {
        const Expr& d = j < dr.size() ? dr[j] : db;
        const Expr& e = j < dr.size() ? er[j] : eb;
        if (d.is_zero()) {
            if (!e.is_zero()) return false;
            continue;
        }
        Expr q = e / d;
        if (!q.is_rational_constant()) return false;
        if (lambda.is_zero())
            lambda = q;
        else if (!(lambda == q))
            return false;
    }
    return true;
}

} // namespace detail

inline AffineAnalysis affine_analyze(const AffineLagrangian& aff,
                                     const AnalysisOptions& opts = {}) {
    const Chart& chart = aff.config;
    const int m = chart.base_dim(), n = chart.field_dim();
    AffineAnalysis out;

    // the n x (n m) system on the configuration chart
    out.system.assign(n, std::vector<Expr>(n * m, Expr(0)));
    out.rhs.assign(n, Expr(0));
    for (int A = 0; A < n; ++A) {
        for (int B = 0; B < n; ++B)
            for (int mu = 0; mu < m; ++mu)
                out.system[A][B * m + mu] =
                    aff.f[mu][A].diff(chart.field(B)) - aff.f[mu][B].diff(chart.field(A));
        Expr r = aff.a.diff(chart.field(A));
        for (int nu = 0; nu < m; ++nu) r = r - aff.f[nu][A].diff(chart.base(nu));
        out.rhs[A] = r;
    }

    out.nondegenerate = true;
    for (int mu = 0; mu < m && out.nondegenerate; ++mu) {
        auto blk = aff.block(mu);
        bool atoms = false;
        for (auto& row : blk)
            for (auto& e : row) atoms = atoms || e.has_atom();
        if (atoms)
            throw NonDecidableCoefficient("affine block regularity is not decidable with atoms");
        out.nondegenerate = !detail::sym_det(blk).is_zero();
    }

    // the generic engine on the same data: Omega = -d alpha, trivial connection
    DiffForm Omega = -exterior_derivative(aff.alpha_form(), chart);
    auto conn = EhresmannConnection::trivial(chart);
    LinearProblem engine = assemble(Omega, conn, split_omega(Omega, conn,
                                                             DiffForm::volume(chart)).gamma,
                                    {});
    out.engine_agrees = engine.rows() == n;
    for (int A = 0; A < n && out.engine_agrees; ++A)
        out.engine_agrees = detail::rows_match_up_to_scale(engine.A[A], engine.b[A],
                                                           out.system[A], out.rhs[A]);

    if (!out.nondegenerate) {
        out.routed_to_engine = true;
        out.engine_report = run_constraint_algorithm(Omega, DiffForm::volume(chart), conn, opts);
        out.family = out.engine_report->family;
        out.solution_dimension = static_cast<int>(out.family.nullspace.size());
    } else {
        LinearProblem direct;
        direct.chart = chart;
        direct.unknowns = n * m;
        direct.A = out.system;
        direct.b = out.rhs;
        direct.tags.assign(n, {});
        out.family = solve(direct);
        if (out.family.conditions.empty())
            out.solution_dimension = static_cast<int>(out.family.nullspace.size());
    }

    // canonical F and its integrability obstruction (the flatness expression
    // of the induced connection): zeta^A_{mu nu} = dF^A_nu/dx^mu - dF^A_mu/dx^nu
    //                                            + F^B_mu dF^A_nu/dy^B - F^B_nu dF^A_mu/dy^B
    const std::vector<Expr>& part =
        out.routed_to_engine ? out.engine_report->family.particular : out.family.particular;
    if (static_cast<int>(part.size()) == n * m) {
        out.canonical_f.assign(n, std::vector<Expr>(m));
        for (int A = 0; A < n; ++A)
            for (int mu = 0; mu < m; ++mu) out.canonical_f[A][mu] = part[A * m + mu];
        for (int mu = 0; mu < m; ++mu)
            for (int nu = mu + 1; nu < m; ++nu)
                for (int A = 0; A < n; ++A) {
                    Expr z = out.canonical_f[A][nu].diff(chart.base(mu)) -
                             out.canonical_f[A][mu].diff(chart.base(nu));
                    for (int B = 0; B < n; ++B) {
                        z = z + out.canonical_f[B][mu] *
                                    out.canonical_f[A][nu].diff(chart.field(B));
                        z = z - out.canonical_f[B][nu] *
                                    out.canonical_f[A][mu].diff(chart.field(B));
                    }
                    out.integrability.push_back(z);
                }
    }
    return out;
}

} // namespace presymp
