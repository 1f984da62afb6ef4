#pragma once

#include "presymp/linsolve.hpp"

namespace presymp {

// --- reduction against an ordered constraint list ---------------------------

namespace detail {

// Multivariate division remainder of p against the ordered list gs, computed
// fraction-free: the result is a positive rational multiple of the exact
// remainder, which is all the zero-set arguments here need.
inline Poly reduce_poly(Poly p, const std::vector<Poly>& gs) {
    Poly r;
    while (!p.is_zero()) {
        bool divided = false;
        for (const Poly& g : gs) {
            if (g.is_zero()) continue;
            auto mq = Monomial::divide(p.leading_monomial(), g.leading_monomial());
            if (!mq) continue;
            BigInt cg = g.leading_coeff(), cp = p.leading_coeff();
            BigInt d = BigInt::gcd(cg, cp);
            BigInt a = cg / d, f = cp / d;
            if (a.negative()) { a = -a; f = -f; }
            p = p * a - Poly::term(*mq, f) * g;
            r = r * a;
            divided = true;
            break;
        }
        if (!divided) {
            Poly lt = p.leading_term();
            r = r + lt;
            p = p - lt;
        }
    }
    return r;
}

// p / gcd(p, all first partials): same zero set, no repeated factors.  A
// constraint like q^3 would otherwise absorb q-multiples during reduction
// and silently swallow the next generation.
inline Poly squarefree_part(const Poly& p) {
    std::vector<VarId> vars;
    p.variables(vars);
    if (vars.empty()) return p;
    Poly g = p;
    for (VarId v : vars) {
        if (g.is_constant()) return p;
        g = Poly::gcd(g, p.derivative(v));
    }
    if (g.is_constant()) return p;
    return *p.divide_exact(g);
}

inline Poly normalize_zero_set(Poly p) {
    if (p.is_zero()) return p;
    p = squarefree_part(p);
    BigInt c = p.content();
    if (!c.is_one()) p = *p.divide_exact(Poly(c));
    if (p.leading_coeff().negative()) p = -p;
    return p;
}

} // namespace detail

/// Zero-set representative of an expression: the primitive, sign-normalized
/// numerator polynomial (poles of the denominator are outside the chart's
/// working locus by convention).
inline Expr constraint_representative(const Expr& e) {
    return Expr::from_poly(detail::normalize_zero_set(e.num()));
}

/// Remainder of e modulo the ordered constraint list, multivariate division
/// term by term; zero iff e reduces away. Result is normalized.
inline Expr reduce_modulo(const Expr& e, const std::vector<Expr>& constraints) {
    std::vector<Poly> gs;
    gs.reserve(constraints.size());
    for (const Expr& c : constraints) gs.push_back(c.num());
    return Expr::from_poly(detail::normalize_zero_set(detail::reduce_poly(e.num(), gs)));
}

// --- sampling points on a constraint variety --------------------------------

/*
 * Draws sample points of the joint zero set.  Strategy per point: random
 * rational assignment, then walk the constraints in order solving each for
 * some coordinate it is linear in (exact rational solve); if the walk keeps
 * breaking earlier constraints, fall back to a damped Gauss-Newton run in
 * doubles.  Failures yield fewer points than requested.
 */
class VarietySampler {
public:
    struct Point {
        std::map<VarId, Rational> exact;  // valid when is_exact
        std::map<VarId, double> approx;   // always valid
        bool is_exact = false;
    };

    static std::vector<Point> sample(const std::vector<Expr>& constraints,
                                     const std::vector<VarId>& symbols, uint64_t seed,
                                     int count) {
        std::vector<Point> pts;
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        for (int k = 0; k < count; ++k) {
            bool found = false;
            for (int attempt = 0; attempt < 24 && !found; ++attempt) {
                std::map<VarId, Rational> assign;
                for (VarId v : symbols) assign[v] = random_rational(rng);
                if (solve_exact(constraints, symbols, assign)) {
                    Point p;
                    p.exact = assign;
                    p.is_exact = true;
                    for (auto& [v, q] : assign) p.approx[v] = q.to_double();
                    pts.push_back(std::move(p));
                    found = true;
                }
            }
            if (!found) {
                Point p;
                if (solve_newton(constraints, symbols, rng, p.approx)) pts.push_back(std::move(p));
            }
        }
        return pts;
    }

private:
    static bool solve_exact(const std::vector<Expr>& constraints,
                            const std::vector<VarId>& symbols,
                            std::map<VarId, Rational>& assign) {
        for (size_t i = 0; i < constraints.size(); ++i) {
            const Expr& xi = constraints[i];
            if (xi.eval(assign).is_zero()) continue;
            bool fixed = false;
            for (VarId v : symbols) {
                if (xi.num().degree_in(v) != 1) continue;
                Expr slope = xi.diff(v);
                if (slope.depends_on(v)) continue;  // linear coefficient must be v-free
                Rational a = slope.eval(assign);
                if (a.is_zero()) continue;
                std::map<VarId, Rational> trial = assign;
                trial[v] = Rational(0);
                Expr rest = xi.substitute({{v, Expr(0)}});
                trial[v] = -(rest.eval(assign)) / a;
                // earlier constraints must survive the adjustment
                bool ok = true;
                for (size_t j = 0; j <= i; ++j)
                    if (!constraints[j].eval(trial).is_zero()) {
                        ok = false;
                        break;
                    }
                if (ok) {
                    assign = std::move(trial);
                    fixed = true;
                    break;
                }
            }
            if (!fixed) return false;
        }
        return true;
    }

    static bool solve_newton(const std::vector<Expr>& constraints,
                             const std::vector<VarId>& symbols, std::mt19937_64& rng,
                             std::map<VarId, double>& out) {
        if (constraints.empty()) return false;
        const size_t n = symbols.size(), k = constraints.size();
        std::vector<std::map<VarId, Expr>> grad;  // not needed; use diff on the fly
        std::uniform_real_distribution<double> uni(-2.0, 2.0);
        for (int restart = 0; restart < 8; ++restart) {
            std::map<VarId, double> x;
            for (VarId v : symbols) x[v] = uni(rng);
            double res = residual(constraints, x);
            for (int it = 0; it < 200 && res > 1e-26; ++it) {
                // minimal-norm Gauss-Newton step: J^T (J J^T)^-1 r
                std::vector<std::vector<double>> J(k, std::vector<double>(n));
                std::vector<double> r(k);
                try {
                    for (size_t i = 0; i < k; ++i) {
                        r[i] = constraints[i].eval_double(x);
                        for (size_t j = 0; j < n; ++j)
                            J[i][j] = constraints[i].diff(symbols[j]).eval_double(x);
                    }
                } catch (const DivisionByZero&) {
                    break;
                }
                std::vector<std::vector<double>> G(k, std::vector<double>(k + 1, 0.0));
                for (size_t i = 0; i < k; ++i) {
                    for (size_t j = 0; j < k; ++j)
                        for (size_t t = 0; t < n; ++t) G[i][j] += J[i][t] * J[j][t];
                    G[i][i] += 1e-12;
                    G[i][k] = r[i];
                }
                if (!gauss(G)) break;
                double step = 1.0;
                for (int halvings = 0; halvings < 30; ++halvings) {
                    std::map<VarId, double> trial = x;
                    for (size_t j = 0; j < n; ++j) {
                        double dj = 0;
                        for (size_t i = 0; i < k; ++i) dj += J[i][j] * G[i][k];
                        trial[symbols[j]] -= step * dj;
                    }
                    double tres = residual(constraints, trial);
                    if (tres < res) {
                        x = std::move(trial);
                        res = tres;
                        break;
                    }
                    step *= 0.5;
                }
            }
            if (res <= 1e-22) {
                out = std::move(x);
                return true;
            }
        }
        return false;
    }

    static double residual(const std::vector<Expr>& cs, const std::map<VarId, double>& x) {
        double s = 0;
        try {
            for (auto& c : cs) {
                double v = c.eval_double(x);
                s += v * v;
            }
        } catch (const DivisionByZero&) {
            return 1e300;
        }
        return s;
    }

    static bool gauss(std::vector<std::vector<double>>& M) {
        const size_t k = M.size();
        for (size_t c = 0; c < k; ++c) {
            size_t best = c;
            for (size_t i = c + 1; i < k; ++i)
                if (std::abs(M[i][c]) > std::abs(M[best][c])) best = i;
            if (std::abs(M[best][c]) < 1e-14) return false;
            std::swap(M[best], M[c]);
            for (size_t i = 0; i < k; ++i) {
                if (i == c) continue;
                double f = M[i][c] / M[c][c];
                for (size_t j = c; j <= k; ++j) M[i][j] -= f * M[c][j];
            }
        }
        for (size_t c = 0; c < k; ++c) M[c][k] /= M[c][c];
        return true;
    }
};

// --- the constraint algorithm -----------------------------------------------

struct AnalysisOptions {
    int max_generations = 16;
    uint64_t seed = 0;
    int samples = 5;
};

enum class AnalysisStatus {
    FinalSubmanifold,
    NoSolution,          // constraint count forces dim <= m-1
    IterationLimit,
    StratificationAmbiguous,
};

enum class IntegrabilityStatus {
    NotRun,
    FlatOnFinal,             // all bracket obstructions vanish on the final set
    FlatOnSubmanifold,       // a proper integrability chain stabilized
    NoIntegrableSubmanifold, // chain emptied out or crossed the dimension bound
    IterationLimit,
};

struct ConstraintGeneration {
    int index = 0;
    std::vector<Expr> constraints;
    std::vector<std::string> provenance;  // one note per constraint
};

struct AnalysisReport {
    Chart chart;
    EhresmannConnection connection;
    DiffForm base_volume{0};   // omega
    DiffForm omega_form{0};    // the closed (m+1)-form driving the equations
    OmegaSplit split;
    std::vector<ConstraintGeneration> generations;
    std::vector<Expr> constraints;  // accumulated, in generation order
    SolutionFamily family;          // solved on the final constraint set
    CandidateSection canonical;     // particular solution, free parameters zero
    AnalysisStatus status = AnalysisStatus::IterationLimit;
    int generations_run = 0;

    IntegrabilityStatus integrability = IntegrabilityStatus::NotRun;
    std::vector<ConstraintGeneration> integrability_generations;
    std::vector<Expr> integrability_constraints;  // accumulated zeta-chain

    std::vector<std::string> warnings;
};

namespace detail {

struct GenerationStep {
    SolutionFamily family;
    std::vector<Expr> fresh;  // new, reduced, independent constraints
    std::vector<std::string> provenance;
    bool ambiguous = false;
};

inline GenerationStep constraint_step(const DiffForm& Omega, const EhresmannConnection& conn,
                                      const DiffForm& gamma, const std::vector<Expr>& accumulated,
                                      const AnalysisOptions& opts, int generation) {
    GenerationStep out;
    LinearProblem prob = assemble(Omega, conn, gamma, accumulated);
    out.family = solve(prob);

    std::vector<VarietySampler::Point> points;
    bool points_ready = false;
    std::vector<Expr> known = accumulated;
    for (size_t ci = 0; ci < out.family.conditions.size(); ++ci) {
        Expr red = reduce_modulo(out.family.conditions[ci], known);
        if (red.is_zero()) continue;
        if (red.is_rational_constant()) {
            // a nonzero constant condition: empty zero set
            out.fresh.push_back(red);
            out.provenance.push_back("inconsistent consistency row");
            known.push_back(red);
            continue;
        }
        if (!points_ready) {
            std::vector<VarId> syms = conn.chart().coords();
            points = VarietySampler::sample(accumulated, syms, opts.seed + generation, opts.samples);
            points_ready = true;
        }
        bool vanishes_numerically = !points.empty();
        for (auto& pt : points) {
            double v;
            try {
                v = red.eval_double(pt.approx);
            } catch (const DivisionByZero&) {
                vanishes_numerically = false;
                break;
            }
            if (std::abs(v) > 1e-9) {
                vanishes_numerically = false;
                break;
            }
        }
        if (vanishes_numerically) {
            // symbolically nonzero but numerically flat on the sampled variety:
            // a stratified situation the algorithm does not resolve
            out.ambiguous = true;
            continue;
        }
        out.fresh.push_back(red);
        out.provenance.push_back(std::string("consistency row ") + std::to_string(ci));
        known.push_back(red);
    }
    return out;
}

} // namespace detail

inline AnalysisReport run_constraint_algorithm(const DiffForm& Omega, const DiffForm& omega,
                                               const EhresmannConnection& conn,
                                               const AnalysisOptions& opts = {}) {
    const Chart& chart = conn.chart();
    AnalysisReport rep;
    rep.chart = chart;
    rep.connection = conn;
    rep.base_volume = omega;
    rep.omega_form = Omega;
    rep.split = split_omega(Omega, conn, omega);
    if (!rep.split.bidegree_ok) {
        auto& t = rep.split.violating_triple;
        throw AssumptionViolation("the (m+1)-form has a triple-vertical component (" + t[0] +
                                      ", " + t[1] + ", " + t[2] + ")",
                                  t);
    }

    const int dim = chart.dim(), m = chart.base_dim();
    bool ambiguous = false;
    for (int gen = 1; gen <= opts.max_generations; ++gen) {
        detail::GenerationStep step =
            detail::constraint_step(Omega, conn, rep.split.gamma, rep.constraints, opts, gen);
        rep.generations_run = gen;
        ambiguous = ambiguous || step.ambiguous;
        if (step.fresh.empty()) {
            rep.family = std::move(step.family);
            rep.status = ambiguous ? AnalysisStatus::StratificationAmbiguous
                                   : AnalysisStatus::FinalSubmanifold;
            break;
        }
        rep.generations.push_back({gen, step.fresh, step.provenance});
        for (auto& c : step.fresh) rep.constraints.push_back(c);
        bool inconsistent = false;
        for (auto& c : step.fresh) inconsistent = inconsistent || c.is_rational_constant();
        if (inconsistent || static_cast<int>(rep.constraints.size()) >= dim - m + 1) {
            // a nonzero constant constraint has an empty zero set; too many
            // independent constraints force dim <= m-1
            rep.family = std::move(step.family);
            rep.status = AnalysisStatus::NoSolution;
            break;
        }
        if (gen == opts.max_generations) {
            rep.family = std::move(step.family);
            rep.status = AnalysisStatus::IterationLimit;
        }
    }

    // canonical representative: free parameters zero
    std::vector<std::vector<Expr>> g(chart.fibre_dim(), std::vector<Expr>(m, Expr(0)));
    if (rep.family.particular.size() == static_cast<size_t>(chart.fibre_dim()) * m)
        for (int a = 0; a < chart.fibre_dim(); ++a)
            for (int mu = 0; mu < m; ++mu) g[a][mu] = rep.family.particular[a * m + mu];
    rep.canonical = CandidateSection(chart, std::move(g));

    // stratification diagnostics: generic-rank stability and pivots vanishing
    // on the final variety
    auto rank_warn = rank_stability_warnings(
        assemble(Omega, conn, rep.split.gamma, rep.constraints), rep.family, opts.seed, opts.samples);
    rep.warnings.insert(rep.warnings.end(), rank_warn.begin(), rank_warn.end());
    if (!rep.constraints.empty() && !rep.family.pivots.empty()) {
        auto pts = VarietySampler::sample(rep.constraints, chart.coords(), opts.seed + 71,
                                          opts.samples);
        for (auto& piv : rep.family.pivots) {
            for (auto& pt : pts) {
                double v;
                try {
                    v = piv.eval_double(pt.approx);
                } catch (const DivisionByZero&) {
                    continue;
                }
                if (std::abs(v) < 1e-9) {
                    rep.warnings.push_back("stratification: pivot " + piv.to_string() +
                                           " vanishes on the final constraint set");
                    break;
                }
            }
        }
    }
    return rep;
}

// Directional derivative along the lifted frame field
// X_mu = d/dx^mu + Xi^a_mu d/du^a.
inline Expr frame_derivative(const Expr& f, int mu, const Chart& chart,
                             const std::vector<std::vector<Expr>>& xi) {
    Expr d = f.diff(chart.base(mu));
    for (int a = 0; a < chart.fibre_dim(); ++a) {
        if (xi[a][mu].is_zero()) continue;
        d = d + xi[a][mu] * f.diff(chart.fibre(a));
    }
    return d;
}

/*
 * Integrability algorithm for the decomposable solution X = /\ X_mu with
 * X_mu = D_mu + Gamma^a_mu d/du^a.  The brackets of the normalized frame are
 * vertical, so involutivity is exactly the vanishing of the coefficients
 * zeta^a_{mu nu} = X_mu(Xi^a_nu) - X_nu(Xi^a_mu) with Xi = G + Gamma; the
 * tangency sweep then adds X_mu(zeta) until the chain stabilizes.
 */
inline void run_integrability_algorithm(AnalysisReport& rep, const CandidateSection& section,
                                        const AnalysisOptions& opts = {}) {
    const Chart& chart = rep.chart;
    const int m = chart.base_dim(), nf = chart.fibre_dim(), dim = chart.dim();

    std::vector<std::vector<Expr>> xi(nf, std::vector<Expr>(m));
    for (int a = 0; a < nf; ++a)
        for (int mu = 0; mu < m; ++mu)
            xi[a][mu] = rep.connection.coefficient(a, mu) + section.gamma(a, mu);

    std::vector<Expr> known = rep.constraints;
    std::vector<Expr> current;  // constraints of the last accepted chain step
    rep.integrability_generations.clear();
    rep.integrability_constraints.clear();

    auto absorb = [&](const std::vector<Expr>& raw, int index, const char* why) -> bool {
        std::vector<Expr> fresh;
        std::vector<std::string> prov;
        for (const Expr& z : raw) {
            Expr red = reduce_modulo(z, known);
            if (red.is_zero()) continue;
            fresh.push_back(red);
            prov.push_back(why);
            known.push_back(red);
        }
        if (fresh.empty()) return false;
        rep.integrability_generations.push_back({index, fresh, prov});
        for (auto& f : fresh) rep.integrability_constraints.push_back(f);
        current = fresh;
        return true;
    };

    std::vector<Expr> zetas;
    for (int mu = 0; mu < m; ++mu)
        for (int nu = mu + 1; nu < m; ++nu)
            for (int a = 0; a < nf; ++a)
                zetas.push_back(frame_derivative(xi[a][nu], mu, chart, xi) -
                                frame_derivative(xi[a][mu], nu, chart, xi));

    if (!absorb(zetas, 1, "bracket obstruction")) {
        rep.integrability = IntegrabilityStatus::FlatOnFinal;
        return;
    }

    for (int step = 2; step <= opts.max_generations; ++step) {
        for (const Expr& c : rep.integrability_constraints)
            if (c.is_rational_constant() && !c.is_zero()) {
                rep.integrability = IntegrabilityStatus::NoIntegrableSubmanifold;
                return;
            }
        if (static_cast<int>(known.size()) >= dim - m + 1) {
            rep.integrability = IntegrabilityStatus::NoIntegrableSubmanifold;
            return;
        }
        std::vector<Expr> next;
        for (const Expr& z : current)
            for (int mu = 0; mu < m; ++mu) next.push_back(frame_derivative(z, mu, chart, xi));
        if (!absorb(next, step, "tangency sweep")) {
            rep.integrability = IntegrabilityStatus::FlatOnSubmanifold;
            return;
        }
    }
    rep.integrability = IntegrabilityStatus::IterationLimit;
}

} // namespace presymp
