#pragma once

#include <random>

#include "presymp/connection.hpp"

namespace presymp {

/*
 * Pointwise-affine solvability system for the vertical coefficients of a
 * candidate section.  Unknowns are Gamma^a_mu in fibre-major order
 * (index = a * m + mu).  Rows come in two kinds: one vertical-test row per
 * fibre coordinate (the contraction equations), and one tangency row per
 * (constraint, base index) pair when the section is required to take values
 * in the tangent space of a constraint zero set.
 */
struct LinearProblem {
    struct RowTag {
        enum Kind { VerticalTest, Tangency } kind = VerticalTest;
        int vertical = -1;    // fibre index of the tested coordinate
        int constraint = -1;  // tangency: index into the constraint list
        int mu = -1;          // tangency: base index
    };

    Chart chart;
    int unknowns = 0;
    std::vector<std::vector<Expr>> A;
    std::vector<Expr> b;
    std::vector<RowTag> tags;

    int rows() const { return static_cast<int>(A.size()); }
};

struct SolutionFamily {
    std::vector<Expr> particular;               // free parameters set to zero
    std::vector<std::vector<Expr>> nullspace;   // basis of homogeneous solutions
    std::vector<Expr> conditions;               // consistency conditions (must vanish)
    std::vector<std::vector<Expr>> covectors;   // left-nullspace covector per condition row
    std::vector<Expr> pivots;                   // pivot expressions used by elimination
    int rank = 0;
};

inline LinearProblem assemble(const DiffForm& Omega, const EhresmannConnection& conn,
                              const DiffForm& gamma,
                              const std::vector<Expr>& tangency_constraints) {
    const Chart& chart = conn.chart();
    auto witness = triple_vertical_witness(Omega, chart);
    if (!witness.empty())
        throw AssumptionViolation(
            "assemble: the (m+1)-form has a component with three vertical factors (" +
                witness[0] + ", " + witness[1] + ", " + witness[2] + ")",
            witness);

    const int m = chart.base_dim();
    const int nf = chart.fibre_dim();
    LinearProblem p;
    p.chart = chart;
    p.unknowns = nf * m;

    std::vector<VectorField> frame;
    for (int mu = 0; mu < m; ++mu) frame.push_back(conn.horizontal_frame(mu));

    // vertical-test rows: Omega(D_1,...,d_a at slot mu,...,D_m, d_b) Gamma^a_mu = -gamma(d_b)
    for (int bfib = 0; bfib < nf; ++bfib) {
        VectorField eb{{m + bfib, Expr(1)}};
        std::vector<Expr> row(p.unknowns, Expr(0));
        for (int a = 0; a < nf; ++a) {
            VectorField ea{{m + a, Expr(1)}};
            for (int mu = 0; mu < m; ++mu) {
                std::vector<VectorField> args = frame;
                args[mu] = ea;
                args.push_back(eb);
                row[a * m + mu] = evaluate_form(Omega, args);
            }
        }
        p.A.push_back(std::move(row));
        p.b.push_back(-gamma.coeff(Mask(1) << (m + bfib)));
        p.tags.push_back({LinearProblem::RowTag::VerticalTest, bfib, -1, -1});
    }

    // tangency rows: sum_a Gamma^a_mu dxi/du^a = -D_mu(xi)
    for (size_t k = 0; k < tangency_constraints.size(); ++k) {
        const Expr& xi = tangency_constraints[k];
        for (int mu = 0; mu < m; ++mu) {
            std::vector<Expr> row(p.unknowns, Expr(0));
            for (int a = 0; a < nf; ++a)
                row[a * m + mu] = xi.diff(chart.fibre(a));
            Expr dmu = xi.diff(chart.base(mu));
            for (int a = 0; a < nf; ++a)
                dmu = dmu + conn.coefficient(a, mu) * xi.diff(chart.fibre(a));
            p.A.push_back(std::move(row));
            p.b.push_back(-dmu);
            p.tags.push_back({LinearProblem::RowTag::Tangency, -1, static_cast<int>(k), mu});
        }
    }
    return p;
}

namespace detail {

/*
 * Fraction-free Gauss-Jordan elimination (one-step Bareiss applied to every
 * non-pivot row) on [A | b | I], first-nonzero pivoting in column order with
 * exact zero tests.  Every intermediate entry is a minor of the original
 * augmented matrix, so polynomial input stays polynomial and each division
 * by the previous pivot is exact.  Pivots containing opaque atoms are
 * refused: their vanishing is not decidable.
 */
struct Echelon {
    std::vector<std::vector<Expr>> M;  // rows x (cols + rhs_cols + rows)
    std::vector<std::pair<int, int>> pivot_at;  // (row, col)
    int cols = 0, rhs = 0;
    int rank = 0;
};

inline Echelon eliminate(const std::vector<std::vector<Expr>>& A,
                         const std::vector<Expr>* b) {
    Echelon e;
    int rows = static_cast<int>(A.size());
    e.cols = rows ? static_cast<int>(A[0].size()) : 0;
    e.rhs = b ? 1 : 0;
    e.M.assign(rows, {});
    for (int i = 0; i < rows; ++i) {
        e.M[i] = A[i];
        if (b) e.M[i].push_back((*b)[i]);
        for (int j = 0; j < rows; ++j) e.M[i].push_back(Expr(i == j ? 1 : 0));
    }
    int width = e.cols + e.rhs + rows;
    Expr prev(1);
    int r = 0;
    for (int c = 0; c < e.cols && r < rows; ++c) {
        int pr = -1;
        for (int i = r; i < rows; ++i) {
            if (!e.M[i][c].is_zero()) {
                pr = i;
                break;
            }
        }
        if (pr < 0) continue;
        std::swap(e.M[pr], e.M[r]);
        const Expr pivot = e.M[r][c];
        if (pivot.has_atom())
            throw NonDecidableCoefficient(
                "elimination pivot contains an opaque function atom: " + pivot.to_string());
        for (int i = 0; i < rows; ++i) {
            if (i == r) continue;
            const Expr f = e.M[i][c];
            for (int j = 0; j < width; ++j)
                e.M[i][j] = (e.M[i][j] * pivot - f * e.M[r][j]) / prev;
            e.M[i][c] = Expr(0);
        }
        e.pivot_at.emplace_back(r, c);
        prev = pivot;
        ++r;
    }
    e.rank = r;
    return e;
}

} // namespace detail

/*
 * Solve the affine system.  The particular solution fixes all free unknowns
 * to zero; the nullspace basis spans the homogeneous solutions; the
 * consistency conditions are the transformed right-hand sides of the
 * eliminated zero rows, each paired with the left-nullspace covector that
 * produced it (so condition[k] = covector[k] . b identically).
 */
inline SolutionFamily solve(const LinearProblem& p) {
    detail::Echelon e = detail::eliminate(p.A, &p.b);
    const int rows = p.rows(), cols = p.unknowns;
    SolutionFamily fam;
    fam.rank = e.rank;
    for (auto& [r, c] : e.pivot_at) fam.pivots.push_back(e.M[r][c]);

    for (int i = e.rank; i < rows; ++i) {
        Expr resid = e.M[i][cols];
        std::vector<Expr> cov(e.M[i].begin() + cols + 1, e.M[i].end());
        fam.conditions.push_back(resid);
        fam.covectors.push_back(std::move(cov));
    }

    // Jordan form: pivot row k reads  p_k x_{c_k} + sum_{free j} M[k][j] x_j = b_k
    std::vector<int> pivot_row_of_col(cols, -1);
    for (int k = 0; k < e.rank; ++k) pivot_row_of_col[e.pivot_at[k].second] = k;

    fam.particular.assign(cols, Expr(0));
    for (int k = 0; k < e.rank; ++k) {
        int c = e.pivot_at[k].second;
        fam.particular[c] = e.M[k][cols] / e.M[k][c];
    }

    for (int c = 0; c < cols; ++c) {
        if (pivot_row_of_col[c] >= 0) continue;
        std::vector<Expr> v(cols, Expr(0));
        v[c] = Expr(1);
        for (int k = 0; k < e.rank; ++k) {
            int pc = e.pivot_at[k].second;
            if (!e.M[k][c].is_zero()) v[pc] = -e.M[k][c] / e.M[k][pc];
        }
        fam.nullspace.push_back(std::move(v));
    }
    return fam;
}

/// Basis of covectors annihilating the rows of A from the left; pairing a
/// covector with b yields a consistency condition of the affine problem.
inline std::vector<std::vector<Expr>> orth_complement(const LinearProblem& p) {
    detail::Echelon e = detail::eliminate(p.A, nullptr);
    std::vector<std::vector<Expr>> basis;
    for (int i = e.rank; i < p.rows(); ++i)
        basis.emplace_back(e.M[i].begin() + p.unknowns, e.M[i].end());
    return basis;
}

// --- numeric cross checks -------------------------------------------------

inline Rational random_rational(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> num(-9, 9), den(1, 4);
    return Rational(num(rng), den(rng));
}

inline int numeric_rank(const std::vector<std::vector<Expr>>& A,
                        const std::map<VarId, double>& point) {
    std::vector<std::vector<double>> M;
    for (auto& row : A) {
        std::vector<double> r;
        for (auto& e : row) r.push_back(e.eval_double(point));
        M.push_back(std::move(r));
    }
    int rows = static_cast<int>(M.size());
    int cols = rows ? static_cast<int>(M[0].size()) : 0;
    int rank = 0;
    for (int c = 0; c < cols && rank < rows; ++c) {
        int best = -1;
        double mx = 1e-9;
        for (int i = rank; i < rows; ++i)
            if (std::abs(M[i][c]) > mx) {
                mx = std::abs(M[i][c]);
                best = i;
            }
        if (best < 0) continue;
        std::swap(M[best], M[rank]);
        for (int i = rank + 1; i < rows; ++i) {
            double f = M[i][c] / M[rank][c];
            for (int j = c; j < cols; ++j) M[i][j] -= f * M[rank][j];
        }
        ++rank;
    }
    return rank;
}

/// Generic symbolic rank vs numeric rank at random rational points; a
/// discrepancy is where the rank stratifies and is reported, not resolved.
inline std::vector<std::string> rank_stability_warnings(const LinearProblem& p,
                                                        const SolutionFamily& fam,
                                                        uint64_t seed,
                                                        int samples = 5) {
    std::vector<std::string> warnings;
    std::vector<VarId> vars;
    for (auto& row : p.A)
        for (auto& e : row)
            for (VarId v : e.free_symbols())
                if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    std::mt19937_64 rng(seed);
    for (int s = 0; s < samples; ++s) {
        std::map<VarId, double> point;
        for (VarId v : vars) point[v] = random_rational(rng).to_double();
        int nr;
        try {
            nr = numeric_rank(p.A, point);
        } catch (const DivisionByZero&) {
            continue;
        }
        if (nr != fam.rank) {
            warnings.push_back("rank stratification: symbolic generic rank " +
                               std::to_string(fam.rank) + " vs numeric rank " +
                               std::to_string(nr) + " at sample " + std::to_string(s));
        }
    }
    return warnings;
}

} // namespace presymp
