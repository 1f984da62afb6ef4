#pragma once

#include "presymp/form.hpp"

namespace presymp {

struct AssumptionViolation : std::runtime_error {
    std::vector<std::string> triple;  // names of a violating vertical triple
    AssumptionViolation(const std::string& msg, std::vector<std::string> t)
        : std::runtime_error(msg), triple(std::move(t)) {}
};

/*
 * Ehresmann connection on a fibred chart, given by horizontal-lift
 * coefficients: D_mu = d/dx^mu + G^a_mu d/du^a, one coefficient per
 * (fibre coordinate, base index) pair.  On a jet chart the fibre block
 * covers both the fields and the velocities.
 */
class EhresmannConnection {
public:
    EhresmannConnection() = default;

    static EhresmannConnection trivial(const Chart& chart) {
        EhresmannConnection c(chart);
        return c;
    }
    static EhresmannConnection with_coefficients(
        const Chart& chart, std::vector<std::vector<Expr>> g) {
        EhresmannConnection c(chart);
        if (g.size() != static_cast<size_t>(chart.fibre_dim()))
            throw std::invalid_argument("connection: one coefficient row per fibre coordinate");
        for (auto& row : g)
            if (row.size() != static_cast<size_t>(chart.base_dim()))
                throw std::invalid_argument("connection: one coefficient per base index");
        c.g_ = std::move(g);
        return c;
    }

    const Chart& chart() const { return chart_; }
    bool is_trivial() const {
        for (auto& row : g_)
            for (auto& e : row)
                if (!e.is_zero()) return false;
        return true;
    }
    const Expr& coefficient(int fibre, int mu) const { return g_[fibre][mu]; }
    void set_coefficient(int fibre, int mu, Expr e) { g_[fibre][mu] = std::move(e); }

    // D_mu as a vector field in chart positions.
    VectorField horizontal_frame(int mu) const {
        VectorField v;
        v[mu] = Expr(1);
        for (int a = 0; a < chart_.fibre_dim(); ++a)
            if (!g_[a][mu].is_zero()) v[chart_.base_dim() + a] = g_[a][mu];
        return v;
    }

    // The horizontal volume multivector D_1 ^ ... ^ D_m; contracts to 1 on
    // the pulled-back base volume.
    MultiVector horizontal_volume() const {
        std::vector<VectorField> frame;
        for (int mu = 0; mu < chart_.base_dim(); ++mu) frame.push_back(horizontal_frame(mu));
        return MultiVector::decomposable(frame);
    }

private:
    Chart chart_;
    std::vector<std::vector<Expr>> g_;

    explicit EhresmannConnection(const Chart& chart) : chart_(chart) {
        g_.assign(chart.fibre_dim(), std::vector<Expr>(chart.base_dim(), Expr(0)));
    }
};

/*
 * Candidate section of the bundle of fibre-transverse linear maps:
 * h(d/dx^mu) = D_mu + Gamma^a_mu d/du^a relative to a fixed connection.
 * Composing with the projection gives the identity by construction.
 */
class CandidateSection {
public:
    CandidateSection() = default;

    CandidateSection(const Chart& chart, std::vector<std::vector<Expr>> gamma)
        : chart_(chart), gamma_(std::move(gamma)) {
        if (gamma_.size() != static_cast<size_t>(chart.fibre_dim()))
            throw std::invalid_argument("section: one coefficient row per fibre coordinate");
        for (auto& row : gamma_)
            if (row.size() != static_cast<size_t>(chart.base_dim()))
                throw std::invalid_argument("section: one coefficient per base index");
    }
    static CandidateSection zero(const Chart& chart) {
        return CandidateSection(chart,
                                std::vector<std::vector<Expr>>(
                                    chart.fibre_dim(),
                                    std::vector<Expr>(chart.base_dim(), Expr(0))));
    }

    const Chart& chart() const { return chart_; }
    const Expr& gamma(int fibre, int mu) const { return gamma_[fibre][mu]; }
    std::vector<std::vector<Expr>>& coefficients() { return gamma_; }
    const std::vector<std::vector<Expr>>& coefficients() const { return gamma_; }

    friend bool operator==(const CandidateSection& a, const CandidateSection& b) {
        return a.gamma_ == b.gamma_;
    }

private:
    Chart chart_;
    std::vector<std::vector<Expr>> gamma_;
};

struct OmegaSplit {
    DiffForm gamma;     // i(Y)Omega, a 1-form
    DiffForm residual;  // Omega - omega ^ gamma, bidegree (m-1,2) when ok
    bool bidegree_ok = false;
    std::vector<std::string> violating_triple;  // set when !bidegree_ok
};

inline Mask vertical_mask(const Chart& chart) {
    return ((Mask(1) << chart.dim()) - 1) & ~((Mask(1) << chart.base_dim()) - 1);
}

// A violating vertical triple (coordinate names) if the form has a component
// with three or more fibre indices, empty otherwise.  Equivalent to testing
// i(v1)i(v2)i(v3)Omega = 0 over all triples of vertical coordinate fields.
inline std::vector<std::string> triple_vertical_witness(const DiffForm& omega_form,
                                                        const Chart& chart) {
    Mask vm = vertical_mask(chart);
    for (auto& [m, c] : omega_form.terms()) {
        Mask vpart = m & vm;
        if (mask_count(vpart) >= 3) {
            std::vector<std::string> names;
            Mask rest = vpart;
            for (int k = 0; k < 3; ++k) {
                int p = std::countr_zero(rest);
                rest &= rest - 1;
                names.push_back(symbol_name(chart.coords()[p]));
            }
            return names;
        }
    }
    return {};
}

inline OmegaSplit split_omega(const DiffForm& Omega, const EhresmannConnection& conn,
                              const DiffForm& omega) {
    const Chart& chart = conn.chart();
    if (Omega.degree() != chart.base_dim() + 1)
        throw std::invalid_argument("split_omega: expected an (m+1)-form");
    MultiVector y = conn.horizontal_volume();
    Expr unit = contract(y, omega).coeff(0);
    if (!(unit == Expr(1)))
        throw std::invalid_argument(
            "split_omega: the horizontal volume does not contract to 1 on the given m-form");
    OmegaSplit s{contract(y, Omega), DiffForm(Omega.degree()), true, {}};
    s.residual = Omega - wedge(omega, s.gamma);
    s.violating_triple = triple_vertical_witness(Omega, chart);
    s.bidegree_ok = s.violating_triple.empty();
    return s;
}

// Decomposable m-vector of a candidate section: the wedge of the lifted
// frame fields D_mu + Gamma^a_mu d/du^a, witness kept.
inline MultiVector section_to_mvf(const CandidateSection& h, const EhresmannConnection& conn) {
    const Chart& chart = conn.chart();
    std::vector<VectorField> frame;
    for (int mu = 0; mu < chart.base_dim(); ++mu) {
        VectorField v = conn.horizontal_frame(mu);
        for (int a = 0; a < chart.fibre_dim(); ++a) {
            const Expr& g = h.gamma(a, mu);
            if (g.is_zero()) continue;
            int p = chart.base_dim() + a;
            auto it = v.find(p);
            if (it == v.end())
                v.emplace(p, g);
            else {
                it->second = it->second + g;
                if (it->second.is_zero()) v.erase(it);
            }
        }
        frame.push_back(std::move(v));
    }
    return MultiVector::decomposable(frame);
}

/*
 * Recover the section from a decomposable transverse m-vector.  Factors are
 * normalized so factor mu has base component d/dx^mu only; the result is
 * invariant under rescalings that preserve i(X)omega = 1 after the internal
 * normalization.  Throws on non-transverse input (base coefficient zero) and
 * on coefficient tables that no normalized frame wedge reproduces.
 */
inline CandidateSection mvf_to_section(const MultiVector& x, const EhresmannConnection& conn) {
    const Chart& chart = conn.chart();
    int m = chart.base_dim();
    if (x.degree() != m) throw std::invalid_argument("mvf_to_section: expected an m-vector");
    Mask base = (Mask(1) << m) - 1;
    Expr c0 = x.coeff(base);
    if (c0.is_zero())
        throw std::invalid_argument("mvf_to_section: non-transverse multivector (i(X)omega = 0)");
    std::vector<std::vector<Expr>> gamma(chart.fibre_dim(), std::vector<Expr>(m, Expr(0)));
    for (int a = 0; a < chart.fibre_dim(); ++a) {
        int q = m + a;
        for (int mu = 0; mu < m; ++mu) {
            Mask mk = (base & ~(Mask(1) << mu)) | (Mask(1) << q);
            Expr c = x.coeff(mk) / c0;
            // moving the vertical factor from slot mu to the end crosses m-1-mu base slots
            if ((m - 1 - mu) & 1) c = -c;
            // subtract the connection's own vertical part
            gamma[a][mu] = c - conn.coefficient(a, mu);
        }
    }
    CandidateSection h(chart, std::move(gamma));
    MultiVector rebuilt = section_to_mvf(h, conn);
    if (!(rebuilt == x.scaled(Expr(1) / c0)))
        throw std::invalid_argument("mvf_to_section: multivector is not decomposable");
    return h;
}

} // namespace presymp
