#pragma once

#include <bit>

#include "presymp/chart.hpp"

namespace presymp {

/*
 * Sparse exterior algebra over a chart.  A degree-k object is a map from
 * 63-bit masks (bit i = chart coordinate position i, popcount = k) to Expr
 * coefficients; masks encode strictly increasing multi-indices, zero
 * coefficients are pruned.  DiffForm and MultiVector share this layout;
 * a MultiVector may additionally carry the ordered factor list it was
 * wedged from.
 */
using Mask = uint64_t;

inline int mask_count(Mask m) { return std::popcount(m); }

// Sign of merging e_a ^ e_b into ascending order (masks disjoint).
inline int merge_sign(Mask a, Mask b) {
    int inv = 0;
    Mask bb = b;
    while (bb) {
        int j = std::countr_zero(bb);
        bb &= bb - 1;
        inv += std::popcount(a >> (j + 1));
    }
    return (inv & 1) ? -1 : 1;
}

// Sign picked up when slot `p` is pulled out of the front of ascending `mask`.
inline int removal_sign(Mask mask, int p) {
    int below = std::popcount(mask & ((Mask(1) << p) - 1));
    return (below & 1) ? -1 : 1;
}

namespace detail {

using TermMap = std::map<Mask, Expr>;

inline void add_term(TermMap& t, Mask m, const Expr& c) {
    if (c.is_zero()) return;
    auto it = t.find(m);
    if (it == t.end()) {
        t.emplace(m, c);
    } else {
        it->second = it->second + c;
        if (it->second.is_zero()) t.erase(it);
    }
}

inline TermMap wedge_terms(const TermMap& a, const TermMap& b) {
    TermMap r;
    for (auto& [ma, ca] : a)
        for (auto& [mb, cb] : b) {
            if (ma & mb) continue;
            Expr c = ca * cb;
            if (merge_sign(ma, mb) < 0) c = -c;
            add_term(r, ma | mb, c);
        }
    return r;
}

} // namespace detail

/// Vector field in chart coordinates: sparse position -> component.
using VectorField = std::map<int, Expr>;

class DiffForm {
public:
    explicit DiffForm(int degree = 0) : degree_(degree) {
        if (degree < 0 || degree > 63) throw std::invalid_argument("form degree out of range");
    }

    static DiffForm scalar(const Expr& e) {
        DiffForm f(0);
        f.set(0, e);
        return f;
    }
    static DiffForm coordinate_differential(const Chart& chart, VarId v) {
        DiffForm f(1);
        int p = chart.position(v);
        if (p < 0) throw std::invalid_argument("coordinate not in chart");
        f.set(Mask(1) << p, Expr(1));
        return f;
    }
    static DiffForm volume(const Chart& chart) {
        DiffForm f(chart.base_dim());
        f.set((Mask(1) << chart.base_dim()) - 1, Expr(1));
        return f;
    }
    static DiffForm from_terms(int degree, detail::TermMap terms) {
        DiffForm f(degree);
        f.terms_ = std::move(terms);
        return f;
    }

    int degree() const { return degree_; }
    bool is_zero() const { return terms_.empty(); }
    const detail::TermMap& terms() const { return terms_; }

    Expr coeff(Mask m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? Expr(0) : it->second;
    }
    void set(Mask m, const Expr& c) {
        if (mask_count(m) != degree_) throw std::invalid_argument("multi-index degree mismatch");
        if (c.is_zero())
            terms_.erase(m);
        else
            terms_[m] = c;
    }

    friend bool operator==(const DiffForm& a, const DiffForm& b) {
        return a.degree_ == b.degree_ && a.terms_ == b.terms_;
    }
    friend bool operator!=(const DiffForm& a, const DiffForm& b) { return !(a == b); }

    DiffForm operator-() const {
        DiffForm r(degree_);
        for (auto& [m, c] : terms_) r.terms_.emplace(m, -c);
        return r;
    }
    friend DiffForm operator+(const DiffForm& a, const DiffForm& b) {
        if (a.degree_ != b.degree_) throw std::invalid_argument("form degree mismatch");
        DiffForm r = a;
        for (auto& [m, c] : b.terms_) detail::add_term(r.terms_, m, c);
        return r;
    }
    friend DiffForm operator-(const DiffForm& a, const DiffForm& b) { return a + (-b); }
    friend DiffForm operator*(const Expr& s, const DiffForm& a) {
        DiffForm r(a.degree_);
        for (auto& [m, c] : a.terms_) detail::add_term(r.terms_, m, s * c);
        return r;
    }

private:
    int degree_;
    detail::TermMap terms_;

    friend DiffForm wedge(const DiffForm&, const DiffForm&);
    friend DiffForm exterior_derivative(const DiffForm&, const Chart&);
};

inline DiffForm wedge(const DiffForm& a, const DiffForm& b) {
    DiffForm r(a.degree_ + b.degree_);
    r.terms_ = detail::wedge_terms(a.terms_, b.terms_);
    return r;
}

inline DiffForm exterior_derivative(const DiffForm& a, const Chart& chart) {
    if (a.degree() >= chart.dim())
        throw std::invalid_argument("exterior derivative: form already has top degree");
    detail::TermMap out;
    for (auto& [m, c] : a.terms()) {
        for (int q = 0; q < chart.dim(); ++q) {
            if (m & (Mask(1) << q)) continue;
            Expr dc = c.diff(chart.coords()[q]);
            if (dc.is_zero()) continue;
            if (merge_sign(Mask(1) << q, m) < 0) dc = -dc;
            detail::add_term(out, m | (Mask(1) << q), dc);
        }
    }
    return DiffForm::from_terms(a.degree() + 1, std::move(out));
}

class MultiVector {
public:
    explicit MultiVector(int degree = 0) : degree_(degree) {
        if (degree < 0 || degree > 63) throw std::invalid_argument("multivector degree out of range");
    }

    static MultiVector coordinate_field(const Chart& chart, VarId v) {
        MultiVector x(1);
        int p = chart.position(v);
        if (p < 0) throw std::invalid_argument("coordinate not in chart");
        x.set(Mask(1) << p, Expr(1));
        return x;
    }
    static MultiVector from_vector_field(const VectorField& v) {
        MultiVector x(1);
        for (auto& [p, c] : v) x.set(Mask(1) << p, c);
        return x;
    }
    // Wedge of an ordered factor list; the factors are kept as witness.
    static MultiVector decomposable(const std::vector<VectorField>& factors) {
        MultiVector x(0);
        x.set(0, Expr(1));
        for (const auto& f : factors) x = wedge_mv(x, from_vector_field(f));
        x.factors_ = factors;
        return x;
    }

    int degree() const { return degree_; }
    bool is_zero() const { return terms_.empty(); }
    const detail::TermMap& terms() const { return terms_; }
    bool has_witness() const { return !factors_.empty(); }
    const std::vector<VectorField>& witness() const { return factors_; }

    Expr coeff(Mask m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? Expr(0) : it->second;
    }
    void set(Mask m, const Expr& c) {
        if (mask_count(m) != degree_) throw std::invalid_argument("multi-index degree mismatch");
        if (c.is_zero())
            terms_.erase(m);
        else
            terms_[m] = c;
        factors_.clear();
    }

    friend bool operator==(const MultiVector& a, const MultiVector& b) {
        return a.degree_ == b.degree_ && a.terms_ == b.terms_;
    }
    friend bool operator!=(const MultiVector& a, const MultiVector& b) { return !(a == b); }

    friend MultiVector wedge_mv(const MultiVector& a, const MultiVector& b) {
        MultiVector r(a.degree_ + b.degree_);
        r.terms_ = detail::wedge_terms(a.terms_, b.terms_);
        return r;
    }

    MultiVector scaled(const Expr& s) const {
        MultiVector r(degree_);
        for (auto& [m, c] : terms_) detail::add_term(r.terms_, m, s * c);
        return r;
    }

private:
    int degree_;
    detail::TermMap terms_;
    std::vector<VectorField> factors_;
};

// Interior product with a single vector field, filling the form's first slot.
inline DiffForm contract_vector(const VectorField& v, const DiffForm& a) {
    if (a.degree() == 0) throw std::invalid_argument("cannot contract a 0-form");
    detail::TermMap out;
    for (auto& [m, c] : a.terms()) {
        for (auto& [p, comp] : v) {
            if (!(m & (Mask(1) << p))) continue;
            Expr t = comp * c;
            if (removal_sign(m, p) < 0) t = -t;
            detail::add_term(out, m & ~(Mask(1) << p), t);
        }
    }
    return DiffForm::from_terms(a.degree() - 1, std::move(out));
}

/*
 * Interior product i(X)a with the convention that the multivector fills the
 * form's leading slots:  (i(X1^...^Xk) a)(V1,...,V_{p-k}) = a(X1,...,Xk,V...).
 * Non-decomposable multivectors extend linearly over basis k-vectors.
 */
inline DiffForm contract(const MultiVector& x, const DiffForm& a) {
    if (x.degree() > a.degree()) throw std::invalid_argument("contraction degree mismatch");
    detail::TermMap out;
    for (auto& [xm, xc] : x.terms()) {
        for (auto& [am, ac] : a.terms()) {
            if ((xm & am) != xm) continue;
            // pull the factors of e_J out of the front, lowest position first
            int sign = 1;
            Mask rest = am, pending = xm;
            while (pending) {
                int p = std::countr_zero(pending);
                pending &= pending - 1;
                sign *= removal_sign(rest, p);
                rest &= ~(Mask(1) << p);
            }
            Expr t = xc * ac;
            if (sign < 0) t = -t;
            detail::add_term(out, rest, t);
        }
    }
    return DiffForm::from_terms(a.degree() - x.degree(), std::move(out));
}

/// Full evaluation a(v1,...,vp) as a scalar.
inline Expr evaluate_form(const DiffForm& a, const std::vector<VectorField>& vs) {
    if (static_cast<int>(vs.size()) != a.degree())
        throw std::invalid_argument("evaluate_form: argument count mismatch");
    DiffForm cur = a;
    for (const auto& v : vs) cur = contract_vector(v, cur);
    return cur.coeff(0);
}

inline std::string multi_index_name(const Chart& chart, Mask m, const char* prefix = "d") {
    if (m == 0) return "1";
    std::string s;
    for (int p = 0; p < chart.dim(); ++p) {
        if (!(m & (Mask(1) << p))) continue;
        if (!s.empty()) s += "^";
        s += prefix + symbol_name(chart.coords()[p]);
    }
    return s;
}

inline std::string form_to_string(const DiffForm& a, const Chart& chart) {
    if (a.is_zero()) return "0";
    std::string s;
    for (auto& [m, c] : a.terms()) {
        std::string cs = c.to_string();
        std::string sign = " + ";
        if (cs.size() > 1 && cs[0] == '-' && cs.find(" + ") == std::string::npos &&
            cs.find(" - ") == std::string::npos) {
            sign = " - ";
            cs = cs.substr(1);
        }
        bool wrap = cs.find(" + ") != std::string::npos || cs.find(" - ") != std::string::npos;
        if (cs == "1" && m) cs.clear();
        std::string body = wrap ? "(" + cs + ")" : cs;
        if (m) body += (body.empty() ? "" : " ") + multi_index_name(chart, m);
        if (s.empty())
            s = (sign == " - " ? "-" : "") + body;
        else
            s += sign + body;
    }
    return s;
}

} // namespace presymp
