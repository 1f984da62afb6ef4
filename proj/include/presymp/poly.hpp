#pragma once

#include <map>
#include <optional>
#include <utility>

#include "presymp/bigint.hpp"
#include "presymp/symbols.hpp"

namespace presymp {

/*
 * Sparse multivariate polynomials over the integers.  Monomials are sorted
 * factor lists (variable id, exponent>0); term order is graded lexicographic
 * with smaller variable ids ranked first, which matches chart construction
 * order (base, fibre, jet/momentum blocks).  Every container is kept
 * normalized: no zero coefficients, factors sorted, exponents positive.
 */
struct Monomial {
    std::vector<std::pair<VarId, int>> factors;

    int total_degree() const {
        int d = 0;
        for (auto& [v, e] : factors) d += e;
        return d;
    }
    int degree_in(VarId v) const {
        for (auto& [w, e] : factors)
            if (w == v) return e;
        return 0;
    }
    bool is_unit() const { return factors.empty(); }

    friend bool operator==(const Monomial& a, const Monomial& b) {
        return a.factors == b.factors;
    }

    friend Monomial operator*(const Monomial& a, const Monomial& b) {
        Monomial r;
        size_t i = 0, j = 0;
        while (i < a.factors.size() || j < b.factors.size()) {
            if (j == b.factors.size() ||
                (i < a.factors.size() && a.factors[i].first < b.factors[j].first)) {
                r.factors.push_back(a.factors[i++]);
            } else if (i == a.factors.size() || b.factors[j].first < a.factors[i].first) {
                r.factors.push_back(b.factors[j++]);
            } else {
                r.factors.emplace_back(a.factors[i].first,
                                       a.factors[i].second + b.factors[j].second);
                ++i, ++j;
            }
        }
        return r;
    }

    // a / b when b divides a componentwise.
    static std::optional<Monomial> divide(const Monomial& a, const Monomial& b) {
        Monomial r;
        size_t i = 0;
        for (auto& [v, e] : b.factors) {
            while (i < a.factors.size() && a.factors[i].first < v)
                r.factors.push_back(a.factors[i++]);
            if (i == a.factors.size() || a.factors[i].first != v ||
                a.factors[i].second < e)
                return std::nullopt;
            if (a.factors[i].second > e)
                r.factors.emplace_back(v, a.factors[i].second - e);
            ++i;
        }
        while (i < a.factors.size()) r.factors.push_back(a.factors[i++]);
        return r;
    }
};

// Graded lexicographic: higher total degree wins; on ties the monomial with
// the larger exponent at the smallest differing variable wins.
struct GrlexLess {
    bool operator()(const Monomial& a, const Monomial& b) const {
        int da = a.total_degree(), db = b.total_degree();
        if (da != db) return da < db;
        size_t i = 0, j = 0;
        while (i < a.factors.size() && j < b.factors.size()) {
            if (a.factors[i].first != b.factors[j].first)
                return a.factors[i].first > b.factors[j].first;  // smaller id present => larger
            if (a.factors[i].second != b.factors[j].second)
                return a.factors[i].second < b.factors[j].second;
            ++i, ++j;
        }
        return false;  // identical (equal degrees force both exhausted)
    }
};

class Poly {
public:
    using Terms = std::map<Monomial, BigInt, GrlexLess>;

    Poly() = default;
    explicit Poly(BigInt c) {
        if (!c.is_zero()) terms_.emplace(Monomial{}, std::move(c));
    }
    Poly(long long c) : Poly(BigInt(c)) {}
    static Poly variable(VarId v, int exp = 1) {
        Poly p;
        if (exp < 0) throw std::invalid_argument("Poly: negative exponent");
        if (exp == 0) return Poly(1);
        p.terms_.emplace(Monomial{{{v, exp}}}, BigInt(1));
        return p;
    }
    static Poly term(Monomial m, BigInt c) {
        Poly p;
        if (!c.is_zero()) p.terms_.emplace(std::move(m), std::move(c));
        return p;
    }

    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const {
        return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_unit());
    }
    bool is_one() const {
        return terms_.size() == 1 && terms_.begin()->first.is_unit() &&
               terms_.begin()->second.is_one();
    }
    BigInt constant_value() const {
        if (terms_.empty()) return BigInt(0);
        if (!is_constant()) throw std::logic_error("Poly: not a constant");
        return terms_.begin()->second;
    }

    int total_degree() const {
        return terms_.empty() ? -1 : terms_.rbegin()->first.total_degree();
    }
    int degree_in(VarId v) const {
        int d = 0;
        for (auto& [m, c] : terms_) d = std::max(d, m.degree_in(v));
        return d;
    }
    const Monomial& leading_monomial() const {
        if (terms_.empty()) throw std::logic_error("Poly: zero has no leading term");
        return terms_.rbegin()->first;
    }
    const BigInt& leading_coeff() const {
        if (terms_.empty()) throw std::logic_error("Poly: zero has no leading term");
        return terms_.rbegin()->second;
    }
    Poly leading_term() const {
        return term(leading_monomial(), leading_coeff());
    }

    // Largest variable id present, or nullopt for constants.
    std::optional<VarId> main_variable() const {
        std::optional<VarId> v;
        for (auto& [m, c] : terms_)
            for (auto& [w, e] : m.factors)
                if (!v || w > *v) v = w;
        return v;
    }

    void variables(std::vector<VarId>& out) const {
        for (auto& [m, c] : terms_)
            for (auto& [w, e] : m.factors)
                if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
    }
    bool depends_on(VarId v) const {
        for (auto& [m, c] : terms_)
            if (m.degree_in(v) > 0) return true;
        return false;
    }
    bool has_atom() const {
        for (auto& [m, c] : terms_)
            for (auto& [w, e] : m.factors)
                if (Symbols::instance().is_atom(w)) return true;
        return false;
    }

    friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }
    friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

    Poly operator-() const {
        Poly r;
        for (auto& [m, c] : terms_) r.terms_.emplace(m, -c);
        return r;
    }
    friend Poly operator+(const Poly& a, const Poly& b) {
        Poly r = a;
        for (auto& [m, c] : b.terms_) r.add_term(m, c);
        return r;
    }
    friend Poly operator-(const Poly& a, const Poly& b) {
        Poly r = a;
        for (auto& [m, c] : b.terms_) r.add_term(m, -c);
        return r;
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly r;
        for (auto& [ma, ca] : a.terms_)
            for (auto& [mb, cb] : b.terms_) r.add_term(ma * mb, ca * cb);
        return r;
    }
    friend Poly operator*(const Poly& a, const BigInt& c) {
        Poly r;
        if (c.is_zero()) return r;
        for (auto& [m, k] : a.terms_) r.terms_.emplace(m, k * c);
        return r;
    }

    Poly pow(int e) const {
        if (e < 0) throw std::invalid_argument("Poly: negative power");
        Poly r(1), base = *this;
        while (e) {
            if (e & 1) r = r * base;
            base = base * base;
            e >>= 1;
        }
        return r;
    }

    // Partial derivative by a coordinate.  Opaque atoms depending on the
    // coordinate contribute through their named first-derivative atoms.
    Poly derivative(VarId v) const {
        Symbols& tab = Symbols::instance();
        Poly r;
        for (auto& [m, c] : terms_) {
            for (size_t i = 0; i < m.factors.size(); ++i) {
                auto [w, e] = m.factors[i];
                Poly chain;  // d w / d v
                if (w == v) chain = Poly(1);
                else if (tab.is_atom(w) && tab.atom_depends_on(w, v))
                    chain = Poly::variable(tab.derivative_atom(w, v));
                else
                    continue;
                Monomial rest;
                for (size_t j = 0; j < m.factors.size(); ++j) {
                    if (j == i) {
                        if (e > 1) rest.factors.emplace_back(w, e - 1);
                    } else {
                        rest.factors.push_back(m.factors[j]);
                    }
                }
                Poly term;
                term.terms_.emplace(rest, c * BigInt(e));
                r = r + term * chain;
            }
        }
        return r;
    }

    Rational eval(const std::map<VarId, Rational>& point) const {
        Rational acc(0);
        for (auto& [m, c] : terms_) {
            Rational t(c);
            for (auto& [v, e] : m.factors) {
                auto it = point.find(v);
                if (it == point.end())
                    throw std::invalid_argument("eval: no value for symbol '" + symbol_name(v) + "'");
                for (int k = 0; k < e; ++k) t = t * it->second;
            }
            acc = acc + t;
        }
        return acc;
    }

    double eval_double(const std::map<VarId, double>& point) const {
        double acc = 0;
        for (auto& [m, c] : terms_) {
            double t = c.to_double();
            for (auto& [v, e] : m.factors) {
                auto it = point.find(v);
                if (it == point.end())
                    throw std::invalid_argument("eval: no value for symbol '" + symbol_name(v) + "'");
                for (int k = 0; k < e; ++k) t *= it->second;
            }
            acc += t;
        }
        return acc;
    }

    // gcd of all integer coefficients, non-negative.
    BigInt content() const {
        BigInt g(0);
        for (auto& [m, c] : terms_) {
            g = BigInt::gcd(g, c);
            if (g.is_one()) break;
        }
        return g;
    }

    // Exact division; nullopt when b does not divide *this over the integers.
    std::optional<Poly> divide_exact(const Poly& b) const {
        if (b.is_zero()) throw std::domain_error("Poly: division by zero");
        Poly rem = *this, quot;
        while (!rem.is_zero()) {
            auto mq = Monomial::divide(rem.leading_monomial(), b.leading_monomial());
            if (!mq) return std::nullopt;
            BigInt q, r;
            BigInt::divmod(rem.leading_coeff(), b.leading_coeff(), q, r);
            if (!r.is_zero()) return std::nullopt;
            Poly t;
            t.terms_.emplace(*mq, q);
            quot = quot + t;
            rem = rem - t * b;
        }
        return quot;
    }

    static Poly gcd(const Poly& a, const Poly& b) {
        Poly g = gcd_inner(a, b);
        if (!g.is_zero() && g.leading_coeff().negative()) g = -g;
        return g;
    }

private:
    Terms terms_;

    void add_term(const Monomial& m, const BigInt& c) {
        if (c.is_zero()) return;
        auto it = terms_.find(m);
        if (it == terms_.end()) {
            terms_.emplace(m, c);
        } else {
            it->second = it->second + c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    // --- gcd machinery: recursive primitive PRS on the main variable ---

    // View as univariate in v: coefficient of v^k, polynomial in the rest.
    Poly coeff_in(VarId v, int k) const {
        Poly r;
        for (auto& [m, c] : terms_) {
            if (m.degree_in(v) != k) continue;
            Monomial rest;
            for (auto& [w, e] : m.factors)
                if (w != v) rest.factors.emplace_back(w, e);
            r.terms_.emplace(rest, c);
        }
        return r;
    }

    Poly content_in(VarId v) const {
        Poly g;
        for (int k = 0; k <= degree_in(v); ++k) {
            Poly c = coeff_in(v, k);
            if (!c.is_zero()) g = gcd_inner(g, c);
        }
        return g;
    }

    static Poly mul_var_pow(const Poly& p, VarId v, int e) {
        return p * variable(v, e);
    }

    // Pseudo-remainder of a by b in variable v (deg_v a >= deg_v b > 0 callers).
    static Poly prem(Poly a, const Poly& b, VarId v) {
        int db = b.degree_in(v);
        Poly lcb = b.coeff_in(v, db);
        while (!a.is_zero() && a.degree_in(v) >= db) {
            int da = a.degree_in(v);
            Poly lca = a.coeff_in(v, da);
            a = a * lcb - mul_var_pow(lca, v, da - db) * b;
        }
        return a;
    }

    // gcd with a single-term polynomial: shared monomial part plus content.
    static Poly gcd_monomial(const Poly& mono, const Poly& other) {
        Monomial shared = mono.leading_monomial();
        BigInt c = mono.leading_coeff().abs();
        for (auto& [m, k] : other.terms_) {
            Monomial next;
            for (auto& [v, e] : shared.factors) {
                int d = std::min(e, m.degree_in(v));
                if (d > 0) next.factors.emplace_back(v, d);
            }
            shared = std::move(next);
            c = BigInt::gcd(c, k);
            if (shared.is_unit() && c.is_one()) break;
        }
        return term(shared, c);
    }

    static Poly gcd_inner(const Poly& a, const Poly& b) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (a.is_constant() || b.is_constant()) {
            BigInt g = BigInt::gcd(a.content(), b.content());
            return Poly(g);
        }
        if (a.terms_.size() == 1) return gcd_monomial(a, b);
        if (b.terms_.size() == 1) return gcd_monomial(b, a);
        {
            std::vector<VarId> va_list, vb_list;
            a.variables(va_list);
            b.variables(vb_list);
            bool disjoint = true;
            for (VarId v : va_list)
                disjoint = disjoint && std::find(vb_list.begin(), vb_list.end(), v) == vb_list.end();
            if (disjoint) return Poly(BigInt::gcd(a.content(), b.content()));
        }
        if (auto q = a.divide_exact(b); q.has_value()) return b;
        if (auto q = b.divide_exact(a); q.has_value()) return a;
        BigInt ca = a.content(), cb = b.content();
        BigInt c = BigInt::gcd(ca, cb);
        Poly pa = ca.is_one() ? a : *a.divide_exact(Poly(ca));
        Poly pb = cb.is_one() ? b : *b.divide_exact(Poly(cb));
        if (auto g = gcd_heuristic(pa, pb)) return *g * c;
        return gcd_prs(pa, pb) * c;
    }

    // --- heuristic gcd: evaluate the main variable at a large integer,
    // integer-gcd the images, rebuild the candidate from balanced base-xi
    // digits, and certify by trial division.  Falls back on failure.

    BigInt height() const {
        BigInt h(0);
        for (auto& [m, c] : terms_) {
            BigInt a = c.abs();
            if (h < a) h = a;
        }
        return h;
    }

    Poly eval_var(VarId v, const BigInt& xi) const {
        std::vector<BigInt> powers{BigInt(1)};
        for (int k = 1; k <= degree_in(v); ++k) powers.push_back(powers.back() * xi);
        Poly r;
        for (auto& [m, c] : terms_) {
            Monomial rest;
            int e = 0;
            for (auto& [w, d] : m.factors) {
                if (w == v)
                    e = d;
                else
                    rest.factors.emplace_back(w, d);
            }
            r.add_term(rest, c * powers[e]);
        }
        return r;
    }

    // coefficientwise balanced remainder in (-xi/2, xi/2]
    static Poly smod(const Poly& p, const BigInt& xi) {
        Poly r;
        for (auto& [m, c] : p.terms_) {
            BigInt q, rem;
            BigInt::divmod(c, xi, q, rem);
            BigInt twice = rem + rem;
            if (twice > xi) rem = rem - xi;
            else if (-twice >= xi) rem = rem + xi;
            if (!rem.is_zero()) r.terms_.emplace(m, rem);
        }
        return r;
    }

    static std::optional<Poly> gcd_heuristic(const Poly& a, const Poly& b, int depth = 0) {
        if (a.is_zero()) return b;
        if (b.is_zero()) return a;
        if (a.is_constant() && b.is_constant())
            return Poly(BigInt::gcd(a.constant_value(), b.constant_value()));
        std::vector<VarId> vars;
        a.variables(vars);
        b.variables(vars);
        VarId v = vars[0];
        for (VarId w : vars) v = std::max(v, w);
        if (depth > 16) return std::nullopt;

        BigInt ha = a.height(), hb = b.height();
        BigInt xi = (ha < hb ? ha : hb);
        xi = xi + xi + BigInt(29);
        const int digit_bound = std::min(a.degree_in(v), b.degree_in(v)) + 1;
        for (int attempt = 0; attempt < 6; ++attempt) {
            Poly ia = a.eval_var(v, xi), ib = b.eval_var(v, xi);
            auto gi = gcd_heuristic(ia, ib, depth + 1);
            if (gi && !gi->is_zero()) {
                // rebuild candidate digits g = sum digit_k v^k
                Poly g, rest = *gi;
                for (int k = 0; !rest.is_zero(); ++k) {
                    if (k > digit_bound) {
                        g = Poly();
                        break;
                    }
                    Poly digit = smod(rest, xi);
                    if (!digit.is_zero()) g = g + digit * variable(v, k);
                    rest = *(rest - digit).divide_exact(Poly(xi));
                }
                // keep the integer content: at inner recursion levels it is
                // digit data for the reconstruction one level up
                if (!g.is_zero()) {
                    if (g.leading_coeff().negative()) g = -g;
                    if (a.divide_exact(g) && b.divide_exact(g)) return g;
                }
            }
            // bump the evaluation point and retry
            xi = xi * BigInt(73794);
            BigInt q, r;
            BigInt::divmod(xi, BigInt(27011), q, r);
            xi = q + BigInt(1);
        }
        return std::nullopt;
    }

    // --- fallback: recursive primitive pseudo-remainder sequence

    static Poly gcd_prs(const Poly& a, const Poly& b) {
        VarId va = *a.main_variable(), vb = *b.main_variable();
        VarId v = std::max(va, vb);
        Poly ca = a.content_in(v), cb = b.content_in(v);
        Poly c = gcd_inner(ca, cb);
        Poly u = *a.divide_exact(ca), w = *b.divide_exact(cb);
        if (u.degree_in(v) < w.degree_in(v)) std::swap(u, w);
        while (!w.is_zero()) {
            Poly r = prem(u, w, v);
            u = std::move(w);
            if (r.is_zero()) {
                w = Poly();
            } else {
                Poly cr = r.content_in(v);
                w = *r.divide_exact(cr);
            }
        }
        Poly cu = u.content_in(v);
        return c * (*u.divide_exact(cu));
    }
};

} // namespace presymp
