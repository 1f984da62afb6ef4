#pragma once

#include <sstream>

#include "presymp/poly.hpp"

namespace presymp {

/// Raised when evaluation hits a vanishing denominator.
struct DivisionByZero : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised by operations that need decidable zero-testing on coefficients
/// containing opaque function atoms.
struct NonDecidableCoefficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/*
 * Exact scalar expression: a rational function over the integers in the
 * interned symbols, stored in canonical form.  Canonical means
 * numerator/denominator are gcd-reduced with no common integer content,
 * the denominator's graded-lex leading coefficient is positive, and zero
 * is 0/1.  Equality of values is therefore structural equality, and
 * is_zero() is an exact decision for the atom-free fragment.
 */
class Expr {
public:
    Expr() : num_(), den_(1) {}
    Expr(long long c) : num_(c), den_(1) {}
    Expr(const Rational& q) : num_(q.num()), den_(q.den()) {}
    static Expr symbol(VarId v) { return Expr(Poly::variable(v), Poly(1)); }
    static Expr atom(const std::string& name, const std::vector<VarId>& args) {
        return symbol(Symbols::instance().intern_atom(name, args));
    }
    static Expr from_poly(Poly p) { return Expr(std::move(p), Poly(1)); }

    const Poly& num() const { return num_; }
    const Poly& den() const { return den_; }

    bool is_zero() const { return num_.is_zero(); }
    bool is_one() const { return num_.is_one() && den_.is_one(); }
    bool is_rational_constant() const { return num_.is_constant() && den_.is_constant(); }
    Rational rational_value() const {
        if (!is_rational_constant()) throw std::logic_error("Expr: not a constant");
        return Rational(num_.constant_value(), den_.constant_value());
    }
    bool has_atom() const { return num_.has_atom() || den_.has_atom(); }
    bool is_polynomial() const { return den_.is_one(); }

    std::vector<VarId> free_symbols() const {
        std::vector<VarId> out;
        num_.variables(out);
        den_.variables(out);
        std::sort(out.begin(), out.end());
        return out;
    }
    bool depends_on(VarId v) const { return num_.depends_on(v) || den_.depends_on(v); }

    friend bool operator==(const Expr& a, const Expr& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

    Expr operator-() const { return Expr(-num_, den_); }
    friend Expr operator+(const Expr& a, const Expr& b) {
        if (a.den_ == b.den_) return Expr(a.num_ + b.num_, a.den_);
        return Expr(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Expr operator-(const Expr& a, const Expr& b) {
        if (a.den_ == b.den_) return Expr(a.num_ - b.num_, a.den_);
        return Expr(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Expr operator*(const Expr& a, const Expr& b) {
        return Expr(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Expr operator/(const Expr& a, const Expr& b) {
        if (b.is_zero()) throw DivisionByZero("division by zero expression");
        return Expr(a.num_ * b.den_, a.den_ * b.num_);
    }

    Expr pow(int e) const {
        if (e >= 0) return Expr(num_.pow(e), den_.pow(e));
        if (is_zero()) throw DivisionByZero("zero to a negative power");
        return Expr(den_.pow(-e), num_.pow(-e));
    }

    Expr diff(VarId v) const {
        // (n/d)' = (n'd - nd') / d^2; the ctor re-reduces.
        Poly n = num_.derivative(v) * den_ - num_ * den_.derivative(v);
        return Expr(std::move(n), den_ * den_);
    }

    Expr substitute(const std::map<VarId, Expr>& repl) const {
        Expr n = substitute_poly(num_, repl);
        Expr d = substitute_poly(den_, repl);
        if (d.is_zero()) throw DivisionByZero("substitution produced a zero denominator");
        return n / d;
    }

    Rational eval(const std::map<VarId, Rational>& point) const {
        Rational d = den_.eval(point);
        if (d.is_zero()) throw DivisionByZero("denominator vanishes at evaluation point");
        return num_.eval(point) / d;
    }

    double eval_double(const std::map<VarId, double>& point) const {
        double d = den_.eval_double(point);
        if (d == 0.0) throw DivisionByZero("denominator vanishes at evaluation point");
        return num_.eval_double(point) / d;
    }

    std::string to_string() const {
        if (den_.is_one()) return poly_to_string(num_);
        std::string n = num_.terms().size() > 1 ? "(" + poly_to_string(num_) + ")"
                                                : poly_to_string(num_);
        bool dwrap = den_.terms().size() > 1 || !den_.leading_coeff().is_one() ||
                     den_.leading_monomial().factors.size() > 1 ||
                     (den_.leading_monomial().factors.size() == 1 &&
                      den_.leading_monomial().factors[0].second > 1);
        std::string d = dwrap ? "(" + poly_to_string(den_) + ")" : poly_to_string(den_);
        return n + "/" + d;
    }

    static std::string poly_to_string(const Poly& p) {
        if (p.is_zero()) return "0";
        std::ostringstream os;
        bool first = true;
        // descending graded-lex order
        for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
            const BigInt& c = it->second;
            BigInt a = c.abs();
            if (first) {
                if (c.negative()) os << "-";
                first = false;
            } else {
                os << (c.negative() ? " - " : " + ");
            }
            bool coeff_shown = !a.is_one() || it->first.is_unit();
            if (coeff_shown) os << a.to_string();
            bool need_star = coeff_shown;
            for (auto& [v, e] : it->first.factors) {
                if (need_star) os << "*";
                os << symbol_name(v);
                if (e > 1) os << "^" << e;
                need_star = true;
            }
        }
        return os.str();
    }

private:
    Poly num_, den_;

    Expr(Poly n, Poly d) : num_(std::move(n)), den_(std::move(d)) { reduce(); }

    void reduce() {
        if (den_.is_zero()) throw DivisionByZero("zero denominator");
        if (num_.is_zero()) { den_ = Poly(1); return; }
        if (!den_.is_one()) {
            // exact-division fast paths: fraction-free elimination produces
            // numerators the denominator divides outright
            if (auto q = num_.divide_exact(den_)) {
                num_ = std::move(*q);
                den_ = Poly(1);
            } else if (auto r = den_.divide_exact(num_)) {
                num_ = Poly(1);
                den_ = std::move(*r);
            } else {
                Poly g = Poly::gcd(num_, den_);
                if (!g.is_one()) {
                    num_ = *num_.divide_exact(g);
                    den_ = *den_.divide_exact(g);
                }
            }
        }
        if (den_.leading_coeff().negative()) { num_ = -num_; den_ = -den_; }
    }

    static Expr substitute_poly(const Poly& p, const std::map<VarId, Expr>& repl) {
        Expr acc(0);
        for (auto& [m, c] : p.terms()) {
            Expr t{Rational(c)};
            for (auto& [v, e] : m.factors) {
                auto it = repl.find(v);
                Expr base = it != repl.end() ? it->second : Expr::symbol(v);
                t = t * base.pow(e);
            }
            acc = acc + t;
        }
        return acc;
    }
};

} // namespace presymp
