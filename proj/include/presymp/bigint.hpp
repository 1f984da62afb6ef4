#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace presymp {

/*
 * Arbitrary-precision signed integer, sign-magnitude with 32-bit limbs
 * (little endian).  Schoolbook arithmetic only: operands in this library
 * are coefficients of desk-scale polynomials, so asymptotics never matter,
 * but intermediate values in fraction-free elimination can overflow any
 * fixed-width type.
 */
class BigInt {
public:
    BigInt() = default;
    BigInt(long long v) {
        if (v < 0) { neg_ = true; }
        unsigned long long u = neg_ ? 0ULL - static_cast<unsigned long long>(v)
                                    : static_cast<unsigned long long>(v);
        while (u) { limbs_.push_back(static_cast<uint32_t>(u & 0xffffffffu)); u >>= 32; }
    }
    BigInt(int v) : BigInt(static_cast<long long>(v)) {}

    static BigInt from_string(const std::string& s) {
        BigInt r;
        size_t i = 0;
        bool neg = false;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) { neg = s[i] == '-'; ++i; }
        if (i == s.size()) throw std::invalid_argument("BigInt: empty numeral");
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("BigInt: bad digit");
            r.mul_small(10);
            r.add_small(static_cast<uint32_t>(s[i] - '0'));
        }
        r.neg_ = neg && !r.limbs_.empty();
        return r;
    }

    bool is_zero() const { return limbs_.empty(); }
    bool is_one() const { return !neg_ && limbs_.size() == 1 && limbs_[0] == 1; }
    bool negative() const { return neg_; }
    int sign() const { return limbs_.empty() ? 0 : (neg_ ? -1 : 1); }

    friend bool operator==(const BigInt& a, const BigInt& b) {
        return a.neg_ == b.neg_ && a.limbs_ == b.limbs_;
    }
    friend bool operator!=(const BigInt& a, const BigInt& b) { return !(a == b); }
    friend bool operator<(const BigInt& a, const BigInt& b) { return cmp(a, b) < 0; }
    friend bool operator>(const BigInt& a, const BigInt& b) { return cmp(a, b) > 0; }
    friend bool operator<=(const BigInt& a, const BigInt& b) { return cmp(a, b) <= 0; }
    friend bool operator>=(const BigInt& a, const BigInt& b) { return cmp(a, b) >= 0; }

    static int cmp(const BigInt& a, const BigInt& b) {
        if (a.neg_ != b.neg_) return a.neg_ ? -1 : 1;
        int c = cmp_mag(a.limbs_, b.limbs_);
        return a.neg_ ? -c : c;
    }

    BigInt operator-() const {
        BigInt r = *this;
        if (!r.limbs_.empty()) r.neg_ = !r.neg_;
        return r;
    }

    friend BigInt operator+(const BigInt& a, const BigInt& b) {
        BigInt r;
        if (a.neg_ == b.neg_) {
            r.limbs_ = add_mag(a.limbs_, b.limbs_);
            r.neg_ = a.neg_ && !r.limbs_.empty();
        } else {
            int c = cmp_mag(a.limbs_, b.limbs_);
            if (c == 0) return r;
            if (c > 0) { r.limbs_ = sub_mag(a.limbs_, b.limbs_); r.neg_ = a.neg_; }
            else       { r.limbs_ = sub_mag(b.limbs_, a.limbs_); r.neg_ = b.neg_; }
        }
        return r;
    }
    friend BigInt operator-(const BigInt& a, const BigInt& b) { return a + (-b); }

    friend BigInt operator*(const BigInt& a, const BigInt& b) {
        BigInt r;
        if (a.is_zero() || b.is_zero()) return r;
        r.limbs_.assign(a.limbs_.size() + b.limbs_.size(), 0);
        for (size_t i = 0; i < a.limbs_.size(); ++i) {
            uint64_t carry = 0;
            for (size_t j = 0; j < b.limbs_.size(); ++j) {
                uint64_t cur = static_cast<uint64_t>(a.limbs_[i]) * b.limbs_[j] +
                               r.limbs_[i + j] + carry;
                r.limbs_[i + j] = static_cast<uint32_t>(cur);
                carry = cur >> 32;
            }
            r.limbs_[i + b.limbs_.size()] += static_cast<uint32_t>(carry);
        }
        r.trim();
        r.neg_ = (a.neg_ != b.neg_) && !r.limbs_.empty();
        return r;
    }

    // Truncated quotient and remainder (remainder has the dividend's sign).
    static void divmod(const BigInt& a, const BigInt& b, BigInt& q, BigInt& r) {
        if (b.is_zero()) throw std::domain_error("BigInt: division by zero");
        int c = cmp_mag(a.limbs_, b.limbs_);
        if (c < 0) { q = BigInt(); r = a; return; }
        if (b.limbs_.size() == 1) {
            uint32_t rem = 0;
            q.limbs_.assign(a.limbs_.size(), 0);
            for (size_t i = a.limbs_.size(); i-- > 0;) {
                uint64_t cur = (static_cast<uint64_t>(rem) << 32) | a.limbs_[i];
                q.limbs_[i] = static_cast<uint32_t>(cur / b.limbs_[0]);
                rem = static_cast<uint32_t>(cur % b.limbs_[0]);
            }
            q.trim();
            r = BigInt();
            if (rem) { r.limbs_.push_back(rem); r.neg_ = a.neg_; }
            q.neg_ = (a.neg_ != b.neg_) && !q.limbs_.empty();
            return;
        }
        // Knuth-style normalized long division.
        int shift = 0;
        uint32_t top = b.limbs_.back();
        while (!(top & 0x80000000u)) { top <<= 1; ++shift; }
        std::vector<uint32_t> u = shl_mag(a.limbs_, shift);
        std::vector<uint32_t> v = shl_mag(b.limbs_, shift);
        u.push_back(0);
        size_t n = v.size(), m = u.size() - n - 1;
        std::vector<uint32_t> qm(m + 1, 0);
        for (size_t j = m + 1; j-- > 0;) {
            uint64_t num = (static_cast<uint64_t>(u[j + n]) << 32) | u[j + n - 1];
            uint64_t qh = num / v[n - 1];
            uint64_t rh = num % v[n - 1];
            while (qh >= (1ULL << 32) ||
                   (rh < (1ULL << 32) &&
                    qh * v[n - 2] > ((rh << 32) | u[j + n - 2]))) {
                --qh;
                rh += v[n - 1];
            }
            // multiply-subtract
            int64_t borrow = 0;
            uint64_t carry = 0;
            for (size_t i = 0; i < n; ++i) {
                uint64_t p = qh * v[i] + carry;
                carry = p >> 32;
                int64_t t = static_cast<int64_t>(u[i + j]) -
                            static_cast<int64_t>(p & 0xffffffffu) + borrow;
                u[i + j] = static_cast<uint32_t>(t);
                borrow = t >> 32;
            }
            int64_t t = static_cast<int64_t>(u[j + n]) -
                        static_cast<int64_t>(carry) + borrow;
            u[j + n] = static_cast<uint32_t>(t);
            if (t < 0) {
                // qh was one too large: add back
                --qh;
                uint64_t c2 = 0;
                for (size_t i = 0; i < n; ++i) {
                    uint64_t s = static_cast<uint64_t>(u[i + j]) + v[i] + c2;
                    u[i + j] = static_cast<uint32_t>(s);
                    c2 = s >> 32;
                }
                u[j + n] = static_cast<uint32_t>(u[j + n] + c2);
            }
            qm[j] = static_cast<uint32_t>(qh);
        }
        u.resize(n);
        q.limbs_ = std::move(qm);
        q.trim();
        q.neg_ = (a.neg_ != b.neg_) && !q.limbs_.empty();
        r.limbs_ = shr_mag(u, shift);
        r.trim();
        r.neg_ = a.neg_ && !r.limbs_.empty();
    }

    friend BigInt operator/(const BigInt& a, const BigInt& b) {
        BigInt q, r;
        divmod(a, b, q, r);
        return q;
    }
    friend BigInt operator%(const BigInt& a, const BigInt& b) {
        BigInt q, r;
        divmod(a, b, q, r);
        return r;
    }

    static BigInt gcd(BigInt a, BigInt b) {
        a.neg_ = b.neg_ = false;
        while (!b.is_zero()) {
            BigInt q, r;
            divmod(a, b, q, r);
            a = std::move(b);
            b = std::move(r);
            b.neg_ = false;
        }
        return a;
    }

    BigInt abs() const {
        BigInt r = *this;
        r.neg_ = false;
        return r;
    }

    double to_double() const {
        double r = 0;
        for (size_t i = limbs_.size(); i-- > 0;) r = r * 4294967296.0 + limbs_[i];
        return neg_ ? -r : r;
    }

    // Exact value when it fits, throws otherwise (wanted for exponents etc.).
    long long to_ll() const {
        if (limbs_.size() > 2) throw std::overflow_error("BigInt: does not fit in long long");
        unsigned long long u = 0;
        for (size_t i = limbs_.size(); i-- > 0;) u = (u << 32) | limbs_[i];
        if (u > (neg_ ? 0x8000000000000000ull : 0x7fffffffffffffffull))
            throw std::overflow_error("BigInt: does not fit in long long");
        return neg_ ? -static_cast<long long>(u) : static_cast<long long>(u);
    }

    std::string to_string() const {
        if (limbs_.empty()) return "0";
        std::vector<uint32_t> tmp = limbs_;
        std::string digits;
        while (!tmp.empty()) {
            uint64_t rem = 0;
            for (size_t i = tmp.size(); i-- > 0;) {
                uint64_t cur = (rem << 32) | tmp[i];
                tmp[i] = static_cast<uint32_t>(cur / 1000000000u);
                rem = cur % 1000000000u;
            }
            while (!tmp.empty() && tmp.back() == 0) tmp.pop_back();
            for (int k = 0; k < 9; ++k) {
                digits.push_back(static_cast<char>('0' + rem % 10));
                rem /= 10;
            }
        }
        while (digits.size() > 1 && digits.back() == '0') digits.pop_back();
        if (neg_) digits.push_back('-');
        std::reverse(digits.begin(), digits.end());
        return digits;
    }

private:
    bool neg_ = false;
    std::vector<uint32_t> limbs_;

    void trim() {
        while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
        if (limbs_.empty()) neg_ = false;
    }
    void mul_small(uint32_t f) {
        uint64_t carry = 0;
        for (auto& l : limbs_) {
            uint64_t cur = static_cast<uint64_t>(l) * f + carry;
            l = static_cast<uint32_t>(cur);
            carry = cur >> 32;
        }
        if (carry) limbs_.push_back(static_cast<uint32_t>(carry));
    }
    void add_small(uint32_t v) {
        uint64_t carry = v;
        for (auto& l : limbs_) {
            if (!carry) return;
            uint64_t cur = l + carry;
            l = static_cast<uint32_t>(cur);
            carry = cur >> 32;
        }
        if (carry) limbs_.push_back(static_cast<uint32_t>(carry));
    }

    static int cmp_mag(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
        if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
        for (size_t i = a.size(); i-- > 0;)
            if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
        return 0;
    }
    static std::vector<uint32_t> add_mag(const std::vector<uint32_t>& a,
                                         const std::vector<uint32_t>& b) {
        const auto &big = a.size() >= b.size() ? a : b;
        const auto &small = a.size() >= b.size() ? b : a;
        std::vector<uint32_t> r = big;
        uint64_t carry = 0;
        for (size_t i = 0; i < r.size(); ++i) {
            uint64_t cur = static_cast<uint64_t>(r[i]) + carry +
                           (i < small.size() ? small[i] : 0u);
            r[i] = static_cast<uint32_t>(cur);
            carry = cur >> 32;
            if (!carry && i >= small.size()) break;
        }
        if (carry) r.push_back(static_cast<uint32_t>(carry));
        return r;
    }
    // requires |a| >= |b|
    static std::vector<uint32_t> sub_mag(const std::vector<uint32_t>& a,
                                         const std::vector<uint32_t>& b) {
        std::vector<uint32_t> r = a;
        int64_t borrow = 0;
        for (size_t i = 0; i < r.size(); ++i) {
            int64_t cur = static_cast<int64_t>(r[i]) - borrow -
                          (i < b.size() ? b[i] : 0u);
            borrow = cur < 0;
            if (cur < 0) cur += 1LL << 32;
            r[i] = static_cast<uint32_t>(cur);
            if (!borrow && i >= b.size()) break;
        }
        while (!r.empty() && r.back() == 0) r.pop_back();
        return r;
    }
    static std::vector<uint32_t> shl_mag(std::vector<uint32_t> v, int s) {
        if (s == 0) return v;
        uint32_t carry = 0;
        for (auto& l : v) {
            uint32_t nc = l >> (32 - s);
            l = (l << s) | carry;
            carry = nc;
        }
        if (carry) v.push_back(carry);
        return v;
    }
    static std::vector<uint32_t> shr_mag(std::vector<uint32_t> v, int s) {
        if (s == 0) return v;
        for (size_t i = 0; i < v.size(); ++i) {
            uint32_t hi = (i + 1 < v.size()) ? v[i + 1] : 0;
            v[i] = (v[i] >> s) | (hi << (32 - s));
        }
        while (!v.empty() && v.back() == 0) v.pop_back();
        return v;
    }
};

/// Exact rational number, always stored reduced with positive denominator.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(BigInt n) : num_(std::move(n)), den_(1) {}
    Rational(BigInt n, BigInt d) : num_(std::move(n)), den_(std::move(d)) { reduce(); }
    Rational(long long n, long long d) : num_(n), den_(d) { reduce(); }

    const BigInt& num() const { return num_; }
    const BigInt& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    bool is_one() const { return num_.is_one() && den_.is_one(); }
    bool is_integer() const { return den_.is_one(); }
    int sign() const { return num_.sign(); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.is_zero()) throw std::domain_error("Rational: division by zero");
        return Rational(a.num_ * b.den_, a.den_ * b.num_);
    }
    Rational operator-() const {
        Rational r = *this;
        r.num_ = -r.num_;
        return r;
    }
    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return (a - b).sign() < 0;
    }

    double to_double() const { return num_.to_double() / den_.to_double(); }

    std::string to_string() const {
        if (den_.is_one()) return num_.to_string();
        return num_.to_string() + "/" + den_.to_string();
    }

private:
    BigInt num_, den_;
    void reduce() {
        if (den_.is_zero()) throw std::domain_error("Rational: zero denominator");
        if (num_.is_zero()) { den_ = BigInt(1); return; }
        BigInt g = BigInt::gcd(num_, den_);
        num_ = num_ / g;
        den_ = den_ / g;
        if (den_.negative()) { num_ = -num_; den_ = -den_; }
    }
};

} // namespace presymp
