#pragma once

#include "presymp/chart.hpp"

namespace presymp {

struct ParseError : std::runtime_error {
    size_t position;
    ParseError(const std::string& msg, size_t pos)
        : std::runtime_error(msg + " at offset " + std::to_string(pos)), position(pos) {}
};

struct UnknownSymbolError : ParseError {
    std::string symbol;
    UnknownSymbolError(const std::string& sym, size_t pos)
        : ParseError("unknown symbol '" + sym + "'", pos), symbol(sym) {}
};

/*
 * Expression grammar:
 *
 *   expr   := ('-')? term (('+'|'-') term)*
 *   term   := factor (('*'|'/') factor)*
 *   factor := base ('^' int)?
 *   base   := number | ident | '(' expr ')'
 *
 * Identifiers match [a-zA-Z][a-zA-Z0-9_]* and must name chart coordinates;
 * anything else is rejected rather than auto-created.
 */
class ExprParser {
public:
    ExprParser(std::string source, const Chart& chart)
        : src_(std::move(source)), chart_(chart) {}

    Expr parse() {
        pos_ = 0;
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string src_;
    const Chart& chart_;
    size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }
    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }
    bool accept(char c) {
        if (peek() == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Expr parse_expr() {
        bool neg = false;
        if (peek() == '-') {
            ++pos_;
            neg = true;
        }
        Expr acc = parse_term();
        if (neg) acc = -acc;
        for (;;) {
            char c = peek();
            if (c == '+') {
                ++pos_;
                acc = acc + parse_term();
            } else if (c == '-') {
                ++pos_;
                acc = acc - parse_term();
            } else {
                return acc;
            }
        }
    }

    Expr parse_term() {
        Expr acc = parse_factor();
        for (;;) {
            char c = peek();
            if (c == '*') {
                ++pos_;
                acc = acc * parse_factor();
            } else if (c == '/') {
                ++pos_;
                size_t at = pos_;
                Expr d = parse_factor();
                if (d.is_zero()) throw ParseError("division by zero", at);
                acc = acc / d;
            } else {
                return acc;
            }
        }
    }

    Expr parse_factor() {
        Expr b = parse_base();
        if (peek() == '^') {
            ++pos_;
            skip_ws();
            bool neg = false;
            if (pos_ < src_.size() && src_[pos_] == '-') {
                neg = true;
                ++pos_;
            }
            size_t at = pos_;
            if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
                throw ParseError("expected integer exponent", at);
            long long e = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                e = e * 10 + (src_[pos_] - '0');
                if (e > 4096) throw ParseError("exponent too large", at);
                ++pos_;
            }
            if (neg && b.is_zero()) throw ParseError("zero to a negative power", at);
            b = b.pow(static_cast<int>(neg ? -e : e));
        }
        return b;
    }

    Expr parse_base() {
        char c = peek();
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                ++pos_;
            return Expr(Rational(BigInt::from_string(src_.substr(start, pos_ - start))));
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            std::string name = src_.substr(start, pos_ - start);
            if (!chart_.has_name(name)) throw UnknownSymbolError(name, start);
            return Expr::symbol(chart_.lookup(name));
        }
        throw ParseError(pos_ >= src_.size() ? "unexpected end of input"
                                             : std::string("unexpected character '") + c + "'",
                         pos_);
    }
};

inline Expr parse_expr(const std::string& source, const Chart& chart) {
    return ExprParser(source, chart).parse();
}

} // namespace presymp
