#pragma once

#include <fstream>
#include <sstream>

#include "presymp/integrate.hpp"

namespace presymp {

struct ModelError : std::runtime_error {
    int line;
    ModelError(const std::string& msg, int ln)
        : std::runtime_error("line " + std::to_string(ln) + ": " + msg), line(ln) {}
};

enum class ModelKind { Lagrangian, Hamiltonian, Premultisymplectic, Affine };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Lagrangian: return "lagrangian";
        case ModelKind::Hamiltonian: return "hamiltonian";
        case ModelKind::Premultisymplectic: return "premultisymplectic";
        case ModelKind::Affine: return "affine";
    }
    return "?";
}

/*
 * Declarative model document.  Sections [model], [connection], [options];
 * `key = value` lines with integers, quoted strings, or arrays in square
 * brackets; # starts a comment.  Expression payloads stay as source strings
 * here and are parsed against the chart the driver builds.
 */
struct ModelFile {
    ModelKind kind = ModelKind::Lagrangian;
    std::vector<std::string> base, fields;
    std::string lagrangian, hamiltonian;
    std::string affine_a;
    // (base name, field name) -> expression source, for f^mu_B
    std::vector<std::tuple<std::string, std::string, std::string>> affine_f;
    // multi-index name -> coefficient source, e.g. "dy1^dx1^dx2: y1 - y2"
    std::vector<std::pair<std::string, std::string>> omega_entries;
    // (fibre name, base name) -> coefficient source
    std::vector<std::tuple<std::string, std::string, std::string>> connection_entries;

    int max_generations = 16;
    uint64_t seed = 0;
    // axis name -> (min, max, steps)
    std::vector<std::tuple<std::string, double, double, int>> grid;
    std::vector<std::pair<std::string, double>> start;
};

namespace detail {

struct ModelParser {
    std::istringstream in;
    int line_no = 0;

    explicit ModelParser(std::string text) : in(std::move(text)) {}

    static std::string strip(const std::string& s) {
        size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return "";
        size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    }

    // value := "quoted" | integer/real | [ item, item, ... ]
    std::vector<std::string> parse_array(const std::string& v, int ln) {
        if (v.size() < 2 || v.front() != '[' || v.back() != ']')
            throw ModelError("expected an array in square brackets", ln);
        std::vector<std::string> items;
        std::string body = v.substr(1, v.size() - 2);
        std::string cur;
        bool quoted = false;
        for (char c : body) {
            if (c == '"') {
                quoted = !quoted;
                continue;
            }
            if (c == ',' && !quoted) {
                items.push_back(strip(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (quoted) throw ModelError("unterminated string in array", ln);
        if (!strip(cur).empty()) items.push_back(strip(cur));
        return items;
    }

    static std::string unquote(const std::string& v, int ln) {
        if (v.size() < 2 || v.front() != '"' || v.back() != '"')
            throw ModelError("expected a quoted string", ln);
        return v.substr(1, v.size() - 2);
    }

    static double parse_number(const std::string& s, int ln) {
        size_t slash = s.find('/');
        try {
            if (slash != std::string::npos) {
                double n = std::stod(s.substr(0, slash));
                double d = std::stod(s.substr(slash + 1));
                if (d == 0) throw ModelError("zero denominator", ln);
                return n / d;
            }
            return std::stod(s);
        } catch (const std::invalid_argument&) {
            throw ModelError("bad numeric value '" + s + "'", ln);
        }
    }

    // "lhs : rhs" split at the first colon
    static std::pair<std::string, std::string> split_colon(const std::string& s, int ln) {
        size_t c = s.find(':');
        if (c == std::string::npos) throw ModelError("expected 'key: value' entry", ln);
        return {strip(s.substr(0, c)), strip(s.substr(c + 1))};
    }

    ModelFile parse() {
        ModelFile mf;
        std::string section;
        bool kind_set = false;
        std::string raw;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string s;
            bool quoted = false;
            for (char c : raw) {
                if (c == '"') quoted = !quoted;
                if (c == '#' && !quoted) break;
                s += c;
            }
            s = strip(s);
            if (s.empty()) continue;
            if (s.front() == '[' && s.back() == ']' && s.find('=') == std::string::npos) {
                section = s.substr(1, s.size() - 2);
                if (section != "model" && section != "connection" && section != "options")
                    throw ModelError("unknown section [" + section + "]", line_no);
                continue;
            }
            size_t eq = s.find('=');
            if (eq == std::string::npos) throw ModelError("expected 'key = value'", line_no);
            std::string key = strip(s.substr(0, eq));
            std::string val = strip(s.substr(eq + 1));
            if (section == "model") {
                handle_model(mf, key, val, kind_set);
            } else if (section == "connection") {
                if (key != "G") throw ModelError("unknown connection key '" + key + "'", line_no);
                for (auto& item : parse_array(val, line_no)) {
                    auto [lhs, rhs] = split_colon(item, line_no);
                    std::istringstream ls(lhs);
                    std::string fib, bas;
                    ls >> fib >> bas;
                    if (fib.empty() || bas.empty())
                        throw ModelError("connection entry needs '<fibre> <base>: expr'", line_no);
                    mf.connection_entries.emplace_back(fib, bas, rhs);
                }
            } else if (section == "options") {
                handle_options(mf, key, val);
            } else {
                throw ModelError("key outside of any section", line_no);
            }
        }
        if (!kind_set) throw ModelError("missing model kind", line_no);
        validate(mf);
        return mf;
    }

    void handle_model(ModelFile& mf, const std::string& key, const std::string& val,
                      bool& kind_set) {
        if (key == "kind") {
            std::string k = unquote(val, line_no);
            if (k == "lagrangian") mf.kind = ModelKind::Lagrangian;
            else if (k == "hamiltonian") mf.kind = ModelKind::Hamiltonian;
            else if (k == "premultisymplectic") mf.kind = ModelKind::Premultisymplectic;
            else if (k == "affine") mf.kind = ModelKind::Affine;
            else throw ModelError("unknown model kind '" + k + "'", line_no);
            kind_set = true;
        } else if (key == "base") {
            mf.base = parse_array(val, line_no);
        } else if (key == "fields") {
            mf.fields = parse_array(val, line_no);
        } else if (key == "lagrangian") {
            mf.lagrangian = unquote(val, line_no);
        } else if (key == "hamiltonian") {
            mf.hamiltonian = unquote(val, line_no);
        } else if (key == "a") {
            mf.affine_a = unquote(val, line_no);
        } else if (key == "f") {
            for (auto& item : parse_array(val, line_no)) {
                auto [lhs, rhs] = split_colon(item, line_no);
                std::istringstream ls(lhs);
                std::string mu, field;
                ls >> mu >> field;
                if (mu.empty() || field.empty())
                    throw ModelError("f entry needs '<base> <field>: expr'", line_no);
                mf.affine_f.emplace_back(mu, field, rhs);
            }
        } else if (key == "omega") {
            for (auto& item : parse_array(val, line_no)) {
                auto [lhs, rhs] = split_colon(item, line_no);
                mf.omega_entries.emplace_back(lhs, rhs);
            }
        } else {
            throw ModelError("unknown model key '" + key + "'", line_no);
        }
    }

    void handle_options(ModelFile& mf, const std::string& key, const std::string& val) {
        if (key == "max_generations") {
            mf.max_generations = static_cast<int>(parse_number(val, line_no));
            if (mf.max_generations < 1) throw ModelError("max_generations must be >= 1", line_no);
        } else if (key == "seed") {
            mf.seed = static_cast<uint64_t>(parse_number(val, line_no));
        } else if (key == "grid") {
            for (auto& item : parse_array(val, line_no)) {
                auto [axis, rest] = split_colon(item, line_no);
                std::istringstream rs(rest);
                std::string mn, mx, st;
                rs >> mn >> mx >> st;
                if (st.empty()) throw ModelError("grid entry needs '<axis>: min max steps'", line_no);
                mf.grid.emplace_back(axis, parse_number(mn, line_no), parse_number(mx, line_no),
                                     static_cast<int>(parse_number(st, line_no)));
            }
        } else if (key == "start") {
            for (auto& item : parse_array(val, line_no)) {
                auto [name, v] = split_colon(item, line_no);
                mf.start.emplace_back(name, parse_number(v, line_no));
            }
        } else {
            throw ModelError("unknown option '" + key + "'", line_no);
        }
    }

    void validate(const ModelFile& mf) {
        if (mf.base.empty()) throw ModelError("model needs base coordinates", line_no);
        if (mf.fields.empty()) throw ModelError("model needs field coordinates", line_no);
        switch (mf.kind) {
            case ModelKind::Lagrangian:
                if (mf.lagrangian.empty()) throw ModelError("lagrangian model needs 'lagrangian'", line_no);
                break;
            case ModelKind::Hamiltonian:
                if (mf.hamiltonian.empty()) throw ModelError("hamiltonian model needs 'hamiltonian'", line_no);
                break;
            case ModelKind::Premultisymplectic:
                if (mf.omega_entries.empty())
                    throw ModelError("premultisymplectic model needs 'omega' entries", line_no);
                break;
            case ModelKind::Affine: {
                if (mf.affine_a.empty()) throw ModelError("affine model needs 'a'", line_no);
                // every f^mu_B must be present
                for (auto& b : mf.base)
                    for (auto& f : mf.fields) {
                        bool found = false;
                        for (auto& [mu, fld, src] : mf.affine_f)
                            found = found || (mu == b && fld == f);
                        if (!found)
                            throw ModelError("affine model misses f entry '" + b + " " + f + "'",
                                             line_no);
                    }
                break;
            }
        }
    }
};

} // namespace detail

inline ModelFile parse_model(const std::string& text) {
    return detail::ModelParser(text).parse();
}

inline ModelFile load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open model file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_model(ss.str());
}

} // namespace presymp
