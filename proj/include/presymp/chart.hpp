#pragma once

#include <set>

#include "presymp/expr.hpp"

namespace presymp {

enum class ChartKind { Plain, FirstJet, Momentum };

/*
 * A fibred coordinate chart: base coordinates x^mu first, then the fibre
 * block.  First-jet charts append one velocity v<A>_<mu> per (field, base)
 * pair; momentum charts append momenta p<A>_<mu>.  Positions in chart order
 * index the bitmask multi-indices used by forms, so the chart dimension is
 * capped at 63.
 */
class Chart {
public:
    // Empty placeholder, only valid as a container element before assignment.
    Chart() = default;

    static Chart plain(const std::vector<std::string>& base,
                       const std::vector<std::string>& fields) {
        return Chart(ChartKind::Plain, base, fields);
    }
    static Chart first_jet(const std::vector<std::string>& base,
                           const std::vector<std::string>& fields) {
        return Chart(ChartKind::FirstJet, base, fields);
    }
    static Chart momentum(const std::vector<std::string>& base,
                          const std::vector<std::string>& fields) {
        return Chart(ChartKind::Momentum, base, fields);
    }

    ChartKind kind() const { return kind_; }
    int base_dim() const { return static_cast<int>(base_.size()); }      // m
    int field_dim() const { return static_cast<int>(fields_.size()); }   // n
    int dim() const { return static_cast<int>(coords_.size()); }
    int fibre_dim() const { return dim() - base_dim(); }

    VarId base(int mu) const { return base_.at(mu); }
    VarId field(int a) const { return fields_.at(a); }
    VarId jet(int a, int mu) const {
        require(kind_ == ChartKind::FirstJet, "chart has no jet block");
        return extra_.at(static_cast<size_t>(a) * base_.size() + mu);
    }
    VarId momentum_coord(int a, int mu) const {
        require(kind_ == ChartKind::Momentum, "chart has no momentum block");
        return extra_.at(static_cast<size_t>(a) * base_.size() + mu);
    }
    // Fibre coordinate by fibre index (fields first, then jets/momenta).
    VarId fibre(int i) const { return coords_.at(base_.size() + i); }

    const std::vector<VarId>& coords() const { return coords_; }

    int position(VarId v) const {
        for (size_t i = 0; i < coords_.size(); ++i)
            if (coords_[i] == v) return static_cast<int>(i);
        return -1;
    }
    bool contains(VarId v) const { return position(v) >= 0; }
    bool is_base(VarId v) const {
        int p = position(v);
        return p >= 0 && p < base_dim();
    }
    bool is_vertical(VarId v) const { return position(v) >= base_dim(); }

    VarId lookup(const std::string& name) const {
        for (VarId v : coords_)
            if (symbol_name(v) == name) return v;
        throw std::invalid_argument("unknown symbol '" + name + "' in this chart");
    }
    bool has_name(const std::string& name) const {
        for (VarId v : coords_)
            if (symbol_name(v) == name) return true;
        return false;
    }

    Expr coordinate_expr(VarId v) const {
        require(contains(v), "symbol does not belong to the chart");
        return Expr::symbol(v);
    }

private:
    ChartKind kind_ = ChartKind::Plain;
    std::vector<VarId> base_, fields_, extra_;
    std::vector<VarId> coords_;

    Chart(ChartKind kind, const std::vector<std::string>& base,
          const std::vector<std::string>& fields)
        : kind_(kind) {
        require(!base.empty(), "chart needs at least one base coordinate");
        require(!fields.empty(), "chart needs at least one fibre coordinate");
        std::vector<std::string> names = base;
        names.insert(names.end(), fields.begin(), fields.end());
        if (kind != ChartKind::Plain) {
            const char prefix = kind == ChartKind::FirstJet ? 'v' : 'p';
            for (size_t a = 0; a < fields.size(); ++a)
                for (size_t mu = 0; mu < base.size(); ++mu)
                    names.push_back(prefix + std::to_string(a + 1) + "_" +
                                    std::to_string(mu + 1));
        }
        std::set<std::string> seen;
        for (const auto& n : names) {
            require(valid_identifier(n), "'" + n + "' is not a valid coordinate name");
            require(seen.insert(n).second, "duplicate coordinate name '" + n + "'");
        }
        require(names.size() <= 63, "chart dimension exceeds 63");
        Symbols& tab = Symbols::instance();
        for (size_t i = 0; i < base.size(); ++i) base_.push_back(tab.intern(names[i]));
        for (size_t i = 0; i < fields.size(); ++i)
            fields_.push_back(tab.intern(names[base.size() + i]));
        for (size_t i = base.size() + fields.size(); i < names.size(); ++i)
            extra_.push_back(tab.intern(names[i]));
        coords_ = base_;
        coords_.insert(coords_.end(), fields_.begin(), fields_.end());
        coords_.insert(coords_.end(), extra_.begin(), extra_.end());
    }

    static bool valid_identifier(const std::string& s) {
        if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
        for (char c : s)
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
        return true;
    }
    static void require(bool ok, const std::string& msg) {
        if (!ok) throw std::invalid_argument("chart: " + msg);
    }
};

} // namespace presymp
