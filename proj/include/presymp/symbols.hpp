#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace presymp {

using VarId = uint32_t;

/*
 * Process-wide intern table for scalar indeterminates.  Two kinds live here:
 * plain coordinate symbols, and opaque function atoms (an unspecified scalar
 * function of listed coordinates, closed under first differentiation).  The
 * table is append-only behind a mutex, so expression values built on top of
 * it stay immutable and freely shareable across threads.
 */
class Symbols {
public:
    struct Info {
        std::string name;
        bool is_atom = false;
        std::vector<VarId> args;  // atoms only: coordinates the atom depends on
    };

    static Symbols& instance() {
        static Symbols tab;
        return tab;
    }

    VarId intern(const std::string& name) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = by_name_.find(name);
        if (it != by_name_.end()) {
            if (infos_[it->second].is_atom)
                throw std::invalid_argument("symbol '" + name + "' already registered as a function atom");
            return it->second;
        }
        return push(Info{name, false, {}});
    }

    VarId intern_atom(const std::string& name, std::vector<VarId> args) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = by_name_.find(name);
        if (it != by_name_.end()) {
            const Info& inf = infos_[it->second];
            if (!inf.is_atom || inf.args != args)
                throw std::invalid_argument("atom '" + name + "' clashes with an existing symbol");
            return it->second;
        }
        return push(Info{name, true, std::move(args)});
    }

    // First-derivative atom of an atom: d<name>_d<coord>, same argument list.
    VarId derivative_atom(VarId atom, VarId coord) {
        Info inf = info(atom);
        if (!inf.is_atom) throw std::logic_error("derivative_atom: not an atom");
        return intern_atom("d" + inf.name + "_d" + info(coord).name, inf.args);
    }

    Info info(VarId id) const {
        std::lock_guard<std::mutex> lock(mu_);
        return infos_.at(id);
    }
    std::string name(VarId id) const { return info(id).name; }
    bool is_atom(VarId id) const { return info(id).is_atom; }

    // An atom depends on a coordinate iff the coordinate is in its argument list.
    bool atom_depends_on(VarId atom, VarId coord) const {
        Info inf = info(atom);
        for (VarId a : inf.args)
            if (a == coord) return true;
        return false;
    }

private:
    Symbols() = default;
    VarId push(Info inf) {
        VarId id = static_cast<VarId>(infos_.size());
        by_name_.emplace(inf.name, id);
        infos_.push_back(std::move(inf));
        return id;
    }

    mutable std::mutex mu_;
    std::unordered_map<std::string, VarId> by_name_;
    std::deque<Info> infos_;
};

inline std::string symbol_name(VarId id) { return Symbols::instance().name(id); }

} // namespace presymp
