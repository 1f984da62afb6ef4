#pragma once

#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>

#include "presymp/fieldtheory.hpp"

namespace presymp {

struct IntegrationBlowup : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GridAxis {
    double min = 0, max = 1;
    int steps = 16;  // nodes = steps + 1
    double h() const { return (max - min) / steps; }
};

struct GridSpec {
    std::vector<GridAxis> axes;
    int nodes(int k) const { return axes[k].steps + 1; }
    size_t total_nodes() const {
        size_t t = 1;
        for (auto& a : axes) t *= a.steps + 1;
        return t;
    }
};

/*
 * Sampled local section on a rectangular base grid.  Node storage is
 * row-major with the first axis fastest, matching the export format.  The
 * path-independence defect records how much the fill order mattered: zero
 * for flat data, an observable artifact otherwise.
 */
struct GridSection {
    GridSpec grid;
    Chart config;                            // plain chart the section lives on
    std::vector<std::vector<double>> values; // [node][field]
    std::map<VarId, double> start;
    double path_defect = 0;
    int integrator_order = 4;

    size_t node_index(const std::vector<int>& idx) const {
        size_t lin = 0, stride = 1;
        for (size_t k = 0; k < idx.size(); ++k) {
            lin += stride * idx[k];
            stride *= grid.nodes(static_cast<int>(k));
        }
        return lin;
    }
    std::vector<double> node_coords(const std::vector<int>& idx) const {
        std::vector<double> x(idx.size());
        for (size_t k = 0; k < idx.size(); ++k)
            x[k] = grid.axes[k].min + grid.axes[k].h() * idx[k];
        return x;
    }

    void export_table(std::ostream& os) const {
        const int m = static_cast<int>(grid.axes.size());
        std::vector<int> idx(m, 0);
        os << std::setprecision(17);
        for (size_t node = 0; node < grid.total_nodes(); ++node) {
            auto x = node_coords(idx);
            for (int k = 0; k < m; ++k) os << (k ? " " : "") << x[k];
            for (double v : values[node_index(idx)]) os << " " << v;
            os << "\n";
            for (int k = 0; k < m; ++k) {
                if (++idx[k] <= grid.axes[k].steps) break;
                idx[k] = 0;
            }
        }
    }
};

namespace detail {

class SectionIntegrator {
public:
    SectionIntegrator(const Chart& config, const std::vector<std::vector<Expr>>& F,
                      const GridSpec& grid, const std::map<VarId, double>& start)
        : chart_(config), F_(F), grid_(grid), start_(start) {
        m_ = config.base_dim();
        n_ = config.field_dim();
        if (static_cast<int>(grid.axes.size()) != m_)
            throw std::invalid_argument("integrate_section: one grid axis per base coordinate");
    }

    // Fill the grid integrating axes in the given order (a permutation of
    // 0..m-1): a line along order[0], planes along order[1], and so on.
    std::vector<std::vector<double>> sweep(const std::vector<int>& order) const {
        std::vector<std::vector<double>> vals(grid_.total_nodes());
        std::vector<int> idx(m_, 0);
        vals[lin(idx)] = start_values();
        for (int stage = 0; stage < m_; ++stage) {
            const int axis = order[stage];
            // every already-filled node with later-stage axes pinned at 0
            // seeds one line along `axis`
            std::vector<int> sub(stage, 0);
            for (;;) {
                idx.assign(m_, 0);
                for (int s = 0; s < stage; ++s) idx[order[s]] = sub[s];
                std::vector<double> cur = vals[lin(idx)];
                for (int i = 1; i <= grid_.axes[axis].steps; ++i) {
                    cur = rk4_step(idx, axis, cur);  // steps from the node at idx
                    idx[axis] = i;
                    vals[lin(idx)] = cur;
                    check(cur, idx);
                }
                int s = 0;
                for (; s < stage; ++s) {
                    if (++sub[s] <= grid_.axes[order[s]].steps) break;
                    sub[s] = 0;
                }
                if (s == stage) break;
            }
        }
        return vals;
    }

private:
    Chart chart_;
    const std::vector<std::vector<Expr>>& F_;
    GridSpec grid_;
    std::map<VarId, double> start_;
    int m_ = 0, n_ = 0;

    size_t lin(const std::vector<int>& idx) const {
        size_t l = 0, stride = 1;
        for (int k = 0; k < m_; ++k) {
            l += stride * idx[k];
            stride *= grid_.nodes(k);
        }
        return l;
    }
    std::vector<double> start_values() const {
        std::vector<double> s(n_);
        for (int A = 0; A < n_; ++A) {
            auto it = start_.find(chart_.field(A));
            if (it == start_.end())
                throw std::invalid_argument("integrate_section: start point misses field '" +
                                            symbol_name(chart_.field(A)) + "'");
            s[A] = it->second;
        }
        return s;
    }

    std::vector<double> rhs(const std::vector<double>& x, const std::vector<double>& s,
                            int axis) const {
        std::map<VarId, double> pt;
        for (int k = 0; k < m_; ++k) pt[chart_.base(k)] = x[k];
        for (int A = 0; A < n_; ++A) pt[chart_.field(A)] = s[A];
        std::vector<double> f(n_);
        for (int A = 0; A < n_; ++A) f[A] = F_[A][axis].eval_double(pt);
        return f;
    }

    std::vector<double> rk4_step(const std::vector<int>& idx, int axis,
                                 const std::vector<double>& s0) const {
        const double h = grid_.axes[axis].h();
        std::vector<double> x(m_);
        for (int k = 0; k < m_; ++k) x[k] = grid_.axes[k].min + grid_.axes[k].h() * idx[k];
        auto shift = [&](double dh) {
            std::vector<double> xs = x;
            xs[axis] += dh;
            return xs;
        };
        auto saxpy = [&](const std::vector<double>& s, double c, const std::vector<double>& k) {
            std::vector<double> r = s;
            for (int A = 0; A < n_; ++A) r[A] += c * k[A];
            return r;
        };
        auto k1 = rhs(x, s0, axis);
        auto k2 = rhs(shift(h / 2), saxpy(s0, h / 2, k1), axis);
        auto k3 = rhs(shift(h / 2), saxpy(s0, h / 2, k2), axis);
        auto k4 = rhs(shift(h), saxpy(s0, h, k3), axis);
        std::vector<double> s1 = s0;
        for (int A = 0; A < n_; ++A)
            s1[A] += h / 6 * (k1[A] + 2 * k2[A] + 2 * k3[A] + k4[A]);
        return s1;
    }

    void check(const std::vector<double>& s, const std::vector<int>& idx) const {
        for (double v : s)
            if (!std::isfinite(v) || std::abs(v) > 1e12) {
                std::string where;
                for (int k = 0; k < m_; ++k)
                    where += (k ? "," : "") + std::to_string(idx[k]);
                throw IntegrationBlowup("integration blew up at grid node (" + where + ")");
            }
    }
};

} // namespace detail

/*
 * Integrate ds^A/dx^mu = F^A_mu(x, s) over the grid with classical RK4
 * one-step sweeps, first axis first.  The stored values come from the
 * lexicographic sweep; the defect is the maximum node discrepancy against
 * the sweep with the first two axes exchanged, which vanishes (to integrator
 * accuracy) exactly when the connection is flat.
 */
inline GridSection integrate_section(const Chart& config,
                                     const std::vector<std::vector<Expr>>& F,
                                     const std::map<VarId, double>& start,
                                     const GridSpec& grid) {
    if (config.kind() != ChartKind::Plain)
        throw std::invalid_argument("integrate_section: expected the configuration chart");
    if (static_cast<int>(F.size()) != config.field_dim())
        throw std::invalid_argument("integrate_section: one F row per field");
    for (auto& row : F)
        if (static_cast<int>(row.size()) != config.base_dim())
            throw std::invalid_argument("integrate_section: one F entry per base axis");

    detail::SectionIntegrator integ(config, F, grid, start);
    std::vector<int> order(config.base_dim());
    for (size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);

    GridSection sec;
    sec.grid = grid;
    sec.config = config;
    sec.start = start;
    sec.values = integ.sweep(order);
    if (config.base_dim() >= 2) {
        std::swap(order[0], order[1]);
        auto alt = integ.sweep(order);
        double defect = 0;
        for (size_t i = 0; i < sec.values.size(); ++i)
            for (int A = 0; A < config.field_dim(); ++A)
                defect = std::max(defect, std::abs(sec.values[i][A] - alt[i][A]));
        sec.path_defect = defect;
    }
    return sec;
}

struct ElResidualStats {
    double max_residual = 0;
    double l2_residual = 0;
    size_t interior_nodes = 0;
};

/*
 * Finite-difference Euler-Lagrange residual along a grid section:
 * d/dx^alpha (dL/dv^A_alpha composed with the section's first jet) minus
 * dL/dy^A, all by second-order central differences, reported as max and
 * root-mean-square over the interior.
 */
inline ElResidualStats numeric_el_check(const LagrangianSystem& sys, const GridSection& sec) {
    const Chart& jc = sys.chart;
    const int m = jc.base_dim(), n = jc.field_dim();
    if (sec.config.base_dim() != m || sec.config.field_dim() != n)
        throw std::invalid_argument("numeric_el_check: grid section does not match the system");
    for (int k = 0; k < m; ++k)
        if (sec.grid.nodes(k) < 4)
            throw std::invalid_argument("numeric_el_check: grid too coarse (< 4 nodes per axis)");

    // jet-point evaluation of dL/dv^A_alpha and dL/dy^A at an interior node
    auto jet_point = [&](const std::vector<int>& idx) {
        std::map<VarId, double> pt;
        auto x = sec.node_coords(idx);
        for (int k = 0; k < m; ++k) pt[jc.base(k)] = x[k];
        const auto& v = sec.values[sec.node_index(idx)];
        for (int A = 0; A < n; ++A) pt[jc.field(A)] = v[A];
        for (int al = 0; al < m; ++al) {
            std::vector<int> up = idx, dn = idx;
            ++up[al];
            --dn[al];
            const double h = sec.grid.axes[al].h();
            for (int A = 0; A < n; ++A)
                pt[jc.jet(A, al)] = (sec.values[sec.node_index(up)][A] -
                                     sec.values[sec.node_index(dn)][A]) /
                                    (2 * h);
        }
        return pt;
    };

    std::vector<std::vector<Expr>> dLdv(n, std::vector<Expr>(m));
    std::vector<Expr> dLdy(n);
    for (int A = 0; A < n; ++A) {
        dLdy[A] = sys.lagrangian.diff(jc.field(A));
        for (int al = 0; al < m; ++al) dLdv[A][al] = sys.lagrangian.diff(jc.jet(A, al));
    }

    ElResidualStats stats;
    double sum2 = 0;
    std::vector<int> idx(m, 2);
    // iterate interior nodes two layers in (nested central differences)
    for (;;) {
        bool interior = true;
        for (int k = 0; k < m; ++k)
            interior = interior && idx[k] >= 2 && idx[k] <= sec.grid.axes[k].steps - 2;
        if (interior) {
            for (int A = 0; A < n; ++A) {
                double r = -dLdy[A].eval_double(jet_point(idx));
                for (int al = 0; al < m; ++al) {
                    std::vector<int> up = idx, dn = idx;
                    ++up[al];
                    --dn[al];
                    const double h = sec.grid.axes[al].h();
                    r += (dLdv[A][al].eval_double(jet_point(up)) -
                          dLdv[A][al].eval_double(jet_point(dn))) /
                         (2 * h);
                }
                stats.max_residual = std::max(stats.max_residual, std::abs(r));
                sum2 += r * r;
            }
            ++stats.interior_nodes;
        }
        int k = 0;
        for (; k < m; ++k) {
            if (++idx[k] <= sec.grid.axes[k].steps - 2) break;
            idx[k] = 2;
        }
        if (k == m) break;
    }
    if (stats.interior_nodes == 0)
        throw std::invalid_argument("numeric_el_check: grid too coarse (< 4 nodes per axis)");
    stats.l2_residual = std::sqrt(sum2 / static_cast<double>(stats.interior_nodes * n));
    return stats;
}

} // namespace presymp
