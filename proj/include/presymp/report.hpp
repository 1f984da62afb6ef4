#pragma once

#include <json.hpp>

#include "presymp/driver.hpp"

namespace presymp {

inline const char* to_string(AnalysisStatus s) {
    switch (s) {
        case AnalysisStatus::FinalSubmanifold: return "final-submanifold-found";
        case AnalysisStatus::NoSolution: return "no-solution";
        case AnalysisStatus::IterationLimit: return "iteration-limit";
        case AnalysisStatus::StratificationAmbiguous: return "stratification-ambiguous";
    }
    return "?";
}

inline const char* to_string(IntegrabilityStatus s) {
    switch (s) {
        case IntegrabilityStatus::NotRun: return "not-run";
        case IntegrabilityStatus::FlatOnFinal: return "flat-on-final-submanifold";
        case IntegrabilityStatus::FlatOnSubmanifold: return "flat-on-proper-submanifold";
        case IntegrabilityStatus::NoIntegrableSubmanifold: return "no-integrable-submanifold";
        case IntegrabilityStatus::IterationLimit: return "iteration-limit";
    }
    return "?";
}

inline const char* to_string(ChartKind k) {
    switch (k) {
        case ChartKind::Plain: return "plain";
        case ChartKind::FirstJet: return "first-jet";
        case ChartKind::Momentum: return "momentum";
    }
    return "?";
}

using json = nlohmann::ordered_json;

namespace detail {

inline json expr_list(const std::vector<Expr>& es) {
    json a = json::array();
    for (auto& e : es) a.push_back(e.to_string());
    return a;
}

inline json generation_list(const std::vector<ConstraintGeneration>& gens) {
    json a = json::array();
    for (auto& g : gens) {
        json j;
        j["index"] = g.index;
        j["constraints"] = expr_list(g.constraints);
        j["provenance"] = g.provenance;
        a.push_back(std::move(j));
    }
    return a;
}

inline json section_table(const CandidateSection& s, const Chart& chart) {
    json a = json::array();
    for (int i = 0; i < chart.fibre_dim(); ++i) {
        json row;
        row["fibre"] = symbol_name(chart.fibre(i));
        json cols = json::array();
        for (int mu = 0; mu < chart.base_dim(); ++mu) cols.push_back(s.gamma(i, mu).to_string());
        row["coefficients"] = std::move(cols);
        a.push_back(std::move(row));
    }
    return a;
}

} // namespace detail

inline json structured_report(const ModelAnalysis& ma) {
    const Chart& chart = ma.system.chart;
    const AnalysisReport& rep = ma.report;
    json j;
    j["model_kind"] = to_string(ma.model.kind);
    json jc;
    jc["kind"] = to_string(chart.kind());
    json base = json::array(), fibre = json::array();
    for (int mu = 0; mu < chart.base_dim(); ++mu) base.push_back(symbol_name(chart.base(mu)));
    for (int a = 0; a < chart.fibre_dim(); ++a) fibre.push_back(symbol_name(chart.fibre(a)));
    jc["base"] = std::move(base);
    jc["fibre"] = std::move(fibre);
    j["chart"] = std::move(jc);
    j["seed"] = ma.model.seed;

    j["gamma"] = form_to_string(rep.split.gamma, chart);
    j["omega_residual"] = form_to_string(rep.split.residual, chart);
    j["assumption_ok"] = rep.split.bidegree_ok;

    j["generations"] = detail::generation_list(rep.generations);
    j["final_constraints"] = detail::expr_list(rep.constraints);
    j["status"] = to_string(rep.status);
    j["generations_run"] = rep.generations_run;

    json fam;
    fam["rank"] = rep.family.rank;
    fam["nullspace_dimension"] = rep.family.nullspace.size();
    std::vector<Expr> nontrivial;
    for (auto& cond : rep.family.conditions)
        if (!cond.is_zero()) nontrivial.push_back(cond);
    fam["conditions"] = detail::expr_list(nontrivial);
    json part = json::array();
    for (auto& e : rep.family.particular) part.push_back(e.to_string());
    fam["particular"] = std::move(part);
    j["solution_family"] = std::move(fam);
    j["canonical_section"] = detail::section_table(rep.canonical, chart);

    json integ;
    integ["status"] = to_string(rep.integrability);
    integ["generations"] = detail::generation_list(rep.integrability_generations);
    integ["constraints"] = detail::expr_list(rep.integrability_constraints);
    j["integrability"] = std::move(integ);

    if (ma.system.lagrangian) {
        j["regularity"] = to_string(ma.system.lagrangian->regularity);
        j["sampled_hessian_ranks"] = ma.system.lagrangian->sampled_ranks;
        if (ma.semiholonomy) {
            json sh;
            sh["defects"] = detail::expr_list(ma.semiholonomy->defects);
            sh["s_constraints"] = detail::expr_list(ma.semiholonomy->s_constraints);
            j["semi_holonomy"] = std::move(sh);
        }
        j["el_applicable"] = ma.el_applicable;
        if (ma.el_applicable) j["el_residuals"] = detail::expr_list(ma.el_residuals);
    }
    if (ma.affine_result) {
        const AffineAnalysis& ar = *ma.affine_result;
        json aff;
        aff["nondegenerate"] = ar.nondegenerate;
        aff["routed_to_engine"] = ar.routed_to_engine;
        aff["engine_agrees"] = ar.engine_agrees;
        aff["solution_dimension"] = ar.solution_dimension;
        json sys = json::array();
        for (auto& row : ar.system) {
            json r = json::array();
            for (auto& e : row) r.push_back(e.to_string());
            sys.push_back(std::move(r));
        }
        aff["system"] = std::move(sys);
        aff["rhs"] = detail::expr_list(ar.rhs);
        aff["integrability"] = detail::expr_list(ar.integrability);
        j["affine"] = std::move(aff);
    }
    j["warnings"] = rep.warnings;
    return j;
}

inline std::string text_report(const ModelAnalysis& ma) {
    const Chart& chart = ma.system.chart;
    const AnalysisReport& rep = ma.report;
    std::ostringstream os;
    os << "model kind:        " << to_string(ma.model.kind) << "\n";
    os << "chart:             " << to_string(chart.kind()) << " (";
    for (int mu = 0; mu < chart.base_dim(); ++mu)
        os << (mu ? ", " : "") << symbol_name(chart.base(mu));
    os << " ; ";
    for (int a = 0; a < chart.fibre_dim(); ++a)
        os << (a ? ", " : "") << symbol_name(chart.fibre(a));
    os << ")\n";
    if (ma.system.lagrangian)
        os << "regularity:        " << to_string(ma.system.lagrangian->regularity) << "\n";
    os << "gamma:             " << form_to_string(rep.split.gamma, chart) << "\n";
    os << "omega residual:    " << form_to_string(rep.split.residual, chart) << "\n";
    os << "status:            " << to_string(rep.status) << "\n";
    if (rep.generations.empty()) {
        os << "constraints:       none (solvable everywhere)\n";
    } else {
        for (auto& g : rep.generations) {
            os << "generation " << g.index << ":      ";
            for (size_t i = 0; i < g.constraints.size(); ++i)
                os << (i ? ", " : "") << g.constraints[i].to_string() << " = 0";
            os << "\n";
        }
    }
    os << "solution family:   rank " << rep.family.rank << ", nullspace dimension "
       << rep.family.nullspace.size() << "\n";
    os << "integrability:     " << to_string(rep.integrability) << "\n";
    for (auto& g : rep.integrability_generations) {
        os << "  chain step " << g.index << ": ";
        for (size_t i = 0; i < g.constraints.size(); ++i)
            os << (i ? ", " : "") << g.constraints[i].to_string() << " = 0";
        os << "\n";
    }
    if (ma.system.lagrangian && ma.semiholonomy) {
        os << "semi-holonomy:     ";
        if (ma.semiholonomy->s_constraints.empty())
            os << "forced (no S-constraints)\n";
        else {
            for (size_t i = 0; i < ma.semiholonomy->s_constraints.size(); ++i)
                os << (i ? ", " : "") << ma.semiholonomy->s_constraints[i].to_string() << " = 0";
            os << "\n";
        }
        if (ma.el_applicable) {
            os << "EL residuals:      ";
            for (size_t i = 0; i < ma.el_residuals.size(); ++i)
                os << (i ? ", " : "") << ma.el_residuals[i].to_string();
            os << "\n";
        }
    }
    if (ma.affine_result) {
        os << "affine route:      "
           << (ma.affine_result->nondegenerate ? "nondegenerate blocks" : "singular blocks")
           << (ma.affine_result->routed_to_engine ? ", routed to constraint engine" : "")
           << ", engine agreement " << (ma.affine_result->engine_agrees ? "ok" : "FAILED") << "\n";
        if (ma.affine_result->solution_dimension >= 0)
            os << "affine dimension:  " << ma.affine_result->solution_dimension << "\n";
    }
    for (auto& w : rep.warnings) os << "warning:           " << w << "\n";
    return os.str();
}

inline std::string render_checks(const std::vector<CheckResult>& checks, bool& all_pass) {
    std::ostringstream os;
    all_pass = true;
    for (auto& c : checks) {
        os << (c.pass ? "PASS" : "FAIL") << "  " << c.name;
        if (!c.detail.empty()) os << "  (" << c.detail << ")";
        os << "\n";
        all_pass = all_pass && c.pass;
    }
    return os.str();
}

} // namespace presymp
