// Command-line front end: analyze | check | integrate on declarative model
// files.  Exit codes for `analyze` mirror the report status: 0 final
// submanifold found, 2 no solution, 3 iteration limit or ambiguity, 1 input
// error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "presymp/report.hpp"

namespace {

using namespace presymp;

void write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
    f << text;
}

std::vector<std::pair<std::string, double>> parse_start_flag(const std::string& s) {
    std::vector<std::pair<std::string, double>> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--start expects k=v,... entries");
        out.emplace_back(detail::ModelParser::strip(item.substr(0, eq)),
                         detail::ModelParser::parse_number(item.substr(eq + 1), 0));
    }
    return out;
}

std::vector<std::tuple<std::string, double, double, int>> parse_grid_flag(const std::string& s) {
    std::vector<std::tuple<std::string, double, double, int>> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--grid expects axis=min:max:steps,... entries");
        std::string axis = detail::ModelParser::strip(item.substr(0, eq));
        std::string rest = item.substr(eq + 1);
        std::replace(rest.begin(), rest.end(), ':', ' ');
        std::istringstream rs(rest);
        double mn, mx;
        int steps;
        if (!(rs >> mn >> mx >> steps))
            throw std::runtime_error("--grid expects axis=min:max:steps,... entries");
        out.emplace_back(axis, mn, mx, steps);
    }
    return out;
}

ModelFile load_with_overrides(const std::string& path, int max_gen, long long seed) {
    ModelFile mf = load_model(path);
    if (max_gen > 0) mf.max_generations = max_gen;
    if (seed >= 0) mf.seed = static_cast<uint64_t>(seed);
    return mf;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pre-multisymplectic constraint and integrability analysis"};
    app.require_subcommand(1);

    std::string model_path, output, format = "text", start_flag, grid_flag;
    int max_generations = -1;
    long long seed = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("file", model_path, "model file")->required();
        cmd->add_option("--output", output, "write the report to this path");
        cmd->add_option("--max-generations", max_generations, "generation cap override");
        cmd->add_option("--seed", seed, "sampling seed override");
    };

    CLI::App* analyze = app.add_subcommand("analyze", "run the constraint and integrability algorithms");
    add_common(analyze);
    analyze->add_option("--format", format, "text|structured")
        ->check(CLI::IsMember({"text", "structured"}));

    CLI::App* check = app.add_subcommand("check", "run the verification suite for the model");
    add_common(check);

    CLI::App* integrate = app.add_subcommand("integrate", "integrate the canonical flat solution");
    add_common(integrate);
    integrate->add_option("--start", start_flag, "start values k=v,...");
    integrate->add_option("--grid", grid_flag, "grid axes axis=min:max:steps,...");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) {
            ModelAnalysis ma = analyze_model(load_with_overrides(model_path, max_generations, seed));
            std::string text = format == "structured" ? structured_report(ma).dump(2) + "\n"
                                                      : text_report(ma);
            write_output(text, output);
            return exit_code(ma.report.status);
        }
        if (check->parsed()) {
            auto results = run_checks(load_with_overrides(model_path, max_generations, seed));
            bool all = false;
            write_output(render_checks(results, all), output);
            return all ? 0 : 2;
        }
        if (integrate->parsed()) {
            ModelFile mf = load_with_overrides(model_path, max_generations, seed);
            ModelAnalysis ma = analyze_model(mf);
            auto start = mf.start;
            for (auto& kv : parse_start_flag(start_flag)) start.push_back(kv);
            auto grid = mf.grid;
            for (auto& g : parse_grid_flag(grid_flag)) grid.push_back(g);
            GridSection sec = run_integration(ma, start, grid);
            std::ostringstream os;
            sec.export_table(os);
            write_output(os.str(), output);
            std::cerr << "path-independence defect: " << sec.path_defect << "\n";
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
