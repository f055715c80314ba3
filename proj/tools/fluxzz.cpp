// fluxzz command-line driver: run | verify | render

#include "fluxzz/fluxzz.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fluxzz;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct RunOptions {
    std::string problem;
    std::string estimator = "rt-element";
    double theta = 0.5;
    long max_dof = 20000;
    std::string out;
};

std::string default_out_dir() {
    const char *env = std::getenv("FLUXZZ_OUT");
    return env && *env ? env : "fluxzz_out";
}

void write_file(const fs::path &path, const std::string &text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
    if (!os) throw std::runtime_error("cannot write " + path.string());
}

int cmd_run(const RunOptions &opt) {
    ProblemSpec problem;
    AmrConfig cfg;
    try {
        problem = problem_by_name(opt.problem);
        cfg.kind = parse_estimator_kind(opt.estimator);
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    cfg.theta = opt.theta;
    cfg.max_dof = opt.max_dof;

    const fs::path out = opt.out.empty() ? default_out_dir() : opt.out;
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) {
        std::cerr << "error: cannot create output directory " << out << '\n';
        return kExitUsage;
    }

    AmrResult result;
    try {
        result = amr_loop(problem, cfg);
    } catch (const NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const MeshError &e) {
        std::cerr << "mesh failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    const Mesh &mesh = *result.mesh;
    const CoefficientField coeff(mesh, problem.coefficients);
    const NumericalFlux flux = numerical_flux(result.final_solution, coeff);
    const auto gn = neumann_values(mesh, problem.boundary.neumann);
    const RecoveryContext ctx{mesh, coeff, flux, gn};
    IndicatorSummary summary;
    double eta2 = 0.0;
    for (int f = 0; f < mesh.num_edges(); ++f) eta2 += std::pow(residual_edge_indicator(ctx, f), 2);
    summary.eta = std::sqrt(eta2);
    summary.osc = data_oscillation(mesh, problem.source, coeff);
    const FluxSpace space =
        (cfg.kind == EstimatorKind::BDMEdge || cfg.kind == EstimatorKind::BDMElement) ? FluxSpace::BDM : FluxSpace::RT;

    RunManifest manifest;
    manifest.problem = problem.name;
    manifest.estimator = to_string(cfg.kind);
    manifest.theta = cfg.theta;
    manifest.max_dof = cfg.max_dof;
    manifest.outputs = {{"history", "history.csv"},       {"mesh", "mesh_final.txt"},
                        {"mesh_svg", "mesh_final.svg"},   {"indicators", "indicators.csv"},
                        {"flux", "flux.csv"},             {"manifest", "manifest.json"}};
    try {
        std::ostringstream hist, ind, fl;
        write_history_csv(hist, result.records);
        write_indicators_csv(ind, result.final_estimate.indicators, summary);
        write_flux_csv(fl, mesh, recover(space, mesh, coeff, flux, gn));
        write_file(out / "history.csv", hist.str());
        write_file(out / "mesh_final.txt", mesh_to_string(mesh));
        write_file(out / "mesh_final.svg",
                   render_mesh_svg(mesh, std::span<const double>(result.final_estimate.marking)));
        write_file(out / "indicators.csv", ind.str());
        write_file(out / "flux.csv", fl.str());
        write_file(out / "manifest.json", to_json(manifest).dump(2) + "\n");
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    const auto &last = result.records.back();
    std::printf("%s / %s: %zu steps, dof %ld, error %s, estimator %s, effectivity %s, slope %s\n",
                problem.name.c_str(), to_string(cfg.kind).c_str(), result.records.size(), last.dof,
                format_real(last.error).c_str(), format_real(last.estimator).c_str(),
                format_real(last.effectivity).c_str(), format_real(last.slope).c_str());
    std::printf("outputs written to %s\n", out.string().c_str());
    return 0;
}

int cmd_verify(const std::string &suite) {
    std::vector<CheckResult> checks;
    if (suite == "formulas" || suite == "all") {
        auto f = run_formula_suite();
        checks.insert(checks.end(), f.begin(), f.end());
    }
    if (suite == "invariants" || suite == "all") {
        auto i = run_invariant_suite();
        checks.insert(checks.end(), i.begin(), i.end());
    }
    for (const auto &c : checks)
        std::printf("%-4s  %-58s %-24s <= %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    format_real(c.value).c_str(), format_real(c.tolerance).c_str());
    const bool ok = all_pass(checks);
    std::printf("%s: %zu checks\n", ok ? "all passed" : "FAILURES", checks.size());
    return ok ? 0 : 1;
}

int cmd_render(const std::string &mesh_path, const std::string &values_path, const std::string &out_path) {
    Mesh mesh;
    try {
        std::ifstream is(mesh_path);
        if (!is) throw std::runtime_error("cannot read " + mesh_path);
        mesh = read_mesh(is);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    std::optional<std::vector<double>> values;
    if (!values_path.empty()) {
        std::ifstream is(values_path);
        if (!is) {
            std::cerr << "error: cannot read " << values_path << '\n';
            return kExitUsage;
        }
        std::vector<double> v(mesh.num_triangles(), 0.0);
        std::string line;
        std::getline(is, line);  // header
        try {
            while (std::getline(is, line)) {
                std::istringstream ls(line);
                std::string kind, id, value;
                std::getline(ls, kind, ',');
                std::getline(ls, id, ',');
                std::getline(ls, value);
                if (kind != "element") continue;
                const long k = std::stol(id);
                if (k < 0 || k >= mesh.num_triangles()) throw std::out_of_range("element id " + id);
                v[k] = parse_real(value);
            }
        } catch (const std::exception &e) {
            std::cerr << "error: bad indicator file: " << e.what() << '\n';
            return kExitUsage;
        }
        values = std::move(v);
    }
    const std::string svg =
        values ? render_mesh_svg(mesh, std::span<const double>(*values)) : render_mesh_svg(mesh);
    if (out_path.empty() || out_path == "-") {
        std::cout << svg;
        return 0;
    }
    try {
        write_file(out_path, svg);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"fluxzz: improved ZZ error estimators with RT/BDM flux recovery"};
    app.require_subcommand(1);

    RunOptions run;
    auto *run_cmd = app.add_subcommand("run", "adaptive refinement loop");
    run_cmd->add_option("--problem", run.problem, "kellogg | smooth | counterexample2d[:k=<k>] | strip[:k=<k>]")
        ->required();
    run_cmd->add_option("--estimator", run.estimator,
                        "zz-gradient | zz-flux | rt-edge | rt-element | bdm-edge | bdm-element | residual")
        ->capture_default_str();
    run_cmd->add_option("--theta", run.theta, "bulk marking fraction in (0,1)")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    run_cmd->add_option("--max-dof", run.max_dof, "stop once the number of unknowns exceeds this")
        ->capture_default_str();
    run_cmd->add_option("--out", run.out, "output directory (default: $FLUXZZ_OUT or ./fluxzz_out)");

    std::string suite = "all";
    auto *verify_cmd = app.add_subcommand("verify", "closed-form and invariant self checks");
    verify_cmd->add_option("--suite", suite, "formulas | invariants | all")
        ->check(CLI::IsMember({"formulas", "invariants", "all"}))
        ->capture_default_str();

    std::string mesh_path, values_path, svg_out;
    auto *render_cmd = app.add_subcommand("render", "render a mesh file as SVG");
    render_cmd->add_option("--mesh", mesh_path, "mesh file")->required();
    render_cmd->add_option("--values", values_path, "indicator CSV (element rows used for color)");
    render_cmd->add_option("--out", svg_out, "SVG file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    }

    if (*run_cmd) return cmd_run(run);
    if (*verify_cmd) return cmd_verify(suite);
    return cmd_render(mesh_path, values_path, svg_out);
}
