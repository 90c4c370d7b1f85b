#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pathmed/data_io.hpp"
#include "pathmed/design_json.hpp"
#include "pathmed/errors.hpp"
#include "pathmed/inference.hpp"
#include "pathmed/mediation.hpp"
#include "pathmed/model_dsl.hpp"
#include "pathmed/montecarlo.hpp"
#include "pathmed/path_fit.hpp"
#include "pathmed/report.hpp"
#include "pathmed/version.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_analysis = 1;
constexpr int exit_usage = 2;
constexpr int exit_input = 3;

struct OutputOptions {
    std::string format = "text";
    std::string out_path;
};

void add_output_flags(CLI::App* cmd, OutputOptions& opts) {
    cmd->add_option("--format", opts.format, "Output format")
        ->check(CLI::IsMember({"json", "text"}))
        ->capture_default_str();
    cmd->add_option("--out", opts.out_path, "Write the report to this file instead of stdout");
}

void emit(const pathmed::AnalysisReport& report, const OutputOptions& opts) {
    const std::string text = pathmed::render_report(report, opts.format == "json");
    if (opts.out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(opts.out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw pathmed::io_error("cannot open '" + opts.out_path + "' for writing");
    out << text;
    if (!out) throw pathmed::io_error("write failure on '" + opts.out_path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pathmed::io_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw pathmed::io_error("read failure on '" + path + "'");
    return buf.str();
}

pathmed::ModelSpec load_model(const std::string& path) {
    return pathmed::parse_model(read_text_file(path));
}

struct MediateArgs {
    std::string data_path, x, m, y;
    double alpha = 0.05;
    double level = 0.95;
    std::string ci = "normal";
    long boot_reps = 2000;
    long draws = 100000;
    std::optional<std::uint64_t> seed;
    std::string delimiter = ",";
    OutputOptions output;
};

int run_mediate(const MediateArgs& args) {
    const bool wants_bootstrap = args.ci == "bootstrap" || args.ci == "all";
    const bool wants_product = args.ci == "product" || args.ci == "all";
    if ((wants_bootstrap || wants_product) && !args.seed)
        throw pathmed::usage_error(
            "--seed is required when --ci is bootstrap, product, or all");

    pathmed::CsvOptions csv;
    csv.delimiter = args.delimiter.at(0);
    const pathmed::Dataset data = pathmed::load_csv(args.data_path, csv);

    pathmed::AnalysisReport report;
    report.data_path = args.data_path;
    report.variables = data.columns;
    report.n = data.n();
    report.rows_dropped = data.rows_dropped;
    report.alpha = args.alpha;
    report.level = args.level;
    report.seed = args.seed;
    if (wants_bootstrap) report.boot_reps = args.boot_reps;
    if (wants_product) report.draws = args.draws;

    const auto fit = pathmed::fit_mediation(data, args.x, args.m, args.y);

    pathmed::AnalysisReport::MediationBlock block{
        fit,
        pathmed::decompose_effects(fit),
        pathmed::causal_steps(fit, args.alpha),
        pathmed::check_assumptions(fit, data, args.alpha),
        {}};
    const auto roles = pathmed::classify_roles(
        pathmed::parse_model(args.m + " ~ " + args.x + "\n" + args.y + " ~ " + args.x +
                             " + " + args.m + "\n"));
    block.advisories = pathmed::sample_size_advisory(roles, data.n());
    report.mediation = std::move(block);

    pathmed::AnalysisReport::InferenceBlock inf;
    inf.point = fit.beta3 * fit.betaM;
    inf.se = pathmed::sobel_se(fit);
    inf.se_exact = pathmed::sobel_se(fit, true);
    if (inf.se > 0) inf.sobel = pathmed::sobel_test(fit);
    inf.intervals.push_back(pathmed::normal_ci(inf.point, inf.se, args.level));
    if (wants_bootstrap)
        inf.intervals.push_back(pathmed::bootstrap_ci(data, args.x, args.m, args.y,
                                                      args.boot_reps, *args.seed, args.level));
    if (wants_product)
        inf.intervals.push_back(pathmed::product_distribution_ci(
            fit, args.draws, pathmed::derive_seed(*args.seed, 1), args.level));
    report.inference = std::move(inf);

    emit(report, args.output);
    return exit_ok;
}

struct FitArgs {
    std::string data_path, model_path;
    std::string delimiter = ",";
    OutputOptions output;
};

int run_fit(const FitArgs& args) {
    const pathmed::ModelSpec spec = load_model(args.model_path);

    pathmed::CsvOptions csv;
    csv.delimiter = args.delimiter.at(0);
    const pathmed::Dataset data = pathmed::load_csv(args.data_path, csv);
    pathmed::validate_against_columns(spec, data.columns);

    const auto moments =
        pathmed::restrict_moments(pathmed::compute_moments(data), spec.variables);

    pathmed::AnalysisReport report;
    report.data_path = args.data_path;
    report.model_path = args.model_path;
    report.variables = spec.variables;
    report.n = data.n();
    report.rows_dropped = data.rows_dropped;

    pathmed::AnalysisReport::PathFitBlock block;
    block.spec = spec;
    block.roles = pathmed::classify_roles(spec);
    block.fit = pathmed::fit_ml(spec, moments);
    block.null_fit = pathmed::fit_null_model(moments);
    block.indices =
        pathmed::compute_indices(block.fit.stats, block.null_fit, moments, block.fit.implied);
    block.verdicts = pathmed::index_verdicts(block.indices);
    report.pathfit = std::move(block);

    emit(report, args.output);
    return exit_ok;
}

struct SimulateArgs {
    std::string design_path;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    OutputOptions output;
};

int run_simulate(const SimulateArgs& args) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(args.design_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw pathmed::input_error("cannot parse design '" + args.design_path +
                                   "': " + e.what());
    }
    auto parsed = pathmed::design_from_json(doc);
    if (args.seed) {
        parsed.design.seed = *args.seed;
        parsed.has_seed = true;
    }
    if (!parsed.has_seed)
        throw pathmed::usage_error(
            "no seed: supply --seed or a 'seed' field in the design document");

    pathmed::AnalysisReport report;
    report.design_path = args.design_path;
    report.seed = parsed.design.seed;
    report.threads = args.threads;
    report.level = parsed.design.level;

    pathmed::AnalysisReport::SimulationBlock block;
    block.design = parsed.design;
    block.report = pathmed::run_study(parsed.design, args.threads);
    report.simulation = std::move(block);

    emit(report, args.output);
    return exit_ok;
}

struct ParseArgs {
    std::string model_path;
    OutputOptions output;
};

int run_parse(const ParseArgs& args) {
    pathmed::AnalysisReport report;
    report.model_path = args.model_path;
    pathmed::AnalysisReport::ParseBlock block;
    block.spec = load_model(args.model_path);
    block.roles = pathmed::classify_roles(block.spec);
    report.variables = block.spec.variables;
    report.model = std::move(block);
    emit(report, args.output);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Path-analysis and mediation-analysis toolkit"};
    app.set_version_flag("--version", std::string(pathmed::version_string));
    app.require_subcommand(1);

    MediateArgs mediate;
    auto* cmd_mediate =
        app.add_subcommand("mediate", "Fit the single-mediator model on CSV data");
    cmd_mediate->add_option("--data", mediate.data_path, "CSV data file")->required();
    cmd_mediate->add_option("--x", mediate.x, "Independent variable column")->required();
    cmd_mediate->add_option("--m", mediate.m, "Mediator column")->required();
    cmd_mediate->add_option("--y", mediate.y, "Dependent variable column")->required();
    cmd_mediate->add_option("--alpha", mediate.alpha, "Significance level for the causal steps")
        ->check(CLI::Range(1e-12, 1.0 - 1e-12))
        ->capture_default_str();
    cmd_mediate->add_option("--ci", mediate.ci, "Confidence-limit method(s)")
        ->check(CLI::IsMember({"normal", "bootstrap", "product", "all"}))
        ->capture_default_str();
    cmd_mediate->add_option("--boot-reps", mediate.boot_reps, "Bootstrap replicates")
        ->capture_default_str();
    cmd_mediate->add_option("--draws", mediate.draws, "Product-distribution draws")
        ->capture_default_str();
    cmd_mediate->add_option("--seed", mediate.seed,
                            "RNG seed (required for stochastic intervals)");
    cmd_mediate->add_option("--level", mediate.level, "Confidence level")
        ->check(CLI::Range(1e-12, 1.0 - 1e-12))
        ->capture_default_str();
    cmd_mediate->add_option("--delimiter", mediate.delimiter, "CSV field delimiter")
        ->capture_default_str();
    add_output_flags(cmd_mediate, mediate.output);

    FitArgs fit;
    auto* cmd_fit = app.add_subcommand("fit", "Fit a recursive path model by maximum likelihood");
    cmd_fit->add_option("--data", fit.data_path, "CSV data file")->required();
    cmd_fit->add_option("--model", fit.model_path, "Path-model file (.path)")->required();
    cmd_fit->add_option("--delimiter", fit.delimiter, "CSV field delimiter")
        ->capture_default_str();
    add_output_flags(cmd_fit, fit.output);

    SimulateArgs simulate;
    auto* cmd_simulate =
        app.add_subcommand("simulate", "Run a Monte Carlo study from a JSON design");
    cmd_simulate->add_option("--design", simulate.design_path, "Design document (JSON)")
        ->required();
    cmd_simulate->add_option("--seed", simulate.seed, "RNG seed (overrides the design)");
    cmd_simulate->add_option("--threads", simulate.threads, "Worker threads")
        ->check(CLI::Range(1, 1024))
        ->capture_default_str();
    add_output_flags(cmd_simulate, simulate.output);

    ParseArgs parse;
    auto* cmd_parse = app.add_subcommand("parse", "Validate a model file and print roles");
    cmd_parse->add_option("--model", parse.model_path, "Path-model file (.path)")->required();
    add_output_flags(cmd_parse, parse.output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (cmd_mediate->parsed()) return run_mediate(mediate);
        if (cmd_fit->parsed()) return run_fit(fit);
        if (cmd_simulate->parsed()) return run_simulate(simulate);
        return run_parse(parse);
    } catch (const pathmed::usage_error& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const pathmed::input_error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return exit_input;
    } catch (const pathmed::analysis_error& e) {
        std::cerr << "analysis error: " << e.what() << '\n';
        return exit_analysis;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_analysis;
    }
}
