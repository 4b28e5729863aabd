// Command-line front end: dbv <sweep|check|evolve|rates> --config run.yaml

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <dbv/run/config.hpp>
#include <dbv/run/reports.hpp>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

struct Options {
    std::string config;
    std::string out;
    std::string format;
    unsigned jobs = 1;
    double quad_tol = 0.0;
};

int emit(const std::vector<dbv::run::Table>& tables, const dbv::run::RunConfig& cfg) {
    std::size_t failed = 0;
    for (const auto& t : tables) {
        const std::string path = dbv::run::write_table(t, cfg.output_dir, cfg.format);
        std::fprintf(stderr, "wrote %s (%zu rows, %zu failed)\n", path.c_str(), t.rows.size(), t.failed_rows);
        failed += t.failed_rows;
    }
    return failed ? exit_numerical : exit_ok;
}

int run(const std::string& command, const Options& o) {
    using namespace dbv::run;
    RunConfig cfg = load_config(o.config);
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.format == "csv") cfg.format = OutputFormat::csv;
    else if (o.format == "json") cfg.format = OutputFormat::json;
    if (o.quad_tol > 0.0) cfg.quad.rel_tol = o.quad_tol;

    if (command == "sweep") {
        std::vector<Table> tables{sweep_table(run_dbe_sweep(cfg, o.jobs))};
        if (cfg.wants(Report::thermo)) tables.push_back(run_thermo(cfg, o.jobs));
        return emit(tables, cfg);
    }
    if (command == "rates") return emit({run_rates(cfg, o.jobs)}, cfg);
    if (command == "evolve") return emit({run_evolve(cfg, o.jobs)}, cfg);
    CheckReport rep = run_check(cfg, o.jobs);
    return emit({rep.defects, rep.summary}, cfg);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detailed-balance violation in gas-particle scattering: sweeps, rates, trajectories, diagnostics"};
    app.require_subcommand(1, 1);

    Options opts;
    std::vector<CLI::App*> subs;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"sweep", "violation ratios and thermalization conditions over the inverse-temperature grid"},
        {"check", "T-matrix defects on an energy grid and identity residuals per temperature"},
        {"evolve", "Pauli master-equation trajectories with entropy production"},
        {"rates", "full rate tables A, B, a, I with error estimates"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", opts.config, "YAML run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opts.out, "output directory (overrides output.dir)");
        sub->add_option("--format", opts.format, "csv or json (overrides output.format)")
            ->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--jobs", opts.jobs, "worker threads for temperature points")->check(CLI::PositiveNumber);
        sub->add_option("--quad-tol", opts.quad_tol, "relative quadrature tolerance")->check(CLI::PositiveNumber);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    try {
        return run(chosen->get_name(), opts);
    } catch (const dbv::run::ParseError& e) {
        std::cerr << e.what() << '\n';
        return exit_validation;
    } catch (const dbv::run::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return exit_validation;
    } catch (const dbv::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
