#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "seqmh/bench.hpp"
#include "seqmh/design.hpp"

// Experiment harness CLI. Subcommands:
//   run <config>                  execute an experiment config
//   analyze <config>              run the analysis kind (DP vs simulation table)
//   design <samples> --budget d*  grid-search a sequential test design
//   risk <trace-dir> <truth>      recompute a risk table from stored artifacts

int main(int argc, char** argv) {
    CLI::App app{"mini-batch MCMC experiment harness"};
    app.require_subcommand(1);

    std::string config_path, samples_path, trace_dir, truth_path, out_path;
    double budget = 0.05;
    bool worst_case = false;

    CLI::App* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "key = value config file")->required();

    CLI::App* analyze = app.add_subcommand("analyze", "error/usage analysis table");
    analyze->add_option("config", config_path, "key = value config file")->required();

    CLI::App* design = app.add_subcommand("design", "optimal sequential-test design");
    design->add_option("samples", samples_path, "moment sample file (mu sigma_l N)")->required();
    design->add_option("--budget", budget, "error budget")->required();
    design->add_flag("--worst-case", worst_case, "use the worst-case criterion");
    design->add_option("--out", out_path, "write the design block here instead of stdout");

    CLI::App* risk = app.add_subcommand("risk", "recompute risk from traces");
    risk->add_option("trace-dir", trace_dir, "directory holding chain_*.trace")->required();
    risk->add_option("truth", truth_path, "ground truth file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            seqmh::RunConfig cfg = seqmh::RunConfig::load(config_path);
            seqmh::run_experiment(cfg, std::cerr);
        } else if (analyze->parsed()) {
            seqmh::RunConfig cfg = seqmh::RunConfig::load(config_path);
            cfg.values["kind"] = "analysis";
            seqmh::run_experiment(cfg, std::cerr);
        } else if (design->parsed()) {
            seqmh::DesignResult result;
            if (worst_case) {
                result = seqmh::worst_case_design(budget, seqmh::DesignGrid::defaults());
            } else {
                const auto samples = seqmh::read_moment_samples(samples_path);
                result = seqmh::average_design(samples, budget, seqmh::DesignGrid::defaults());
            }
            if (out_path.empty()) {
                seqmh::write_design_result(std::cout, result);
            } else {
                std::ofstream out(out_path);
                seqmh::write_design_result(out, result);
            }
        } else if (risk->parsed()) {
            seqmh::risk_from_artifacts(trace_dir, truth_path, std::cout, std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
