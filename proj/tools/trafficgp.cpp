#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "trafficgp/experiment.hpp"
#include "trafficgp/scenario.hpp"

using namespace trafficgp;

int main(int argc, char** argv)
{
    CLI::App app{"Evolve actuated traffic signal controllers on a cellular automaton simulator"};
    app.require_subcommand(1);

    ExperimentSpec spec;
    std::string method = "fixed";
    std::string guard;
    std::string mutation;
    int generations = 0;
    int population = 0;
    double forced_lambda = -1;

    auto* run = app.add_subcommand("run", "Run one method on a scenario and write a CSV");
    run->add_option("--scenario", spec.scenario, "Built-in scenario name or JSON file")->required();
    run->add_option("--method", method, "fixed, lq, ga, gp or epigp")->required();
    run->add_option("--seed", spec.master_seed, "Master seed");
    run->add_option("--generations", generations, "Generation count (default from scenario)");
    run->add_option("--population", population, "Population size (default from scenario)");
    run->add_option("--reps", spec.repetitions, "Simulation repetitions per evaluation");
    run->add_option("--out", spec.output, "CSV output path");
    run->add_option("--export", spec.export_path, "Best individual export path");
    run->add_option("--epi-guard", guard, "as_equation or as_prose");
    run->add_option("--mutation", mutation, "point or subtree");
    run->add_option("--force-lambda", forced_lambda, "Fix the normalized adaptive factor");
    run->add_option("--threads", spec.threads, "Worker threads");

    auto* list = app.add_subcommand("list", "List built-in scenarios");

    std::string dump_name;
    std::string dump_out;
    auto* dump = app.add_subcommand("dump-scenario", "Write a built-in scenario as JSON");
    dump->add_option("name", dump_name, "Scenario name")->required();
    dump->add_option("--out", dump_out, "Output path (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*list) {
            for (const auto& n : builtin_scenario_names()) std::cout << n << '\n';
            return 0;
        }
        if (*dump) {
            const std::string text = serialize_scenario(builtin_scenario(dump_name));
            if (dump_out.empty()) {
                std::cout << text;
            } else {
                std::ofstream out(dump_out);
                if (!out) throw IoError("cannot open '" + dump_out + "'");
                out << text;
            }
            return 0;
        }
        spec.method = method_from_name(method);
        if (generations > 0) spec.generations = generations;
        if (population > 0) spec.population = population;
        if (!guard.empty()) spec.epi_guard = epi_guard_from_name(guard);
        if (!mutation.empty()) spec.mutation = mutation_from_name(mutation);
        if (forced_lambda >= 0) spec.forced_lambda = forced_lambda;
        const auto result = run_experiment(spec);
        const auto& last = result.records.back();
        std::cout << method_name(spec.method) << ": " << result.records.size() << " rows, final best "
                  << format_number(last.best_fitness) << " -> " << spec.output << '\n';
        if (!result.export_path.empty()) std::cout << "best individual -> " << result.export_path << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
