#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trafficgp/config.hpp"
#include "trafficgp/scenario.hpp"

namespace trafficgp {

struct ExperimentSpec {
    std::string scenario = "single_intersection";  // built-in name or JSON path
    Method method = Method::Fixed;
    int repetitions = 1;
    std::uint64_t master_seed = 1;
    std::string output = "results.csv";
    std::optional<int> generations;
    std::optional<int> population;
    std::optional<EpiGuard> epi_guard;
    std::optional<MutationMode> mutation;
    std::optional<double> forced_lambda;
    int threads = 1;
    // Where the best individual is exported; derived from `output` when empty.
    std::string export_path;
};

struct RunRecord {
    Method method = Method::Fixed;
    int generation = 0;
    std::int64_t window_start = 0;
    double best_fitness = 0;
    double mean_fitness = 0;
    std::uint64_t seed = 0;
    double wall_time = 0;
};

inline constexpr const char* kCsvHeader = "method,generation,window_start,best_fitness,mean_fitness,seed,wall_time";

std::string format_number(double v);
std::string csv_row(const RunRecord& r);

struct ExperimentResult {
    std::vector<RunRecord> records;
    std::string export_path;  // empty when nothing was exported
};

// Runs the spec on an already resolved scenario.
ExperimentResult run_experiment(const ExperimentSpec& spec, Scenario scenario);
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Default export location next to the CSV: results.csv -> results_best.py.
std::string default_export_path(const std::string& csv_path, Method method);

}  // namespace trafficgp
