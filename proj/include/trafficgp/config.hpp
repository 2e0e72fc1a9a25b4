#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace trafficgp {

enum class Method : std::uint8_t { Fixed, LongestQueue, GA, GP, EpiGP };
enum class EpiGuard : std::uint8_t { AsEquation, AsProse };
enum class MutationMode : std::uint8_t { Point, Subtree };

std::string_view method_name(Method m);
Method method_from_name(std::string_view s);
EpiGuard epi_guard_from_name(std::string_view s);
MutationMode mutation_from_name(std::string_view s);

struct GPConfig {
    int population_size = 50;
    int generations = 200;
    double point_mutation_rate = 0.05;
    double subtree_mutation_rate = 0.20;
    double crossover_rate = 0.80;
    int init_depth = 5;
    int max_depth = 7;
    int tournament_size = 7;
    int elitism = 1;
    double controller_exchange_share = 0.10;
    double new_tree_mutation_rate = 0.001;
    int repetitions_per_eval = 1;
    MutationMode mutation = MutationMode::Point;
    int crossover_retries = 20;

    void validate() const;
};

struct EpiConfig {
    double threshold = 0.5;
    double h = 0.1;
    double l = -0.1;
    int interval_T = 5;
    double lambda_min = 0.0;
    double lambda_max = 1.0;
    EpiGuard guard = EpiGuard::AsEquation;
    // Replaces the normalized factor everywhere when set.
    std::optional<double> forced_lambda;

    void validate() const;
};

}  // namespace trafficgp
