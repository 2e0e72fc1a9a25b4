#include "trafficgp/config.hpp"

#include <string>

#include "trafficgp/common.hpp"

namespace trafficgp {

std::string_view method_name(Method m)
{
    switch (m) {
    case Method::Fixed: return "fixed";
    case Method::LongestQueue: return "lq";
    case Method::GA: return "ga";
    case Method::GP: return "gp";
    case Method::EpiGP: return "epigp";
    }
    return "?";
}

Method method_from_name(std::string_view s)
{
    if (s == "fixed") return Method::Fixed;
    if (s == "lq" || s == "longest_queue") return Method::LongestQueue;
    if (s == "ga") return Method::GA;
    if (s == "gp") return Method::GP;
    if (s == "epigp") return Method::EpiGP;
    throw ConfigError("unknown method '" + std::string(s) + "'");
}

EpiGuard epi_guard_from_name(std::string_view s)
{
    if (s == "as_equation") return EpiGuard::AsEquation;
    if (s == "as_prose") return EpiGuard::AsProse;
    throw ConfigError("unknown epi guard '" + std::string(s) + "'");
}

MutationMode mutation_from_name(std::string_view s)
{
    if (s == "point") return MutationMode::Point;
    if (s == "subtree") return MutationMode::Subtree;
    throw ConfigError("unknown mutation mode '" + std::string(s) + "'");
}

namespace {
    void check_rate(double r, const char* name)
    {
        if (!(r >= 0.0 && r <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    }
}

void GPConfig::validate() const
{
    if (population_size < 1) throw ConfigError("population_size must be positive");
    if (generations < 1) throw ConfigError("generations must be positive");
    check_rate(point_mutation_rate, "point_mutation_rate");
    check_rate(subtree_mutation_rate, "subtree_mutation_rate");
    check_rate(crossover_rate, "crossover_rate");
    check_rate(controller_exchange_share, "controller_exchange_share");
    check_rate(new_tree_mutation_rate, "new_tree_mutation_rate");
    if (init_depth < 1 || max_depth < 1) throw ConfigError("depths must be positive");
    if (init_depth > max_depth) throw ConfigError("init_depth exceeds max_depth");
    if (tournament_size < 1) throw ConfigError("tournament_size must be positive");
    if (elitism < 0 || elitism > population_size) throw ConfigError("elitism must lie in [0, population_size]");
    if (repetitions_per_eval < 1) throw ConfigError("repetitions_per_eval must be positive");
    if (crossover_retries < 1) throw ConfigError("crossover_retries must be positive");
}

void EpiConfig::validate() const
{
    if (!(l < h)) throw ConfigError("epigenetic modifiers need l < h");
    check_rate(threshold, "threshold");
    if (interval_T < 1) throw ConfigError("interval_T must be positive");
    if (!(lambda_min < lambda_max)) throw ConfigError("lambda_min must be below lambda_max");
    if (forced_lambda) check_rate(*forced_lambda, "forced lambda");
}

}  // namespace trafficgp
