#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "trafficgp/config.hpp"
#include "trafficgp/controllers.hpp"
#include "trafficgp/random.hpp"
#include "trafficgp/scenario.hpp"

namespace trafficgp {

struct Individual {
    std::vector<Controller> forest;
    double fitness = 0;
    bool evaluated = false;
};

// Epigenetic mechanism primitives.
std::int64_t intersection_stability(const TrafficContext& ctx);
double controller_stability(const std::vector<std::int64_t>& samples);
double adaptive_factor(double s_now, const std::vector<double>& series);
double normalize_adaptive(double lambda, double lambda_min, double lambda_max);
double normalize_adaptive(double lambda, const EpiConfig& cfg);
double epi_delta(double r2, const EpiConfig& cfg);
bool epi_fires(double r1, double lambda_norm, EpiGuard guard);
void epi_mutate(ActivationVector& activations, double lambda_norm, const EpiConfig& cfg, Rng& rng);

// Rolling per-slot stability history, sampled once per default cycle.
class StabilitySeries {
public:
    explicit StabilitySeries(int interval_T = 5)
        : interval_(interval_T)
    {
    }

    // Records a sample. Returns the factor to act on when this sample
    // closes an interval and a full previous interval exists.
    std::optional<double> push(double s_now);
    const std::vector<double>& samples() const { return buffer_; }
    long long count() const { return count_; }

private:
    int interval_;
    std::vector<double> buffer_;
    long long count_ = 0;
};

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words);

enum class SeedStream : std::uint64_t { Simulation = 1, Epigenetic = 2, Evolution = 3, Calibration = 4 };

struct EvalSettings {
    bool epigenetic = false;
    EpiConfig epi;
    // Per-slot normalization bounds.
    std::vector<std::pair<double, double>> lambda_bounds;
};

struct EvaluationPlan {
    TimeWindow window;
    std::vector<std::uint64_t> sim_seeds;  // one per repetition
    std::vector<std::uint64_t> epi_seeds;
};

// Mean total system delay over the plan's repetitions. In epigenetic mode
// the last repetition's final activation rates are written back.
double evaluate_fitness(Individual& ind, const Scenario& scenario, const EvaluationPlan& plan,
                        const EvalSettings& settings);
// Delay of a run with every intersection on its scenario plan (or the
// given plans), no controllers.
double evaluate_fixed(const Scenario& scenario, const EvaluationPlan& plan,
                      const std::vector<PhasePlan>* plans = nullptr);

// Fixed-time run over the whole horizon recording the min/max factor per slot.
std::vector<std::pair<double, double>> calibrate_lambda(const Scenario& scenario, std::uint64_t seed);

Individual random_individual(const Scenario& scenario, int depth, bool full, Rng& rng);
std::vector<Individual> initial_population(const Scenario& scenario, const GPConfig& cfg, Rng& rng);

const Individual& tournament_select(const std::vector<Individual>& population, int tournament_size, Rng& rng);
std::size_t tournament_index(const std::vector<Individual>& population, int tournament_size, Rng& rng);

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b, const GPConfig& cfg, Rng& rng);
void mutate(Individual& ind, const GPConfig& cfg, const PrimitiveSet& ps, double threshold, Rng& rng);
// Same-signature replacements for a node, excluding itself.
std::vector<Op> point_replacements(Op op, const PrimitiveSet& ps);

struct GenerationRecord {
    int generation = 0;
    TimeWindow window;
    double best_fitness = 0;
    double mean_fitness = 0;
    Individual best;
};

struct EvolveOptions {
    Method method = Method::GP;
    std::uint64_t master_seed = 1;
    int threads = 1;
    std::function<void(const GenerationRecord&)> on_generation;
};

std::vector<GenerationRecord> evolve(const Scenario& scenario, const GPConfig& cfg, const EpiConfig& epi,
                                     const EvolveOptions& options);

struct GASchedule {
    std::vector<std::int64_t> genes;
    double fitness = 0;
    bool evaluated = false;
};

struct GARecord {
    int generation = 0;
    TimeWindow window;
    double best_fitness = 0;
    double mean_fitness = 0;
    GASchedule best;
};

inline constexpr std::int64_t kGeneMin = 1;
inline constexpr std::int64_t kGeneMax = 120;

std::vector<std::int64_t> encode_schedule(const std::vector<PhasePlan>& plans);
std::vector<PhasePlan> decode_schedule(const std::vector<PhasePlan>& templates, const std::vector<std::int64_t>& genes);

std::vector<GARecord> ga_optimize_schedule(const Scenario& scenario, const GPConfig& cfg, std::uint64_t master_seed,
                                           int threads, std::function<void(const GARecord&)> on_generation = {});

// Runs a controller-free or longest-queue evaluation for each generation's window.
std::vector<GenerationRecord> run_static(const Scenario& scenario, Method method, const GPConfig& cfg,
                                         std::uint64_t master_seed, int generations, int threads,
                                         std::function<void(const GenerationRecord&)> on_generation = {});

EvaluationPlan make_plan(const Scenario& scenario, const GPConfig& cfg, std::uint64_t master_seed, int generation,
                         std::uint64_t individual);

}  // namespace trafficgp
