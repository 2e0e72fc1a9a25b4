#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "trafficgp/evolution.hpp"

using namespace trafficgp;

namespace {

const Scenario& single()
{
    static const Scenario s = builtin_scenario("single_intersection");
    return s;
}

const Scenario& grid()
{
    static const Scenario s = builtin_scenario("poc_grid");
    return s;
}

std::vector<Individual> random_population(const Scenario& s, int n, Rng& rng)
{
    std::vector<Individual> pop;
    for (int i = 0; i < n; ++i) pop.push_back(random_individual(s, 2 + i % 4, i % 2 == 0, rng));
    return pop;
}

}  // namespace

TEST(Stability, IntersectionAndController)
{
    TrafficContext c;
    c.ver_queue = 2;
    c.hor_queue = 9;
    EXPECT_EQ(intersection_stability(c), -7);
    c.hor_queue = 2;
    EXPECT_EQ(intersection_stability(c), 0);
    c.ver_queue = 10;
    c.hor_queue = 0;
    EXPECT_EQ(intersection_stability(c), 10);
    EXPECT_DOUBLE_EQ(controller_stability({-7}), -7);
    EXPECT_DOUBLE_EQ(controller_stability({-7, 3}), -2);
    EXPECT_DOUBLE_EQ(controller_stability({0, 0, 0}), 0);
    EXPECT_THROW(controller_stability({}), EmptyMapping);
}

TEST(AdaptiveFactor, Examples)
{
    EXPECT_DOUBLE_EQ(adaptive_factor(4, {2, 4, 6}), 0);
    EXPECT_DOUBLE_EQ(adaptive_factor(6, {4, 4, 4, 4}), 0.5);
    EXPECT_DOUBLE_EQ(adaptive_factor(6, {-1, 1}), 0);
    EXPECT_DOUBLE_EQ(adaptive_factor(-6, {-4, -4}), 0.5);
}

TEST(AdaptiveFactor, RandomAgainstOracle)
{
    Rng rng = make_rng({8});
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> series;
        for (int j = 0; j < 5; ++j) series.push_back(uniform01(rng) * 40 - 20);
        const double s = uniform01(rng) * 40 - 20;
        EXPECT_TRUE(oracle::close_rel(adaptive_factor(s, series), oracle::adaptive_factor(s, series)));
    }
}

TEST(Normalize, Pieces)
{
    EXPECT_NEAR(normalize_adaptive(0.5, 0.2, 0.7), 0.6, 1e-15);
    EXPECT_EQ(normalize_adaptive(0.1, 0.2, 0.7), 0.0);
    EXPECT_EQ(normalize_adaptive(0.9, 0.2, 0.7), 1.0);
    EXPECT_THROW(normalize_adaptive(0.5, 0.7, 0.7), ConfigError);
    EpiConfig cfg;
    EXPECT_EQ(normalize_adaptive(0.25, cfg), 0.25);
}

TEST(EpiMutate, GuardAndDelta)
{
    EpiConfig cfg;
    EXPECT_NEAR(epi_delta(0.5, cfg), 0.0, 1e-17);
    EXPECT_NEAR(epi_delta(1.0, cfg), 0.1, 1e-15);
    EXPECT_NEAR(epi_delta(0.0, cfg), -0.1, 1e-15);
    EXPECT_NEAR(std::clamp(0.95 + epi_delta(1.0, cfg), 0.0, 1.0), 1.0, 0);
    EXPECT_FALSE(epi_fires(0.999999, 1.0, EpiGuard::AsEquation));
    EXPECT_TRUE(epi_fires(0.3, 0.2, EpiGuard::AsEquation));
    EXPECT_FALSE(epi_fires(0.3, 0.2, EpiGuard::AsProse));
    EXPECT_TRUE(epi_fires(0.1, 0.2, EpiGuard::AsProse));
}

TEST(EpiMutate, LambdaOneChangesNothing)
{
    Rng rng = make_rng({9});
    EpiConfig cfg;
    ActivationVector a{{0.1, 0.5, 0.95, 0.0, 1.0}, 0.5};
    const ActivationVector before = a;
    for (int k = 0; k < 1000; ++k) epi_mutate(a, 1.0, cfg, rng);
    EXPECT_EQ(a, before);
}

TEST(EpiMutate, RatesStayInRangeAndStepBounded)
{
    Rng rng = make_rng({10});
    EpiConfig cfg;
    ActivationVector a{{0.0, 0.5, 1.0, 0.97, 0.02}, 0.5};
    for (int k = 0; k < 2000; ++k) {
        const ActivationVector before = a;
        epi_mutate(a, 0.0, cfg, rng);
        for (std::size_t j = 0; j < a.rates.size(); ++j) {
            ASSERT_GE(a.rates[j], 0.0);
            ASSERT_LE(a.rates[j], 1.0);
            ASSERT_LE(std::fabs(a.rates[j] - before.rates[j]), 0.1 + 1e-12);
        }
    }
}

TEST(StabilitySeriesTest, FactorEveryIntervalAfterFirst)
{
    StabilitySeries s(5);
    std::vector<int> fired;
    for (int k = 1; k <= 20; ++k) {
        if (s.push(static_cast<double>(k))) fired.push_back(k);
    }
    EXPECT_EQ(fired, (std::vector<int>{10, 15, 20}));
    StabilitySeries t(3);
    t.push(2);
    t.push(2);
    t.push(2);
    t.push(9);
    t.push(9);
    const auto lambda = t.push(3);  // previous three samples: 2, 9, 9
    ASSERT_TRUE(lambda.has_value());
    EXPECT_NEAR(*lambda, std::fabs(3 - 20.0 / 3) / (20.0 / 3), 1e-15);
}

TEST(Tournament, UniformOnTies)
{
    Rng rng = make_rng({12});
    std::vector<Individual> pop(10);
    for (auto& p : pop) p.fitness = 5;
    std::vector<int> wins(10, 0);
    for (int k = 0; k < 20000; ++k) ++wins[tournament_index(pop, 7, rng)];
    for (int w : wins) EXPECT_NEAR(w, 2000, 300);
}

TEST(Tournament, BestWinsAtClosedFormRate)
{
    Rng rng = make_rng({13});
    const int n = 20;
    std::vector<Individual> pop(n);
    for (int i = 0; i < n; ++i) pop[static_cast<std::size_t>(i)].fitness = 100 + i;
    pop[7].fitness = 1;
    const int trials = 10000;
    int wins = 0;
    for (int k = 0; k < trials; ++k) wins += tournament_index(pop, 7, rng) == 7;
    const double p = 1 - std::pow(1 - 1.0 / n, 7);
    EXPECT_NEAR(wins / static_cast<double>(trials), p, 5 * std::sqrt(p * (1 - p) / trials));
    EXPECT_GT(p, 1.0 / n);
    // everyone in a one-element tournament pool of the best
    std::vector<Individual> one(1);
    EXPECT_EQ(tournament_index(one, 7, rng), 0u);
}

TEST(Crossover, ControllerExchangeSwapsWholeSlot)
{
    Rng rng = make_rng({14});
    GPConfig cfg;
    cfg.controller_exchange_share = 1.0;
    const auto pop = random_population(grid(), 2, rng);
    for (int k = 0; k < 50; ++k) {
        auto [a, b] = crossover(pop[0], pop[1], cfg, rng);
        int swapped = 0;
        for (std::size_t s = 0; s < a.forest.size(); ++s) {
            if (a.forest[s] == pop[1].forest[s] && !(a.forest[s] == pop[0].forest[s])) {
                ++swapped;
                EXPECT_EQ(b.forest[s], pop[0].forest[s]);
                EXPECT_EQ(a.forest[s].activations, pop[1].forest[s].activations);
            } else {
                EXPECT_EQ(a.forest[s], pop[0].forest[s]);
            }
        }
        EXPECT_EQ(swapped, 1);
    }
}

TEST(Crossover, LeafSwapAlwaysLegal)
{
    Rng rng = make_rng({15});
    GPConfig cfg;
    cfg.controller_exchange_share = 0;
    Individual a, b;
    a.forest = {Controller{ControllerTree::constant(1), {}}};
    b.forest = {Controller{ControllerTree::constant(2), {}}};
    auto [x, y] = crossover(a, b, cfg, rng);
    EXPECT_EQ(x.forest[0].tree, ControllerTree::constant(2));
    EXPECT_EQ(y.forest[0].tree, ControllerTree::constant(1));
}

TEST(Crossover, OffspringWellTyped)
{
    Rng rng = make_rng({16});
    GPConfig cfg;
    auto pop = random_population(grid(), 30, rng);
    for (int k = 0; k < 10000; ++k) {
        const auto& a = pop[uniform_index(rng, pop.size())];
        const auto& b = pop[uniform_index(rng, pop.size())];
        auto [x, y] = crossover(a, b, cfg, rng);
        for (const auto* child : {&x, &y}) {
            for (const auto& c : child->forest) ASSERT_TRUE(well_formed(c, cfg.max_depth));
        }
        pop[uniform_index(rng, pop.size())] = std::move(x);
    }
}

TEST(Mutation, ZeroRatesLeaveIndividualUnchanged)
{
    Rng rng = make_rng({17});
    GPConfig cfg;
    cfg.point_mutation_rate = 0;
    cfg.subtree_mutation_rate = 0;
    cfg.new_tree_mutation_rate = 0;
    const auto pop = random_population(grid(), 10, rng);
    for (MutationMode mode : {MutationMode::Point, MutationMode::Subtree}) {
        cfg.mutation = mode;
        for (const auto& ind : pop) {
            Individual m = ind;
            mutate(m, cfg, grid().primitives, 0.5, rng);
            for (std::size_t s = 0; s < m.forest.size(); ++s) EXPECT_EQ(m.forest[s], ind.forest[s]);
        }
    }
}

TEST(Mutation, PointReplacementsForGt)
{
    const auto r = point_replacements(Op::Gt, PrimitiveSet::grid());
    EXPECT_EQ(std::set<Op>(r.begin(), r.end()), (std::set<Op>{Op::Eq, Op::Lt}));
    const auto s = point_replacements(Op::Gt, PrimitiveSet::single_intersection());
    EXPECT_EQ(std::set<Op>(s.begin(), s.end()), (std::set<Op>{Op::Eq}));
    EXPECT_TRUE(point_replacements(Op::Not, PrimitiveSet::grid()).empty());
}

TEST(Mutation, PointMutationOnGtStaysInComparisons)
{
    Rng rng = make_rng({18});
    GPConfig cfg;
    cfg.point_mutation_rate = 1.0;
    cfg.new_tree_mutation_rate = 0;
    Individual ind;
    ind.forest = {Controller{ControllerTree({{Op::If3, 0}, {Op::Gt, 0}, {Op::Var, 0}, {Op::Var, 1}, {Op::IntConst, 1},
                                             {Op::IntConst, 2}}),
                             {{1.0}, 0.5}}};
    for (int k = 0; k < 200; ++k) {
        Individual m = ind;
        mutate(m, cfg, PrimitiveSet::grid(), 0.5, rng);
        const Op op = m.forest[0].tree[1].op;
        EXPECT_TRUE(op == Op::Eq || op == Op::Lt);
        EXPECT_NE(m.forest[0].tree[4], ind.forest[0].tree[4]);
    }
}

TEST(Mutation, NewTreeRespectsInitialDepth)
{
    Rng rng = make_rng({19});
    GPConfig cfg;
    cfg.new_tree_mutation_rate = 1.0;
    cfg.point_mutation_rate = 0;
    Individual ind;
    ind.forest = {Controller{ControllerTree::constant(0), {}}};
    for (int k = 0; k < 200; ++k) {
        Individual m = ind;
        mutate(m, cfg, PrimitiveSet::grid(), 0.5, rng);
        EXPECT_LE(m.forest[0].tree.depth(), cfg.init_depth);
        EXPECT_TRUE(well_formed(m.forest[0], cfg.max_depth));
    }
}

TEST(Mutation, SubtreeOffspringWellTyped)
{
    Rng rng = make_rng({20});
    GPConfig cfg;
    cfg.mutation = MutationMode::Subtree;
    cfg.subtree_mutation_rate = 1.0;
    auto pop = random_population(grid(), 20, rng);
    for (int k = 0; k < 5000; ++k) {
        Individual& ind = pop[uniform_index(rng, pop.size())];
        mutate(ind, cfg, grid().primitives, 0.5, rng);
        for (const auto& c : ind.forest) ASSERT_TRUE(well_formed(c, cfg.max_depth));
    }
}

TEST(Fitness, FixedTimeEqualsRunDelay)
{
    const Scenario& s = single();
    const EvaluationPlan plan = make_plan(s, s.gp, 1, 0, 0);
    ASSERT_EQ(plan.sim_seeds.size(), 1u);
    World w = s.make_world(plan.sim_seeds[0], plan.window);
    w.run_until(plan.window.end);
    EXPECT_EQ(evaluate_fixed(s, plan), static_cast<double>(w.ledger().total_system_delay));
}

TEST(Fitness, DeterministicAndLongestQueueBeatsFixed)
{
    const Scenario& s = single();
    const EvaluationPlan plan = make_plan(s, s.gp, 1, 0, 0);
    Individual lq;
    lq.forest = {longest_queue_controller()};
    const double a = evaluate_fitness(lq, s, plan, EvalSettings{});
    const double b = evaluate_fitness(lq, s, plan, EvalSettings{});
    EXPECT_EQ(a, b);
    EXPECT_LT(a, evaluate_fixed(s, plan));
}

TEST(Fitness, ZeroControllerMatchesFixedTime)
{
    const Scenario& s = single();
    const EvaluationPlan plan = make_plan(s, s.gp, 4, 0, 0);
    Individual zero;
    zero.forest = {Controller{ControllerTree::constant(0), {}}};
    EXPECT_EQ(evaluate_fitness(zero, s, plan, EvalSettings{}), evaluate_fixed(s, plan));
}

TEST(Fitness, ForestSizeChecked)
{
    const Scenario& s = grid();
    Individual one;
    one.forest = {longest_queue_controller()};
    EXPECT_THROW(evaluate_fitness(one, s, make_plan(s, s.gp, 1, 0, 0), EvalSettings{}), ConfigError);
}

TEST(Seeds, CommonRandomNumbersAcrossIndividuals)
{
    const Scenario& s = single();
    GPConfig cfg = s.gp;
    cfg.repetitions_per_eval = 3;
    const auto a = make_plan(s, cfg, 5, 2, 0);
    const auto b = make_plan(s, cfg, 5, 2, 7);
    EXPECT_EQ(a.sim_seeds, b.sim_seeds);
    EXPECT_NE(a.epi_seeds, b.epi_seeds);
    EXPECT_EQ(std::set<std::uint64_t>(a.sim_seeds.begin(), a.sim_seeds.end()).size(), 3u);
    // reused seeds on the single intersection: same environment every generation
    EXPECT_EQ(make_plan(s, cfg, 5, 0, 0).sim_seeds, make_plan(s, cfg, 5, 9, 0).sim_seeds);
    EXPECT_NE(make_plan(s, cfg, 5, 0, 0).sim_seeds, make_plan(s, cfg, 6, 0, 0).sim_seeds);
    EXPECT_EQ(derive_seed({1, 2, 3}), derive_seed({1, 2, 3}));
}

TEST(Calibration, BoundsOrdered)
{
    const auto bounds = calibrate_lambda(single(), 3);
    ASSERT_EQ(bounds.size(), 1u);
    EXPECT_LT(bounds[0].first, bounds[0].second);
    EXPECT_GE(bounds[0].first, 0.0);
}

TEST(Evolve, OneGenerationReturnsBestOfInitialPopulation)
{
    const Scenario& s = single();
    GPConfig cfg = s.gp;
    cfg.population_size = 6;
    cfg.generations = 1;
    EvolveOptions opt;
    opt.master_seed = 3;
    const auto records = evolve(s, cfg, s.epi, opt);
    ASSERT_EQ(records.size(), 1u);

    Rng rng = make_rng({3, static_cast<std::uint64_t>(SeedStream::Evolution)});
    auto pop = initial_population(s, cfg, rng);
    double best = 1e300;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        best = std::min(best, evaluate_fitness(pop[i], s, make_plan(s, cfg, 3, 0, i), EvalSettings{}));
    }
    EXPECT_EQ(records[0].best_fitness, best);
}

TEST(Evolve, ElitismMonotoneOnStaticWindow)
{
    const Scenario& s = single();
    GPConfig cfg = s.gp;
    cfg.population_size = 8;
    cfg.generations = 8;
    for (Method m : {Method::GP, Method::EpiGP}) {
        EvolveOptions opt;
        opt.method = m;
        opt.master_seed = 11;
        const auto r = evolve(s, cfg, s.epi, opt);
        ASSERT_EQ(r.size(), 8u);
        for (std::size_t g = 1; g < r.size(); ++g) {
            EXPECT_LE(r[g].best_fitness, r[g - 1].best_fitness);
            if (m == Method::GP && r[g].best_fitness == r[g - 1].best_fitness) {
                // nothing beat the elite, so the reported best is the elite itself
                for (std::size_t k = 0; k < r[g].best.forest.size(); ++k) {
                    EXPECT_EQ(r[g].best.forest[k], r[g - 1].best.forest[k]);
                }
            }
        }
    }
}

TEST(Evolve, ThreadCountDoesNotChangeResults)
{
    const Scenario& s = single();
    GPConfig cfg = s.gp;
    cfg.population_size = 6;
    cfg.generations = 3;
    EvolveOptions a;
    a.method = Method::EpiGP;
    a.master_seed = 2;
    EvolveOptions b = a;
    b.threads = 3;
    const auto ra = evolve(s, cfg, s.epi, a);
    const auto rb = evolve(s, cfg, s.epi, b);
    for (std::size_t g = 0; g < ra.size(); ++g) {
        EXPECT_EQ(ra[g].best_fitness, rb[g].best_fitness);
        EXPECT_EQ(ra[g].mean_fitness, rb[g].mean_fitness);
    }
}

TEST(Evolve, MovingWindowFollowsGenerations)
{
    Scenario s = builtin_scenario("highway");
    s.horizon = 3600 + 2 * 330;
    s.compile();
    GPConfig cfg = s.gp;
    cfg.population_size = 2;
    cfg.generations = 5;
    EvolveOptions opt;
    const auto r = evolve(s, cfg, s.epi, opt);
    ASSERT_EQ(r.size(), 3u);  // capped by the window count
    EXPECT_EQ(r[1].window, (TimeWindow{330, 3930}));
}

TEST(GA, ChromosomeLength)
{
    for (const auto& name : builtin_scenario_names()) {
        const Scenario s = builtin_scenario(name);
        std::size_t phases = 0;
        for (const auto& p : s.plans) phases += p.phases().size();
        const auto genes = encode_schedule(s.plans);
        EXPECT_EQ(genes.size(), phases);
        EXPECT_EQ(decode_schedule(s.plans, genes), s.plans);
    }
}

TEST(GA, StaticWithoutVariation)
{
    const Scenario& s = single();
    GPConfig cfg = s.gp;
    cfg.population_size = 5;
    cfg.generations = 4;
    cfg.crossover_rate = 0;
    cfg.point_mutation_rate = 0;
    const auto r = ga_optimize_schedule(s, cfg, 1, 1);
    for (const auto& rec : r) {
        // Selection alone reshuffles copies but cannot create a better schedule.
        EXPECT_EQ(rec.best_fitness, r[0].best_fitness);
        EXPECT_GE(rec.mean_fitness, rec.best_fitness);
    }
}

TEST(GA, ImprovesOverDefaultSchedule)
{
    const Scenario& s = single();
    GPConfig cfg = s.gp;
    cfg.population_size = 20;
    cfg.generations = 30;
    cfg.point_mutation_rate = 0.2;
    const auto r = ga_optimize_schedule(s, cfg, 1, 1);
    const double fixed = evaluate_fixed(s, make_plan(s, cfg, 1, 0, 0));
    EXPECT_LT(r.back().best_fitness, fixed);
    for (auto g : r.back().best.genes) {
        EXPECT_GE(g, kGeneMin);
        EXPECT_LE(g, kGeneMax);
    }
}

TEST(RunStatic, RowsPerWindow)
{
    const Scenario& s = single();
    const auto fixed = run_static(s, Method::Fixed, s.gp, 1, 50, 1);
    ASSERT_EQ(fixed.size(), 1u);
    Scenario h = builtin_scenario("highway");
    h.horizon = 3600 + 3 * 330;
    h.compile();
    const auto lq = run_static(h, Method::LongestQueue, h.gp, 1, 10, 2);
    ASSERT_EQ(lq.size(), 4u);
    EXPECT_EQ(lq[3].window.start, 990);
}
