#include "trafficgp/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "trafficgp/parallel.hpp"

namespace trafficgp {

std::int64_t intersection_stability(const TrafficContext& ctx)
{
    return ctx.ver_queue - ctx.hor_queue;
}

double controller_stability(const std::vector<std::int64_t>& samples)
{
    if (samples.empty()) throw EmptyMapping("controller has no intersections");
    double total = 0;
    for (std::int64_t s : samples) total += static_cast<double>(s);
    return total / static_cast<double>(samples.size());
}

double adaptive_factor(double s_now, const std::vector<double>& series)
{
    if (series.empty()) return 0.0;
    double total = 0;
    for (double s : series) total += s;
    const double mean = total / static_cast<double>(series.size());
    if (mean == 0.0) return 0.0;
    return std::fabs(s_now - mean) / std::fabs(mean);
}

double normalize_adaptive(double lambda, double lambda_min, double lambda_max)
{
    if (!(lambda_min < lambda_max)) throw ConfigError("lambda_min must be below lambda_max");
    if (lambda <= lambda_min) return 0.0;
    if (lambda >= lambda_max) return 1.0;
    return (lambda - lambda_min) / (lambda_max - lambda_min);
}

double normalize_adaptive(double lambda, const EpiConfig& cfg)
{
    return normalize_adaptive(lambda, cfg.lambda_min, cfg.lambda_max);
}

double epi_delta(double r2, const EpiConfig& cfg)
{
    return (cfg.h - cfg.l) * r2 + cfg.l;
}

bool epi_fires(double r1, double lambda_norm, EpiGuard guard)
{
    return guard == EpiGuard::AsEquation ? r1 > lambda_norm : r1 < lambda_norm;
}

void epi_mutate(ActivationVector& activations, double lambda_norm, const EpiConfig& cfg, Rng& rng)
{
    for (double& rate : activations.rates) {
        const double r1 = uniform_open01(rng);
        const double r2 = uniform_open01(rng);
        if (epi_fires(r1, lambda_norm, cfg.guard)) rate = std::clamp(rate + epi_delta(r2, cfg), 0.0, 1.0);
    }
}

std::optional<double> StabilitySeries::push(double s_now)
{
    ++count_;
    std::optional<double> out;
    if (static_cast<int>(buffer_.size()) == interval_ && count_ % interval_ == 0) out = adaptive_factor(s_now, buffer_);
    buffer_.push_back(s_now);
    if (static_cast<int>(buffer_.size()) > interval_) buffer_.erase(buffer_.begin());
    return out;
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words)
{
    Rng rng = make_rng(words);
    return rng();
}

namespace {

    // Drives controllers at decision points and, in epigenetic mode, the
    // stability sampling and epi-mutation of the forest.
    class ForestHook : public SignalHook {
    public:
        ForestHook(const Scenario& scenario, std::vector<Controller>* forest, const EvalSettings* settings, Rng* rng,
                   std::int64_t start)
            : scenario_(scenario)
            , forest_(forest)
            , settings_(settings)
            , rng_(rng)
            , start_(start)
            , slots_(scenario.controls_of_slot())
        {
            const int interval = settings ? settings->epi.interval_T : 5;
            series_.assign(slots_.size(), StabilitySeries(interval));
        }

        void decide(World& world, std::size_t control) override
        {
            if (!forest_) return;
            const int slot = scenario_.slot_of_control[control];
            if (slot < 0) return;
            const TrafficContext ctx = world.signals().read_context(control);
            const std::int64_t delta = evaluate((*forest_)[static_cast<std::size_t>(slot)], ctx);
            apply_controller_output(world.signals().intersections()[control].plan, delta);
        }

        void after_step(World& world) override
        {
            if (!settings_ && !record_) return;
            const std::int64_t elapsed = world.time() - start_;
            if (elapsed <= 0 || elapsed % scenario_.sample_period != 0) return;
            for (std::size_t slot = 0; slot < slots_.size(); ++slot) {
                if (slots_[slot].empty()) continue;
                std::vector<std::int64_t> samples;
                for (std::size_t c : slots_[slot]) samples.push_back(intersection_stability(world.signals().read_context(c)));
                const auto lambda = series_[slot].push(controller_stability(samples));
                if (!lambda) continue;
                if (record_) {
                    auto& [lo, hi] = (*record_)[slot];
                    lo = std::min(lo, *lambda);
                    hi = std::max(hi, *lambda);
                    continue;
                }
                const EpiConfig& cfg = settings_->epi;
                double norm = 0;
                if (cfg.forced_lambda) {
                    norm = *cfg.forced_lambda;
                } else if (slot < settings_->lambda_bounds.size()) {
                    norm = normalize_adaptive(*lambda, settings_->lambda_bounds[slot].first,
                                              settings_->lambda_bounds[slot].second);
                } else {
                    norm = normalize_adaptive(*lambda, cfg);
                }
                epi_mutate((*forest_)[slot].activations, norm, cfg, *rng_);
            }
        }

        void record_into(std::vector<std::pair<double, double>>* out) { record_ = out; }

    private:
        const Scenario& scenario_;
        std::vector<Controller>* forest_;
        const EvalSettings* settings_;
        Rng* rng_;
        std::int64_t start_;
        std::vector<std::vector<std::size_t>> slots_;
        std::vector<StabilitySeries> series_;
        std::vector<std::pair<double, double>>* record_ = nullptr;
    };

} // namespace

double evaluate_fitness(Individual& ind, const Scenario& scenario, const EvaluationPlan& plan,
                        const EvalSettings& settings)
{
    if (ind.forest.size() != static_cast<std::size_t>(scenario.slot_count)) {
        throw ConfigError("forest size does not match the controller mapping");
    }
    if (plan.sim_seeds.empty()) throw ConfigError("evaluation needs at least one seed");
    double total = 0;
    for (std::size_t r = 0; r < plan.sim_seeds.size(); ++r) {
        std::vector<Controller> forest = ind.forest;
        World world = scenario.make_world(plan.sim_seeds[r], plan.window);
        Rng epi_rng = make_rng({r < plan.epi_seeds.size() ? plan.epi_seeds[r] : plan.sim_seeds[r]});
        ForestHook hook(scenario, &forest, settings.epigenetic ? &settings : nullptr, &epi_rng, plan.window.start);
        world.run_until(plan.window.end, &hook);
        total += static_cast<double>(world.ledger().total_system_delay);
        if (settings.epigenetic && r + 1 == plan.sim_seeds.size()) {
            for (std::size_t k = 0; k < forest.size(); ++k) ind.forest[k].activations = forest[k].activations;
        }
    }
    return total / static_cast<double>(plan.sim_seeds.size());
}

double evaluate_fixed(const Scenario& scenario, const EvaluationPlan& plan, const std::vector<PhasePlan>* plans)
{
    if (plan.sim_seeds.empty()) throw ConfigError("evaluation needs at least one seed");
    Scenario local;
    const Scenario* sc = &scenario;
    if (plans) {
        local = scenario;
        local.plans = *plans;
        sc = &local;
    }
    double total = 0;
    for (std::uint64_t seed : plan.sim_seeds) {
        World world = sc->make_world(seed, plan.window);
        world.run_until(plan.window.end);
        total += static_cast<double>(world.ledger().total_system_delay);
    }
    return total / static_cast<double>(plan.sim_seeds.size());
}

std::vector<std::pair<double, double>> calibrate_lambda(const Scenario& scenario, std::uint64_t seed)
{
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> bounds(static_cast<std::size_t>(scenario.slot_count), {inf, -inf});
    World world = scenario.make_world(seed, {0, scenario.horizon});
    EvalSettings settings;
    settings.epi = scenario.epi;
    ForestHook hook(scenario, nullptr, nullptr, nullptr, 0);
    hook.record_into(&bounds);
    world.run_until(scenario.horizon, &hook);
    for (auto& [lo, hi] : bounds) {
        if (lo == inf) {
            lo = 0.0;
            hi = 1.0;
        } else if (!(lo < hi)) {
            hi = lo + 1.0;
        }
    }
    return bounds;
}

Individual random_individual(const Scenario& scenario, int depth, bool full, Rng& rng)
{
    Individual ind;
    for (int s = 0; s < scenario.slot_count; ++s) {
        ind.forest.push_back(random_controller(scenario.primitives, depth, full, scenario.epi.threshold, rng));
    }
    return ind;
}

std::vector<Individual> initial_population(const Scenario& scenario, const GPConfig& cfg, Rng& rng)
{
    std::vector<Individual> pop;
    const int lo = std::min(2, cfg.init_depth);
    const int span = cfg.init_depth - lo + 1;
    for (int i = 0; i < cfg.population_size; ++i) {
        const int depth = lo + (i / 2) % span;
        pop.push_back(random_individual(scenario, depth, i % 2 == 0, rng));
    }
    return pop;
}

std::size_t tournament_index(const std::vector<Individual>& population, int tournament_size, Rng& rng)
{
    std::size_t best = uniform_index(rng, population.size());
    for (int k = 1; k < tournament_size; ++k) {
        const std::size_t c = uniform_index(rng, population.size());
        if (population[c].fitness < population[best].fitness) best = c;
    }
    return best;
}

const Individual& tournament_select(const std::vector<Individual>& population, int tournament_size, Rng& rng)
{
    return population[tournament_index(population, tournament_size, rng)];
}

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b, const GPConfig& cfg, Rng& rng)
{
    Individual ca = a;
    Individual cb = b;
    ca.evaluated = cb.evaluated = false;
    if (a.forest.empty() || a.forest.size() != b.forest.size()) return {ca, cb};
    const std::size_t slot = uniform_index(rng, a.forest.size());
    if (uniform01(rng) < cfg.controller_exchange_share) {
        std::swap(ca.forest[slot], cb.forest[slot]);
        return {ca, cb};
    }
    const Controller& ta = a.forest[slot];
    const Controller& tb = b.forest[slot];
    for (int attempt = 0; attempt < cfg.crossover_retries; ++attempt) {
        const std::size_t i = uniform_index(rng, ta.tree.size());
        const ValueType type = ta.tree.type_at(i);
        std::vector<std::size_t> matches;
        for (std::size_t j = 0; j < tb.tree.size(); ++j) {
            if (tb.tree.type_at(j) == type) matches.push_back(j);
        }
        if (matches.empty()) continue;
        const std::size_t j = matches[uniform_index(rng, matches.size())];
        const bool fits_a = ta.tree.depth_at(i) - 1 + tb.tree.height_at(j) <= cfg.max_depth;
        const bool fits_b = tb.tree.depth_at(j) - 1 + ta.tree.height_at(i) <= cfg.max_depth;
        if (!fits_a || !fits_b) continue;
        ca.forest[slot] = splice(ta, i, tb, j);
        cb.forest[slot] = splice(tb, j, ta, i);
        return {ca, cb};
    }
    return {ca, cb};
}

std::vector<Op> point_replacements(Op op, const PrimitiveSet& ps)
{
    static const std::vector<std::vector<Op>> groups{
        {Op::Add, Op::Sub, Op::Mul, Op::ProtectedDiv},
        {Op::And, Op::Or},
        {Op::Eq, Op::Gt, Op::Lt},
    };
    std::vector<Op> out;
    for (const auto& g : groups) {
        if (std::find(g.begin(), g.end(), op) == g.end()) continue;
        for (Op o : g) {
            if (o != op && ps.has(o)) out.push_back(o);
        }
    }
    return out;
}

namespace {

    ControllerNode mutate_terminal(const ControllerNode& node, const PrimitiveSet& ps, Rng& rng)
    {
        std::vector<ControllerNode> options;
        for (Variable v : ps.variables) {
            const auto idx = static_cast<std::int64_t>(v);
            if (!(node.op == Op::Var && node.value == idx)) options.push_back({Op::Var, idx});
        }
        const bool const_ok = !(node.op == Op::IntConst && ps.const_min == ps.const_max && node.value == ps.const_min);
        const std::size_t n = options.size() + (const_ok ? 1 : 0);
        if (n == 0) return node;
        const std::size_t pick = uniform_index(rng, n);
        if (pick < options.size()) return options[pick];
        for (;;) {
            const std::int64_t value = uniform_int(rng, ps.const_min, ps.const_max);
            if (!(node.op == Op::IntConst && node.value == value)) return {Op::IntConst, value};
        }
    }

    Controller point_mutate(const Controller& c, double rate, const PrimitiveSet& ps, Rng& rng)
    {
        std::vector<ControllerNode> nodes = c.tree.nodes();
        bool changed = false;
        for (ControllerNode& node : nodes) {
            if (uniform01(rng) >= rate) continue;
            if (arity(node.op) == 0) {
                node = mutate_terminal(node, ps, rng);
                changed = true;
                continue;
            }
            const auto options = point_replacements(node.op, ps);
            if (options.empty()) continue;
            node.op = options[uniform_index(rng, options.size())];
            changed = true;
        }
        if (!changed) return c;
        return {ControllerTree(std::move(nodes)), c.activations};
    }

    Controller subtree_mutate(const Controller& c, const GPConfig& cfg, const PrimitiveSet& ps, double threshold,
                              Rng& rng)
    {
        const std::size_t at = uniform_index(rng, c.tree.size());
        const ValueType type = c.tree.type_at(at);
        const int room = cfg.max_depth - c.tree.depth_at(at) + 1;
        const int limit = std::min(room, cfg.init_depth);
        if (limit < ps.min_depth(type)) return c;
        ControllerTree donor_tree = [&] {
            auto nodes = random_subtree(ps, type, limit, false, rng);
            if (type == ValueType::Int) return ControllerTree(std::move(nodes));
            // Wrap Bool donors so they form a complete tree for splicing.
            std::vector<ControllerNode> wrapped{{Op::If3, 0}};
            wrapped.insert(wrapped.end(), nodes.begin(), nodes.end());
            wrapped.push_back({Op::IntConst, 0});
            wrapped.push_back({Op::IntConst, 0});
            return ControllerTree(std::move(wrapped));
        }();
        const std::size_t from = type == ValueType::Int ? 0 : 1;
        Controller donor{donor_tree, random_activations(donor_tree.if3_count(), threshold, rng)};
        return splice(c, at, donor, from);
    }

} // namespace

void mutate(Individual& ind, const GPConfig& cfg, const PrimitiveSet& ps, double threshold, Rng& rng)
{
    if (ind.forest.empty()) return;
    if (uniform01(rng) < cfg.new_tree_mutation_rate) {
        const std::size_t slot = uniform_index(rng, ind.forest.size());
        const int lo = std::min(2, cfg.init_depth);
        const int depth = static_cast<int>(uniform_int(rng, lo, cfg.init_depth));
        ind.forest[slot] = random_controller(ps, depth, bernoulli(rng, 0.5), threshold, rng);
        ind.evaluated = false;
    }
    for (Controller& c : ind.forest) {
        if (cfg.mutation == MutationMode::Point) {
            if (cfg.point_mutation_rate > 0) c = point_mutate(c, cfg.point_mutation_rate, ps, rng);
        } else if (uniform01(rng) < cfg.subtree_mutation_rate) {
            c = subtree_mutate(c, cfg, ps, threshold, rng);
        }
    }
}

EvaluationPlan make_plan(const Scenario& scenario, const GPConfig& cfg, std::uint64_t master_seed, int generation,
                         std::uint64_t individual)
{
    EvaluationPlan plan;
    plan.window = scenario.window ? window_slice(scenario, generation) : TimeWindow{0, scenario.horizon};
    const auto g = static_cast<std::uint64_t>(scenario.reuse_seeds ? 0 : generation);
    for (int r = 0; r < cfg.repetitions_per_eval; ++r) {
        const auto rep = static_cast<std::uint64_t>(r);
        plan.sim_seeds.push_back(derive_seed({master_seed, static_cast<std::uint64_t>(SeedStream::Simulation), g, rep}));
        plan.epi_seeds.push_back(derive_seed({master_seed, static_cast<std::uint64_t>(SeedStream::Epigenetic),
                                              static_cast<std::uint64_t>(generation), individual, rep}));
    }
    return plan;
}

namespace {

    int generation_limit(const Scenario& scenario, int requested)
    {
        return scenario.window ? std::min(requested, window_count(scenario)) : requested;
    }

    std::size_t best_of(const std::vector<double>& fitness)
    {
        return static_cast<std::size_t>(std::min_element(fitness.begin(), fitness.end()) - fitness.begin());
    }

    double mean_of(const std::vector<double>& fitness)
    {
        return std::accumulate(fitness.begin(), fitness.end(), 0.0) / static_cast<double>(fitness.size());
    }

    // Indices sorted by fitness, ties by position.
    std::vector<std::size_t> ranking(const std::vector<double>& fitness)
    {
        std::vector<std::size_t> idx(fitness.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
        return idx;
    }

} // namespace

std::vector<GenerationRecord> evolve(const Scenario& scenario, const GPConfig& cfg, const EpiConfig& epi,
                                     const EvolveOptions& options)
{
    cfg.validate();
    epi.validate();
    if (options.method != Method::GP && options.method != Method::EpiGP) {
        throw ConfigError("evolve runs gp or epigp only");
    }
    Rng rng = make_rng({options.master_seed, static_cast<std::uint64_t>(SeedStream::Evolution)});

    EvalSettings settings;
    settings.epigenetic = options.method == Method::EpiGP;
    settings.epi = epi;
    if (settings.epigenetic && !epi.forced_lambda) {
        settings.lambda_bounds = calibrate_lambda(
            scenario, derive_seed({options.master_seed, static_cast<std::uint64_t>(SeedStream::Calibration)}));
    }

    const bool static_env = !scenario.window && scenario.reuse_seeds;
    const int generations = generation_limit(scenario, cfg.generations);
    std::vector<Individual> pop = initial_population(scenario, cfg, rng);
    std::vector<GenerationRecord> records;

    for (int g = 0; g < generations; ++g) {
        parallel_for(pop.size(), options.threads, [&](std::size_t i) {
            if (static_env && pop[i].evaluated) return;
            pop[i].fitness = evaluate_fitness(pop[i], scenario, make_plan(scenario, cfg, options.master_seed, g, i),
                                              settings);
            pop[i].evaluated = true;
        });

        std::vector<double> fitness;
        for (const Individual& ind : pop) fitness.push_back(ind.fitness);
        GenerationRecord rec;
        rec.generation = g;
        rec.window = scenario.window ? window_slice(scenario, g) : TimeWindow{0, scenario.horizon};
        rec.best_fitness = fitness[best_of(fitness)];
        rec.mean_fitness = mean_of(fitness);
        rec.best = pop[best_of(fitness)];
        if (options.on_generation) options.on_generation(rec);
        records.push_back(std::move(rec));
        if (g + 1 == generations) break;

        std::vector<Individual> next;
        const auto order = ranking(fitness);
        for (int e = 0; e < cfg.elitism; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);
        while (static_cast<int>(next.size()) < cfg.population_size) {
            const Individual& pa = tournament_select(pop, cfg.tournament_size, rng);
            const Individual& pb = tournament_select(pop, cfg.tournament_size, rng);
            std::pair<Individual, Individual> kids;
            if (uniform01(rng) < cfg.crossover_rate) {
                kids = crossover(pa, pb, cfg, rng);
            } else {
                kids = {pa, pb};
                kids.first.evaluated = kids.second.evaluated = false;
            }
            mutate(kids.first, cfg, scenario.primitives, epi.threshold, rng);
            mutate(kids.second, cfg, scenario.primitives, epi.threshold, rng);
            next.push_back(std::move(kids.first));
            if (static_cast<int>(next.size()) < cfg.population_size) next.push_back(std::move(kids.second));
        }
        pop = std::move(next);
    }
    return records;
}

std::vector<std::int64_t> encode_schedule(const std::vector<PhasePlan>& plans)
{
    std::vector<std::int64_t> genes;
    for (const PhasePlan& p : plans) {
        for (const Phase& ph : p.phases()) genes.push_back(ph.duration);
    }
    return genes;
}

std::vector<PhasePlan> decode_schedule(const std::vector<PhasePlan>& templates, const std::vector<std::int64_t>& genes)
{
    std::vector<PhasePlan> out;
    std::size_t g = 0;
    for (const PhasePlan& t : templates) {
        std::vector<Phase> phases = t.phases();
        for (Phase& ph : phases) {
            if (g >= genes.size()) throw ConfigError("schedule chromosome too short");
            ph.duration = genes[g++];
        }
        out.emplace_back(std::move(phases));
    }
    if (g != genes.size()) throw ConfigError("schedule chromosome too long");
    return out;
}

std::vector<GARecord> ga_optimize_schedule(const Scenario& scenario, const GPConfig& cfg, std::uint64_t master_seed,
                                           int threads, std::function<void(const GARecord&)> on_generation)
{
    cfg.validate();
    Rng rng = make_rng({master_seed, static_cast<std::uint64_t>(SeedStream::Evolution)});
    const std::vector<std::int64_t> base = encode_schedule(scenario.plans);
    std::vector<GASchedule> pop;
    for (int i = 0; i < cfg.population_size; ++i) {
        GASchedule s;
        s.genes = base;
        if (i > 0) {
            for (auto& gene : s.genes) gene = std::clamp<std::int64_t>(gene + uniform_int(rng, -10, 10), kGeneMin, kGeneMax);
        }
        pop.push_back(std::move(s));
    }

    const bool static_env = !scenario.window && scenario.reuse_seeds;
    const int generations = generation_limit(scenario, cfg.generations);
    std::vector<GARecord> records;
    for (int g = 0; g < generations; ++g) {
        parallel_for(pop.size(), threads, [&](std::size_t i) {
            if (static_env && pop[i].evaluated) return;
            const auto plans = decode_schedule(scenario.plans, pop[i].genes);
            pop[i].fitness = evaluate_fixed(scenario, make_plan(scenario, cfg, master_seed, g, i), &plans);
            pop[i].evaluated = true;
        });
        std::vector<double> fitness;
        for (const GASchedule& s : pop) fitness.push_back(s.fitness);
        GARecord rec;
        rec.generation = g;
        rec.window = scenario.window ? window_slice(scenario, g) : TimeWindow{0, scenario.horizon};
        rec.best_fitness = fitness[best_of(fitness)];
        rec.mean_fitness = mean_of(fitness);
        rec.best = pop[best_of(fitness)];
        if (on_generation) on_generation(rec);
        records.push_back(std::move(rec));
        if (g + 1 == generations) break;

        std::vector<GASchedule> next;
        const auto order = ranking(fitness);
        for (int e = 0; e < cfg.elitism; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);
        auto pick = [&]() -> const GASchedule& {
            std::size_t best = uniform_index(rng, pop.size());
            for (int k = 1; k < cfg.tournament_size; ++k) {
                const std::size_t c = uniform_index(rng, pop.size());
                if (pop[c].fitness < pop[best].fitness) best = c;
            }
            return pop[best];
        };
        while (static_cast<int>(next.size()) < cfg.population_size) {
            GASchedule a = pick();
            GASchedule b = pick();
            bool changed = false;
            if (uniform01(rng) < cfg.crossover_rate) {
                for (std::size_t k = 0; k < a.genes.size(); ++k) {
                    if (bernoulli(rng, 0.5)) {
                        std::swap(a.genes[k], b.genes[k]);
                        changed = true;
                    }
                }
            }
            for (GASchedule* s : {&a, &b}) {
                for (auto& gene : s->genes) {
                    if (uniform01(rng) < cfg.point_mutation_rate) {
                        const std::int64_t step = uniform_int(rng, 1, 5) * (bernoulli(rng, 0.5) ? 1 : -1);
                        gene = std::clamp<std::int64_t>(gene + step, kGeneMin, kGeneMax);
                        changed = true;
                    }
                }
            }
            if (changed) a.evaluated = b.evaluated = false;
            next.push_back(std::move(a));
            if (static_cast<int>(next.size()) < cfg.population_size) next.push_back(std::move(b));
        }
        pop = std::move(next);
    }
    return records;
}

std::vector<GenerationRecord> run_static(const Scenario& scenario, Method method, const GPConfig& cfg,
                                         std::uint64_t master_seed, int generations, int threads,
                                         std::function<void(const GenerationRecord&)> on_generation)
{
    if (method != Method::Fixed && method != Method::LongestQueue) throw ConfigError("run_static runs fixed or lq");
    const int count = scenario.window ? std::min(generations, window_count(scenario)) : 1;
    std::vector<GenerationRecord> records(static_cast<std::size_t>(count));
    Individual lq;
    if (method == Method::LongestQueue) lq.forest.assign(static_cast<std::size_t>(scenario.slot_count), longest_queue_controller());
    parallel_for(records.size(), threads, [&](std::size_t i) {
        const int g = static_cast<int>(i);
        const EvaluationPlan plan = make_plan(scenario, cfg, master_seed, g, 0);
        GenerationRecord& rec = records[i];
        rec.generation = g;
        rec.window = plan.window;
        rec.best = lq;
        if (method == Method::Fixed) {
            rec.best_fitness = evaluate_fixed(scenario, plan);
        } else {
            rec.best_fitness = evaluate_fitness(rec.best, scenario, plan, EvalSettings{});
        }
        rec.best.fitness = rec.best_fitness;
        rec.best.evaluated = true;
        rec.mean_fitness = rec.best_fitness;
    });
    if (on_generation) {
        for (const auto& r : records) on_generation(r);
    }
    return records;
}

}  // namespace trafficgp
