#include "trafficgp/experiment.hpp"

#include <charconv>
#include <chrono>
#include <fstream>
#include <mutex>

#include "trafficgp/evolution.hpp"

namespace trafficgp {

std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string csv_row(const RunRecord& r)
{
    std::string out(method_name(r.method));
    out += ',' + std::to_string(r.generation);
    out += ',' + std::to_string(r.window_start);
    out += ',' + format_number(r.best_fitness);
    out += ',' + format_number(r.mean_fitness);
    out += ',' + std::to_string(r.seed);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", r.wall_time);
    out += ',';
    out += buf;
    return out;
}

std::string default_export_path(const std::string& csv_path, Method method)
{
    std::string stem = csv_path;
    if (stem.size() > 4 && stem.compare(stem.size() - 4, 4, ".csv") == 0) stem.resize(stem.size() - 4);
    return stem + (method == Method::GA ? "_best_schedule.txt" : "_best.py");
}

namespace {

    class CsvWriter {
    public:
        explicit CsvWriter(const std::string& path)
            : out_(path)
            , path_(path)
        {
            if (!out_) throw IoError("cannot open output file '" + path + "'");
            out_ << kCsvHeader << '\n';
            check();
        }

        void write(const RunRecord& r)
        {
            std::lock_guard<std::mutex> lock(mutex_);
            out_ << csv_row(r) << '\n';
            out_.flush();
            check();
        }

    private:
        void check()
        {
            if (!out_) throw IoError("failed writing to '" + path_ + "'");
        }

        std::ofstream out_;
        std::string path_;
        std::mutex mutex_;
    };

    void write_text(const std::string& path, const std::string& text)
    {
        std::ofstream out(path);
        if (!out) throw IoError("cannot open export file '" + path + "'");
        out << text;
        if (!out) throw IoError("failed writing to '" + path + "'");
    }

    std::string forest_source(const Individual& ind)
    {
        std::string text = "import controller\n\n";
        for (std::size_t k = 0; k < ind.forest.size(); ++k) {
            text += "\n" + controller_to_source(ind.forest[k], static_cast<int>(k)) + "\n";
        }
        return text;
    }

    std::string schedule_text(const Scenario& scenario, const GASchedule& best)
    {
        const auto plans = decode_schedule(scenario.plans, best.genes);
        const auto nodes = scenario.layout->intersections();
        std::string text = "# intersection: phase durations in plan order\n";
        for (std::size_t c = 0; c < plans.size(); ++c) {
            const Node& n = scenario.layout->graph.nodes[nodes[c]];
            text += std::to_string(n.id);
            if (!n.name.empty()) text += " (" + n.name + ")";
            text += ":";
            for (const Phase& p : plans[c].phases()) text += " " + std::to_string(p.duration);
            text += "\n";
        }
        return text;
    }

} // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, Scenario scenario)
{
    if (spec.repetitions < 1) throw ConfigError("repetitions must be at least 1");
    if (spec.threads < 1) throw ConfigError("threads must be at least 1");
    GPConfig cfg = scenario.gp;
    if (spec.generations) cfg.generations = *spec.generations;
    if (spec.population) cfg.population_size = *spec.population;
    if (spec.mutation) cfg.mutation = *spec.mutation;
    cfg.repetitions_per_eval = spec.repetitions;
    cfg.elitism = std::min(cfg.elitism, cfg.population_size);
    cfg.validate();
    EpiConfig epi = scenario.epi;
    if (spec.epi_guard) epi.guard = *spec.epi_guard;
    if (spec.forced_lambda) epi.forced_lambda = *spec.forced_lambda;
    epi.validate();

    CsvWriter csv(spec.output);
    ExperimentResult result;
    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count(); };
    auto emit = [&](int generation, const TimeWindow& w, double best, double mean) {
        RunRecord r{spec.method, generation, w.start, best, mean, spec.master_seed, elapsed()};
        csv.write(r);
        result.records.push_back(r);
    };
    const std::string export_path = spec.export_path.empty() ? default_export_path(spec.output, spec.method) : spec.export_path;

    switch (spec.method) {
    case Method::Fixed:
    case Method::LongestQueue: {
        const auto records = run_static(scenario, spec.method, cfg, spec.master_seed, cfg.generations, spec.threads,
                                        [&](const GenerationRecord& g) {
                                            emit(g.generation, g.window, g.best_fitness, g.mean_fitness);
                                        });
        if (spec.method == Method::LongestQueue && !records.empty()) {
            write_text(export_path, forest_source(records.back().best));
            result.export_path = export_path;
        }
        break;
    }
    case Method::GA: {
        const auto records = ga_optimize_schedule(scenario, cfg, spec.master_seed, spec.threads, [&](const GARecord& g) {
            emit(g.generation, g.window, g.best_fitness, g.mean_fitness);
        });
        if (!records.empty()) {
            write_text(export_path, schedule_text(scenario, records.back().best));
            result.export_path = export_path;
        }
        break;
    }
    case Method::GP:
    case Method::EpiGP: {
        EvolveOptions options;
        options.method = spec.method;
        options.master_seed = spec.master_seed;
        options.threads = spec.threads;
        options.on_generation = [&](const GenerationRecord& g) {
            emit(g.generation, g.window, g.best_fitness, g.mean_fitness);
        };
        const auto records = evolve(scenario, cfg, epi, options);
        if (!records.empty()) {
            write_text(export_path, forest_source(records.back().best));
            result.export_path = export_path;
        }
        break;
    }
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec)
{
    return run_experiment(spec, resolve_scenario(spec.scenario));
}

}  // namespace trafficgp
