#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trafficgp/config.hpp"
#include "trafficgp/controllers.hpp"
#include "trafficgp/network.hpp"
#include "trafficgp/simulation.hpp"

namespace trafficgp {

class OutOfRange : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownScenario : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyMapping : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct WindowSpec {
    std::int64_t length = 3600;
    std::int64_t step = 300;
};

struct TimeWindow {
    std::int64_t start = 0;
    std::int64_t end = 0;

    bool operator==(const TimeWindow&) const = default;
};

struct IntersectionSetup {
    int node = 0;  // node id
    bool allow_left_turn = true;
    std::optional<PhasePlan> plan;  // default plan when empty
};

enum class MappingKind : std::uint8_t { All, PerIntersection, ByGroup };

struct ControllerMapping {
    MappingKind kind = MappingKind::PerIntersection;
    std::vector<std::vector<int>> groups;  // node ids, ByGroup only
};

struct Scenario {
    std::string name;
    RoadGraph graph;
    std::vector<IntersectionSetup> intersections;
    std::vector<EntrySpec> entries;
    SimConfig sim;
    std::int64_t horizon = 3600;
    std::optional<WindowSpec> window;
    ControllerMapping mapping;
    bool reuse_seeds = false;
    GPConfig gp;
    EpiConfig epi;
    PrimitiveSet primitives = PrimitiveSet::single_intersection();

    // Derived by compile().
    std::shared_ptr<const NetworkLayout> layout;
    std::vector<PhasePlan> plans;     // per control, in layout.intersections() order
    std::vector<bool> allow_left;     // per control
    std::vector<int> slot_of_control;  // controller slot per control, -1 if none
    int slot_count = 0;
    std::int64_t sample_period = 66;  // default cycle length, seconds

    // Validates the graph, builds the layout and resolves plans and mapping.
    void compile();

    std::vector<std::vector<std::size_t>> controls_of_slot() const;
    World make_world(std::uint64_t seed, TimeWindow window) const;
};

int window_count(const Scenario& scenario);
TimeWindow window_slice(const Scenario& scenario, int generation);

std::vector<std::string> builtin_scenario_names();
Scenario builtin_scenario(std::string_view name);

Scenario parse_scenario(std::string_view json_text);
std::string serialize_scenario(const Scenario& scenario);
Scenario load_scenario_file(const std::string& path);
// Built-in name or path to a JSON file.
Scenario resolve_scenario(const std::string& name_or_path);

}  // namespace trafficgp
