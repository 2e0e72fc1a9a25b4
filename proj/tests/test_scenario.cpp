#include <gtest/gtest.h>

#include <fstream>

#include "trafficgp/scenario.hpp"

using namespace trafficgp;

namespace {

std::vector<int> ids_of(const Scenario& s, std::vector<std::string> names)
{
    std::vector<int> out;
    for (const auto& n : names) {
        for (const auto& node : s.graph.nodes) {
            if (node.name == n) out.push_back(node.id);
        }
    }
    return out;
}

std::size_t signal_count(const Scenario& s) { return SignalSystem(*s.layout, s.plans, s.allow_left).signals().size(); }

}  // namespace

TEST(Window, Slices)
{
    Scenario s = builtin_scenario("poc_grid");
    EXPECT_EQ(window_slice(s, 0), (TimeWindow{0, 3600}));
    EXPECT_EQ(window_slice(s, 1), (TimeWindow{300, 3900}));
    EXPECT_EQ(window_count(s), 200);
    EXPECT_EQ(window_slice(s, 199).end, s.horizon);
    EXPECT_THROW(window_slice(s, 200), OutOfRange);
    EXPECT_THROW(window_slice(builtin_scenario("single_intersection"), 0), ConfigError);
}

TEST(Window, UnionCoversHorizonWithFixedOverlap)
{
    for (const char* name : {"poc_grid", "highway"}) {
        const Scenario s = builtin_scenario(name);
        std::int64_t covered = 0;
        for (int g = 0; g < window_count(s); ++g) {
            const TimeWindow w = window_slice(s, g);
            if (g == 0) {
                EXPECT_EQ(w.start, 0);
            } else {
                EXPECT_EQ(covered - w.start, s.window->length - s.window->step);
            }
            covered = w.end;
        }
        EXPECT_EQ(covered, s.horizon);
    }
}

TEST(Builtin, SingleIntersection)
{
    const Scenario s = builtin_scenario("single_intersection");
    EXPECT_EQ(s.layout->intersections().size(), 1u);
    EXPECT_EQ(signal_count(s), 4u);
    EXPECT_FALSE(s.allow_left[0]);
    EXPECT_EQ(s.plans[0].red(true), 33);
    EXPECT_EQ(s.plans[0].green(true), 27);
    EXPECT_EQ(s.horizon, 3600);
    EXPECT_FALSE(s.window.has_value());
    EXPECT_EQ(s.sim.p_random, 0.0);
    EXPECT_EQ(s.slot_count, 1);
    // Nobody turns: every vehicle leaves through the exit opposite its entry.
    World w = s.make_world(1, {0, 3600});
    std::map<std::int32_t, Direction> heading;
    for (int t = 0; t < 3600; ++t) {
        w.step();
        for (const auto& v : w.vehicles()) {
            const Direction d = s.layout->links[static_cast<std::size_t>(v.link)].direction;
            auto [it, fresh] = heading.emplace(v.id, d);
            ASSERT_EQ(it->second, d) << "vehicle " << v.id << " turned";
        }
    }
    EXPECT_GT(w.ledger().completed_vehicles, 100);
}

TEST(Builtin, SingleIntersectionArrivalRates)
{
    const Scenario s = builtin_scenario("single_intersection");
    for (const auto& e : s.entries) {
        const Node& n = s.graph.node(e.node);
        const double expect = (n.name == "left" || n.name == "right") ? 1.0 / 10 : 1.0 / 30;
        EXPECT_DOUBLE_EQ(entry_probability(100, e.profiles.at(0)), expect) << n.name;
    }
}

TEST(Builtin, PocGridCountsAndGroups)
{
    const Scenario s = builtin_scenario("poc_grid");
    EXPECT_EQ(s.layout->intersections().size(), 10u);
    EXPECT_EQ(s.layout->exits().size(), 9u);
    EXPECT_EQ(signal_count(s), 31u);
    ASSERT_EQ(s.mapping.kind, MappingKind::ByGroup);
    ASSERT_EQ(s.mapping.groups.size(), 4u);
    EXPECT_EQ(s.mapping.groups[0], ids_of(s, {"E", "F", "H"}));
    EXPECT_EQ(s.mapping.groups[1], ids_of(s, {"B", "D", "G", "I"}));
    EXPECT_EQ(s.mapping.groups[2], ids_of(s, {"A", "J"}));
    EXPECT_EQ(s.mapping.groups[3], ids_of(s, {"C"}));
    for (const auto& r : s.graph.roads) {
        EXPECT_TRUE(r.bidirectional);
        EXPECT_EQ(r.lanes, 2);
    }
    EXPECT_EQ(s.sim.density_update_interval, 21);
    EXPECT_EQ(s.window->step, 300);
    EXPECT_EQ(s.slot_count, 4);
}

TEST(Builtin, HighwayCountsAndMapping)
{
    const Scenario s = builtin_scenario("highway");
    EXPECT_EQ(s.layout->intersections().size(), 4u);
    EXPECT_EQ(s.layout->exits().size(), 8u);
    EXPECT_EQ(signal_count(s), 14u);
    EXPECT_EQ(s.mapping.kind, MappingKind::PerIntersection);
    EXPECT_EQ(s.slot_count, 4);
    std::map<int, int> lanes;
    for (const auto& r : s.graph.roads) ++lanes[r.lanes];
    EXPECT_EQ(lanes[3], 5);  // main road segments
    EXPECT_EQ(lanes[2], 4);  // two crossings, both sides
    EXPECT_EQ(lanes[1], 2);  // side roads
    EXPECT_EQ(s.sim.density_update_interval, 22);
    EXPECT_EQ(s.window->step, 330);
}

TEST(Builtin, UnknownName) { EXPECT_THROW(builtin_scenario("bologna"), UnknownScenario); }

TEST(ScenarioFile, RoundTripIsIsomorphic)
{
    for (const auto& name : builtin_scenario_names()) {
        const Scenario s = builtin_scenario(name);
        const std::string text = serialize_scenario(s);
        const Scenario back = parse_scenario(text);
        ASSERT_EQ(back.graph.nodes.size(), s.graph.nodes.size());
        for (std::size_t i = 0; i < s.graph.nodes.size(); ++i) {
            EXPECT_EQ(back.graph.nodes[i].id, s.graph.nodes[i].id);
            EXPECT_EQ(back.graph.nodes[i].position, s.graph.nodes[i].position);
            EXPECT_EQ(back.graph.nodes[i].kind, s.graph.nodes[i].kind);
        }
        ASSERT_EQ(back.graph.roads.size(), s.graph.roads.size());
        for (std::size_t i = 0; i < s.graph.roads.size(); ++i) {
            EXPECT_EQ(back.graph.roads[i].from, s.graph.roads[i].from);
            EXPECT_EQ(back.graph.roads[i].to, s.graph.roads[i].to);
            EXPECT_EQ(back.graph.roads[i].lanes, s.graph.roads[i].lanes);
            EXPECT_EQ(back.graph.roads[i].direction, s.graph.roads[i].direction);
        }
        EXPECT_EQ(back.plans, s.plans);
        EXPECT_EQ(back.slot_of_control, s.slot_of_control);
        EXPECT_EQ(back.layout->grid.cells, s.layout->grid.cells);
        EXPECT_EQ(serialize_scenario(back), text);
        // same simulation
        World a = s.make_world(9, {0, 600});
        World b = back.make_world(9, {0, 600});
        a.run_until(600);
        b.run_until(600);
        EXPECT_EQ(a.ledger().total_system_delay, b.ledger().total_system_delay) << name;
    }
}

TEST(ScenarioFile, PhaseTableForm)
{
    const std::string text = R"({
      "nodes": [{"id": 1, "row": 20, "col": 20, "kind": "intersection"},
                {"id": 2, "row": 0, "col": 20, "kind": "entry_exit"},
                {"id": 3, "row": 40, "col": 20, "kind": "entry_exit"},
                {"id": 4, "row": 20, "col": 0, "kind": "entry_exit"},
                {"id": 5, "row": 20, "col": 40, "kind": "entry_exit"}],
      "roads": [{"from": 2, "to": 1, "direction": "south"}, {"from": 3, "to": 1, "direction": "north"},
                {"from": 4, "to": 1, "direction": "east"}, {"from": 5, "to": 1, "direction": "west"}],
      "intersections": [{"node": 1, "allow_left_turn": false, "plan": {"red": 33, "green": 27, "yellow": 6}}],
      "entries": [{"node": 4, "start": 0, "end": 600, "volume": 0, "duration": 1, "floor_c": 0.1, "p_max": 0.1}],
      "sim": {"horizon_seconds": 600},
      "mapping": {"kind": "all"}
    })";
    const Scenario s = parse_scenario(text);
    EXPECT_EQ(s.plans[0], plan_from_table(27, 6));
    EXPECT_EQ(s.horizon, 600);
    EXPECT_EQ(s.slot_count, 1);
}

TEST(ScenarioFile, Errors)
{
    EXPECT_THROW(parse_scenario("{not json"), ConfigError);
    EXPECT_THROW(parse_scenario(R"({"nodes": []})"), ConfigError);
    EXPECT_THROW(load_scenario_file("/nonexistent/scenario.json"), IoError);
    EXPECT_THROW(resolve_scenario("/nonexistent/scenario.json"), IoError);
    Scenario s = builtin_scenario("poc_grid");
    s.mapping.groups.push_back({});
    EXPECT_THROW(s.compile(), EmptyMapping);
    Scenario w = builtin_scenario("poc_grid");
    w.window->step = 0;
    EXPECT_THROW(w.compile(), ConfigError);
}
