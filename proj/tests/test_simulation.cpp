#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "trafficgp/scenario.hpp"
#include "trafficgp/simulation.hpp"

using namespace trafficgp;

namespace {

Node node(int id, int row, int col, NodeKind kind) { return {id, {row, col}, kind, ""}; }

// Entry at col 0, exit at col len-1: one east link of `len` cells.
NetworkLayout straight_road(int len)
{
    RoadGraph g;
    g.nodes = {node(1, 0, 0, NodeKind::EntryExit), node(2, 0, len - 1, NodeKind::EntryExit)};
    g.roads = {{1, 2, false, 1, Direction::East}};
    return build_layout(g);
}

World bare_world(const NetworkLayout& layout, SimConfig cfg = {}, std::uint64_t seed = 1)
{
    const auto n = layout.intersections().size();
    std::vector<PhasePlan> plans(n, default_plan(false));
    SignalSystem sys(layout, plans, std::vector<bool>(n, false));
    return World(layout, std::move(sys), {}, cfg, make_rng({seed}));
}

SimConfig deterministic()
{
    SimConfig c;
    c.p_random = 0.0;
    return c;
}

}  // namespace

TEST(EntryProbability, PoissonPmfOracle)
{
    EntryProfile p{0, 100, 2, 1, 0, 1};  // mean 2, raw seconds over the first unit
    p.duration = 100;
    p.volume = 200;
    EXPECT_NEAR(entry_probability(2, p), 4.0 * std::exp(-2.0) / 2.0, 1e-12);
    EXPECT_NEAR(entry_probability(2, p), 0.27067, 1e-5);
    EXPECT_TRUE(oracle::close_rel(poisson_pmf(2, 2.0), oracle::poisson_pmf(2, 2.0)));
}

TEST(EntryProbability, CapAndFloor)
{
    EntryProfile cap{0, 10, 1e-12, 1, 0.3, 0.9};
    EXPECT_DOUBLE_EQ(entry_probability(0, cap), 0.9);
    EntryProfile floor{0, 1000, 10, 1000, 0.05, 1.0};  // mean 0.01, pmf vanishes at large t
    EXPECT_NEAR(entry_probability(900, floor), 0.05, 1e-15);
}

TEST(EntryProbability, QuantizedToUpdateInterval)
{
    EntryProfile p{0, 3600, 128, 16, 0.0, 1.0};
    for (std::int64_t t = 0; t < 3600; t += 7) {
        const double got = entry_probability(t, p, 21);
        EXPECT_TRUE(oracle::close_rel(got, oracle::entry_probability(t, 0, 3600, 128, 16, 0.0, 1.0, 21))) << t;
        EXPECT_EQ(got, entry_probability(t - t % 21, p, 21));
    }
}

TEST(Insertion, AcceptanceRule)
{
    EXPECT_TRUE(insertion_accepted(0.05, 0.10, true));
    EXPECT_FALSE(insertion_accepted(0.05, 0.10, false));
    EXPECT_FALSE(insertion_accepted(0.0, 0.0, true));
}

TEST(Insertion, InsertsAtMaxSpeedOnlyIntoFreeCell)
{
    const NetworkLayout layout = straight_road(30);
    World w = bare_world(layout);
    const auto v = w.try_insert(0, 0, 1.0);
    ASSERT_TRUE(v.has_value());
    EXPECT_EQ(v->speed, 4);
    EXPECT_EQ(v->pos, 0);
    EXPECT_GT(v->id, 1);
    EXPECT_FALSE(w.try_insert(0, 0, 1.0).has_value());
    World z = bare_world(layout);
    for (int k = 0; k < 1000; ++k) EXPECT_FALSE(z.try_insert(0, 0, 0.0).has_value());
}

TEST(VehicleRules, AccelerateOnClearRoad)
{
    const NetworkLayout layout = straight_road(50);
    World w = bare_world(layout, deterministic());
    w.place_vehicle(0, 0, 5, 2, Behaviour::RandomWalk, 0);
    w.step();
    ASSERT_EQ(w.vehicles().size(), 1u);
    EXPECT_EQ(w.vehicles()[0].speed, 3);
    EXPECT_EQ(w.vehicles()[0].pos, 8);
}

TEST(VehicleRules, BrakeBehindStoppedLeader)
{
    // Leader held at a red stop line; follower two cells behind at v=4.
    const Scenario s = builtin_scenario("single_intersection");
    World w = s.make_world(1, {0, s.horizon});
    const int north = s.layout->inbound_from(s.layout->intersections()[0], Direction::North);
    const int len = s.layout->links[static_cast<std::size_t>(north)].length;
    SimConfig cfg = s.sim;
    ASSERT_EQ(cfg.p_random, 0.0);
    w.place_vehicle(north, 0, len - 1, 0, Behaviour::RandomWalk, 0);
    w.place_vehicle(north, 0, len - 3, 4, Behaviour::RandomWalk, 0);
    w.step();
    std::map<int, int> speed_at;
    for (const auto& v : w.vehicles()) speed_at[v.pos] = v.speed;
    EXPECT_EQ(speed_at.at(len - 1), 0);
    EXPECT_EQ(speed_at.at(len - 2), 1);
}

TEST(VehicleRules, FreeFlowTrajectory)
{
    const int len = 100;
    const NetworkLayout layout = straight_road(len);
    World w = bare_world(layout, deterministic());
    w.place_vehicle(0, 0, 0, 0, Behaviour::RandomWalk, 0);
    // Closed-form trajectory: v <- min(v + 1, 4), leave once pos + v reaches the last cell.
    int pos = 0, v = 0, expected_steps = 0;
    for (;;) {
        ++expected_steps;
        v = std::min(v + 1, 4);
        if (pos + v >= len - 1) break;
        pos += v;
    }
    int steps = 0;
    while (!w.vehicles().empty() && steps < 1000) {
        w.step();
        ++steps;
    }
    EXPECT_EQ(steps, expected_steps);
    EXPECT_LE(steps, (len + 3) / 4 + 3);
    EXPECT_EQ(w.ledger().total_system_delay, 0);
    EXPECT_EQ(w.ledger().completed_vehicles, 1);
}

TEST(VehicleRules, NoRandomBrakingWhenPZero)
{
    const Scenario s = builtin_scenario("single_intersection");
    World a = s.make_world(5, {0, 600});
    World b = s.make_world(5, {0, 600});
    a.run_until(600);
    b.run_until(600);
    EXPECT_EQ(a.ledger().total_system_delay, b.ledger().total_system_delay);
    EXPECT_EQ(a.ledger().inserted_vehicles, b.ledger().inserted_vehicles);
}

TEST(VehicleRules, SpeedBoundsConservationAndExclusion)
{
    for (const auto& name : builtin_scenario_names()) {
        const Scenario s = builtin_scenario(name);
        World w = s.make_world(3, {0, s.horizon});
        for (int t = 0; t < 1500; ++t) {
            w.step();
            const auto& l = w.ledger();
            ASSERT_EQ(l.inserted_vehicles, l.completed_vehicles + l.active_vehicles) << name;
            std::map<std::int32_t, int> seen;
            for (auto c : w.grid().cells) {
                if (c > kRoadCell) ++seen[c];
            }
            ASSERT_EQ(seen.size(), w.vehicles().size()) << name << " t=" << t;
            for (const auto& v : w.vehicles()) {
                ASSERT_GE(v.speed, 0);
                ASSERT_LE(v.speed, s.sim.v_max);
                ASSERT_EQ(seen[v.id], 1);
            }
        }
    }
}

TEST(Routing, NearestCandidateToDestination)
{
    // Destination (0,0); from X at (3,8) the candidates end at (3,4) and (6,8).
    RoadGraph g;
    g.nodes = {node(1, 3, 8, NodeKind::Intersection), node(2, 3, 18, NodeKind::EntryExit),
               node(3, 3, 4, NodeKind::EntryExit),     node(4, 6, 8, NodeKind::EntryExit),
               node(5, 0, 0, NodeKind::EntryExit)};
    g.roads = {{2, 1, false, 1, Direction::West}, {1, 3, false, 1, Direction::West}, {1, 4, false, 1, Direction::South}};
    const NetworkLayout layout = build_layout(g);
    World w = bare_world(layout, deterministic());
    const int in = layout.inbound_from(0, Direction::East);
    ASSERT_GE(in, 0);
    Vehicle& v = w.place_vehicle(in, 0, 0, 0, Behaviour::FixedDestination, *layout.graph.find(5));
    int to_west = 0;
    for (int k = 0; k < 100; ++k) {
        const int out = w.next_road(v, false);
        if (layout.links[static_cast<std::size_t>(out)].direction == Direction::West) ++to_west;
    }
    EXPECT_EQ(to_west, 100);
}

TEST(Routing, RandomWalkSplitsEvenly)
{
    // T-junction: from the west, straight east or right to the south.
    RoadGraph g;
    g.nodes = {node(1, 10, 10, NodeKind::Intersection), node(2, 10, 0, NodeKind::EntryExit),
               node(3, 10, 20, NodeKind::EntryExit), node(4, 20, 10, NodeKind::EntryExit)};
    g.roads = {{2, 1, false, 1, Direction::East}, {1, 3, false, 1, Direction::East}, {1, 4, false, 1, Direction::South}};
    const NetworkLayout layout = build_layout(g);
    World w = bare_world(layout, deterministic(), 99);
    const int in = layout.inbound_from(0, Direction::West);
    Vehicle& v = w.place_vehicle(in, 0, 0, 0, Behaviour::RandomWalk, 0);
    const int n = 10000;
    int east = 0;
    for (int k = 0; k < n; ++k) {
        if (layout.links[static_cast<std::size_t>(w.next_road(v, false))].direction == Direction::East) ++east;
    }
    // five standard deviations of a fair binomial
    EXPECT_NEAR(east, n / 2, 5 * std::sqrt(n * 0.25));
}

TEST(Routing, EquidistantCandidatesBothChosen)
{
    RoadGraph g;
    g.nodes = {node(1, 30, 30, NodeKind::Intersection), node(2, 30, 60, NodeKind::EntryExit),
               node(3, 30, 0, NodeKind::EntryExit),     node(4, 0, 30, NodeKind::EntryExit),
               node(5, 0, 0, NodeKind::EntryExit)};
    g.roads = {{2, 1, false, 1, Direction::West}, {1, 3, false, 1, Direction::West}, {1, 4, false, 1, Direction::North}};
    const NetworkLayout layout = build_layout(g);
    World w = bare_world(layout, deterministic(), 4);
    const int in = layout.inbound_from(0, Direction::East);
    Vehicle& v = w.place_vehicle(in, 0, 0, 0, Behaviour::FixedDestination, *layout.graph.find(5));
    std::map<Direction, int> count;
    for (int k = 0; k < 1000; ++k) ++count[layout.links[static_cast<std::size_t>(w.next_road(v, false))].direction];
    EXPECT_GT(count[Direction::West], 0);
    EXPECT_GT(count[Direction::North], 0);
}

TEST(Measures, Definitions)
{
    DelayLedger l;
    l.total_system_delay = 12;
    l.completed_vehicles = 2;
    l.inserted_vehicles = 2;
    const Measures m = measure(l);
    EXPECT_DOUBLE_EQ(m.total_system_delay, 12);
    EXPECT_DOUBLE_EQ(m.average_delay, 6);
    const Measures z = measure(DelayLedger{});
    EXPECT_EQ(z.total_system_delay, 0);
    EXPECT_EQ(z.average_delay, 0);
}

TEST(Measures, StoppedTimeAccruesAtRedLight)
{
    const Scenario s = builtin_scenario("single_intersection");
    World w = s.make_world(1, {0, s.horizon});
    const int north = s.layout->inbound_from(s.layout->intersections()[0], Direction::North);
    const int len = s.layout->links[static_cast<std::size_t>(north)].length;
    w.place_vehicle(north, 0, len - 1, 0, Behaviour::RandomWalk, 0);
    // The vertical axis is red for the first 33 seconds.
    for (int t = 0; t < 10; ++t) w.step();
    std::int64_t stopped = 0;
    for (const auto& v : w.vehicles()) {
        if (v.link == north && v.pos == len - 1) stopped = v.stopped_time;
    }
    EXPECT_EQ(stopped, 10);
    EXPECT_GE(w.ledger().total_system_delay, 10);
}

TEST(Measures, MonotoneInVolumeAtPermanentRed)
{
    const Scenario base = builtin_scenario("single_intersection");
    auto delay_for = [&](double rate) {
        Scenario s = base;
        // vertical never gets green
        s.intersections[0].plan = PhasePlan({{SignalState::Stop, SignalState::Pass, 100000, PhaseRole::Fixed}});
        s.entries.clear();
        s.entries.push_back({s.graph.nodes[1].id, {uniform_profile(0, s.horizon, rate)}, {s.graph.nodes[2].id}});
        s.compile();
        double total = 0;
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            World w = s.make_world(seed, {0, 900});
            w.run_until(900);
            total += static_cast<double>(w.ledger().total_system_delay);
        }
        return total;
    };
    double last = -1;
    for (double rate : {0.0, 0.02, 0.05, 0.1, 0.3}) {
        const double d = delay_for(rate);
        EXPECT_GE(d, last) << rate;
        last = d;
    }
}

TEST(Measures, QueueCounterMatchesStoppedVehicles)
{
    const Scenario s = builtin_scenario("poc_grid");
    World w = s.make_world(2, {0, s.horizon});
    for (int t = 0; t < 1200; ++t) {
        w.step();
        if (t % 100 != 99) continue;
        std::vector<int> expected(w.signals().signals().size(), 0);
        for (const auto& v : w.vehicles()) {
            const int sig = s.layout->links[static_cast<std::size_t>(v.link)].signal;
            if (!v.in_junction() && v.speed == 0 && sig >= 0) ++expected[static_cast<std::size_t>(sig)];
        }
        for (std::size_t k = 0; k < expected.size(); ++k) {
            const auto& sig = w.signals().signals()[k];
            EXPECT_EQ(sig.queue_counter, expected[k]);
            const Link& link = s.layout->links[static_cast<std::size_t>(sig.link)];
            EXPECT_LE(sig.queue_counter, link.length * link.lanes);
        }
    }
}

TEST(World, DeterministicLedger)
{
    const Scenario s = builtin_scenario("highway");
    World a = s.make_world(17, {3600, 4600});
    World b = s.make_world(17, {3600, 4600});
    a.run_until(4600);
    b.run_until(4600);
    EXPECT_EQ(a.ledger().total_system_delay, b.ledger().total_system_delay);
    EXPECT_EQ(a.ledger().completed_vehicles, b.ledger().completed_vehicles);
    EXPECT_GT(a.ledger().inserted_vehicles, 0);
}

TEST(Junction, LongScenariosDrainUnderFixedTime)
{
    // Demand falls to the base rate at the end, so a working network has
    // only a short queue left at the horizon.
    for (const char* name : {"poc_grid", "highway"}) {
        const Scenario s = builtin_scenario(name);
        World w = s.make_world(1, {0, s.horizon});
        w.run_until(s.horizon);
        EXPECT_LT(w.ledger().active_vehicles, 200) << name;
        EXPECT_GT(w.ledger().completed_vehicles, 40000) << name;
    }
}

TEST(Junction, CrossingMovementsNeverShareTheBox)
{
    const Scenario s = builtin_scenario("poc_grid");
    World w = s.make_world(4, {3600, s.horizon});
    for (int t = 0; t < 3000; ++t) {
        w.step();
        // junction cell -> the movement whose vehicles still have it ahead
        std::map<int, const Turn*> claimed;
        for (const auto& v : w.vehicles()) {
            if (!v.in_junction()) continue;
            const Link& link = s.layout->links[static_cast<std::size_t>(v.link)];
            const Turn* turn = link.turn_to(v.lane, v.next_link);
            ASSERT_NE(turn, nullptr);
            for (std::size_t k = static_cast<std::size_t>(v.junction_pos); k < turn->path.size(); ++k) {
                auto [it, fresh] = claimed.emplace(turn->path[k], turn);
                ASSERT_EQ(it->second, turn) << "t=" << t;
            }
        }
    }
}
