#include "trafficgp/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace trafficgp {

using nlohmann::json;

void Scenario::compile()
{
    gp.validate();
    epi.validate();
    if (horizon <= 0) throw ConfigError("horizon must be positive");
    if (window) {
        if (window->step <= 0) throw ConfigError("window step must be positive");
        if (window->length <= 0 || window->length > horizon) throw ConfigError("window length must lie in (0, horizon]");
    }
    if (sim.v_max < 1) throw ConfigError("v_max must be positive");
    if (sim.density_update_interval < 1) throw ConfigError("density_update_interval must be positive");

    RoadGraph g = graph;
    const ValidationReport report = validate_network(g);
    if (!report.clean()) {
        std::string msg = "network failed validation:";
        for (const auto& e : report.rejected_edges) {
            msg += " road " + std::to_string(e.from) + "->" + std::to_string(e.to) + " (" + e.reason + ")";
        }
        for (int n : report.removed_nodes) msg += " node " + std::to_string(n) + " removed";
        throw ConfigError(msg);
    }
    auto built = std::make_shared<NetworkLayout>(build_layout(g));

    const auto controls = built->intersections();
    std::map<int, const IntersectionSetup*> setup;
    for (const auto& s : intersections) {
        if (!g.find(s.node)) throw ConfigError("intersection setup for unknown node " + std::to_string(s.node));
        setup[s.node] = &s;
    }
    plans.clear();
    allow_left.clear();
    for (std::size_t c : controls) {
        const int id = built->graph.nodes[c].id;
        const auto it = setup.find(id);
        const bool left = it == setup.end() ? true : it->second->allow_left_turn;
        allow_left.push_back(left);
        plans.push_back(it != setup.end() && it->second->plan ? *it->second->plan : default_plan(left));
    }
    sample_period = controls.empty() ? 66 : default_plan(allow_left.front()).cycle_length();

    slot_of_control.assign(controls.size(), -1);
    switch (mapping.kind) {
    case MappingKind::All:
        std::fill(slot_of_control.begin(), slot_of_control.end(), 0);
        slot_count = controls.empty() ? 0 : 1;
        break;
    case MappingKind::PerIntersection:
        for (std::size_t c = 0; c < controls.size(); ++c) slot_of_control[c] = static_cast<int>(c);
        slot_count = static_cast<int>(controls.size());
        break;
    case MappingKind::ByGroup:
        slot_count = static_cast<int>(mapping.groups.size());
        for (std::size_t gi = 0; gi < mapping.groups.size(); ++gi) {
            if (mapping.groups[gi].empty()) throw EmptyMapping("controller group " + std::to_string(gi) + " is empty");
            for (int id : mapping.groups[gi]) {
                const auto idx = built->graph.find(id);
                if (!idx) throw ConfigError("mapping names unknown node " + std::to_string(id));
                const int control = [&] {
                    for (std::size_t c = 0; c < controls.size(); ++c) {
                        if (controls[c] == *idx) return static_cast<int>(c);
                    }
                    return -1;
                }();
                if (control < 0) throw ConfigError("mapping names non-intersection node " + std::to_string(id));
                if (slot_of_control[static_cast<std::size_t>(control)] >= 0) {
                    throw ConfigError("node " + std::to_string(id) + " appears in two controller groups");
                }
                slot_of_control[static_cast<std::size_t>(control)] = static_cast<int>(gi);
            }
        }
        break;
    }

    for (const auto& e : entries) {
        const auto idx = built->graph.find(e.node);
        if (!idx || !built->is_exit(*idx)) throw ConfigError("entry " + std::to_string(e.node) + " is not an entry/exit node");
        for (int d : e.destinations) {
            const auto di = built->graph.find(d);
            if (!di || !built->is_exit(*di)) throw ConfigError("destination " + std::to_string(d) + " is not an exit");
        }
        for (const auto& p : e.profiles) {
            if (p.end <= p.start) throw ConfigError("entry profile needs start < end");
            if (p.duration <= 0) throw ConfigError("entry profile duration must be positive");
            if (p.volume < 0 || p.floor_c < 0 || p.p_max < 0 || p.p_max > 1) {
                throw ConfigError("entry profile parameters out of range");
            }
        }
    }
    layout = std::move(built);
}

std::vector<std::vector<std::size_t>> Scenario::controls_of_slot() const
{
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(slot_count));
    for (std::size_t c = 0; c < slot_of_control.size(); ++c) {
        if (slot_of_control[c] >= 0) out[static_cast<std::size_t>(slot_of_control[c])].push_back(c);
    }
    return out;
}

World Scenario::make_world(std::uint64_t seed, TimeWindow w) const
{
    if (!layout) throw ConfigError("scenario was not compiled");
    SignalSystem signals(*layout, plans, allow_left);
    return World(*layout, std::move(signals), entries, sim, make_rng({seed}), w.start);
}

int window_count(const Scenario& scenario)
{
    if (!scenario.window) return 1;
    return static_cast<int>((scenario.horizon - scenario.window->length) / scenario.window->step + 1);
}

TimeWindow window_slice(const Scenario& scenario, int generation)
{
    if (!scenario.window) throw ConfigError("scenario has no time window");
    if (generation < 0) throw OutOfRange("negative generation");
    const std::int64_t start = static_cast<std::int64_t>(generation) * scenario.window->step;
    const TimeWindow w{start, start + scenario.window->length};
    if (w.end > scenario.horizon) {
        throw OutOfRange("window " + std::to_string(generation) + " ends at " + std::to_string(w.end) +
                         " past the horizon " + std::to_string(scenario.horizon));
    }
    return w;
}

namespace {

    constexpr std::int64_t kHour = 3600;

    // Builder helpers for the built-in networks.
    struct NetBuilder {
        RoadGraph g;
        int next_id = 1;

        int node(const char* name, int row, int col, NodeKind kind)
        {
            const int id = next_id++;
            g.nodes.push_back({id, {row, col}, kind, name});
            return id;
        }

        void road(int a, int b, int lanes)
        {
            const CellPos pa = g.node(a).position;
            const CellPos pb = g.node(b).position;
            Direction d = Direction::East;
            if (pa.row == pb.row) d = pb.col > pa.col ? Direction::East : Direction::West;
            else d = pb.row > pa.row ? Direction::South : Direction::North;
            g.roads.push_back({a, b, true, lanes, d});
        }
    };

    EntryProfile wave(std::int64_t start, std::int64_t end, double volume, double duration, double floor_c,
                      double p_max)
    {
        return {start, end, volume, duration, floor_c, p_max};
    }

    Scenario make_single_intersection()
    {
        Scenario s;
        s.name = "single_intersection";
        NetBuilder b;
        const int x = b.node("X", 40, 40, NodeKind::Intersection);
        const int n = b.node("top", 0, 40, NodeKind::EntryExit);
        const int so = b.node("bottom", 80, 40, NodeKind::EntryExit);
        const int w = b.node("left", 40, 0, NodeKind::EntryExit);
        const int e = b.node("right", 40, 80, NodeKind::EntryExit);
        for (int t : {n, so, w, e}) b.road(t, x, 1);
        s.graph = b.g;
        s.horizon = kHour;
        s.intersections.push_back({x, false, plan_from_table(27, 6)});
        s.entries.push_back({w, {uniform_profile(0, s.horizon, 1.0 / 10)}, {e}});
        s.entries.push_back({e, {uniform_profile(0, s.horizon, 1.0 / 10)}, {w}});
        s.entries.push_back({n, {uniform_profile(0, s.horizon, 1.0 / 30)}, {so}});
        s.entries.push_back({so, {uniform_profile(0, s.horizon, 1.0 / 30)}, {n}});
        s.sim.p_random = 0.0;
        s.sim.fixed_dest_ratio = 1.0;
        s.mapping.kind = MappingKind::All;
        s.reuse_seeds = true;
        s.gp.population_size = 20;
        s.gp.generations = 50;
        s.gp.mutation = MutationMode::Subtree;
        s.primitives = PrimitiveSet::single_intersection();
        return s;
    }

    Scenario make_poc_grid()
    {
        Scenario s;
        s.name = "poc_grid";
        NetBuilder b;
        const auto I = NodeKind::Intersection;
        const auto X = NodeKind::EntryExit;
        auto R = [](int r) { return 30 + 40 * r; };
        const int A = b.node("A", R(0), R(0), I);
        const int B = b.node("B", R(0), R(1), I);
        const int C = b.node("C", R(0), R(2), I);
        const int D = b.node("D", R(1), R(0), I);
        const int E = b.node("E", R(1), R(1), I);
        const int F = b.node("F", R(1), R(2), I);
        const int G = b.node("G", R(1), R(3), I);
        const int H = b.node("H", R(2), R(1), I);
        const int Ii = b.node("I", R(2), R(2), I);
        const int J = b.node("J", R(2), R(3), I);
        const int edge = R(3) + 30;
        const int bottom = R(2) + 30;
        const int nA = b.node("A_north", 0, R(0), X);
        const int wD = b.node("D_west", R(1), 0, X);
        const int wH = b.node("H_west", R(2), 0, X);
        const int sH = b.node("H_south", bottom, R(1), X);
        const int sI = b.node("I_south", bottom, R(2), X);
        const int sJ = b.node("J_south", bottom, R(3), X);
        const int eG = b.node("G_east", R(1), edge, X);
        const int eC = b.node("C_east", R(0), edge, X);
        const int nC = b.node("C_north", 0, R(2), X);
        const int lanes = 2;
        for (auto [a, c] : std::vector<std::pair<int, int>>{{A, B}, {D, E}, {E, F}, {F, G}, {Ii, J}, {A, D}, {B, E},
                                                            {C, F}, {E, H}, {F, Ii}, {G, J}}) {
            b.road(a, c, lanes);
        }
        for (auto [t, c] : std::vector<std::pair<int, int>>{
                 {nA, A}, {wD, D}, {wH, H}, {sH, H}, {sI, Ii}, {sJ, J}, {eG, G}, {eC, C}, {nC, C}}) {
            b.road(t, c, lanes);
        }
        s.graph = b.g;

        s.window = WindowSpec{kHour, 300};
        s.horizon = kHour + 199 * 300;
        // t = 0 is 06:00. A training hour, then waves at 07-11 (south-west)
        // and 16-19 (north-east). Volume 128 over 16 units puts the peak mid-wave.
        const auto training = wave(0, kHour, 128, 16, 0.0, 0.25);
        const auto morning = wave(kHour, 5 * kHour, 128, 16, 0.02, 0.25);
        const auto evening = wave(10 * kHour, 13 * kHour, 128, 16, 0.02, 0.25);
        auto base = [&] { return uniform_profile(kHour, s.horizon, 1.0 / 25); };
        for (int t : {wD, wH, sH, sI}) s.entries.push_back({t, {training, morning, base()}, {}});
        for (int t : {nA, nC, eC, eG}) s.entries.push_back({t, {training, evening, base()}, {}});
        s.entries.push_back({sJ, {training, base()}, {}});
        for (int n : {A, B, C, D, E, F, G, H, Ii, J}) s.intersections.push_back({n, true, std::nullopt});
        s.sim.density_update_interval = 21;
        s.mapping.kind = MappingKind::ByGroup;
        s.mapping.groups = {{E, F, H}, {B, D, G, Ii}, {A, J}, {C}};
        s.primitives = PrimitiveSet::grid();
        return s;
    }

    Scenario make_highway()
    {
        Scenario s;
        s.name = "highway";
        NetBuilder b;
        const auto I = NodeKind::Intersection;
        const auto X = NodeKind::EntryExit;
        const int row = 40;
        auto C = [](int k) { return 40 + 50 * k; };
        const int H1 = b.node("H1", row, C(0), I);
        const int H2 = b.node("H2", row, C(1), I);
        const int H3 = b.node("H3", row, C(2), I);
        const int H4 = b.node("H4", row, C(3), I);
        const int west = b.node("west", row, 0, X);
        const int east = b.node("east", row, C(3) + 40, X);
        const int n2 = b.node("H2_north", 0, C(1), X);
        const int s2 = b.node("H2_south", 2 * row, C(1), X);
        const int n3 = b.node("H3_north", 0, C(2), X);
        const int s3 = b.node("H3_south", 2 * row, C(2), X);
        const int n1 = b.node("H1_north", 0, C(0), X);
        const int s4 = b.node("H4_south", 2 * row, C(3), X);
        b.road(west, H1, 3);
        b.road(H1, H2, 3);
        b.road(H2, H3, 3);
        b.road(H3, H4, 3);
        b.road(H4, east, 3);
        for (auto [t, c] : std::vector<std::pair<int, int>>{{n2, H2}, {s2, H2}, {n3, H3}, {s3, H3}}) b.road(t, c, 2);
        b.road(n1, H1, 1);
        b.road(s4, H4, 1);
        s.graph = b.g;

        s.window = WindowSpec{kHour, 330};
        s.horizon = kHour + 199 * 330;
        // t = 0 is 06:00: training hour, wave from the west 07-11, from the east 16-19.
        const auto training = wave(0, kHour, 128, 16, 0.0, 0.3);
        const auto morning = wave(kHour, 5 * kHour, 128, 16, 0.03, 0.3);
        const auto evening = wave(10 * kHour, 13 * kHour, 128, 16, 0.03, 0.3);
        auto base = [&](double r) { return uniform_profile(kHour, s.horizon, r); };
        s.entries.push_back({west, {training, morning, base(1.0 / 15)}, {east}});
        s.entries.push_back({east, {training, evening, base(1.0 / 15)}, {west}});
        for (int t : {n1, n2, s2, n3, s3, s4}) s.entries.push_back({t, {training, base(1.0 / 30)}, {}});
        for (int n : {H1, H2, H3, H4}) s.intersections.push_back({n, true, std::nullopt});
        s.sim.density_update_interval = 22;
        s.mapping.kind = MappingKind::PerIntersection;
        s.primitives = PrimitiveSet::highway();
        return s;
    }

    // JSON helpers

    std::string_view kind_name(NodeKind k) { return k == NodeKind::EntryExit ? "entry_exit" : "intersection"; }

    NodeKind kind_from(const std::string& s)
    {
        if (s == "entry_exit" || s == "entry" || s == "exit") return NodeKind::EntryExit;
        if (s == "intersection") return NodeKind::Intersection;
        throw ConfigError("unknown node kind '" + s + "'");
    }

    std::string_view state_name(SignalState s)
    {
        switch (s) {
        case SignalState::Stop: return "stop";
        case SignalState::Caution: return "caution";
        case SignalState::Pass: return "pass";
        case SignalState::TurnLeft: return "turn_left";
        }
        return "?";
    }

    SignalState state_from(const std::string& s)
    {
        if (s == "stop") return SignalState::Stop;
        if (s == "caution") return SignalState::Caution;
        if (s == "pass") return SignalState::Pass;
        if (s == "turn_left") return SignalState::TurnLeft;
        throw ConfigError("unknown signal state '" + s + "'");
    }

    std::string_view role_name(PhaseRole r)
    {
        switch (r) {
        case PhaseRole::Fixed: return "fixed";
        case PhaseRole::VerticalGreen: return "vertical_green";
        case PhaseRole::HorizontalGreen: return "horizontal_green";
        }
        return "?";
    }

    PhaseRole role_from(const std::string& s)
    {
        if (s == "fixed") return PhaseRole::Fixed;
        if (s == "vertical_green") return PhaseRole::VerticalGreen;
        if (s == "horizontal_green") return PhaseRole::HorizontalGreen;
        throw ConfigError("unknown phase role '" + s + "'");
    }

    std::string_view mapping_name(MappingKind k)
    {
        switch (k) {
        case MappingKind::All: return "all";
        case MappingKind::PerIntersection: return "per_intersection";
        case MappingKind::ByGroup: return "by_group";
        }
        return "?";
    }

    MappingKind mapping_from(const std::string& s)
    {
        if (s == "all") return MappingKind::All;
        if (s == "per_intersection") return MappingKind::PerIntersection;
        if (s == "by_group") return MappingKind::ByGroup;
        throw ConfigError("unknown mapping kind '" + s + "'");
    }

    template <class T>
    T get_or(const json& j, const char* key, T fallback)
    {
        const auto it = j.find(key);
        return it == j.end() ? fallback : it->get<T>();
    }

    PhasePlan plan_from_json(const json& j)
    {
        if (j.contains("phases")) {
            std::vector<Phase> phases;
            for (const auto& p : j.at("phases")) {
                phases.push_back({state_from(p.at("vertical").get<std::string>()),
                                  state_from(p.at("horizontal").get<std::string>()), p.at("duration").get<std::int64_t>(),
                                  role_from(get_or<std::string>(p, "role", "fixed"))});
            }
            return PhasePlan(std::move(phases));
        }
        const auto green = j.at("green").get<std::int64_t>();
        const auto yellow = j.at("yellow").get<std::int64_t>();
        const auto arrow = get_or<std::int64_t>(j, "left_arrow", 0);
        if (j.contains("red") && j.at("red").get<std::int64_t>() != green + yellow + arrow) {
            throw ConfigError("plan red must equal green + yellow + left_arrow of the crossing axis");
        }
        return plan_from_table(green, yellow, arrow);
    }

    json plan_to_json(const PhasePlan& plan)
    {
        json phases = json::array();
        for (const Phase& p : plan.phases()) {
            phases.push_back({{"vertical", state_name(p.vertical)},
                              {"horizontal", state_name(p.horizontal)},
                              {"duration", p.duration},
                              {"role", role_name(p.role)}});
        }
        return {{"phases", phases}};
    }

    void read_gp(const json& j, GPConfig& gp)
    {
        gp.population_size = get_or(j, "population_size", gp.population_size);
        gp.generations = get_or(j, "generations", gp.generations);
        gp.point_mutation_rate = get_or(j, "point_mutation_rate", gp.point_mutation_rate);
        gp.subtree_mutation_rate = get_or(j, "subtree_mutation_rate", gp.subtree_mutation_rate);
        gp.crossover_rate = get_or(j, "crossover_rate", gp.crossover_rate);
        gp.init_depth = get_or(j, "init_depth", gp.init_depth);
        gp.max_depth = get_or(j, "max_depth", gp.max_depth);
        gp.tournament_size = get_or(j, "tournament_size", gp.tournament_size);
        gp.elitism = get_or(j, "elitism", gp.elitism);
        gp.controller_exchange_share = get_or(j, "controller_exchange_share", gp.controller_exchange_share);
        gp.new_tree_mutation_rate = get_or(j, "new_tree_mutation_rate", gp.new_tree_mutation_rate);
        gp.repetitions_per_eval = get_or(j, "repetitions_per_eval", gp.repetitions_per_eval);
        gp.crossover_retries = get_or(j, "crossover_retries", gp.crossover_retries);
        if (j.contains("mutation")) gp.mutation = mutation_from_name(j.at("mutation").get<std::string>());
    }

    json write_gp(const GPConfig& gp)
    {
        return {{"population_size", gp.population_size},
                {"generations", gp.generations},
                {"point_mutation_rate", gp.point_mutation_rate},
                {"subtree_mutation_rate", gp.subtree_mutation_rate},
                {"crossover_rate", gp.crossover_rate},
                {"init_depth", gp.init_depth},
                {"max_depth", gp.max_depth},
                {"tournament_size", gp.tournament_size},
                {"elitism", gp.elitism},
                {"controller_exchange_share", gp.controller_exchange_share},
                {"new_tree_mutation_rate", gp.new_tree_mutation_rate},
                {"repetitions_per_eval", gp.repetitions_per_eval},
                {"crossover_retries", gp.crossover_retries},
                {"mutation", gp.mutation == MutationMode::Point ? "point" : "subtree"}};
    }

    void read_epi(const json& j, EpiConfig& epi)
    {
        epi.threshold = get_or(j, "threshold", epi.threshold);
        epi.h = get_or(j, "h", epi.h);
        epi.l = get_or(j, "l", epi.l);
        epi.interval_T = get_or(j, "interval_T", epi.interval_T);
        epi.lambda_min = get_or(j, "lambda_min", epi.lambda_min);
        epi.lambda_max = get_or(j, "lambda_max", epi.lambda_max);
        if (j.contains("guard")) epi.guard = epi_guard_from_name(j.at("guard").get<std::string>());
        if (j.contains("forced_lambda") && !j.at("forced_lambda").is_null()) {
            epi.forced_lambda = j.at("forced_lambda").get<double>();
        }
    }

    json write_epi(const EpiConfig& epi)
    {
        json j{{"threshold", epi.threshold},   {"h", epi.h},
               {"l", epi.l},                   {"interval_T", epi.interval_T},
               {"lambda_min", epi.lambda_min}, {"lambda_max", epi.lambda_max},
               {"guard", epi.guard == EpiGuard::AsEquation ? "as_equation" : "as_prose"}};
        if (epi.forced_lambda) j["forced_lambda"] = *epi.forced_lambda;
        return j;
    }

} // namespace

std::vector<std::string> builtin_scenario_names() { return {"single_intersection", "poc_grid", "highway"}; }

Scenario builtin_scenario(std::string_view name)
{
    Scenario s;
    if (name == "single_intersection") s = make_single_intersection();
    else if (name == "poc_grid") s = make_poc_grid();
    else if (name == "highway") s = make_highway();
    else throw UnknownScenario("unknown scenario '" + std::string(name) + "'");
    s.compile();
    return s;
}

Scenario parse_scenario(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    try {
        Scenario s;
        s.name = get_or<std::string>(j, "name", "custom");
        for (const auto& n : j.at("nodes")) {
            s.graph.nodes.push_back({n.at("id").get<int>(),
                                     {n.at("row").get<int>(), n.at("col").get<int>()},
                                     kind_from(n.at("kind").get<std::string>()),
                                     get_or<std::string>(n, "name", "")});
        }
        for (const auto& r : j.at("roads")) {
            s.graph.roads.push_back({r.at("from").get<int>(), r.at("to").get<int>(), get_or(r, "bidirectional", true),
                                     get_or(r, "lanes", 1), direction_from_string(r.at("direction").get<std::string>())});
        }
        if (j.contains("intersections")) {
            for (const auto& i : j.at("intersections")) {
                IntersectionSetup setup{i.at("node").get<int>(), get_or(i, "allow_left_turn", true), std::nullopt};
                if (i.contains("plan")) setup.plan = plan_from_json(i.at("plan"));
                s.intersections.push_back(std::move(setup));
            }
        }
        if (j.contains("sim")) {
            const json& sim = j.at("sim");
            s.sim.v_max = get_or(sim, "v_max", s.sim.v_max);
            s.sim.p_random = get_or(sim, "p_random", s.sim.p_random);
            s.sim.fixed_dest_ratio = get_or(sim, "fixed_dest_ratio", s.sim.fixed_dest_ratio);
            s.sim.density_update_interval = get_or(sim, "density_update_interval", s.sim.density_update_interval);
            s.horizon = get_or(sim, "horizon_seconds", s.horizon);
        }
        // Entries are flat rows; rows sharing a node become one spec with
        // profiles in file order.
        if (j.contains("entries")) {
            for (const auto& e : j.at("entries")) {
                const int node = e.at("node").get<int>();
                auto it = std::find_if(s.entries.begin(), s.entries.end(), [&](const EntrySpec& x) { return x.node == node; });
                if (it == s.entries.end()) {
                    s.entries.push_back({node, {}, {}});
                    it = s.entries.end() - 1;
                }
                it->profiles.push_back({e.at("start").get<std::int64_t>(), e.at("end").get<std::int64_t>(),
                                        e.at("volume").get<double>(), e.at("duration").get<double>(),
                                        get_or(e, "floor_c", 0.0), get_or(e, "p_max", 1.0)});
                if (e.contains("destinations")) it->destinations = e.at("destinations").get<std::vector<int>>();
            }
        }
        if (j.contains("window") && !j.at("window").is_null()) {
            s.window = WindowSpec{j.at("window").at("length").get<std::int64_t>(), j.at("window").at("step").get<std::int64_t>()};
        }
        if (j.contains("mapping")) {
            s.mapping.kind = mapping_from(j.at("mapping").at("kind").get<std::string>());
            if (j.at("mapping").contains("groups")) {
                s.mapping.groups = j.at("mapping").at("groups").get<std::vector<std::vector<int>>>();
            }
        }
        s.reuse_seeds = get_or(j, "reuse_seeds", false);
        if (j.contains("gp")) read_gp(j.at("gp"), s.gp);
        if (j.contains("epi")) read_epi(j.at("epi"), s.epi);
        if (j.contains("primitives")) {
            const json& p = j.at("primitives");
            PrimitiveSet ps;
            for (const auto& f : p.at("functions")) ps.functions.push_back(op_from_name(f.get<std::string>()));
            for (const auto& v : p.at("variables")) ps.variables.push_back(variable_from_name(v.get<std::string>()));
            ps.const_min = get_or<std::int64_t>(p, "const_min", ps.const_min);
            ps.const_max = get_or<std::int64_t>(p, "const_max", ps.const_max);
            if (ps.const_min > ps.const_max) throw ConfigError("const_min exceeds const_max");
            s.primitives = std::move(ps);
        }
        s.compile();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    }
}

std::string serialize_scenario(const Scenario& s)
{
    json j;
    j["name"] = s.name;
    json nodes = json::array();
    for (const Node& n : s.graph.nodes) {
        nodes.push_back(
            {{"id", n.id}, {"row", n.position.row}, {"col", n.position.col}, {"kind", kind_name(n.kind)}, {"name", n.name}});
    }
    j["nodes"] = nodes;
    json roads = json::array();
    for (const Road& r : s.graph.roads) {
        roads.push_back({{"from", r.from},
                         {"to", r.to},
                         {"bidirectional", r.bidirectional},
                         {"lanes", r.lanes},
                         {"direction", to_string(r.direction)}});
    }
    j["roads"] = roads;
    json inter = json::array();
    for (const auto& i : s.intersections) {
        json x{{"node", i.node}, {"allow_left_turn", i.allow_left_turn}};
        if (i.plan) x["plan"] = plan_to_json(*i.plan);
        inter.push_back(x);
    }
    j["intersections"] = inter;
    json entries = json::array();
    for (const auto& e : s.entries) {
        for (std::size_t k = 0; k < e.profiles.size(); ++k) {
            const auto& p = e.profiles[k];
            json row{{"node", e.node},       {"start", p.start},     {"end", p.end},    {"volume", p.volume},
                     {"duration", p.duration}, {"floor_c", p.floor_c}, {"p_max", p.p_max}};
            if (k == 0 && !e.destinations.empty()) row["destinations"] = e.destinations;
            entries.push_back(row);
        }
    }
    j["entries"] = entries;
    j["sim"] = {{"v_max", s.sim.v_max},
                {"p_random", s.sim.p_random},
                {"fixed_dest_ratio", s.sim.fixed_dest_ratio},
                {"horizon_seconds", s.horizon},
                {"density_update_interval", s.sim.density_update_interval}};
    if (s.window) j["window"] = {{"length", s.window->length}, {"step", s.window->step}};
    json mapping{{"kind", mapping_name(s.mapping.kind)}};
    if (s.mapping.kind == MappingKind::ByGroup) mapping["groups"] = s.mapping.groups;
    j["mapping"] = mapping;
    j["reuse_seeds"] = s.reuse_seeds;
    j["gp"] = write_gp(s.gp);
    j["epi"] = write_epi(s.epi);
    json fns = json::array();
    for (Op op : s.primitives.functions) fns.push_back(op_name(op));
    json vars = json::array();
    for (Variable v : s.primitives.variables) vars.push_back(variable_name(v));
    j["primitives"] = {
        {"functions", fns}, {"variables", vars}, {"const_min", s.primitives.const_min}, {"const_max", s.primitives.const_max}};
    return j.dump(2) + "\n";
}

Scenario load_scenario_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

Scenario resolve_scenario(const std::string& name_or_path)
{
    const auto names = builtin_scenario_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return builtin_scenario(name_or_path);
    return load_scenario_file(name_or_path);
}

}  // namespace trafficgp
