#include "trafficgp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace trafficgp {

Measures measure(const DelayLedger& ledger)
{
    Measures m;
    m.total_system_delay = static_cast<double>(ledger.total_system_delay);
    const std::int64_t n = ledger.completed_vehicles + ledger.active_vehicles;
    m.average_delay = n > 0 ? m.total_system_delay / static_cast<double>(n) : 0.0;
    return m;
}

double poisson_pmf(std::int64_t k, double mu)
{
    if (k < 0) return 0.0;
    if (mu <= 0.0) return k == 0 ? 1.0 : 0.0;
    const double kd = static_cast<double>(k);
    return std::exp(kd * std::log(mu) - mu - std::lgamma(kd + 1.0));
}

std::int64_t profile_index(std::int64_t t, const EntryProfile& profile, std::int64_t interval)
{
    const std::int64_t span = profile.end - profile.start;
    if (span <= 0) return 0;
    if (interval < 1) interval = 1;
    const std::int64_t rebased = t - profile.start;
    const std::int64_t quantized = rebased - rebased % interval;
    return static_cast<std::int64_t>(std::floor(static_cast<double>(quantized) * profile.duration /
                                                static_cast<double>(span)));
}

double entry_probability(std::int64_t t, const EntryProfile& profile, std::int64_t interval)
{
    const double mu = profile.duration > 0 ? profile.volume / profile.duration : 0.0;
    const double pmf = profile.volume > 0 ? poisson_pmf(profile_index(t, profile, interval), mu) : 0.0;
    return std::min(pmf + profile.floor_c, profile.p_max);
}

EntryProfile uniform_profile(std::int64_t start, std::int64_t end, double rate)
{
    EntryProfile p;
    p.start = start;
    p.end = end;
    p.volume = 0;
    p.duration = 1;
    p.floor_c = rate;
    p.p_max = rate;
    return p;
}

namespace {
    constexpr int kFar = 1 << 20;
    constexpr int kDetourWait = 5;
}

World::World(const NetworkLayout& layout, SignalSystem signals, std::vector<EntrySpec> entries, SimConfig config,
             Rng rng, std::int64_t start_time)
    : layout_(&layout)
    , signals_(std::move(signals))
    , entries_(std::move(entries))
    , config_(config)
    , rng_(rng)
    , time_(start_time)
    , grid_(layout.grid)
    , claim_turn_(layout.grid.cells.size(), nullptr)
    , claim_count_(layout.grid.cells.size(), 0)
{
    if (config_.v_max < 1) throw ConfigError("v_max must be at least 1");
    if (config_.p_random < 0 || config_.p_random > 1) throw ConfigError("p_random must lie in [0, 1]");
    if (config_.fixed_dest_ratio < 0 || config_.fixed_dest_ratio > 1) {
        throw ConfigError("fixed_dest_ratio must lie in [0, 1]");
    }
    for (std::size_t n : layout.exits()) {
        if (!layout.incoming[n].empty()) exit_nodes_.push_back(n);
    }
    for (const EntrySpec& e : entries_) {
        const auto idx = layout.graph.find(e.node);
        if (!idx || !layout.is_exit(*idx)) {
            throw ConfigError("entry " + std::to_string(e.node) + " is not an entry/exit node");
        }
        for (const EntryProfile& p : e.profiles) {
            if (p.start >= p.end) throw ConfigError("entry profile needs start < end");
            if (p.floor_c < 0 || p.floor_c > p.p_max || p.p_max > 1) {
                throw ConfigError("entry profile needs 0 <= c <= p_max <= 1");
            }
        }
        entry_nodes_.push_back(*idx);
        std::vector<std::size_t> dests;
        if (e.destinations.empty()) {
            for (std::size_t x : exit_nodes_) {
                if (x != *idx) dests.push_back(x);
            }
        } else {
            for (int id : e.destinations) {
                const auto d = layout.graph.find(id);
                if (!d || !layout.is_exit(*d)) throw ConfigError("destination " + std::to_string(id) + " is not an exit");
                dests.push_back(*d);
            }
        }
        entry_destinations_.push_back(std::move(dests));
    }
}

bool World::lane_allows(const Link& link, int lane, const Turn& turn, bool left_ok) const
{
    switch (turn.movement) {
    case Movement::Straight: return true;
    case Movement::Left: return left_ok && lane == 0;
    case Movement::Right: return lane == link.lanes - 1;
    }
    return false;
}

int World::next_road(const Vehicle& v, bool current_lane_only, bool enterable_only)
{
    const Link& link = layout_->links[static_cast<std::size_t>(v.link)];
    if (layout_->is_exit(link.to) || link.turns.empty()) return -1;
    const int control = signals_.control_of(link.to);
    const bool left_ok = control < 0 || signals_.intersections()[static_cast<std::size_t>(control)].allow_left_turn;
    const auto& turns = link.turns[static_cast<std::size_t>(v.lane)];
    if (turns.empty()) return -1;

    const bool lane_bound = current_lane_only || v.behaviour == Behaviour::RandomWalk;
    std::vector<const Turn*> candidates;
    for (const Turn& t : turns) {
        if (t.movement == Movement::Left && !left_ok) continue;
        if (lane_bound && !lane_allows(link, v.lane, t, left_ok)) continue;
        if (enterable_only && (t.out_link == v.next_link || !may_enter(t))) continue;
        candidates.push_back(&t);
    }
    if (enterable_only && candidates.empty()) return v.next_link;
    if (candidates.empty()) {
        for (const Turn& t : turns) {
            if (t.movement == Movement::Left && !left_ok) continue;
            candidates.push_back(&t);
        }
    }
    if (candidates.empty()) {
        for (const Turn& t : turns) candidates.push_back(&t);
    }

    if (v.behaviour == Behaviour::FixedDestination) {
        const CellPos f = layout_->graph.nodes[v.destination].position;
        std::int64_t best = -1;
        std::vector<const Turn*> ties;
        for (const Turn* t : candidates) {
            const CellPos n = layout_->graph.nodes[layout_->links[static_cast<std::size_t>(t->out_link)].to].position;
            const std::int64_t dr = f.row - n.row;
            const std::int64_t dc = f.col - n.col;
            const std::int64_t d2 = dr * dr + dc * dc;
            if (best < 0 || d2 < best) {
                best = d2;
                ties.assign(1, t);
            } else if (d2 == best) {
                ties.push_back(t);
            }
        }
        candidates = std::move(ties);
    }
    return candidates[uniform_index(rng_, candidates.size())]->out_link;
}

std::optional<Vehicle> World::try_insert(int link_id, int lane, double probability)
{
    const Link& link = layout_->links[static_cast<std::size_t>(link_id)];
    const int cell = link.lane_cells[static_cast<std::size_t>(lane)].front();
    const double draw = uniform01(rng_);
    if (!insertion_accepted(draw, probability, grid_.cells[static_cast<std::size_t>(cell)] == kRoadCell)) {
        return std::nullopt;
    }
    Vehicle v;
    v.id = next_id_++;
    v.link = link_id;
    v.lane = lane;
    v.pos = 0;
    v.speed = config_.v_max;
    v.direction = link.direction;
    v.origin = link.from;

    const std::size_t entry_slot = static_cast<std::size_t>(
        std::find(entry_nodes_.begin(), entry_nodes_.end(), link.from) - entry_nodes_.begin());
    const std::vector<std::size_t>* dests = nullptr;
    std::vector<std::size_t> fallback;
    if (entry_slot < entry_nodes_.size()) {
        dests = &entry_destinations_[entry_slot];
    } else {
        for (std::size_t x : exit_nodes_) {
            if (x != link.from) fallback.push_back(x);
        }
        dests = &fallback;
    }
    if (!dests->empty() && uniform01(rng_) < config_.fixed_dest_ratio) {
        v.behaviour = Behaviour::FixedDestination;
        v.destination = (*dests)[uniform_index(rng_, dests->size())];
    }
    v.next_link = next_road(v, false);
    grid_.cells[static_cast<std::size_t>(cell)] = v.id;
    vehicles_.push_back(v);
    removed_.push_back(0);
    ++ledger_.inserted_vehicles;
    ++ledger_.active_vehicles;
    return v;
}

Vehicle& World::place_vehicle(int link_id, int lane, int pos, int speed, Behaviour behaviour, std::size_t destination)
{
    const Link& link = layout_->links[static_cast<std::size_t>(link_id)];
    const int cell = link.lane_cells[static_cast<std::size_t>(lane)][static_cast<std::size_t>(pos)];
    if (grid_.cells[static_cast<std::size_t>(cell)] != kRoadCell) throw ConfigError("cell already occupied");
    Vehicle v;
    v.id = next_id_++;
    v.link = link_id;
    v.lane = lane;
    v.pos = pos;
    v.speed = speed;
    v.direction = link.direction;
    v.behaviour = behaviour;
    v.destination = destination;
    v.origin = link.from;
    v.next_link = next_road(v, false);
    grid_.cells[static_cast<std::size_t>(cell)] = v.id;
    vehicles_.push_back(v);
    removed_.push_back(0);
    ++ledger_.inserted_vehicles;
    ++ledger_.active_vehicles;
    return vehicles_.back();
}

int World::track_cell(const Vehicle& v, int d) const
{
    const Link& link = layout_->links[static_cast<std::size_t>(v.link)];
    int j = 0;
    if (!v.in_junction()) {
        const int p = v.pos + d;
        if (p < link.length) return link.lane_cells[static_cast<std::size_t>(v.lane)][static_cast<std::size_t>(p)];
        if (layout_->is_exit(link.to)) return -2;
        j = p - link.length;
    } else {
        j = v.junction_pos + d;
    }
    const Turn* turn = link.turn_to(v.lane, v.next_link);
    if (!turn) return -1;
    const int path = static_cast<int>(turn->path.size());
    if (j < path) return turn->path[static_cast<std::size_t>(j)];
    const int q = j - path;
    const Link& out = layout_->links[static_cast<std::size_t>(turn->out_link)];
    if (q < out.length) return out.lane_cells[static_cast<std::size_t>(turn->out_lane)][static_cast<std::size_t>(q)];
    return -1;
}

int World::cell_of(const Vehicle& v) const
{
    const Link& link = layout_->links[static_cast<std::size_t>(v.link)];
    if (!v.in_junction()) return link.lane_cells[static_cast<std::size_t>(v.lane)][static_cast<std::size_t>(v.pos)];
    return link.turn_to(v.lane, v.next_link)->path[static_cast<std::size_t>(v.junction_pos)];
}

bool World::must_stop(const Vehicle& v) const
{
    const Link& link = layout_->links[static_cast<std::size_t>(v.link)];
    if (v.in_junction() || layout_->is_exit(link.to)) return false;
    const Turn* turn = link.turn_to(v.lane, v.next_link);
    if (!turn) return true;
    const int control = signals_.control_of(link.to);
    const bool left_ok = control < 0 || signals_.intersections()[static_cast<std::size_t>(control)].allow_left_turn;
    // Wrong lane for the chosen turn: the junction is closed to this vehicle.
    if (!lane_allows(link, v.lane, *turn, left_ok) && !(turn->movement == Movement::Left && !left_ok)) return true;
    if (link.signal < 0) return false;
    switch (signals_.signals()[static_cast<std::size_t>(link.signal)].state) {
    case SignalState::Stop: return true;
    case SignalState::TurnLeft: return turn->movement != Movement::Left || v.lane != 0;
    case SignalState::Caution:
    case SignalState::Pass: return false;
    }
    return true;
}

bool World::may_enter(const Vehicle& v) const
{
    const Link& link = layout_->links[static_cast<std::size_t>(v.link)];
    const Turn* turn = link.turn_to(v.lane, v.next_link);
    return turn && may_enter(*turn);
}

bool World::may_enter(const Turn& t) const
{
    const Turn* turn = &t;
    for (int c : turn->path) {
        const auto k = static_cast<std::size_t>(c);
        if (claim_count_[k] > 0 && claim_turn_[k] != turn) return false;
    }
    const Link& out = layout_->links[static_cast<std::size_t>(turn->out_link)];
    const int first = out.lane_cells[static_cast<std::size_t>(turn->out_lane)].front();
    const std::int32_t id = grid_.cells[static_cast<std::size_t>(first)];
    if (id <= kRoadCell) return true;
    // A moving vehicle there is about to make room; a stopped one is spillback.
    // vehicles_ stays sorted by id.
    const auto it = std::lower_bound(vehicles_.begin(), vehicles_.end(), id,
                                     [](const Vehicle& a, std::int32_t b) { return a.id < b; });
    return it != vehicles_.end() && it->id == id && it->speed > 0;
}

void World::release(const Turn& turn, std::size_t from, std::size_t to)
{
    for (std::size_t k = from; k < to && k < turn.path.size(); ++k) {
        const auto c = static_cast<std::size_t>(turn.path[k]);
        if (--claim_count_[c] == 0) claim_turn_[c] = nullptr;
    }
}

World::Ahead World::look_ahead(const Vehicle& v) const
{
    Ahead a{kFar, kFar};
    const int reach = config_.v_max + 1;
    for (int d = 1; d <= reach; ++d) {
        const int cell = track_cell(v, d);
        if (cell == -2) break;
        if (cell == -1 || grid_.cells[static_cast<std::size_t>(cell)] > kRoadCell) {
            a.vehicle_gap = d;
            break;
        }
    }
    const Link& link = layout_->links[static_cast<std::size_t>(v.link)];
    const bool near_junction = !v.in_junction() && !layout_->is_exit(link.to) && link.length - v.pos <= reach;
    if (must_stop(v) || (near_junction && !may_enter(v))) a.stop_gap = link.length - v.pos;
    return a;
}

void World::move_vehicle(Vehicle& v)
{
    if (v.speed == 0) return;
    const Link& link = layout_->links[static_cast<std::size_t>(v.link)];
    grid_.cells[static_cast<std::size_t>(cell_of(v))] = kRoadCell;

    if (!v.in_junction() && layout_->is_exit(link.to) && v.pos + v.speed >= link.length - 1) {
        removed_[static_cast<std::size_t>(&v - vehicles_.data())] = 1;
        ++ledger_.completed_vehicles;
        --ledger_.active_vehicles;
        return;
    }

    int j = 0;
    if (!v.in_junction()) {
        const int p = v.pos + v.speed;
        if (p < link.length) {
            v.pos = p;
            grid_.cells[static_cast<std::size_t>(cell_of(v))] = v.id;
            return;
        }
        j = p - link.length;
    } else {
        j = v.junction_pos + v.speed;
    }
    const Turn* turn = link.turn_to(v.lane, v.next_link);
    const Link& out = layout_->links[static_cast<std::size_t>(turn->out_link)];
    v.direction = out.direction;
    const int path = static_cast<int>(turn->path.size());
    if (!v.in_junction() && j < path) {
        for (int k = j; k < path; ++k) {
            const auto c = static_cast<std::size_t>(turn->path[static_cast<std::size_t>(k)]);
            claim_turn_[c] = turn;
            ++claim_count_[c];
        }
    } else if (v.in_junction()) {
        release(*turn, static_cast<std::size_t>(v.junction_pos), static_cast<std::size_t>(std::min(j, path)));
    }
    if (j < path) {
        v.junction_pos = j;
    } else {
        v.link = turn->out_link;
        v.lane = turn->out_lane;
        v.pos = j - path;
        v.junction_pos = -1;
        v.next_link = next_road(v, false);
    }
    grid_.cells[static_cast<std::size_t>(cell_of(v))] = v.id;
}

void World::update_vehicle(std::size_t index)
{
    Vehicle& v = vehicles_[index];
    const Link& link = layout_->links[static_cast<std::size_t>(v.link)];
    const bool at_junction = !layout_->is_exit(link.to);

    if (at_junction && !v.in_junction()) {
        if (v.next_link < 0) {
            v.next_link = next_road(v, false);
        } else if (v.pos == link.length - 1) {
            const Turn* turn = link.turn_to(v.lane, v.next_link);
            const int control = signals_.control_of(link.to);
            const bool left_ok =
                control < 0 || signals_.intersections()[static_cast<std::size_t>(control)].allow_left_turn;
            // The lane change did not happen in time: pick again from this lane.
            if (!turn || !lane_allows(link, v.lane, *turn, left_ok)) v.next_link = next_road(v, true);
        }
    }

    // A queue head held at an open signal by a claimed junction or a full
    // exit lane tries another turn from its lane; rings of full links
    // otherwise lock for good.
    if (at_junction && !v.in_junction() && v.pos == link.length - 1 && v.next_link >= 0 && !must_stop(v) &&
        !may_enter(v)) {
        if (++v.held >= kDetourWait) {
            v.next_link = next_road(v, true, true);
            v.held = 0;
        }
    } else {
        v.held = 0;
    }

    // (1) acceleration
    const Ahead ahead = look_ahead(v);
    if (v.speed < config_.v_max && ahead.vehicle_gap > v.speed + 1 && ahead.stop_gap > v.speed + 1) ++v.speed;
    // (2) break
    const int j = std::min(ahead.vehicle_gap, ahead.stop_gap);
    if (j <= v.speed) v.speed = j - 1;

    // (3) change of lane
    if (at_junction && !v.in_junction() && link.lanes > 1 && v.next_link >= 0) {
        const Turn* turn = link.turn_to(v.lane, v.next_link);
        int target = v.lane;
        if (turn && turn->movement == Movement::Left) target = 0;
        if (turn && turn->movement == Movement::Right) target = link.lanes - 1;
        if (target != v.lane) {
            const int new_lane = v.lane + (target > v.lane ? 1 : -1);
            const auto& cells = link.lane_cells[static_cast<std::size_t>(new_lane)];
            bool clear = v.pos + v.speed + 1 < link.length;
            for (int p = std::max(0, v.pos - v.speed); clear && p <= v.pos + v.speed + 1; ++p) {
                if (grid_.cells[static_cast<std::size_t>(cells[static_cast<std::size_t>(p)])] != kRoadCell) clear = false;
            }
            if (clear) {
                grid_.cells[static_cast<std::size_t>(cell_of(v))] = kRoadCell;
                v.lane = new_lane;
                grid_.cells[static_cast<std::size_t>(cell_of(v))] = v.id;
                merges_.push_back({v.link, v.lane, v.pos});
            }
        }
    }

    // (4) emergency break
    if (!v.in_junction()) {
        for (const Merge& m : merges_) {
            const int k = m.pos - v.pos;
            if (m.link == v.link && m.lane == v.lane && k > 0 && k <= v.speed / 2) {
                v.speed = 0;
                break;
            }
        }
    }

    // (5) change of road happens during motion; (6) randomization
    if (v.speed > 0 && config_.p_random > 0 && bernoulli(rng_, config_.p_random)) --v.speed;

    // (7) car motion
    move_vehicle(v);
    if (!removed_[index] && v.speed == 0) {
        ++v.stopped_time;
        ++ledger_.total_system_delay;
    }
}

void World::arrivals()
{
    for (std::size_t e = 0; e < entries_.size(); ++e) {
        const EntryProfile* active = nullptr;
        for (const EntryProfile& p : entries_[e].profiles) {
            if (time_ >= p.start && time_ < p.end) {
                active = &p;
                break;
            }
        }
        if (!active) continue;
        const double prob = entry_probability(time_, *active, config_.density_update_interval);
        for (int link : layout_->outgoing[entry_nodes_[e]]) {
            const int lanes = layout_->links[static_cast<std::size_t>(link)].lanes;
            for (int lane = 0; lane < lanes; ++lane) try_insert(link, lane, prob);
        }
    }
}

void World::collect()
{
    for (Signal& s : signals_.signals()) s.queue_counter = 0;
    for (const Vehicle& v : vehicles_) {
        if (v.in_junction() || v.speed != 0) continue;
        const int s = layout_->links[static_cast<std::size_t>(v.link)].signal;
        if (s >= 0) ++signals_.signals()[static_cast<std::size_t>(s)].queue_counter;
    }
}

void World::step(SignalHook* hook)
{
    const auto started = signals_.tick();
    if (hook && !started.empty()) {
        for (std::size_t c : started) hook->decide(*this, c);
        signals_.refresh_states();
    }

    arrivals();

    std::vector<std::tuple<int, int, std::size_t>> order;
    order.reserve(vehicles_.size());
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        const Vehicle& v = vehicles_[i];
        const int progress = v.in_junction()
                                 ? layout_->links[static_cast<std::size_t>(v.link)].length + v.junction_pos
                                 : v.pos;
        order.emplace_back(v.link, -progress, i);
    }
    std::sort(order.begin(), order.end());
    merges_.clear();
    for (const auto& entry : order) update_vehicle(std::get<2>(entry));

    std::size_t keep = 0;
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        if (!removed_[i]) vehicles_[keep++] = vehicles_[i];
    }
    vehicles_.resize(keep);
    removed_.assign(keep, 0);

    collect();
    ++time_;
    if (hook) hook->after_step(*this);
}

void World::run_until(std::int64_t end_time, SignalHook* hook)
{
    while (time_ < end_time) step(hook);
}

}  // namespace trafficgp
