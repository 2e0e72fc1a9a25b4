#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "trafficgp/network.hpp"
#include "trafficgp/random.hpp"
#include "trafficgp/signals.hpp"

namespace trafficgp {

enum class Behaviour : std::uint8_t { RandomWalk, FixedDestination };

struct Vehicle {
    std::int32_t id = 0;
    int link = -1;
    int lane = 0;
    int pos = 0;           // index into the lane's cells
    int junction_pos = -1;  // >= 0 while crossing the junction at `link`'s end
    int speed = 0;
    Direction direction = Direction::East;
    Behaviour behaviour = Behaviour::RandomWalk;
    std::size_t destination = 0;  // node index, fixed-destination only
    std::size_t origin = 0;
    int next_link = -1;  // chosen outgoing link at the next junction
    std::int64_t stopped_time = 0;
    int held = 0;  // consecutive seconds at the stop line with the signal open but the junction claimed

    bool in_junction() const { return junction_pos >= 0; }
};

struct EntryProfile {
    std::int64_t start = 0;
    std::int64_t end = 0;
    double volume = 0;    // V
    double duration = 1;  // T: units modelled across [start, end)
    double floor_c = 0;
    double p_max = 0;
};

struct EntrySpec {
    int node = 0;  // node id
    std::vector<EntryProfile> profiles;
    std::vector<int> destinations;  // node ids; empty means any other exit
};

struct SimConfig {
    int v_max = 4;
    double p_random = 0.1;
    double fixed_dest_ratio = 0.7;
    std::int64_t density_update_interval = 1;
};

struct DelayLedger {
    std::int64_t total_system_delay = 0;
    std::int64_t completed_vehicles = 0;
    std::int64_t active_vehicles = 0;
    std::int64_t inserted_vehicles = 0;
};

struct Measures {
    double total_system_delay = 0;
    double average_delay = 0;
};

Measures measure(const DelayLedger& ledger);

double poisson_pmf(std::int64_t k, double mu);

// Time index into the profile's pmf after quantizing `t` to the density
// update interval and scaling [start, end) onto [0, duration).
std::int64_t profile_index(std::int64_t t, const EntryProfile& profile, std::int64_t interval = 1);
double entry_probability(std::int64_t t, const EntryProfile& profile, std::int64_t interval = 1);

// A uniform arrival rate expressed as a profile.
EntryProfile uniform_profile(std::int64_t start, std::int64_t end, double rate);

inline bool insertion_accepted(double draw, double probability, bool cell_free)
{
    return cell_free && draw < probability;
}

class World;

// Receives the controller decision points of a running world.
class SignalHook {
public:
    virtual ~SignalHook() = default;
    // Called right after the plan of `control` started a green run.
    virtual void decide(World& world, std::size_t control) = 0;
    virtual void after_step(World& world) { (void)world; }
};

class World {
public:
    World(const NetworkLayout& layout, SignalSystem signals, std::vector<EntrySpec> entries, SimConfig config,
          Rng rng, std::int64_t start_time = 0);

    // One second: signals, arrivals, vehicle update, data collection.
    void step(SignalHook* hook = nullptr);
    void run_until(std::int64_t end_time, SignalHook* hook = nullptr);

    std::int64_t time() const { return time_; }
    const DelayLedger& ledger() const { return ledger_; }
    const std::vector<Vehicle>& vehicles() const { return vehicles_; }
    const CellGrid& grid() const { return grid_; }
    const NetworkLayout& layout() const { return *layout_; }
    SignalSystem& signals() { return signals_; }
    const SignalSystem& signals() const { return signals_; }
    const SimConfig& config() const { return config_; }
    Rng& rng() { return rng_; }

    // Places a vehicle at the start of an entry lane if the probability
    // draw and the cell allow it.
    std::optional<Vehicle> try_insert(int link, int lane, double probability);

    // Test access: place a vehicle directly.
    Vehicle& place_vehicle(int link, int lane, int pos, int speed, Behaviour behaviour, std::size_t destination);

    // Next outgoing link for a vehicle heading into link.to, or -1 at exits.
    // With `enterable_only`, only turns it could start right now are
    // considered and the current choice is kept when there are none.
    int next_road(const Vehicle& v, bool current_lane_only, bool enterable_only = false);

private:
    struct Ahead {
        int vehicle_gap;  // distance to the nearest occupied cell, large if none
        int stop_gap;     // distance to the nearest stop line obstacle
    };

    Ahead look_ahead(const Vehicle& v) const;
    int track_cell(const Vehicle& v, int d) const;  // -1 beyond reach, -2 leaves network
    int cell_of(const Vehicle& v) const;
    bool lane_allows(const Link& link, int lane, const Turn& turn, bool left_ok) const;
    bool must_stop(const Vehicle& v) const;
    // No other movement claims the junction path and the exit lane is not backed up to its first cell.
    bool may_enter(const Vehicle& v) const;
    bool may_enter(const Turn& turn) const;
    void release(const Turn& turn, std::size_t from, std::size_t to);
    void update_vehicle(std::size_t index);
    void move_vehicle(Vehicle& v);
    void arrivals();
    void collect();

    const NetworkLayout* layout_;
    SignalSystem signals_;
    std::vector<EntrySpec> entries_;
    std::vector<std::size_t> entry_nodes_;
    std::vector<std::vector<std::size_t>> entry_destinations_;
    std::vector<std::size_t> exit_nodes_;
    SimConfig config_;
    Rng rng_;
    std::int64_t time_;
    CellGrid grid_;
    // Junction cells held by vehicles crossing them: the turn they follow and how many.
    std::vector<const Turn*> claim_turn_;
    std::vector<int> claim_count_;
    std::vector<Vehicle> vehicles_;
    std::vector<char> removed_;
    DelayLedger ledger_;
    std::int32_t next_id_ = 2;
    struct Merge {
        int link, lane, pos;
    };
    std::vector<Merge> merges_;
};

}  // namespace trafficgp
