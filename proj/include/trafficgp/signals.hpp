#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "trafficgp/network.hpp"

namespace trafficgp {

enum class SignalState : std::uint8_t { Stop = 1, Caution = 2, Pass = 3, TurnLeft = 4 };

// Role of a phase with respect to controller adjustments.
enum class PhaseRole : std::uint8_t { Fixed, VerticalGreen, HorizontalGreen };

struct Phase {
    SignalState vertical = SignalState::Stop;
    SignalState horizontal = SignalState::Stop;
    std::int64_t duration = 0;
    PhaseRole role = PhaseRole::Fixed;

    bool operator==(const Phase&) const = default;
};

// Combined plan of one intersection: both axes advance on one clock.
class PhasePlan {
public:
    PhasePlan() = default;
    explicit PhasePlan(std::vector<Phase> phases);

    const std::vector<Phase>& phases() const { return phases_; }
    std::int64_t cycle_length() const;
    std::int64_t clock() const;  // seconds into the current cycle
    std::size_t phase_index() const { return index_; }

    SignalState vertical_state() const { return phases_[index_].vertical; }
    SignalState horizontal_state() const { return phases_[index_].horizontal; }
    SignalState state_for(Direction side) const
    {
        return is_vertical(side) ? vertical_state() : horizontal_state();
    }

    // Per-axis totals, as the light of that axis sees them.
    std::int64_t green(bool vertical) const;
    std::int64_t red(bool vertical) const;

    // Advances one second, skipping phases of zero length.
    void tick();

    // Adds delta to the vertical green and removes it from the horizontal
    // green. Each duration is clamped to [0, kMaxPhase].
    void apply_delta(std::int64_t delta);

    bool operator==(const PhasePlan&) const = default;

    static constexpr std::int64_t kMaxPhase = 86400;

private:
    void skip_empty();

    std::vector<Phase> phases_;
    std::size_t index_ = 0;
    std::int64_t elapsed_ = 0;
};

// Red/green/yellow (and optional left arrow) for one axis, the other axis
// offset so its red covers this axis' green, arrow and yellow.
PhasePlan plan_from_table(std::int64_t green, std::int64_t yellow, std::int64_t left_arrow = 0);
PhasePlan default_plan(bool allow_left_turn);

void apply_controller_output(PhasePlan& plan, std::int64_t delta);

struct Signal {
    std::vector<int> covered_cells;  // last cell of each inbound lane
    int link = -1;
    int road = -1;
    std::size_t intersection = 0;  // node index
    Direction side = Direction::North;
    SignalState state = SignalState::Stop;
    int queue_counter = 0;
};

struct IntersectionControl {
    std::size_t node = 0;
    std::array<int, 4> signal{-1, -1, -1, -1};  // by side
    PhasePlan plan;
    bool allow_left_turn = true;
    int controller = -1;
};

// Sensed inputs of a controller.
struct TrafficContext {
    std::int64_t ver_queue = 0;
    std::int64_t hor_queue = 0;
    std::int64_t top1 = 0, bottom1 = 0, left1 = 0, right1 = 0;
    std::int64_t top2 = 0, bottom2 = 0, left2 = 0, right2 = 0;

    bool operator==(const TrafficContext&) const = default;
};

class SignalSystem {
public:
    SignalSystem() = default;
    // One plan and left-turn flag per intersection node (indexed like
    // layout.intersections()).
    SignalSystem(const NetworkLayout& layout, std::vector<PhasePlan> plans, std::vector<bool> allow_left);

    const std::vector<Signal>& signals() const { return signals_; }
    std::vector<Signal>& signals() { return signals_; }
    const std::vector<IntersectionControl>& intersections() const { return intersections_; }
    std::vector<IntersectionControl>& intersections() { return intersections_; }
    // Position in intersections() of a node, or -1.
    int control_of(std::size_t node) const { return control_index_[node]; }

    // Advances every plan one second. Returns the intersections whose
    // vertical or horizontal light just left Stop.
    std::vector<std::size_t> tick();
    void refresh_states();

    TrafficContext read_context(std::size_t control) const;

    // The signal matrix: grid-shaped, 0 where no signal, otherwise state.
    std::vector<std::int32_t> signal_matrix(const CellGrid& grid) const;

private:
    int counter(int node, Direction side) const;
    int walk(std::size_t node, Direction dir, int hops) const;

    const NetworkLayout* layout_ = nullptr;
    std::vector<Signal> signals_;
    std::vector<IntersectionControl> intersections_;
    std::vector<int> control_index_;
};

}  // namespace trafficgp
