#include "trafficgp/signals.hpp"

#include <algorithm>
#include <limits>

namespace trafficgp {

PhasePlan::PhasePlan(std::vector<Phase> phases)
    : phases_(std::move(phases))
{
    if (phases_.empty()) throw ConfigError("phase plan needs at least one phase");
    for (const Phase& p : phases_) {
        if (p.duration < 0) throw ConfigError("phase durations must be non-negative");
        const bool v_go = p.vertical != SignalState::Stop;
        const bool h_go = p.horizontal != SignalState::Stop;
        if (v_go && h_go) throw ConfigError("phase lets both axes move");
    }
    if (cycle_length() <= 0) throw ConfigError("cycle length must be positive");
    skip_empty();
}

std::int64_t PhasePlan::cycle_length() const
{
    std::int64_t total = 0;
    for (const Phase& p : phases_) total += p.duration;
    return total;
}

std::int64_t PhasePlan::clock() const
{
    std::int64_t t = elapsed_;
    for (std::size_t i = 0; i < index_; ++i) t += phases_[i].duration;
    return t;
}

std::int64_t PhasePlan::green(bool vertical) const
{
    std::int64_t total = 0;
    for (const Phase& p : phases_) {
        if (p.role == (vertical ? PhaseRole::VerticalGreen : PhaseRole::HorizontalGreen)) total += p.duration;
    }
    return total;
}

std::int64_t PhasePlan::red(bool vertical) const
{
    std::int64_t total = 0;
    for (const Phase& p : phases_) {
        if ((vertical ? p.vertical : p.horizontal) == SignalState::Stop) total += p.duration;
    }
    return total;
}

void PhasePlan::skip_empty()
{
    for (std::size_t guard = 0; guard < phases_.size() && elapsed_ >= phases_[index_].duration; ++guard) {
        index_ = (index_ + 1) % phases_.size();
        elapsed_ = 0;
    }
}

void PhasePlan::tick()
{
    ++elapsed_;
    skip_empty();
}

void PhasePlan::apply_delta(std::int64_t delta)
{
    auto adjust = [](std::int64_t value, std::int64_t d) {
        std::int64_t out = 0;
        if (__builtin_add_overflow(value, d, &out)) out = d > 0 ? std::numeric_limits<std::int64_t>::max() : 0;
        return std::clamp<std::int64_t>(out, 0, kMaxPhase);
    };
    const std::int64_t neg = delta == std::numeric_limits<std::int64_t>::min()
                                 ? std::numeric_limits<std::int64_t>::max()
                                 : -delta;
    for (Phase& p : phases_) {
        if (p.role == PhaseRole::VerticalGreen) p.duration = adjust(p.duration, delta);
        else if (p.role == PhaseRole::HorizontalGreen) p.duration = adjust(p.duration, neg);
    }
    if (cycle_length() <= 0) {
        // Both greens at zero with no fixed phase left: keep the plan alive.
        for (Phase& p : phases_) {
            if (p.role != PhaseRole::Fixed) p.duration = 1;
        }
    }
    skip_empty();
}

PhasePlan plan_from_table(std::int64_t green, std::int64_t yellow, std::int64_t left_arrow)
{
    using S = SignalState;
    std::vector<Phase> phases;
    // Vertical starts red; horizontal runs its green first.
    phases.push_back({S::Stop, S::Pass, green, PhaseRole::HorizontalGreen});
    if (left_arrow > 0) phases.push_back({S::Stop, S::TurnLeft, left_arrow, PhaseRole::Fixed});
    phases.push_back({S::Stop, S::Caution, yellow, PhaseRole::Fixed});
    phases.push_back({S::Pass, S::Stop, green, PhaseRole::VerticalGreen});
    if (left_arrow > 0) phases.push_back({S::TurnLeft, S::Stop, left_arrow, PhaseRole::Fixed});
    phases.push_back({S::Caution, S::Stop, yellow, PhaseRole::Fixed});
    return PhasePlan(std::move(phases));
}

PhasePlan default_plan(bool allow_left_turn)
{
    return allow_left_turn ? plan_from_table(25, 5, 5) : plan_from_table(27, 6);
}

void apply_controller_output(PhasePlan& plan, std::int64_t delta)
{
    plan.apply_delta(delta);
}

SignalSystem::SignalSystem(const NetworkLayout& layout, std::vector<PhasePlan> plans, std::vector<bool> allow_left)
    : layout_(&layout)
{
    const auto nodes = layout.intersections();
    if (plans.size() != nodes.size() || allow_left.size() != nodes.size()) {
        throw ConfigError("one plan per intersection required");
    }
    control_index_.assign(layout.graph.nodes.size(), -1);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        IntersectionControl ic;
        ic.node = nodes[k];
        ic.plan = std::move(plans[k]);
        ic.allow_left_turn = allow_left[k];
        for (Direction side : kAllDirections) {
            const int in = layout.inbound_from(nodes[k], side);
            if (in < 0) continue;
            const Link& link = layout.links[static_cast<std::size_t>(in)];
            Signal s;
            s.link = in;
            s.road = link.road;
            s.intersection = nodes[k];
            s.side = side;
            for (const auto& lane : link.lane_cells) s.covered_cells.push_back(lane.back());
            if (link.signal != static_cast<int>(signals_.size())) throw ConfigError("signal numbering mismatch");
            ic.signal[index_of(side)] = static_cast<int>(signals_.size());
            signals_.push_back(std::move(s));
        }
        control_index_[nodes[k]] = static_cast<int>(k);
        intersections_.push_back(std::move(ic));
    }
    refresh_states();
}

void SignalSystem::refresh_states()
{
    for (const IntersectionControl& ic : intersections_) {
        for (Direction side : kAllDirections) {
            const int s = ic.signal[index_of(side)];
            if (s >= 0) signals_[static_cast<std::size_t>(s)].state = ic.plan.state_for(side);
        }
    }
}

std::vector<std::size_t> SignalSystem::tick()
{
    std::vector<std::size_t> started;
    for (std::size_t k = 0; k < intersections_.size(); ++k) {
        PhasePlan& plan = intersections_[k].plan;
        const SignalState v0 = plan.vertical_state();
        const SignalState h0 = plan.horizontal_state();
        plan.tick();
        const bool v_start = v0 == SignalState::Stop && plan.vertical_state() != SignalState::Stop;
        const bool h_start = h0 == SignalState::Stop && plan.horizontal_state() != SignalState::Stop;
        if (v_start || h_start) started.push_back(k);
    }
    refresh_states();
    return started;
}

int SignalSystem::counter(int node, Direction side) const
{
    if (node < 0) return 0;
    const int control = control_index_[static_cast<std::size_t>(node)];
    if (control < 0) return 0;
    const int s = intersections_[static_cast<std::size_t>(control)].signal[index_of(side)];
    return s < 0 ? 0 : signals_[static_cast<std::size_t>(s)].queue_counter;
}

int SignalSystem::walk(std::size_t node, Direction dir, int hops) const
{
    int cur = static_cast<int>(node);
    for (int h = 0; h < hops; ++h) {
        cur = layout_->neighbour[static_cast<std::size_t>(cur)][index_of(dir)];
        if (cur < 0 || layout_->is_exit(static_cast<std::size_t>(cur))) return -1;
    }
    return cur;
}

TrafficContext SignalSystem::read_context(std::size_t control) const
{
    const std::size_t node = intersections_[control].node;
    const int me = static_cast<int>(node);
    TrafficContext ctx;
    ctx.ver_queue = counter(me, Direction::North) + counter(me, Direction::South);
    ctx.hor_queue = counter(me, Direction::West) + counter(me, Direction::East);
    // Southbound traffic arrives on the north side, and so on.
    ctx.top1 = counter(walk(node, Direction::North, 1), Direction::North);
    ctx.top2 = counter(walk(node, Direction::North, 2), Direction::North);
    ctx.bottom1 = counter(walk(node, Direction::South, 1), Direction::South);
    ctx.bottom2 = counter(walk(node, Direction::South, 2), Direction::South);
    ctx.left1 = counter(walk(node, Direction::West, 1), Direction::West);
    ctx.left2 = counter(walk(node, Direction::West, 2), Direction::West);
    ctx.right1 = counter(walk(node, Direction::East, 1), Direction::East);
    ctx.right2 = counter(walk(node, Direction::East, 2), Direction::East);
    return ctx;
}

std::vector<std::int32_t> SignalSystem::signal_matrix(const CellGrid& grid) const
{
    std::vector<std::int32_t> m(grid.cells.size(), 0);
    for (const Signal& s : signals_) {
        for (int c : s.covered_cells) m[static_cast<std::size_t>(c)] = static_cast<std::int32_t>(s.state);
    }
    return m;
}

}  // namespace trafficgp
