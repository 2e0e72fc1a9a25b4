#include "trafficgp/network.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <set>

namespace trafficgp {

std::string_view to_string(Direction d)
{
    switch (d) {
    case Direction::North: return "north";
    case Direction::South: return "south";
    case Direction::East: return "east";
    case Direction::West: return "west";
    }
    return "?";
}

Direction direction_from_string(std::string_view s)
{
    if (s == "north" || s == "N") return Direction::North;
    if (s == "south" || s == "S") return Direction::South;
    if (s == "east" || s == "E") return Direction::East;
    if (s == "west" || s == "W") return Direction::West;
    throw ConfigError("unknown direction '" + std::string(s) + "'");
}

std::optional<std::size_t> RoadGraph::find(int node_id) const
{
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id == node_id) return i;
    }
    return std::nullopt;
}

const Node& RoadGraph::node(int node_id) const
{
    auto idx = find(node_id);
    if (!idx) throw ConfigError("unknown node id " + std::to_string(node_id));
    return nodes[*idx];
}

namespace {

    std::optional<std::string> edge_defect(const RoadGraph& graph, const Road& road)
    {
        if (road.from == road.to) return "self-loop";
        auto a = graph.find(road.from);
        auto b = graph.find(road.to);
        if (!a || !b) return "unknown endpoint";
        if (road.lanes < 1) return "lane count must be positive";
        const CellPos pa = graph.nodes[*a].position;
        const CellPos pb = graph.nodes[*b].position;
        Direction actual{};
        if (pa.row == pb.row) {
            actual = pb.col > pa.col ? Direction::East : Direction::West;
        } else if (pa.col == pb.col) {
            actual = pb.row > pa.row ? Direction::South : Direction::North;
        } else {
            return "not axis aligned";
        }
        if (actual != road.direction) return "direction does not match node positions";
        return std::nullopt;
    }

} // namespace

ValidationReport validate_network(RoadGraph& graph)
{
    ValidationReport report;
    for (;;) {
        bool changed = false;

        std::vector<Road> kept;
        kept.reserve(graph.roads.size());
        for (const Road& road : graph.roads) {
            if (auto defect = edge_defect(graph, road)) {
                report.rejected_edges.push_back({road.from, road.to, *defect});
                changed = true;
            } else {
                kept.push_back(road);
            }
        }
        graph.roads = std::move(kept);

        const std::size_t n = graph.nodes.size();
        std::vector<std::vector<std::size_t>> reverse(n);  // to -> from
        std::vector<std::set<std::size_t>> out_nodes(n);
        std::vector<std::vector<std::pair<std::size_t, std::size_t>>> in_edges(n);  // (from, to)
        std::vector<int> degree(n, 0);
        for (const Road& road : graph.roads) {
            const std::size_t a = *graph.find(road.from);
            const std::size_t b = *graph.find(road.to);
            ++degree[a];
            ++degree[b];
            reverse[b].push_back(a);
            out_nodes[a].insert(b);
            in_edges[b].push_back({a, b});
            if (road.bidirectional) {
                reverse[a].push_back(b);
                out_nodes[b].insert(a);
                in_edges[a].push_back({b, a});
            }
        }

        std::vector<bool> reaches_exit(n, false);
        std::deque<std::size_t> frontier;
        for (std::size_t i = 0; i < n; ++i) {
            if (graph.nodes[i].kind == NodeKind::EntryExit && degree[i] > 0) {
                reaches_exit[i] = true;
                frontier.push_back(i);
            }
        }
        while (!frontier.empty()) {
            const std::size_t cur = frontier.front();
            frontier.pop_front();
            for (std::size_t prev : reverse[cur]) {
                if (!reaches_exit[prev]) {
                    reaches_exit[prev] = true;
                    frontier.push_back(prev);
                }
            }
        }

        std::vector<bool> remove(n, false);
        for (std::size_t i = 0; i < n; ++i) {
            const Node& node = graph.nodes[i];
            if (degree[i] == 0 || !reaches_exit[i]) {
                remove[i] = true;
            } else if (node.kind == NodeKind::Intersection) {
                if (degree[i] < 2) remove[i] = true;
                // Every approach needs somewhere to go other than back.
                for (auto [from, to] : in_edges[i]) {
                    const auto& outs = out_nodes[to];
                    if (std::none_of(outs.begin(), outs.end(), [from](std::size_t o) { return o != from; })) {
                        remove[i] = true;
                    }
                }
            }
        }

        if (std::find(remove.begin(), remove.end(), true) != remove.end()) {
            std::vector<Node> nodes;
            std::set<int> gone;
            for (std::size_t i = 0; i < n; ++i) {
                if (remove[i]) {
                    report.removed_nodes.push_back(graph.nodes[i].id);
                    gone.insert(graph.nodes[i].id);
                } else {
                    nodes.push_back(graph.nodes[i]);
                }
            }
            graph.nodes = std::move(nodes);
            std::erase_if(graph.roads, [&](const Road& r) { return gone.count(r.from) || gone.count(r.to); });
            changed = true;
        }

        if (!changed) break;
    }
    return report;
}

bool CellGrid::contains(CellPos p) const
{
    const int r = p.row - row_origin;
    const int c = p.col - col_origin;
    return r >= 0 && r < height && c >= 0 && c < width;
}

int CellGrid::index(CellPos p) const
{
    return (p.row - row_origin) * width + (p.col - col_origin);
}

CellPos CellGrid::position(int idx) const
{
    return {idx / width + row_origin, idx % width + col_origin};
}

std::size_t CellGrid::count(std::int32_t value) const
{
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), value));
}

const Turn* Link::turn_to(int lane, int out_link) const
{
    if (lane < 0 || static_cast<std::size_t>(lane) >= turns.size()) return nullptr;
    for (const Turn& t : turns[static_cast<std::size_t>(lane)]) {
        if (t.out_link == out_link) return &t;
    }
    return nullptr;
}

std::vector<std::size_t> NetworkLayout::intersections() const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        if (graph.nodes[i].kind == NodeKind::Intersection) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> NetworkLayout::exits() const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        if (graph.nodes[i].kind == NodeKind::EntryExit) out.push_back(i);
    }
    return out;
}

int NetworkLayout::inbound_from(std::size_t node, Direction side) const
{
    for (int id : incoming[node]) {
        if (links[static_cast<std::size_t>(id)].direction == opposite(side)) return id;
    }
    return -1;
}

namespace {

    // Cross-axis coordinate (row for horizontal travel, column for vertical)
    // of lane `k` of a link leaving a node at `origin`.
    int lane_offset(CellPos origin, Direction d, int k)
    {
        switch (d) {
        case Direction::East: return origin.row + k;
        case Direction::West: return origin.row - 1 - k;
        case Direction::South: return origin.col - 1 - k;
        case Direction::North: return origin.col + k;
        }
        return 0;
    }

    // First cell of a link along its axis, just past the origin node.
    int axis_start(const NetworkLayout& net, std::size_t node, Direction d)
    {
        const CellPos p = net.graph.nodes[node].position;
        const auto& block = net.blocks[node];
        switch (d) {
        case Direction::East: return block ? block->col_max + 1 : p.col;
        case Direction::West: return block ? block->col_min - 1 : p.col;
        case Direction::South: return block ? block->row_max + 1 : p.row;
        case Direction::North: return block ? block->row_min - 1 : p.row;
        }
        return 0;
    }

    // Last cell of a link along its axis, just before the destination node.
    int axis_end(const NetworkLayout& net, std::size_t node, Direction d)
    {
        const CellPos p = net.graph.nodes[node].position;
        const auto& block = net.blocks[node];
        switch (d) {
        case Direction::East: return block ? block->col_min - 1 : p.col;
        case Direction::West: return block ? block->col_max + 1 : p.col;
        case Direction::South: return block ? block->row_min - 1 : p.row;
        case Direction::North: return block ? block->row_max + 1 : p.row;
        }
        return 0;
    }

    std::vector<CellPos> junction_path(CellPos entry, Direction in_dir, CellPos exit)
    {
        std::vector<CellPos> path{entry};
        CellPos cur = entry;
        auto along = [&](CellPos p) { return is_vertical(in_dir) ? p.row : p.col; };
        while (along(cur) != along(exit)) {
            cur = step(cur, in_dir);
            path.push_back(cur);
        }
        while (cur != exit) {
            if (is_vertical(in_dir)) {
                cur = step(cur, exit.col > cur.col ? Direction::East : Direction::West);
            } else {
                cur = step(cur, exit.row > cur.row ? Direction::South : Direction::North);
            }
            path.push_back(cur);
        }
        return path;
    }

} // namespace

NetworkLayout build_layout(const RoadGraph& graph)
{
    NetworkLayout net;
    net.graph = graph;
    const std::size_t n = graph.nodes.size();
    net.outgoing.resize(n);
    net.incoming.resize(n);
    net.blocks.resize(n);
    net.neighbour.assign(n, {-1, -1, -1, -1});

    for (std::size_t r = 0; r < graph.roads.size(); ++r) {
        const Road& road = graph.roads[r];
        const auto a = graph.find(road.from);
        const auto b = graph.find(road.to);
        if (!a || !b || road.from == road.to) throw ConfigError("graph must pass validate_network before build");
        auto add = [&](std::size_t from, std::size_t to, Direction d) {
            Link link;
            link.road = static_cast<int>(r);
            link.from = from;
            link.to = to;
            link.direction = d;
            link.lanes = road.lanes;
            const int id = static_cast<int>(net.links.size());
            net.links.push_back(std::move(link));
            net.outgoing[from].push_back(id);
            net.incoming[to].push_back(id);
        };
        add(*a, *b, road.direction);
        if (road.bidirectional) add(*b, *a, opposite(road.direction));
        net.neighbour[*a][index_of(road.direction)] = static_cast<int>(*b);
        net.neighbour[*b][index_of(opposite(road.direction))] = static_cast<int>(*a);
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (graph.nodes[i].kind != NodeKind::Intersection) continue;
        std::array<int, 4> width{0, 0, 0, 0};
        auto widen = [&](int link_id) {
            const Link& l = net.links[static_cast<std::size_t>(link_id)];
            width[index_of(l.direction)] = std::max(width[index_of(l.direction)], l.lanes);
        };
        for (int id : net.outgoing[i]) widen(id);
        for (int id : net.incoming[i]) widen(id);
        const CellPos p = graph.nodes[i].position;
        JunctionBlock block;
        block.row_min = p.row - width[index_of(Direction::West)];
        block.row_max = p.row + width[index_of(Direction::East)] - 1;
        block.col_min = p.col - width[index_of(Direction::South)];
        block.col_max = p.col + width[index_of(Direction::North)] - 1;
        if (block.row_max < block.row_min || block.col_max < block.col_min) {
            throw ConfigError("intersection " + std::to_string(graph.nodes[i].id) +
                              " needs roads on both axes");
        }
        net.blocks[i] = block;
    }

    std::vector<std::vector<std::vector<CellPos>>> lane_positions(net.links.size());
    int row_min = std::numeric_limits<int>::max(), row_max = std::numeric_limits<int>::min();
    int col_min = row_min, col_max = row_max;
    auto extend = [&](CellPos p) {
        row_min = std::min(row_min, p.row);
        row_max = std::max(row_max, p.row);
        col_min = std::min(col_min, p.col);
        col_max = std::max(col_max, p.col);
    };
    for (const Node& node : graph.nodes) extend(node.position);

    for (std::size_t id = 0; id < net.links.size(); ++id) {
        Link& link = net.links[id];
        const int start = axis_start(net, link.from, link.direction);
        const int end = axis_end(net, link.to, link.direction);
        const int sign = (link.direction == Direction::East || link.direction == Direction::South) ? 1 : -1;
        link.length = (end - start) * sign + 1;
        if (link.length < 1) {
            throw ConfigError("road " + std::to_string(graph.nodes[link.from].id) + "->" +
                              std::to_string(graph.nodes[link.to].id) + " is too short for its junctions");
        }
        const CellPos origin = graph.nodes[link.from].position;
        lane_positions[id].resize(static_cast<std::size_t>(link.lanes));
        for (int k = 0; k < link.lanes; ++k) {
            const int cross = lane_offset(origin, link.direction, k);
            auto& cells = lane_positions[id][static_cast<std::size_t>(k)];
            for (int s = 0; s < link.length; ++s) {
                const int a = start + sign * s;
                const CellPos p = is_vertical(link.direction) ? CellPos{a, cross} : CellPos{cross, a};
                cells.push_back(p);
                extend(p);
            }
        }
    }
    for (const auto& block : net.blocks) {
        if (!block) continue;
        extend({block->row_min, block->col_min});
        extend({block->row_max, block->col_max});
    }
    if (row_min > row_max) {
        row_min = row_max = col_min = col_max = 0;
    }

    CellGrid& grid = net.grid;
    grid.row_origin = row_min - 1;
    grid.col_origin = col_min - 1;
    grid.height = row_max - row_min + 3;
    grid.width = col_max - col_min + 3;
    grid.cells.assign(static_cast<std::size_t>(grid.width) * static_cast<std::size_t>(grid.height), kLandCell);

    // Owner per cell: -1 free, road index, or -2 - node for junction blocks.
    std::vector<int> owner(grid.cells.size(), -1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& block = net.blocks[i];
        if (!block) continue;
        for (int r = block->row_min; r <= block->row_max; ++r) {
            for (int c = block->col_min; c <= block->col_max; ++c) {
                const auto idx = static_cast<std::size_t>(grid.index({r, c}));
                if (owner[idx] != -1) {
                    throw OverlapError("junction of node " + std::to_string(graph.nodes[i].id) +
                                       " overlaps another junction");
                }
                owner[idx] = -2 - static_cast<int>(i);
                grid.cells[idx] = kRoadCell;
            }
        }
    }
    for (std::size_t id = 0; id < net.links.size(); ++id) {
        Link& link = net.links[id];
        link.lane_cells.resize(static_cast<std::size_t>(link.lanes));
        for (int k = 0; k < link.lanes; ++k) {
            for (CellPos p : lane_positions[id][static_cast<std::size_t>(k)]) {
                const auto idx = static_cast<std::size_t>(grid.index(p));
                if (owner[idx] != -1 && owner[idx] != link.road) {
                    const Road& road = graph.roads[static_cast<std::size_t>(link.road)];
                    throw OverlapError("road " + std::to_string(road.from) + "->" + std::to_string(road.to) +
                                       " overlaps another road or junction at (" + std::to_string(p.row) +
                                       ", " + std::to_string(p.col) + ")");
                }
                owner[idx] = link.road;
                grid.cells[idx] = kRoadCell;
                link.lane_cells[static_cast<std::size_t>(k)].push_back(static_cast<int>(idx));
            }
        }
    }

    for (std::size_t id = 0; id < net.links.size(); ++id) {
        Link& link = net.links[id];
        if (graph.nodes[link.to].kind != NodeKind::Intersection) continue;
        link.turns.resize(static_cast<std::size_t>(link.lanes));
        for (int out_id : net.outgoing[link.to]) {
            const Link& out = net.links[static_cast<std::size_t>(out_id)];
            if (out.to == link.from || out.direction == opposite(link.direction)) continue;
            Movement movement = Movement::Straight;
            if (out.direction == left_of(link.direction)) movement = Movement::Left;
            else if (out.direction == right_of(link.direction)) movement = Movement::Right;
            for (int k = 0; k < link.lanes; ++k) {
                int out_lane = 0;
                switch (movement) {
                case Movement::Straight: out_lane = std::min(k, out.lanes - 1); break;
                case Movement::Left: out_lane = 0; break;
                case Movement::Right: out_lane = out.lanes - 1; break;
                }
                const CellPos last = lane_positions[id][static_cast<std::size_t>(k)].back();
                const CellPos first_out = lane_positions[static_cast<std::size_t>(out_id)][static_cast<std::size_t>(out_lane)].front();
                const auto cells = junction_path(step(last, link.direction), link.direction,
                                                 step(first_out, opposite(out.direction)));
                Turn turn;
                turn.out_link = out_id;
                turn.out_lane = out_lane;
                turn.movement = movement;
                for (CellPos p : cells) turn.path.push_back(grid.index(p));
                link.turns[static_cast<std::size_t>(k)].push_back(std::move(turn));
            }
        }
    }

    // Signals are numbered per intersection (node order), sides N, S, E, W.
    int signal = 0;
    for (std::size_t i : net.intersections()) {
        for (Direction side : kAllDirections) {
            const int in = net.inbound_from(i, side);
            if (in >= 0) net.links[static_cast<std::size_t>(in)].signal = signal++;
        }
    }
    return net;
}

CellGrid build_grid(const RoadGraph& graph)
{
    return build_layout(graph).grid;
}

} // namespace trafficgp
