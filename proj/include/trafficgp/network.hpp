#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trafficgp/common.hpp"

namespace trafficgp {

enum class NodeKind : std::uint8_t { EntryExit, Intersection };

struct Node {
    int id = 0;
    CellPos position;
    NodeKind kind = NodeKind::Intersection;
    std::string name;
};

// A road between two nodes. `lanes` counts lanes per travel direction; a
// bidirectional road carries `lanes` lanes each way on adjacent strips.
struct Road {
    int from = 0;
    int to = 0;
    bool bidirectional = true;
    int lanes = 1;
    Direction direction = Direction::East;  // travel direction from -> to
};

struct RoadGraph {
    std::vector<Node> nodes;
    std::vector<Road> roads;

    // Index into `nodes`, or nullopt.
    std::optional<std::size_t> find(int node_id) const;
    const Node& node(int node_id) const;
};

struct RejectedEdge {
    int from = 0;
    int to = 0;
    std::string reason;
};

struct ValidationReport {
    std::vector<int> removed_nodes;
    std::vector<RejectedEdge> rejected_edges;

    bool clean() const { return removed_nodes.empty() && rejected_edges.empty(); }
};

// Drops malformed roads and every node that cannot reach an exit, repeating
// until nothing changes. Mutates `graph` and reports what was removed.
ValidationReport validate_network(RoadGraph& graph);

inline constexpr std::int32_t kLandCell = 0;
inline constexpr std::int32_t kRoadCell = 1;

// Integer network matrix. Cell values: 0 land, 1 road, >1 vehicle id.
struct CellGrid {
    int width = 0;
    int height = 0;
    // Graph coordinate of grid cell (0, 0).
    int row_origin = 0;
    int col_origin = 0;
    std::vector<std::int32_t> cells;

    bool contains(CellPos graph_pos) const;
    int index(CellPos graph_pos) const;
    CellPos position(int index) const;  // graph coordinates
    std::int32_t at(CellPos graph_pos) const { return cells[static_cast<std::size_t>(index(graph_pos))]; }
    std::size_t count(std::int32_t value) const;
};

enum class Movement : std::uint8_t { Straight, Left, Right };

struct Turn {
    int out_link = -1;
    int out_lane = 0;
    Movement movement = Movement::Straight;
    std::vector<int> path;  // junction cells traversed, flat grid indices
};

// One travel direction of a road.
struct Link {
    int road = -1;
    std::size_t from = 0;  // node indices
    std::size_t to = 0;
    Direction direction = Direction::East;
    int lanes = 1;
    int length = 0;
    // lane 0 is the leftmost lane (next to the centre line).
    std::vector<std::vector<int>> lane_cells;
    std::vector<std::vector<Turn>> turns;  // per lane; empty when `to` is an exit
    int signal = -1;                        // approach signal at `to`, if any

    const Turn* turn_to(int lane, int out_link) const;
};

struct JunctionBlock {
    int row_min = 0, row_max = -1;
    int col_min = 0, col_max = -1;
    int area() const { return (row_max - row_min + 1) * (col_max - col_min + 1); }
};

// Compiled form of a validated graph: grid, lane geometry and junction paths.
// Immutable once built; shared read-only between simulation runs.
struct NetworkLayout {
    RoadGraph graph;
    CellGrid grid;
    std::vector<Link> links;
    std::vector<std::optional<JunctionBlock>> blocks;  // per node
    std::vector<std::vector<int>> outgoing;            // per node, link ids
    std::vector<std::vector<int>> incoming;
    // Adjacent node (by geometry) in each direction, per node.
    std::vector<std::array<int, 4>> neighbour;

    std::vector<std::size_t> intersections() const;
    std::vector<std::size_t> exits() const;
    bool is_exit(std::size_t node) const { return graph.nodes[node].kind == NodeKind::EntryExit; }
    // Inbound link arriving at `node` from `side`, or -1.
    int inbound_from(std::size_t node, Direction side) const;
};

// Rasterizes a graph that passed validate_network.
NetworkLayout build_layout(const RoadGraph& graph);
CellGrid build_grid(const RoadGraph& graph);

}  // namespace trafficgp
