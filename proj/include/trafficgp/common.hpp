#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace trafficgp {

enum class Direction : std::uint8_t { North = 0, South = 1, East = 2, West = 3 };

inline constexpr std::array<Direction, 4> kAllDirections{Direction::North, Direction::South,
                                                         Direction::East, Direction::West};

constexpr std::size_t index_of(Direction d) { return static_cast<std::size_t>(d); }

constexpr Direction opposite(Direction d)
{
    switch (d) {
    case Direction::North: return Direction::South;
    case Direction::South: return Direction::North;
    case Direction::East: return Direction::West;
    case Direction::West: return Direction::East;
    }
    return d;
}

constexpr bool is_vertical(Direction d) { return d == Direction::North || d == Direction::South; }

// Direction reached by turning left while travelling along `d`.
constexpr Direction left_of(Direction d)
{
    switch (d) {
    case Direction::North: return Direction::West;
    case Direction::South: return Direction::East;
    case Direction::East: return Direction::North;
    case Direction::West: return Direction::South;
    }
    return d;
}

constexpr Direction right_of(Direction d) { return opposite(left_of(d)); }

std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

// Grid coordinates in cells. Rows grow southwards, columns grow eastwards.
struct CellPos {
    int row = 0;
    int col = 0;
    auto operator<=>(const CellPos&) const = default;
};

constexpr CellPos step(CellPos p, Direction d, int n = 1)
{
    switch (d) {
    case Direction::North: return {p.row - n, p.col};
    case Direction::South: return {p.row + n, p.col};
    case Direction::East: return {p.row, p.col + n};
    case Direction::West: return {p.row, p.col - n};
    }
    return p;
}

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OverlapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace trafficgp
