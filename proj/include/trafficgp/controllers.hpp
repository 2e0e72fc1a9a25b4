#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "trafficgp/random.hpp"
#include "trafficgp/signals.hpp"

namespace trafficgp {

enum class Op : std::uint8_t { IntConst, Var, Add, Sub, Mul, ProtectedDiv, And, Or, Not, Eq, Gt, Lt, If3 };
enum class ValueType : std::uint8_t { Int, Bool };

enum class Variable : std::uint8_t {
    VerQueue,
    HorQueue,
    Top1,
    Bottom1,
    Left1,
    Right1,
    Top2,
    Bottom2,
    Left2,
    Right2,
};
inline constexpr int kVariableCount = 10;

class TypeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

int arity(Op op);
ValueType result_type(Op op);
ValueType child_type(Op op, int child);
std::string_view op_name(Op op);
Op op_from_name(std::string_view name);
std::string_view variable_name(Variable v);
Variable variable_from_name(std::string_view name);
std::int64_t read_variable(const TrafficContext& ctx, Variable v);

struct ControllerNode {
    Op op = Op::IntConst;
    std::int64_t value = 0;  // constant, or variable index for Var

    bool operator==(const ControllerNode&) const = default;
};

// A typed expression tree stored in pre-order.
class ControllerTree {
public:
    ControllerTree() = default;
    // Throws TypeError unless the sequence is a complete, well-typed
    // Int-rooted tree.
    explicit ControllerTree(std::vector<ControllerNode> nodes);

    static ControllerTree constant(std::int64_t value);

    const std::vector<ControllerNode>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    const ControllerNode& operator[](std::size_t i) const { return nodes_[i]; }

    std::size_t subtree_end(std::size_t i) const { return end_[i]; }
    int depth() const;                       // root counts as 1
    int depth_at(std::size_t i) const { return level_[i]; }
    int height_at(std::size_t i) const;      // levels of the subtree rooted at i
    ValueType type_at(std::size_t i) const { return type_[i]; }
    std::size_t if3_count() const { return if3_total_; }
    // Number of If3 nodes strictly before position i.
    std::size_t if3_before(std::size_t i) const { return if3_prefix_[i]; }
    std::vector<std::size_t> children(std::size_t i) const;

    bool operator==(const ControllerTree& other) const { return nodes_ == other.nodes_; }

private:
    void index();

    std::vector<ControllerNode> nodes_;
    std::vector<std::size_t> end_;
    std::vector<int> level_;
    std::vector<ValueType> type_;
    std::vector<std::size_t> if3_prefix_;
    std::size_t if3_total_ = 0;
};

struct ActivationVector {
    std::vector<double> rates;
    double threshold = 0.5;

    bool active(std::size_t k) const { return rates[k] >= threshold; }
    bool operator==(const ActivationVector&) const = default;
};

struct Controller {
    ControllerTree tree;
    ActivationVector activations;

    bool operator==(const Controller&) const = default;
};

std::int64_t evaluate(const ControllerTree& tree, const ActivationVector& activations, const TrafficContext& ctx);
inline std::int64_t evaluate(const Controller& c, const TrafficContext& ctx)
{
    return evaluate(c.tree, c.activations, ctx);
}

// Replaces every If3 by its else branch.
ControllerTree strip_conditionals(const ControllerTree& tree);

Controller longest_queue_controller();
// The worked example with epiVect [0.95, 0.4].
Controller controller_zero();

// Pre-order splice: subtree at `at` of `host` replaced by the subtree at
// `from` of `donor`; activation rates travel with their If3 nodes.
Controller splice(const Controller& host, std::size_t at, const Controller& donor, std::size_t from);

std::string to_expression(const ControllerTree& tree, const ActivationVector& activations);
std::string to_expression(const ControllerTree& tree);
std::string controller_to_source(const Controller& c, int index = 0);

ControllerTree parse_expression(std::string_view text);
Controller parse_controller_source(std::string_view text);
std::vector<Controller> parse_controller_file(std::string_view text);

struct PrimitiveSet {
    std::vector<Op> functions;
    std::vector<Variable> variables;
    std::int64_t const_min = -5;
    std::int64_t const_max = 5;

    bool has(Op op) const;
    // Smallest subtree depth able to produce `type`, or -1 if none.
    int min_depth(ValueType type) const;
    int min_depth(Op op) const;

    static PrimitiveSet single_intersection();
    static PrimitiveSet grid();
    static PrimitiveSet highway();
};

// Random subtree of `type` with depth at most `max_depth`.
std::vector<ControllerNode> random_subtree(const PrimitiveSet& ps, ValueType type, int max_depth, bool full, Rng& rng);
ControllerTree random_tree(const PrimitiveSet& ps, int max_depth, bool full, Rng& rng);
ActivationVector random_activations(std::size_t count, double threshold, Rng& rng);
Controller random_controller(const PrimitiveSet& ps, int max_depth, bool full, double threshold, Rng& rng);

// Checks types, arity, depth limit and activation vector shape.
bool well_formed(const Controller& c, int max_depth);

}  // namespace trafficgp
