#include "trafficgp/controllers.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <limits>
#include <memory>

namespace trafficgp {

namespace {

    constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
    constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();

    std::int64_t sat_add(std::int64_t a, std::int64_t b)
    {
        std::int64_t r = 0;
        if (__builtin_add_overflow(a, b, &r)) return b > 0 ? kMax : kMin;
        return r;
    }

    std::int64_t sat_sub(std::int64_t a, std::int64_t b)
    {
        std::int64_t r = 0;
        if (__builtin_sub_overflow(a, b, &r)) return b < 0 ? kMax : kMin;
        return r;
    }

    std::int64_t sat_mul(std::int64_t a, std::int64_t b)
    {
        std::int64_t r = 0;
        if (__builtin_mul_overflow(a, b, &r)) return ((a < 0) != (b < 0)) ? kMin : kMax;
        return r;
    }

    std::int64_t protected_div(std::int64_t a, std::int64_t b)
    {
        if (b == 0) return 1;
        if (a == kMin && b == -1) return kMax;
        return a / b;
    }

    struct VariableNames {
        Variable v;
        std::string_view name;
        std::string_view alias;
    };

    constexpr std::array<VariableNames, kVariableCount> kVariableNames{{
        {Variable::VerQueue, "verQueue", "vQueue"},
        {Variable::HorQueue, "horQueue", "hQueue"},
        {Variable::Top1, "firstTopNeighbourQueue", "1stTopNeighbourQueue"},
        {Variable::Bottom1, "firstBottomNeighbourQueue", "1stBottomNeighbourQueue"},
        {Variable::Left1, "firstLeftNeighbourQueue", "1stLeftNeighbourQueue"},
        {Variable::Right1, "firstRightNeighbourQueue", "1stRightNeighbourQueue"},
        {Variable::Top2, "secondTopNeighbourQueue", "2ndTopNeighbourQueue"},
        {Variable::Bottom2, "secondBottomNeighbourQueue", "2ndBottomNeighbourQueue"},
        {Variable::Left2, "secondLeftNeighbourQueue", "2ndLeftNeighbourQueue"},
        {Variable::Right2, "secondRightNeighbourQueue", "2ndRightNeighbourQueue"},
    }};

    std::string format_real(double x)
    {
        std::array<char, 64> buf{};
        auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
        std::string s(buf.data(), res.ptr);
        if (s.find_first_of(".e") == std::string::npos && s.find("inf") == std::string::npos &&
            s.find("nan") == std::string::npos) {
            s += ".0";
        }
        return s;
    }

} // namespace

int arity(Op op)
{
    switch (op) {
    case Op::IntConst:
    case Op::Var: return 0;
    case Op::Not: return 1;
    case Op::If3: return 3;
    default: return 2;
    }
}

ValueType result_type(Op op)
{
    switch (op) {
    case Op::And:
    case Op::Or:
    case Op::Not:
    case Op::Eq:
    case Op::Gt:
    case Op::Lt: return ValueType::Bool;
    default: return ValueType::Int;
    }
}

ValueType child_type(Op op, int child)
{
    switch (op) {
    case Op::And:
    case Op::Or:
    case Op::Not: return ValueType::Bool;
    case Op::If3: return child == 0 ? ValueType::Bool : ValueType::Int;
    default: return ValueType::Int;
    }
}

std::string_view op_name(Op op)
{
    switch (op) {
    case Op::IntConst: return "Const";
    case Op::Var: return "Var";
    case Op::Add: return "Add";
    case Op::Sub: return "Sub";
    case Op::Mul: return "Mul";
    case Op::ProtectedDiv: return "Div";
    case Op::And: return "And";
    case Op::Or: return "Or";
    case Op::Not: return "Not";
    case Op::Eq: return "Eq";
    case Op::Gt: return "Gt";
    case Op::Lt: return "Lt";
    case Op::If3: return "If3";
    }
    return "?";
}

Op op_from_name(std::string_view name)
{
    static constexpr std::array<Op, 11> functions{Op::Add, Op::Sub, Op::Mul, Op::ProtectedDiv, Op::And, Op::Or,
                                                  Op::Not, Op::Eq,  Op::Gt,  Op::Lt,           Op::If3};
    for (Op op : functions) {
        if (op_name(op) == name) return op;
    }
    if (name == "ProtectedDiv") return Op::ProtectedDiv;
    throw ConfigError("unknown function '" + std::string(name) + "'");
}

std::string_view variable_name(Variable v)
{
    return kVariableNames[static_cast<std::size_t>(v)].name;
}

Variable variable_from_name(std::string_view name)
{
    for (const auto& entry : kVariableNames) {
        if (entry.name == name || entry.alias == name) return entry.v;
    }
    throw ConfigError("unknown variable '" + std::string(name) + "'");
}

std::int64_t read_variable(const TrafficContext& ctx, Variable v)
{
    switch (v) {
    case Variable::VerQueue: return ctx.ver_queue;
    case Variable::HorQueue: return ctx.hor_queue;
    case Variable::Top1: return ctx.top1;
    case Variable::Bottom1: return ctx.bottom1;
    case Variable::Left1: return ctx.left1;
    case Variable::Right1: return ctx.right1;
    case Variable::Top2: return ctx.top2;
    case Variable::Bottom2: return ctx.bottom2;
    case Variable::Left2: return ctx.left2;
    case Variable::Right2: return ctx.right2;
    }
    return 0;
}

ControllerTree::ControllerTree(std::vector<ControllerNode> nodes)
    : nodes_(std::move(nodes))
{
    index();
}

ControllerTree ControllerTree::constant(std::int64_t value)
{
    return ControllerTree({ControllerNode{Op::IntConst, value}});
}

void ControllerTree::index()
{
    const std::size_t n = nodes_.size();
    if (n == 0) throw TypeError("empty tree");
    end_.assign(n, 0);
    level_.assign(n, 0);
    type_.assign(n, ValueType::Int);
    if3_prefix_.assign(n + 1, 0);

    // Explicit stack of (node, next child to expect) to avoid deep recursion.
    struct Frame {
        std::size_t node;
        int next;
    };
    std::vector<Frame> stack;
    std::size_t i = 0;
    auto open = [&](ValueType expected, int level) {
        if (i >= n) throw TypeError("tree ends early");
        const ControllerNode& node = nodes_[i];
        if (node.op == Op::Var && (node.value < 0 || node.value >= kVariableCount)) {
            throw TypeError("variable index out of range");
        }
        if (static_cast<std::uint8_t>(node.op) > static_cast<std::uint8_t>(Op::If3)) throw TypeError("bad op");
        if (result_type(node.op) != expected) {
            throw TypeError(std::string("node ") + std::string(op_name(node.op)) + " has the wrong type");
        }
        type_[i] = expected;
        level_[i] = level;
        if3_prefix_[i + 1] = if3_prefix_[i] + (node.op == Op::If3 ? 1 : 0);
        stack.push_back({i, 0});
        ++i;
    };
    open(ValueType::Int, 1);
    while (!stack.empty()) {
        Frame& top = stack.back();
        const Op op = nodes_[top.node].op;
        if (top.next < arity(op)) {
            const int child = top.next++;
            open(child_type(op, child), level_[top.node] + 1);
        } else {
            end_[top.node] = i;
            stack.pop_back();
        }
    }
    if (i != n) throw TypeError("trailing nodes after a complete tree");
    if3_total_ = if3_prefix_[n];
}

int ControllerTree::depth() const
{
    return nodes_.empty() ? 0 : *std::max_element(level_.begin(), level_.end());
}

int ControllerTree::height_at(std::size_t i) const
{
    int deepest = level_[i];
    for (std::size_t k = i; k < end_[i]; ++k) deepest = std::max(deepest, level_[k]);
    return deepest - level_[i] + 1;
}

std::vector<std::size_t> ControllerTree::children(std::size_t i) const
{
    std::vector<std::size_t> out;
    std::size_t c = i + 1;
    for (int k = 0; k < arity(nodes_[i].op); ++k) {
        out.push_back(c);
        c = end_[c];
    }
    return out;
}

namespace {

    std::int64_t eval_at(const ControllerTree& t, const ActivationVector& a, const TrafficContext& ctx, std::size_t i)
    {
        const ControllerNode& node = t[i];
        const std::size_t c1 = i + 1;
        switch (node.op) {
        case Op::IntConst: return node.value;
        case Op::Var: return read_variable(ctx, static_cast<Variable>(node.value));
        case Op::Not: return eval_at(t, a, ctx, c1) == 0 ? 1 : 0;
        case Op::If3: {
            const std::size_t then_branch = t.subtree_end(c1);
            const std::size_t else_branch = t.subtree_end(then_branch);
            if (a.active(t.if3_before(i)) && eval_at(t, a, ctx, c1) != 0) return eval_at(t, a, ctx, then_branch);
            return eval_at(t, a, ctx, else_branch);
        }
        default: break;
        }
        const std::size_t c2 = t.subtree_end(c1);
        const std::int64_t x = eval_at(t, a, ctx, c1);
        switch (node.op) {
        case Op::And: return (x != 0 && eval_at(t, a, ctx, c2) != 0) ? 1 : 0;
        case Op::Or: return (x != 0 || eval_at(t, a, ctx, c2) != 0) ? 1 : 0;
        default: break;
        }
        const std::int64_t y = eval_at(t, a, ctx, c2);
        switch (node.op) {
        case Op::Add: return sat_add(x, y);
        case Op::Sub: return sat_sub(x, y);
        case Op::Mul: return sat_mul(x, y);
        case Op::ProtectedDiv: return protected_div(x, y);
        case Op::Eq: return x == y ? 1 : 0;
        case Op::Gt: return x > y ? 1 : 0;
        case Op::Lt: return x < y ? 1 : 0;
        default: break;
        }
        throw TypeError("malformed tree");
    }

    void strip_into(const ControllerTree& t, std::size_t i, std::vector<ControllerNode>& out)
    {
        if (t[i].op == Op::If3) {
            const std::size_t then_branch = t.subtree_end(i + 1);
            strip_into(t, t.subtree_end(then_branch), out);
            return;
        }
        out.push_back(t[i]);
        for (std::size_t c : t.children(i)) strip_into(t, c, out);
    }

} // namespace

std::int64_t evaluate(const ControllerTree& tree, const ActivationVector& activations, const TrafficContext& ctx)
{
    if (activations.rates.size() != tree.if3_count()) throw TypeError("activation vector does not match the tree");
    return eval_at(tree, activations, ctx, 0);
}

ControllerTree strip_conditionals(const ControllerTree& tree)
{
    std::vector<ControllerNode> out;
    strip_into(tree, 0, out);
    return ControllerTree(std::move(out));
}

namespace {

    // If3(Gt(a, Add(b, 5)), then, else) with a/b the two axis queues.
    void push_guard(std::vector<ControllerNode>& n, Variable a, Variable b)
    {
        n.push_back({Op::Gt, 0});
        n.push_back({Op::Var, static_cast<std::int64_t>(a)});
        n.push_back({Op::Add, 0});
        n.push_back({Op::Var, static_cast<std::int64_t>(b)});
        n.push_back({Op::IntConst, 5});
    }

    ControllerTree queue_tree()
    {
        std::vector<ControllerNode> n;
        n.push_back({Op::If3, 0});
        push_guard(n, Variable::VerQueue, Variable::HorQueue);
        n.push_back({Op::IntConst, 1});
        n.push_back({Op::If3, 0});
        push_guard(n, Variable::HorQueue, Variable::VerQueue);
        n.push_back({Op::IntConst, -1});
        n.push_back({Op::IntConst, 0});
        return ControllerTree(std::move(n));
    }

} // namespace

Controller longest_queue_controller()
{
    return {queue_tree(), ActivationVector{{1.0, 1.0}, 0.5}};
}

Controller controller_zero()
{
    return {queue_tree(), ActivationVector{{0.95, 0.4}, 0.5}};
}

Controller splice(const Controller& host, std::size_t at, const Controller& donor, std::size_t from)
{
    const auto& h = host.tree.nodes();
    const auto& d = donor.tree.nodes();
    const std::size_t at_end = host.tree.subtree_end(at);
    const std::size_t from_end = donor.tree.subtree_end(from);

    std::vector<ControllerNode> nodes;
    nodes.reserve(h.size() - (at_end - at) + (from_end - from));
    nodes.insert(nodes.end(), h.begin(), h.begin() + static_cast<std::ptrdiff_t>(at));
    nodes.insert(nodes.end(), d.begin() + static_cast<std::ptrdiff_t>(from), d.begin() + static_cast<std::ptrdiff_t>(from_end));
    nodes.insert(nodes.end(), h.begin() + static_cast<std::ptrdiff_t>(at_end), h.end());

    const auto& hr = host.activations.rates;
    const auto& dr = donor.activations.rates;
    std::vector<double> rates;
    rates.insert(rates.end(), hr.begin(), hr.begin() + static_cast<std::ptrdiff_t>(host.tree.if3_before(at)));
    rates.insert(rates.end(), dr.begin() + static_cast<std::ptrdiff_t>(donor.tree.if3_before(from)),
                 dr.begin() + static_cast<std::ptrdiff_t>(donor.tree.if3_before(from_end)));
    rates.insert(rates.end(), hr.begin() + static_cast<std::ptrdiff_t>(host.tree.if3_before(at_end)), hr.end());

    return {ControllerTree(std::move(nodes)), ActivationVector{std::move(rates), host.activations.threshold}};
}

namespace {

    void render(const ControllerTree& t, const ActivationVector& a, std::size_t i, std::string& out)
    {
        const ControllerNode& node = t[i];
        auto binary = [&](std::string_view sym) {
            const auto kids = t.children(i);
            out += '(';
            render(t, a, kids[0], out);
            out += ' ';
            out += sym;
            out += ' ';
            render(t, a, kids[1], out);
            out += ')';
        };
        switch (node.op) {
        case Op::IntConst: out += std::to_string(node.value); return;
        case Op::Var: out += variable_name(static_cast<Variable>(node.value)); return;
        case Op::Add: binary("+"); return;
        case Op::Sub: binary("-"); return;
        case Op::Mul: binary("*"); return;
        case Op::And: binary("and"); return;
        case Op::Or: binary("or"); return;
        case Op::Eq: binary("=="); return;
        case Op::Gt: binary(">"); return;
        case Op::Lt: binary("<"); return;
        case Op::ProtectedDiv: {
            const auto kids = t.children(i);
            out += "pdiv(";
            render(t, a, kids[0], out);
            out += ", ";
            render(t, a, kids[1], out);
            out += ')';
            return;
        }
        case Op::Not:
            out += "(not ";
            render(t, a, i + 1, out);
            out += ')';
            return;
        case Op::If3: {
            const auto kids = t.children(i);
            out += '(';
            render(t, a, kids[1], out);
            out += " if (self.epiVect[";
            out += std::to_string(t.if3_before(i));
            out += "] >= ";
            out += format_real(a.threshold);
            out += " and ";
            render(t, a, kids[0], out);
            out += ") else ";
            render(t, a, kids[2], out);
            out += ')';
            return;
        }
        }
    }

} // namespace

std::string to_expression(const ControllerTree& tree, const ActivationVector& activations)
{
    std::string out;
    render(tree, activations, 0, out);
    return out;
}

std::string to_expression(const ControllerTree& tree)
{
    return to_expression(tree, ActivationVector{std::vector<double>(tree.if3_count(), 1.0), 0.5});
}

std::string controller_to_source(const Controller& c, int index)
{
    std::string out = "class Controller" + std::to_string(index) + "(controller.Controller):\n";
    out += "    def trafficRule(self";
    for (const auto& entry : kVariableNames) {
        out += ", ";
        out += entry.name;
    }
    out += "):\n";
    out += "        return " + to_expression(c.tree, c.activations) + "\n\n";
    out += "    def __init__(self):\n";
    out += "        self.epiVect = [";
    for (std::size_t k = 0; k < c.activations.rates.size(); ++k) {
        if (k) out += ", ";
        out += format_real(c.activations.rates[k]);
    }
    out += "]\n";
    return out;
}

namespace {

    struct Token {
        enum Kind { Ident, Integer, Real, Punct, End } kind = End;
        std::string text;
    };

    std::vector<Token> tokenize(std::string_view s)
    {
        std::vector<Token> out;
        std::size_t i = 0;
        while (i < s.size()) {
            const char ch = s[i];
            if (std::isspace(static_cast<unsigned char>(ch))) {
                ++i;
            } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_' ||
                       (std::isdigit(static_cast<unsigned char>(ch)) && i + 2 < s.size() &&
                        (s.substr(i, 3) == "1st" || s.substr(i, 3) == "2nd"))) {
                std::size_t j = i;
                while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
                out.push_back({Token::Ident, std::string(s.substr(i, j - i))});
                i = j;
            } else if (std::isdigit(static_cast<unsigned char>(ch))) {
                std::size_t j = i;
                bool real = false;
                while (j < s.size() && (std::isdigit(static_cast<unsigned char>(s[j])) || s[j] == '.' || s[j] == 'e' ||
                                        s[j] == 'E' ||
                                        ((s[j] == '-' || s[j] == '+') && (s[j - 1] == 'e' || s[j - 1] == 'E')))) {
                    if (s[j] == '.' || s[j] == 'e' || s[j] == 'E') real = true;
                    ++j;
                }
                out.push_back({real ? Token::Real : Token::Integer, std::string(s.substr(i, j - i))});
                i = j;
            } else {
                static constexpr std::array<std::string_view, 3> two{"==", ">=", "<="};
                bool matched = false;
                for (std::string_view p : two) {
                    if (s.substr(i, 2) == p) {
                        out.push_back({Token::Punct, std::string(p)});
                        i += 2;
                        matched = true;
                        break;
                    }
                }
                if (!matched) {
                    if (std::string_view("()[],.+-*><=:").find(ch) == std::string_view::npos) {
                        throw ParseError(std::string("unexpected character '") + ch + "'");
                    }
                    out.push_back({Token::Punct, std::string(1, ch)});
                    ++i;
                }
            }
        }
        out.push_back({Token::End, ""});
        return out;
    }

    struct ParsedNode {
        ControllerNode node;
        std::vector<std::unique_ptr<ParsedNode>> kids;
        std::int64_t epi_index = -1;
        double threshold = 0.5;
    };

    class Parser {
    public:
        explicit Parser(std::vector<Token> tokens)
            : toks_(std::move(tokens))
        {
        }

        std::unique_ptr<ParsedNode> expr()
        {
            const Token& t = peek();
            if (t.kind == Token::Integer) return constant(take().text);
            if (is("-") && toks_[pos_ + 1].kind == Token::Integer) {
                take();
                return constant("-" + take().text);
            }
            if (t.kind == Token::Ident) {
                const std::string name = take().text;
                if (name == "pdiv") {
                    expect("(");
                    auto a = expr();
                    expect(",");
                    auto b = expr();
                    expect(")");
                    return make(Op::ProtectedDiv, std::move(a), std::move(b));
                }
                auto n = std::make_unique<ParsedNode>();
                n->node = {Op::Var, static_cast<std::int64_t>(variable_from(name))};
                return n;
            }
            if (!is("(")) fail("expected an expression");
            take();
            if (is_ident("not")) {
                take();
                auto a = expr();
                expect(")");
                auto n = std::make_unique<ParsedNode>();
                n->node = {Op::Not, 0};
                n->kids.push_back(std::move(a));
                return n;
            }
            auto a = expr();
            if (is_ident("if")) {
                take();
                expect("(");
                expect_ident("self");
                expect(".");
                expect_ident("epiVect");
                expect("[");
                if (peek().kind != Token::Integer) fail("expected an activation index");
                const std::int64_t k = std::stoll(take().text);
                expect("]");
                if (is(">")) {
                    take();
                } else {
                    expect(">=");
                }
                const double threshold = number();
                expect_ident("and");
                auto cond = expr();
                expect(")");
                expect_ident("else");
                auto other = expr();
                expect(")");
                auto n = std::make_unique<ParsedNode>();
                n->node = {Op::If3, 0};
                n->epi_index = k;
                n->threshold = threshold;
                n->kids.push_back(std::move(cond));
                n->kids.push_back(std::move(a));
                n->kids.push_back(std::move(other));
                return n;
            }
            Op op{};
            const Token& sym = take();
            if (sym.text == "+") op = Op::Add;
            else if (sym.text == "-") op = Op::Sub;
            else if (sym.text == "*") op = Op::Mul;
            else if (sym.text == "==") op = Op::Eq;
            else if (sym.text == ">") op = Op::Gt;
            else if (sym.text == "<") op = Op::Lt;
            else if (sym.text == "and") op = Op::And;
            else if (sym.text == "or") op = Op::Or;
            else fail("unknown operator '" + sym.text + "'");
            auto b = expr();
            expect(")");
            return make(op, std::move(a), std::move(b));
        }

        double number()
        {
            bool neg = false;
            if (is("-")) {
                take();
                neg = true;
            }
            const Token& t = take();
            if (t.kind != Token::Real && t.kind != Token::Integer) fail("expected a number");
            double x = 0;
            auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), x);
            if (res.ec != std::errc()) fail("bad number '" + t.text + "'");
            return neg ? -x : x;
        }

        bool at_end() const { return toks_[pos_].kind == Token::End; }
        const Token& peek() const { return toks_[pos_]; }
        bool is(std::string_view p) const { return toks_[pos_].kind == Token::Punct && toks_[pos_].text == p; }
        bool is_ident(std::string_view p) const { return toks_[pos_].kind == Token::Ident && toks_[pos_].text == p; }
        const Token& take()
        {
            if (toks_[pos_].kind == Token::End) fail("unexpected end of input");
            return toks_[pos_++];
        }
        void expect(std::string_view p)
        {
            if (!is(p)) fail("expected '" + std::string(p) + "'");
            ++pos_;
        }
        void expect_ident(std::string_view p)
        {
            if (!is_ident(p)) fail("expected '" + std::string(p) + "'");
            ++pos_;
        }
        [[noreturn]] void fail(const std::string& msg) const
        {
            throw ParseError(msg + " near token " + std::to_string(pos_) +
                             (toks_[pos_].text.empty() ? "" : " ('" + toks_[pos_].text + "')"));
        }

    private:
        std::unique_ptr<ParsedNode> constant(const std::string& text)
        {
            std::int64_t v = 0;
            auto res = std::from_chars(text.data(), text.data() + text.size(), v);
            if (res.ec != std::errc()) fail("bad integer '" + text + "'");
            auto n = std::make_unique<ParsedNode>();
            n->node = {Op::IntConst, v};
            return n;
        }

        Variable variable_from(const std::string& name) const
        {
            try {
                return variable_from_name(name);
            } catch (const ConfigError&) {
                fail("unknown variable '" + name + "'");
            }
        }

        static std::unique_ptr<ParsedNode> make(Op op, std::unique_ptr<ParsedNode> a, std::unique_ptr<ParsedNode> b)
        {
            auto n = std::make_unique<ParsedNode>();
            n->node = {op, 0};
            n->kids.push_back(std::move(a));
            n->kids.push_back(std::move(b));
            return n;
        }

        std::vector<Token> toks_;
        std::size_t pos_ = 0;
    };

    void flatten(const ParsedNode& p, std::vector<ControllerNode>& out, std::int64_t& if3_seen, double& threshold)
    {
        if (p.node.op == Op::If3) {
            if (p.epi_index != if3_seen) {
                throw ParseError("activation index " + std::to_string(p.epi_index) + " does not follow pre-order");
            }
            ++if3_seen;
            threshold = p.threshold;
        }
        out.push_back(p.node);
        for (const auto& k : p.kids) flatten(*k, out, if3_seen, threshold);
    }

    std::pair<ControllerTree, double> parse_tree(std::string_view text)
    {
        Parser parser(tokenize(text));
        auto root = parser.expr();
        if (!parser.at_end()) parser.fail("trailing input");
        std::vector<ControllerNode> nodes;
        std::int64_t seen = 0;
        double threshold = 0.5;
        flatten(*root, nodes, seen, threshold);
        try {
            return {ControllerTree(std::move(nodes)), threshold};
        } catch (const TypeError& e) {
            throw ParseError(std::string("ill-typed expression: ") + e.what());
        }
    }

} // namespace

ControllerTree parse_expression(std::string_view text)
{
    return parse_tree(text).first;
}

Controller parse_controller_source(std::string_view text)
{
    const std::size_t ret = text.find("return ");
    if (ret == std::string_view::npos) throw ParseError("no trafficRule return expression");
    std::size_t line_end = text.find('\n', ret);
    if (line_end == std::string_view::npos) line_end = text.size();
    auto [tree, threshold] = parse_tree(text.substr(ret + 7, line_end - ret - 7));

    Controller c{tree, ActivationVector{{}, threshold}};
    // The assignment, not a read inside the rule.
    std::size_t epi = text.find("self.epiVect");
    while (epi != std::string_view::npos) {
        const std::size_t after = text.find_first_not_of(' ', epi + 12);
        if (after != std::string_view::npos && text[after] == '=' && text.substr(after, 2) != "==") break;
        epi = text.find("self.epiVect", epi + 12);
    }
    if (epi == std::string_view::npos) throw ParseError("no epiVect assignment");
    const std::size_t open = text.find('[', epi);
    const std::size_t close = text.find(']', open);
    if (open == std::string_view::npos || close == std::string_view::npos) throw ParseError("malformed epiVect");
    Parser list(tokenize(text.substr(open + 1, close - open - 1)));
    while (!list.at_end()) {
        c.activations.rates.push_back(list.number());
        if (!list.at_end()) list.expect(",");
    }
    if (c.activations.rates.size() != c.tree.if3_count()) {
        throw ParseError("epiVect has " + std::to_string(c.activations.rates.size()) + " entries for " +
                         std::to_string(c.tree.if3_count()) + " conditionals");
    }
    return c;
}

std::vector<Controller> parse_controller_file(std::string_view text)
{
    std::vector<Controller> out;
    std::size_t at = text.find("class ");
    while (at != std::string_view::npos) {
        const std::size_t next = text.find("class ", at + 6);
        out.push_back(parse_controller_source(text.substr(at, next == std::string_view::npos ? next : next - at)));
        at = next;
    }
    return out;
}

bool PrimitiveSet::has(Op op) const
{
    return std::find(functions.begin(), functions.end(), op) != functions.end();
}

int PrimitiveSet::min_depth(ValueType type) const
{
    if (type == ValueType::Int) return 1;
    return (has(Op::Eq) || has(Op::Gt) || has(Op::Lt)) ? 2 : -1;
}

int PrimitiveSet::min_depth(Op op) const
{
    const int boolean = min_depth(ValueType::Bool);
    switch (op) {
    case Op::IntConst:
    case Op::Var: return 1;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::ProtectedDiv:
    case Op::Eq:
    case Op::Gt:
    case Op::Lt: return 2;
    case Op::And:
    case Op::Or:
    case Op::Not:
    case Op::If3: return boolean < 0 ? -1 : boolean + 1;
    }
    return -1;
}

PrimitiveSet PrimitiveSet::single_intersection()
{
    PrimitiveSet ps;
    ps.functions = {Op::Add, Op::Sub, Op::And, Op::Or, Op::Not, Op::Eq, Op::Gt, Op::If3};
    ps.variables = {Variable::VerQueue, Variable::HorQueue};
    ps.const_min = -5;
    ps.const_max = 5;
    return ps;
}

PrimitiveSet PrimitiveSet::grid()
{
    PrimitiveSet ps;
    ps.functions = {Op::Add, Op::Sub, Op::Mul, Op::And, Op::Or, Op::Not, Op::Eq, Op::Gt, Op::Lt, Op::If3};
    for (int v = 0; v < kVariableCount; ++v) ps.variables.push_back(static_cast<Variable>(v));
    ps.const_min = -10;
    ps.const_max = 10;
    return ps;
}

PrimitiveSet PrimitiveSet::highway()
{
    PrimitiveSet ps;
    ps.functions = {Op::Add, Op::Sub, Op::And, Op::Or, Op::Not, Op::Eq, Op::Gt, Op::If3};
    ps.variables = {Variable::VerQueue, Variable::HorQueue, Variable::Left1,
                    Variable::Right1,   Variable::Left2,    Variable::Right2};
    ps.const_min = -5;
    ps.const_max = 5;
    return ps;
}

namespace {

    void grow(const PrimitiveSet& ps, ValueType type, int max_depth, bool full, Rng& rng,
              std::vector<ControllerNode>& out)
    {
        std::vector<Op> functions;
        for (Op op : ps.functions) {
            const int d = ps.min_depth(op);
            if (result_type(op) == type && d > 0 && d <= max_depth) functions.push_back(op);
        }
        const std::size_t terminals = type == ValueType::Int ? ps.variables.size() + 1 : 0;
        if (functions.empty() && terminals == 0) throw ConfigError("primitive set cannot build this type");

        std::size_t pick = 0;
        if (full && !functions.empty()) {
            pick = terminals + uniform_index(rng, functions.size());
        } else {
            pick = uniform_index(rng, terminals + functions.size());
        }
        if (pick < terminals) {
            if (pick < ps.variables.size()) {
                out.push_back({Op::Var, static_cast<std::int64_t>(ps.variables[pick])});
            } else {
                out.push_back({Op::IntConst, uniform_int(rng, ps.const_min, ps.const_max)});
            }
            return;
        }
        const Op op = functions[pick - terminals];
        out.push_back({op, 0});
        for (int k = 0; k < arity(op); ++k) grow(ps, child_type(op, k), max_depth - 1, full, rng, out);
    }

} // namespace

std::vector<ControllerNode> random_subtree(const PrimitiveSet& ps, ValueType type, int max_depth, bool full, Rng& rng)
{
    std::vector<ControllerNode> out;
    grow(ps, type, max_depth, full, rng, out);
    return out;
}

ControllerTree random_tree(const PrimitiveSet& ps, int max_depth, bool full, Rng& rng)
{
    return ControllerTree(random_subtree(ps, ValueType::Int, max_depth, full, rng));
}

ActivationVector random_activations(std::size_t count, double threshold, Rng& rng)
{
    ActivationVector a;
    a.threshold = threshold;
    a.rates.resize(count);
    for (double& r : a.rates) r = uniform01(rng);
    return a;
}

Controller random_controller(const PrimitiveSet& ps, int max_depth, bool full, double threshold, Rng& rng)
{
    ControllerTree tree = random_tree(ps, max_depth, full, rng);
    ActivationVector a = random_activations(tree.if3_count(), threshold, rng);
    return {std::move(tree), std::move(a)};
}

bool well_formed(const Controller& c, int max_depth)
{
    try {
        const ControllerTree rebuilt(c.tree.nodes());
        if (rebuilt.depth() > max_depth) return false;
        if (c.activations.rates.size() != rebuilt.if3_count()) return false;
        return std::all_of(c.activations.rates.begin(), c.activations.rates.end(),
                           [](double r) { return r >= 0.0 && r <= 1.0; });
    } catch (const TypeError&) {
        return false;
    }
}

}  // namespace trafficgp
