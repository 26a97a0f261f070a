#include "ergolab/observable.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "ergolab/error.hpp"

namespace ergolab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Expression tree. Evaluation is recursive; the builtins bypass it, so the
// cost only matters for user expressions.
struct Node {
    enum Kind { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Cos, Sin, Sqrt, Exp } kind;
    double value = 0.0;
    std::unique_ptr<Node> a;
    std::unique_ptr<Node> b;

    double eval(double y) const {
        switch (kind) {
            case Const: return value;
            case Var: return y;
            case Add: return a->eval(y) + b->eval(y);
            case Sub: return a->eval(y) - b->eval(y);
            case Mul: return a->eval(y) * b->eval(y);
            case Div: return a->eval(y) / b->eval(y);
            case Pow: return std::pow(a->eval(y), b->eval(y));
            case Neg: return -a->eval(y);
            case Cos: return std::cos(a->eval(y));
            case Sin: return std::sin(a->eval(y));
            case Sqrt: return std::sqrt(a->eval(y));
            case Exp: return std::exp(a->eval(y));
        }
        return 0.0;
    }
};

using NodePtr = std::unique_ptr<Node>;

NodePtr leaf(Node::Kind k, double v = 0.0) {
    auto n = std::make_unique<Node>();
    n->kind = k;
    n->value = v;
    return n;
}

NodePtr join(Node::Kind k, NodePtr a, NodePtr b = nullptr) {
    auto n = leaf(k);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

class Parser {
public:
    explicit Parser(std::string text) : s_(std::move(text)) {}

    NodePtr parse() {
        auto e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + s_.substr(pos_, 1) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorKind::Configuration,
                    "cannot parse observable '" + s_ + "' at offset " + std::to_string(pos_) + ": " + why);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr() {
        auto left = term();
        for (;;) {
            if (eat('+')) {
                left = join(Node::Add, std::move(left), term());
            } else if (eat('-')) {
                left = join(Node::Sub, std::move(left), term());
            } else {
                return left;
            }
        }
    }

    NodePtr term() {
        auto left = unary();
        for (;;) {
            if (eat('*')) {
                left = join(Node::Mul, std::move(left), unary());
            } else if (eat('/')) {
                left = join(Node::Div, std::move(left), unary());
            } else {
                return left;
            }
        }
    }

    NodePtr unary() {
        if (eat('-')) return join(Node::Neg, unary());
        if (eat('+')) return unary();
        auto base = primary();
        if (eat('^')) return join(Node::Pow, std::move(base), unary());
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        if (eat('(')) {
            auto e = expr();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
            if (ec != std::errc{}) fail("bad number");
            pos_ = static_cast<std::size_t>(ptr - s_.data());
            return leaf(Node::Const, v);
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            const std::string word = s_.substr(start, pos_ - start);
            if (word == "y") return leaf(Node::Var);
            if (word == "pi") return leaf(Node::Const, std::numbers::pi);
            if (word == "c") return leaf(Node::Const, 0.0);
            Node::Kind fn;
            if (word == "cos") {
                fn = Node::Cos;
            } else if (word == "sin") {
                fn = Node::Sin;
            } else if (word == "sqrt") {
                fn = Node::Sqrt;
            } else if (word == "exp") {
                fn = Node::Exp;
            } else {
                fail("unknown name '" + word + "'");
            }
            if (!eat('(')) fail("'" + word + "' needs an argument in parentheses");
            auto arg = expr();
            if (!eat(')')) fail("missing ')'");
            return join(fn, std::move(arg));
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    std::string s_;
    std::size_t pos_ = 0;
};

std::string normalize_minus(std::string_view spec) {
    // Accept the typographic minus sign U+2212.
    std::string out;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        if (i + 2 < spec.size() && static_cast<unsigned char>(spec[i]) == 0xE2 &&
            static_cast<unsigned char>(spec[i + 1]) == 0x88 && static_cast<unsigned char>(spec[i + 2]) == 0x92) {
            out.push_back('-');
            i += 2;
        } else {
            out.push_back(spec[i]);
        }
    }
    return out;
}

}  // namespace

Observable Observable::scaled(double c) const {
    auto f = fn;
    std::ostringstream label;
    label << c << "*(" << name << ")";
    return Observable{label.str(), [f, c](double y) { return c * f(y); }};
}

Observable Observable::shifted(double c) const {
    auto f = fn;
    return Observable{name, [f, c](double y) { return f(y) + c; }};
}

Observable parse_observable(std::string_view raw, const IntervalMap& map) {
    const std::string spec = normalize_minus(raw);
    if (spec.empty()) throw Error(ErrorKind::Configuration, "empty observable");
    const double lower = map.lower;

    if (spec == "y") return {spec, [](double y) { return y; }};
    if (spec == "cos1" || spec == "lip1") return {spec, [](double y) { return std::cos(kTwoPi * y); }};
    if (spec == "cos2") return {spec, [](double y) { return std::cos(2.0 * kTwoPi * y); }};
    if (spec == "holder1") return {spec, [lower](double y) { return std::sqrt(std::max(0.0, y - lower)); }};
    if (spec.rfind("coboundary:", 0) == 0) {
        const auto inner = parse_observable(spec.substr(11), map);
        auto f = inner.fn;
        // Capture the map by value: the observable may outlive the caller's copy.
        auto t = map;
        return {spec, [f, t](double y) { return f(t(y)) - f(y); }};
    }
    std::shared_ptr<const Node> tree = Parser(spec).parse();
    return {spec, [tree](double y) { return tree->eval(y); }};
}

double observable_mean(const Observable& obs, const MeasureDensity& measure) {
    const auto nodes = measure.grid().nodes();
    const auto m = measure.masses();
    double total = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) total += obs(nodes[i]) * m[i];
    return total;
}

}  // namespace ergolab
