#include "fblab/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace fblab::lab {

struct Expression::Node {
    enum class Op { number, coord, neg, add, sub, mul, div, abs, sqrt, max, min, pow };
    Op op = Op::number;
    double value = 0.0;
    int axis = 0;
    std::shared_ptr<const Node> a;
    std::shared_ptr<const Node> b;

    [[nodiscard]] double eval(const Point& p) const {
        switch (op) {
            case Op::number:
                return value;
            case Op::coord:
                return p[axis];
            case Op::neg:
                return -a->eval(p);
            case Op::add:
                return a->eval(p) + b->eval(p);
            case Op::sub:
                return a->eval(p) - b->eval(p);
            case Op::mul:
                return a->eval(p) * b->eval(p);
            case Op::div:
                return a->eval(p) / b->eval(p);
            case Op::abs:
                return std::abs(a->eval(p));
            case Op::sqrt:
                return std::sqrt(a->eval(p));
            case Op::max:
                return std::max(a->eval(p), b->eval(p));
            case Op::min:
                return std::min(a->eval(p), b->eval(p));
            case Op::pow:
                return std::pow(a->eval(p), b->eval(p));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    NodePtr parse_all() {
        NodePtr n = expr();
        skip();
        if (pos_ != s_.size()) {
            fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        }
        return n;
    }

    int max_axis = 0;

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InvalidArgument("expression \"" + std::string(s_) + "\" at " + std::to_string(pos_) + ": " + what);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            fail(std::string("expected '") + c + "'");
        }
    }

    NodePtr expr() {
        NodePtr n = term();
        for (;;) {
            if (accept('+')) {
                n = make(Op::add, n, term());
            } else if (accept('-')) {
                n = make(Op::sub, n, term());
            } else {
                return n;
            }
        }
    }

    NodePtr term() {
        NodePtr n = unary();
        for (;;) {
            if (accept('*')) {
                n = make(Op::mul, n, unary());
            } else if (accept('/')) {
                n = make(Op::div, n, unary());
            } else {
                return n;
            }
        }
    }

    NodePtr unary() {
        if (accept('-')) {
            return make(Op::neg, unary());
        }
        if (accept('+')) {
            return unary();
        }
        return primary();
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) {
            fail("unexpected end of expression");
        }
        const char c = s_[pos_];
        if (accept('(')) {
            NodePtr n = expr();
            expect(')');
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            return identifier();
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    NodePtr number() {
        double v = 0.0;
        const char* first = s_.data() + pos_;
        const auto [ptr, ec] = std::from_chars(first, s_.data() + s_.size(), v);
        if (ec != std::errc() || ptr == first) {
            fail("malformed number");
        }
        pos_ += static_cast<std::size_t>(ptr - first);
        auto n = std::make_shared<Expression::Node>();
        n->value = v;
        return n;
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
        }
        const std::string_view name = s_.substr(start, pos_ - start);
        if (name == "pi") {
            auto n = std::make_shared<Expression::Node>();
            n->value = std::numbers::pi;
            return n;
        }
        if (name == "x1" || name == "x2" || name == "x3") {
            auto n = std::make_shared<Expression::Node>();
            n->op = Op::coord;
            n->axis = name[1] - '1';
            max_axis = std::max(max_axis, n->axis + 1);
            return n;
        }
        struct Fn {
            std::string_view name;
            Op op;
            int arity;
        };
        static constexpr Fn fns[] = {{"abs", Op::abs, 1}, {"sqrt", Op::sqrt, 1}, {"max", Op::max, 2},
                                     {"min", Op::min, 2}, {"pow", Op::pow, 2}};
        for (const Fn& f : fns) {
            if (f.name == name) {
                expect('(');
                NodePtr a = expr();
                NodePtr b;
                if (f.arity == 2) {
                    expect(',');
                    b = expr();
                }
                expect(')');
                return make(f.op, a, b);
            }
        }
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(std::string_view text) {
    Parser p(text);
    Expression e;
    e.root_ = p.parse_all();
    e.text_ = std::string(text);
    e.max_axis_ = p.max_axis;
    return e;
}

Expression Expression::constant(double value) {
    auto n = std::make_shared<Node>();
    n->value = value;
    Expression e;
    e.root_ = n;
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    e.text_.assign(buf, res.ptr);
    return e;
}

double Expression::operator()(const Point& p) const { return root_->eval(p); }

}  // namespace fblab::lab
