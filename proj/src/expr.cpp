#include "relvar/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <set>

namespace relvar::expr {

namespace {

struct FuncEntry {
    const char* name;
    double (*fn)(double);
};

constexpr FuncEntry kFunctions[] = {
    {"sin", [](double v) { return std::sin(v); }},
    {"cos", [](double v) { return std::cos(v); }},
    {"tan", [](double v) { return std::tan(v); }},
    {"exp", [](double v) { return std::exp(v); }},
    {"log", [](double v) { return std::log(v); }},
    {"sqrt", [](double v) { return std::sqrt(v); }},
    {"tanh", [](double v) { return std::tanh(v); }},
    {"abs", [](double v) { return std::fabs(v); }},
};

}  // namespace

class Parser {
  public:
    Parser(const std::string& text, Expression& out) : text_(text), out_(out) {}

    void run() {
        out_.root_ = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        std::set<int> seen;
        for (const auto& node : out_.nodes_) {
            if (node.kind == Expression::Kind::variable) seen.insert(node.var);
        }
        out_.variables_.assign(seen.begin(), seen.end());
    }

  private:
    using Kind = Expression::Kind;

    [[noreturn]] void fail(const std::string& what) const {
        raise(errc::expr_syntax,
              what + " at position " + std::to_string(pos_) + " in \"" + text_ + "\"");
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int add(Expression::Node node) {
        out_.nodes_.push_back(node);
        return static_cast<int>(out_.nodes_.size() - 1);
    }

    int parse_expr() {
        int lhs = parse_term();
        for (;;) {
            if (consume('+')) {
                lhs = add({Kind::binary, 0, 0, '+', 0, lhs, parse_term()});
            } else if (consume('-')) {
                lhs = add({Kind::binary, 0, 0, '-', 0, lhs, parse_term()});
            } else {
                return lhs;
            }
        }
    }

    int parse_term() {
        int lhs = parse_factor();
        for (;;) {
            if (consume('*')) {
                lhs = add({Kind::binary, 0, 0, '*', 0, lhs, parse_factor()});
            } else if (consume('/')) {
                lhs = add({Kind::binary, 0, 0, '/', 0, lhs, parse_factor()});
            } else {
                return lhs;
            }
        }
    }

    int parse_factor() {
        skip_ws();
        if (consume('-')) return add({Kind::unary_neg, 0, 0, 0, 0, parse_factor(), -1});
        if (consume('+')) return parse_factor();
        int base = parse_primary();
        if (consume('^')) {
            // right-associative
            return add({Kind::binary, 0, 0, '^', 0, base, parse_factor()});
        }
        return base;
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = parse_expr();
            if (!consume(')')) fail("missing ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_name();
        fail(std::string("unexpected character '") + c + "'");
    }

    int parse_number() {
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        const double value = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        return add({Kind::constant, value, 0, 0, 0, -1, -1});
    }

    int parse_name() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        const std::string name = text_.substr(start, pos_ - start);
        if (name.size() >= 2 && name[0] == 'x' &&
            std::all_of(name.begin() + 1, name.end(),
                        [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            const int index = std::atoi(name.c_str() + 1);
            if (index < 1) fail("variable index must be >= 1");
            return add({Kind::variable, 0, index, 0, 0, -1, -1});
        }
        for (std::size_t f = 0; f < std::size(kFunctions); ++f) {
            if (name == kFunctions[f].name) {
                if (!consume('(')) fail("expected '(' after " + name);
                const int arg = parse_expr();
                if (!consume(')')) fail("missing ')'");
                return add({Kind::call, 0, 0, 0, static_cast<int>(f), arg, -1});
            }
        }
        fail("unknown identifier \"" + name + "\"");
    }

    const std::string& text_;
    Expression& out_;
    std::size_t pos_ = 0;
};

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    Parser(text, e).run();
    return e;
}

double Expression::eval_node(int index, std::span<const double> vars) const {
    const Node& node = nodes_[static_cast<std::size_t>(index)];
    switch (node.kind) {
        case Kind::constant: return node.value;
        case Kind::variable: {
            const std::size_t i = static_cast<std::size_t>(node.var - 1);
            if (i >= vars.size()) {
                raise(errc::dimension_mismatch,
                      "expression references x" + std::to_string(node.var) + " but only " +
                          std::to_string(vars.size()) + " variables were supplied");
            }
            return vars[i];
        }
        case Kind::unary_neg: return -eval_node(node.lhs, vars);
        case Kind::binary: {
            const double a = eval_node(node.lhs, vars);
            const double b = eval_node(node.rhs, vars);
            switch (node.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                case '^': return std::pow(a, b);
            }
            return 0.0;
        }
        case Kind::call: return kFunctions[node.func].fn(eval_node(node.lhs, vars));
    }
    return 0.0;
}

double Expression::eval(std::span<const double> vars) const { return eval_node(root_, vars); }

}  // namespace relvar::expr
