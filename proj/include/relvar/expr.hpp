#pragma once

#include <span>
#include <string>
#include <vector>

#include "relvar/errors.hpp"

namespace relvar::expr {

// Arithmetic expressions over variables x1..xN, used to describe synthetic
// target functions, e.g. "sin(3*x1) + 2*x3*x5". Supported: + - * / ^,
// parentheses, unary minus, numeric literals, and the functions
// sin cos tan exp log sqrt tanh abs.
class Expression {
  public:
    static Expression parse(const std::string& text);

    // vars[0] is x1. Throws dimension_mismatch if a referenced variable is
    // out of range.
    double eval(std::span<const double> vars) const;

    // 1-based indices of the variables the expression references, ascending.
    const std::vector<int>& variables() const noexcept { return variables_; }

    const std::string& text() const noexcept { return text_; }

  private:
    enum class Kind { constant, variable, unary_neg, binary, call };

    struct Node {
        Kind kind;
        double value = 0.0;  // constant
        int var = 0;         // variable (1-based)
        char op = 0;         // binary: + - * / ^
        int func = 0;        // call: index into the function table
        int lhs = -1, rhs = -1;
    };

    double eval_node(int index, std::span<const double> vars) const;

    std::string text_;
    std::vector<Node> nodes_;
    int root_ = -1;
    std::vector<int> variables_;

    friend class Parser;
};

}  // namespace relvar::expr
