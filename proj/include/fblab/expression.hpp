#pragma once

/// @file expression.hpp
/// @brief Arithmetic expressions over coordinates, for weights and boundary data in
/// experiment configs.
///
/// Grammar: numbers, pi, x1 x2 x3, + - * /, unary minus, parentheses, and the
/// functions abs(a) sqrt(a) max(a,b) min(a,b) pow(a,b). Anything else is rejected
/// when the text is parsed, not when it is evaluated.

#include <memory>
#include <string>
#include <string_view>

#include "fblab/lattice.hpp"

namespace fblab::lab {

class Expression {
public:
    /// Throws InvalidArgument with the offending position on a syntax error or an
    /// unknown identifier.
    static Expression parse(std::string_view text);

    /// Constant expression.
    static Expression constant(double value);

    [[nodiscard]] double operator()(const Point& p) const;

    /// Highest coordinate index referenced (0 if none, 1..3 otherwise).
    [[nodiscard]] int max_axis() const noexcept { return max_axis_; }
    [[nodiscard]] const std::string& text() const noexcept { return text_; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
    int max_axis_ = 0;
};

}  // namespace fblab::lab
