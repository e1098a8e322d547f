#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spraymet/field.hpp"

namespace spraymet {

enum class ExprFunc { Sqrt, Exp, Log, Sin, Cos };

// Closed-form scalar field on TM built from the grammar
//
//   expr     := term (('+' | '-') term)*
//   term     := unary (('*' | '/') unary)*
//   unary    := ('-' | '+') unary | power
//   power    := primary ('^' exponent)?
//   exponent := unary                       (must fold to a constant)
//   primary  := NUMBER | COORD | FUNC '(' expr ')' | '(' expr ')'
//   COORD    := ('x' | 'y') INDEX           (1-based, INDEX <= dimension)
//   FUNC     := 'sqrt' | 'exp' | 'log' | 'sin' | 'cos'
//
// Nodes live in a flat arena; evaluation is a template over the dual
// tower, so all partials up to total order 3 are exact.
class ScalarFieldExpr final : public FieldBase<ScalarFieldExpr> {
public:
    static ScalarFieldExpr number(int dimension, double value);
    static ScalarFieldExpr base_coordinate(int dimension, int i);  // x_{i+1}
    static ScalarFieldExpr fiber_coordinate(int dimension, int i); // y_{i+1}

    friend ScalarFieldExpr operator+(const ScalarFieldExpr& l, const ScalarFieldExpr& r);
    friend ScalarFieldExpr operator-(const ScalarFieldExpr& l, const ScalarFieldExpr& r);
    friend ScalarFieldExpr operator*(const ScalarFieldExpr& l, const ScalarFieldExpr& r);
    friend ScalarFieldExpr operator/(const ScalarFieldExpr& l, const ScalarFieldExpr& r);
    friend ScalarFieldExpr operator-(const ScalarFieldExpr& e);

    static ScalarFieldExpr apply(ExprFunc fn, const ScalarFieldExpr& arg);
    static ScalarFieldExpr pow_const(const ScalarFieldExpr& base, double exponent);
    static ScalarFieldExpr scaled(double factor, const ScalarFieldExpr& e);

    // Prints a normal form that reparses to the same tree (up to number
    // formatting); printing is idempotent across one round trip.
    std::string to_string() const;
    std::string describe() const override;

    bool uses_base_coordinates() const noexcept;
    bool uses_fiber_coordinates() const noexcept;

    template <class T>
    T eval(std::span<const T> coords) const;

private:
    enum class Kind { Number, Symbol, Add, Sub, Mul, Div, Neg, Pow, Call };

    struct Node {
        Kind kind{};
        double number = 0.0; // Number value or Pow exponent
        int symbol = -1;     // packed coordinate slot for Symbol
        int lhs = -1;
        int rhs = -1;
        ExprFunc fn{};
    };

    explicit ScalarFieldExpr(int dimension) : FieldBase<ScalarFieldExpr>(dimension) {}

    int add_node(Node node);
    int graft(const ScalarFieldExpr& other); // append other's nodes, return its shifted root
    static ScalarFieldExpr combine(Kind kind, const ScalarFieldExpr& l, const ScalarFieldExpr& r);

    template <class T>
    T eval_node(int node, std::span<const T> coords) const;

    void print_node(int node, int parent_precedence, std::string& out) const;

    friend class ExprParser;

    std::vector<Node> nodes_;
    int root_ = -1;
};

// Parses `source` over coordinates x1..xn, y1..yn with n = dimension.
// Throws ParseError with a 0-based byte position on any syntax error,
// unknown function/symbol, out-of-range coordinate index, or
// non-constant exponent.
ScalarFieldExpr parse_expression(std::string_view source, int dimension);

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

} // namespace spraymet
