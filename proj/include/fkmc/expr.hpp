#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fkmc::expr {

enum class NodeKind : std::uint8_t { Constant, Variable, Unary, Binary, Call };

enum class UnaryOp : std::uint8_t { Neg };

enum class BinaryOp : std::uint8_t { Add, Sub, Mul, Div, Pow };

enum class Func : std::uint8_t { Exp, Log, Sin, Cos, Tanh, Sqrt, Abs };

/// Variable identity: index 0..8 selects x1..x9, kTimeVar selects t.
inline constexpr int kTimeVar = -1;
inline constexpr int kMaxVariables = 9;

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " at position " + std::to_string(pos)), position(pos) {}
  std::size_t position;
};

/// Immutable scalar expression in the variables x1..x{dim} and t.
///
/// Nodes are stored in evaluation (post) order, so eval() is a small
/// stack machine with no recursion and no allocation. Child links are
/// kept for differentiation and printing.
class Expression {
 public:
  struct Node {
    NodeKind kind;
    std::uint8_t op;    // UnaryOp / BinaryOp / Func, depending on kind
    std::int8_t var;    // variable index, kTimeVar for t
    std::int32_t lhs;   // child indices into the node array (-1 if unused)
    std::int32_t rhs;
    double value;       // constant value
  };

  static Expression parse(std::string_view text, int dimension);

  static Expression constant(double value);
  static Expression variable(int var, int dimension);
  static Expression sum(const Expression& a, const Expression& b);

  double eval(std::span<const double> x, double t) const;

  /// Exact symbolic derivative with respect to t (var = kTimeVar) or x{var+1}.
  /// Literal subtrees are constant-folded; no further simplification promised.
  Expression differentiate(int var) const;

  std::string to_string() const;

  int dimension() const { return dimension_; }
  bool is_constant() const;
  double constant_value() const;  // only valid when is_constant()
  bool is_literal_zero() const { return is_constant() && constant_value() == 0.0; }

  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  friend class ExprBuilder;
  std::vector<Node> nodes_;   // post order, root last
  int dimension_ = 1;
  int stack_need_ = 1;
};

/// Central finite difference of an expression in one variable; test oracle
/// for differentiate(), intentionally kept independent of it.
double central_difference(const Expression& e, std::span<const double> x, double t, int var,
                          double h);

}  // namespace fkmc::expr
