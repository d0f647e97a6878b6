#include "fkmc/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>

#include "fkmc/util.hpp"

namespace fkmc::expr {

namespace {

constexpr int kMaxStack = 128;

double apply_unary(UnaryOp op, double a) {
  switch (op) {
    case UnaryOp::Neg: return -a;
  }
  return 0.0;
}

double apply_binary(BinaryOp op, double a, double b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::Div: return a / b;
    case BinaryOp::Pow:
      if (b == 2.0) return a * a;  // same rounding as the correctly-rounded pow
      return std::pow(a, b);
  }
  return 0.0;
}

double apply_func(Func f, double a) {
  switch (f) {
    case Func::Exp: return std::exp(a);
    case Func::Log: return std::log(a);
    case Func::Sin: return std::sin(a);
    case Func::Cos: return std::cos(a);
    case Func::Tanh: return std::tanh(a);
    case Func::Sqrt: return std::sqrt(a);
    case Func::Abs: return std::abs(a);
  }
  return 0.0;
}

const char* func_name(Func f) {
  switch (f) {
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Sin: return "sin";
    case Func::Cos: return "cos";
    case Func::Tanh: return "tanh";
    case Func::Sqrt: return "sqrt";
    case Func::Abs: return "abs";
  }
  return "?";
}

}  // namespace

// --------------------------------------------------------------------------
// Builder: appends nodes in post order, folding literal arithmetic as it
// goes. Folds may orphan nodes; finish() compacts to the live subtree.

class ExprBuilder {
 public:
  explicit ExprBuilder(int dimension) : dimension_(dimension) {}

  int constant(double v) {
    nodes_.push_back({NodeKind::Constant, 0, 0, -1, -1, v});
    return last();
  }

  int variable(int var) {
    nodes_.push_back({NodeKind::Variable, 0, static_cast<std::int8_t>(var), -1, -1, 0.0});
    return last();
  }

  int unary(UnaryOp op, int a) {
    if (is_const(a)) {
      const double v = apply_unary(op, value(a));
      if (std::isfinite(v)) return constant(v);
    }
    nodes_.push_back({NodeKind::Unary, static_cast<std::uint8_t>(op), 0, a, -1, 0.0});
    return last();
  }

  int binary(BinaryOp op, int a, int b) {
    if (is_const(a) && is_const(b)) {
      const double v = apply_binary(op, value(a), value(b));
      // Non-finite folds are kept as operation nodes so to_string() stays
      // parseable; eval reproduces the same non-finite value either way.
      if (std::isfinite(v)) return constant(v);
    }
    // Identity folds (allowed simplifications on top of constant folding).
    switch (op) {
      case BinaryOp::Add:
        if (is_zero(a)) return b;
        if (is_zero(b)) return a;
        break;
      case BinaryOp::Sub:
        if (is_zero(b)) return a;
        break;
      case BinaryOp::Mul:
        if (is_zero(a) || is_zero(b)) return constant(0.0);
        if (is_const_value(a, 1.0)) return b;
        if (is_const_value(b, 1.0)) return a;
        break;
      case BinaryOp::Div:
        if (is_const_value(b, 1.0)) return a;
        break;
      case BinaryOp::Pow:
        if (is_const_value(b, 1.0)) return a;
        if (is_const_value(b, 0.0)) return constant(1.0);  // pow(x,0)=1, as in IEEE
        break;
    }
    nodes_.push_back({NodeKind::Binary, static_cast<std::uint8_t>(op), 0, a, b, 0.0});
    return last();
  }

  int call(Func f, int a) {
    if (is_const(a)) {
      const double v = apply_func(f, value(a));
      if (std::isfinite(v)) return constant(v);
    }
    nodes_.push_back({NodeKind::Call, static_cast<std::uint8_t>(f), 0, a, -1, 0.0});
    return last();
  }

  /// Append a copy of the subtree rooted at `root` in `src`.
  int copy(const Expression& src, int root) {
    const auto& n = src.nodes()[root];
    switch (n.kind) {
      case NodeKind::Constant: return constant(n.value);
      case NodeKind::Variable: return variable(n.var);
      case NodeKind::Unary: return unary(static_cast<UnaryOp>(n.op), copy(src, n.lhs));
      case NodeKind::Call: return call(static_cast<Func>(n.op), copy(src, n.lhs));
      case NodeKind::Binary: {
        const int a = copy(src, n.lhs);
        const int b = copy(src, n.rhs);
        return binary(static_cast<BinaryOp>(n.op), a, b);
      }
    }
    return -1;
  }

  bool is_const(int i) const { return nodes_[i].kind == NodeKind::Constant; }
  bool is_zero(int i) const { return is_const(i) && nodes_[i].value == 0.0; }
  bool is_const_value(int i, double v) const { return is_const(i) && nodes_[i].value == v; }
  double value(int i) const { return nodes_[i].value; }

  Expression finish(int root);

 private:
  int last() const { return static_cast<int>(nodes_.size()) - 1; }

  std::vector<Expression::Node> nodes_;
  int dimension_;
};

Expression ExprBuilder::finish(int root) {
  // Compact to the live subtree, renumbering children in post order.
  std::vector<Expression::Node> compact;
  compact.reserve(nodes_.size());
  auto emit = [&](auto&& self, int i) -> std::int32_t {
    Expression::Node n = nodes_[static_cast<std::size_t>(i)];
    if (n.kind == NodeKind::Unary || n.kind == NodeKind::Call) {
      n.lhs = self(self, n.lhs);
    } else if (n.kind == NodeKind::Binary) {
      n.lhs = self(self, n.lhs);
      n.rhs = self(self, n.rhs);
    }
    compact.push_back(n);
    return static_cast<std::int32_t>(compact.size()) - 1;
  };
  emit(emit, root);

  Expression e;
  e.nodes_ = std::move(compact);
  e.dimension_ = dimension_;
  // Operand-stack high-water mark for eval().
  int depth = 0, peak = 0;
  for (const auto& n : e.nodes_) {
    switch (n.kind) {
      case NodeKind::Constant:
      case NodeKind::Variable: ++depth; break;
      case NodeKind::Binary: --depth; break;
      default: break;
    }
    peak = std::max(peak, depth);
  }
  if (peak > kMaxStack) throw ParseError("expression too deep", 0);
  e.stack_need_ = peak;
  return e;
}

// --------------------------------------------------------------------------
// Parsing: recursive descent over
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := '-' factor | power
//   power  := atom ('^' factor)?            (right-assoc; rhs admits unary -)
//   atom   := number | ident '(' expr ')' | variable | '(' expr ')'

namespace {

class Parser {
 public:
  Parser(std::string_view text, int dimension, ExprBuilder& b)
      : text_(text), dim_(dimension), b_(b) {}

  int parse() {
    const int root = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = b_.binary(BinaryOp::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = b_.binary(BinaryOp::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_factor();
    for (;;) {
      if (accept('*')) {
        lhs = b_.binary(BinaryOp::Mul, lhs, parse_factor());
      } else if (accept('/')) {
        lhs = b_.binary(BinaryOp::Div, lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  int parse_factor() {
    if (accept('-')) return b_.unary(UnaryOp::Neg, parse_factor());
    return parse_power();
  }

  int parse_power() {
    const int base = parse_atom();
    if (accept('^')) return b_.binary(BinaryOp::Pow, base, parse_factor());
    return base;
  }

  int parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  int parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' belongs to something else ("2e" alone is an error later)
      }
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return b_.constant(v);
  }

  int parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);

    if (name == "t") return b_.variable(kTimeVar);
    if (name.size() >= 2 && name[0] == 'x' && std::isdigit(static_cast<unsigned char>(name[1]))) {
      if (name.size() != 2 || name[1] == '0') {
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "' (variables are x1..x9 and t)");
      }
      const int idx = name[1] - '1';
      if (idx >= dim_) {
        pos_ = start;
        fail("variable '" + std::string(name) + "' exceeds dimension " + std::to_string(dim_));
      }
      return b_.variable(idx);
    }

    static constexpr std::array<std::pair<std::string_view, Func>, 7> kFuncs = {{
        {"exp", Func::Exp}, {"log", Func::Log}, {"sin", Func::Sin}, {"cos", Func::Cos},
        {"tanh", Func::Tanh}, {"sqrt", Func::Sqrt}, {"abs", Func::Abs},
    }};
    for (const auto& [fname, f] : kFuncs) {
      if (name == fname) {
        if (!accept('(')) fail("expected '(' after function name");
        const int arg = parse_expr();
        if (!accept(')')) fail("expected ')'");
        return b_.call(f, arg);
      }
    }
    pos_ = start;
    fail("unknown identifier '" + std::string(name) + "'");
  }

  std::string_view text_;
  int dim_;
  ExprBuilder& b_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(std::string_view text, int dimension) {
  if (dimension < 1 || dimension > 9)
    throw std::invalid_argument("dimension must be in 1..9");
  bool blank = true;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
  if (blank) throw ParseError("empty expression", 0);
  ExprBuilder b(dimension);
  Parser p(text, dimension, b);
  return b.finish(p.parse());
}

Expression Expression::constant(double value) {
  ExprBuilder b(1);
  return b.finish(b.constant(value));
}

Expression Expression::variable(int var, int dimension) {
  if (var != kTimeVar && (var < 0 || var >= dimension))
    throw std::invalid_argument("variable index out of range");
  ExprBuilder b(dimension);
  return b.finish(b.variable(var));
}

Expression Expression::sum(const Expression& a, const Expression& b) {
  ExprBuilder builder(std::max(a.dimension(), b.dimension()));
  const int ia = builder.copy(a, static_cast<int>(a.nodes().size()) - 1);
  const int ib = builder.copy(b, static_cast<int>(b.nodes().size()) - 1);
  return builder.finish(builder.binary(BinaryOp::Add, ia, ib));
}

double Expression::eval(std::span<const double> x, double t) const {
  double stack[kMaxStack];
  int top = -1;
  for (const Node& n : nodes_) {
    switch (n.kind) {
      case NodeKind::Constant:
        stack[++top] = n.value;
        break;
      case NodeKind::Variable:
        stack[++top] = (n.var == kTimeVar) ? t : x[static_cast<std::size_t>(n.var)];
        break;
      case NodeKind::Unary:
        stack[top] = -stack[top];
        break;
      case NodeKind::Call:
        stack[top] = apply_func(static_cast<Func>(n.op), stack[top]);
        break;
      case NodeKind::Binary: {
        const double b = stack[top--];
        stack[top] = apply_binary(static_cast<BinaryOp>(n.op), stack[top], b);
        break;
      }
    }
  }
  return stack[0];
}

bool Expression::is_constant() const {
  return nodes_.size() == 1 && nodes_[0].kind == NodeKind::Constant;
}

double Expression::constant_value() const { return nodes_[0].value; }

// --------------------------------------------------------------------------
// Symbolic differentiation.

namespace {

// Emits the derivative of src's subtree at `i` into `b`, returning the new
// node index. Builds d(subtree)/d(var) bottom-up with the builder folding
// literal arithmetic away.
int diff_node(const Expression& src, int i, int var, ExprBuilder& b) {
  const auto& n = src.nodes()[i];
  switch (n.kind) {
    case NodeKind::Constant:
      return b.constant(0.0);
    case NodeKind::Variable:
      return b.constant(n.var == var ? 1.0 : 0.0);
    case NodeKind::Unary:
      return b.unary(UnaryOp::Neg, diff_node(src, n.lhs, var, b));
    case NodeKind::Binary: {
      const auto op = static_cast<BinaryOp>(n.op);
      switch (op) {
        case BinaryOp::Add:
        case BinaryOp::Sub: {
          const int da = diff_node(src, n.lhs, var, b);
          const int db = diff_node(src, n.rhs, var, b);
          return b.binary(op, da, db);
        }
        case BinaryOp::Mul: {
          // u'v + uv'
          const int da = diff_node(src, n.lhs, var, b);
          const int v = b.copy(src, n.rhs);
          const int left = b.binary(BinaryOp::Mul, da, v);
          const int u = b.copy(src, n.lhs);
          const int db = diff_node(src, n.rhs, var, b);
          const int right = b.binary(BinaryOp::Mul, u, db);
          return b.binary(BinaryOp::Add, left, right);
        }
        case BinaryOp::Div: {
          // (u'v - uv') / v^2
          const int da = diff_node(src, n.lhs, var, b);
          const int v1 = b.copy(src, n.rhs);
          const int left = b.binary(BinaryOp::Mul, da, v1);
          const int u = b.copy(src, n.lhs);
          const int db = diff_node(src, n.rhs, var, b);
          const int right = b.binary(BinaryOp::Mul, u, db);
          const int num = b.binary(BinaryOp::Sub, left, right);
          const int v2 = b.copy(src, n.rhs);
          const int den = b.binary(BinaryOp::Pow, v2, b.constant(2.0));
          return b.binary(BinaryOp::Div, num, den);
        }
        case BinaryOp::Pow: {
          const bool exp_const = src.nodes()[n.rhs].kind == NodeKind::Constant;
          const bool base_const = src.nodes()[n.lhs].kind == NodeKind::Constant;
          if (exp_const) {
            // c * u^(c-1) * u' -- valid for negative bases with integer c,
            // unlike the logarithmic form.
            const double c = src.nodes()[n.rhs].value;
            const int cc = b.constant(c);
            const int u = b.copy(src, n.lhs);
            const int p = b.binary(BinaryOp::Pow, u, b.constant(c - 1.0));
            const int cu = b.binary(BinaryOp::Mul, cc, p);
            const int du = diff_node(src, n.lhs, var, b);
            return b.binary(BinaryOp::Mul, cu, du);
          }
          if (base_const) {
            // a^v * log(a) * v'
            const int a1 = b.copy(src, n.lhs);
            const int v = b.copy(src, n.rhs);
            const int p = b.binary(BinaryOp::Pow, a1, v);
            const int la = b.call(Func::Log, b.copy(src, n.lhs));
            const int pl = b.binary(BinaryOp::Mul, p, la);
            const int dv = diff_node(src, n.rhs, var, b);
            return b.binary(BinaryOp::Mul, pl, dv);
          }
          // u^v * (v' * log(u) + v * u' / u)
          const int u1 = b.copy(src, n.lhs);
          const int v1 = b.copy(src, n.rhs);
          const int p = b.binary(BinaryOp::Pow, u1, v1);
          const int dv = diff_node(src, n.rhs, var, b);
          const int lu = b.call(Func::Log, b.copy(src, n.lhs));
          const int t1 = b.binary(BinaryOp::Mul, dv, lu);
          const int v2 = b.copy(src, n.rhs);
          const int du = diff_node(src, n.lhs, var, b);
          const int t2a = b.binary(BinaryOp::Mul, v2, du);
          const int t2 = b.binary(BinaryOp::Div, t2a, b.copy(src, n.lhs));
          const int sum = b.binary(BinaryOp::Add, t1, t2);
          return b.binary(BinaryOp::Mul, p, sum);
        }
      }
      return -1;
    }
    case NodeKind::Call: {
      const auto f = static_cast<Func>(n.op);
      const int du = diff_node(src, n.lhs, var, b);
      switch (f) {
        case Func::Exp: {
          const int e = b.call(Func::Exp, b.copy(src, n.lhs));
          return b.binary(BinaryOp::Mul, e, du);
        }
        case Func::Log:
          return b.binary(BinaryOp::Div, du, b.copy(src, n.lhs));
        case Func::Sin: {
          const int c = b.call(Func::Cos, b.copy(src, n.lhs));
          return b.binary(BinaryOp::Mul, c, du);
        }
        case Func::Cos: {
          const int s = b.call(Func::Sin, b.copy(src, n.lhs));
          const int ns = b.unary(UnaryOp::Neg, s);
          return b.binary(BinaryOp::Mul, ns, du);
        }
        case Func::Tanh: {
          // (1 - tanh(u)^2) * u'
          const int th = b.call(Func::Tanh, b.copy(src, n.lhs));
          const int sq = b.binary(BinaryOp::Pow, th, b.constant(2.0));
          const int one = b.constant(1.0);
          const int sech2 = b.binary(BinaryOp::Sub, one, sq);
          return b.binary(BinaryOp::Mul, sech2, du);
        }
        case Func::Sqrt: {
          const int s = b.call(Func::Sqrt, b.copy(src, n.lhs));
          const int two = b.constant(2.0);
          const int den = b.binary(BinaryOp::Mul, two, s);
          return b.binary(BinaryOp::Div, du, den);
        }
        case Func::Abs: {
          // u/|u| * u'; NaN at u=0 where |u| is not differentiable.
          const int u = b.copy(src, n.lhs);
          const int au = b.call(Func::Abs, b.copy(src, n.lhs));
          const int sgn = b.binary(BinaryOp::Div, u, au);
          return b.binary(BinaryOp::Mul, sgn, du);
        }
      }
      return -1;
    }
  }
  return -1;
}

}  // namespace

Expression Expression::differentiate(int var) const {
  // Any grammar variable is a valid target; one absent from this tree has
  // derivative zero.
  if (var != kTimeVar && (var < 0 || var >= kMaxVariables))
    throw std::invalid_argument("differentiation variable out of range");
  ExprBuilder b(dimension_);
  const int root = diff_node(*this, static_cast<int>(nodes_.size()) - 1, var, b);
  return b.finish(root);
}

// --------------------------------------------------------------------------
// Printing. Parenthesization follows operator precedence so the output
// re-parses to an identical tree.

namespace {

int precedence(const Expression::Node& n) {
  switch (n.kind) {
    case NodeKind::Binary:
      switch (static_cast<BinaryOp>(n.op)) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return 1;
        case BinaryOp::Mul:
        case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
      }
      return 0;
    case NodeKind::Unary: return 3;
    default: return 5;  // atoms
  }
}

void print_node(const Expression& e, int i, std::string& out) {
  const auto& n = e.nodes()[i];
  const int prec = precedence(n);
  auto child = [&](int c, bool needs_parens) {
    if (needs_parens) out += '(';
    print_node(e, c, out);
    if (needs_parens) out += ')';
  };
  switch (n.kind) {
    case NodeKind::Constant: {
      if (n.value < 0 || (n.value == 0 && std::signbit(n.value))) {
        // Negative literals print via unary minus so "a*-2" never appears... it
        // would reparse fine, but "-2^2" must stay -(2^2). Parenthesize instead.
        out += '(' + format_double(n.value) + ')';
      } else {
        out += format_double(n.value);
      }
      break;
    }
    case NodeKind::Variable:
      out += (n.var == kTimeVar) ? "t" : "x" + std::to_string(n.var + 1);
      break;
    case NodeKind::Unary:
      out += '-';
      child(n.lhs, precedence(e.nodes()[n.lhs]) < prec);
      break;
    case NodeKind::Call:
      out += func_name(static_cast<Func>(n.op));
      out += '(';
      print_node(e, n.lhs, out);
      out += ')';
      break;
    case NodeKind::Binary: {
      const auto op = static_cast<BinaryOp>(n.op);
      const char sym = op == BinaryOp::Add   ? '+'
                       : op == BinaryOp::Sub ? '-'
                       : op == BinaryOp::Mul ? '*'
                       : op == BinaryOp::Div ? '/'
                                             : '^';
      const int lp = precedence(e.nodes()[n.lhs]);
      const int rp = precedence(e.nodes()[n.rhs]);
      // '^' is right-associative, the rest left-associative.
      const bool lparen = op == BinaryOp::Pow ? lp <= prec : lp < prec;
      const bool rparen = op == BinaryOp::Pow ? rp < prec : rp <= prec;
      child(n.lhs, lparen);
      out += sym;
      child(n.rhs, rparen);
      break;
    }
  }
}

}  // namespace

std::string Expression::to_string() const {
  std::string out;
  print_node(*this, static_cast<int>(nodes_.size()) - 1, out);
  return out;
}

double central_difference(const Expression& e, std::span<const double> x, double t, int var,
                          double h) {
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> xm(x.begin(), x.end());
  double tp = t, tm = t;
  if (var == kTimeVar) {
    tp += h;
    tm -= h;
  } else {
    xp[static_cast<std::size_t>(var)] += h;
    xm[static_cast<std::size_t>(var)] -= h;
  }
  return (e.eval(xp, tp) - e.eval(xm, tm)) / (2.0 * h);
}

}  // namespace fkmc::expr
