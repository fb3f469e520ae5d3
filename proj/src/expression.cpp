#include "microloc/expression.hpp"

#include <cctype>
#include <cstdlib>

namespace microloc {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, const std::vector<std::string>& vars,
                   const std::map<std::string, double>& constants, Expression& out)
      : text_(text), vars_(vars), constants_(constants), out_(out) {}

  int run() {
    int root = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return root;
  }

 private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ConfigError,
                "expression '" + std::string(text_) + "' column " + std::to_string(pos_ + 1) + ": " + msg);
  }

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

  int add(Op op, double value = 0.0, int index = 0, int lhs = -1, int rhs = -1) {
    out_.nodes_.push_back({op, value, index, lhs, rhs});
    return static_cast<int>(out_.nodes_.size()) - 1;
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (accept('+')) lhs = add(Op::Add, 0, 0, lhs, term());
      else if (accept('-')) lhs = add(Op::Sub, 0, 0, lhs, term());
      else return lhs;
    }
  }

  int term() {
    int lhs = unary();
    for (;;) {
      if (accept('*')) lhs = add(Op::Mul, 0, 0, lhs, unary());
      else if (accept('/')) lhs = add(Op::Div, 0, 0, lhs, unary());
      else return lhs;
    }
  }

  int unary() {
    if (accept('-')) return add(Op::Neg, 0, 0, unary());
    if (accept('+')) return unary();
    return power();
  }

  int power() {
    int base = primary();
    if (accept('^')) {
      int exponent = unary();
      // fold a constant exponent so integer powers keep negative bases valid
      const auto& e = out_.nodes_[exponent];
      if (e.op == Op::Neg && out_.nodes_[e.lhs].op == Op::Const) {
        exponent = add(Op::Const, -out_.nodes_[e.lhs].value);
      }
      return add(Op::Pow, 0, 0, base, exponent);
    }
    return base;
  }

  int primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      int inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::string buf(text_.substr(pos_));
      char* end = nullptr;
      double v = std::strtod(buf.c_str(), &end);
      if (end == buf.c_str()) fail("bad number");
      pos_ += static_cast<size_t>(end - buf.c_str());
      return add(Op::Const, v);
    }
    size_t start = pos_;
    // identifiers are ASCII letters, digits, underscore, or any non-ASCII byte (θ, φ)
    while (pos_ < text_.size()) {
      unsigned char u = static_cast<unsigned char>(text_[pos_]);
      if (std::isalnum(u) || u == '_' || u >= 0x80) ++pos_;
      else break;
    }
    if (start == pos_) fail("unexpected character '" + std::string(1, c) + "'");
    std::string name(text_.substr(start, pos_ - start));

    static const std::map<std::string, Op> functions = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}};
    if (auto f = functions.find(name); f != functions.end()) {
      if (!accept('(')) fail("expected '(' after " + name);
      int arg = expr();
      if (!accept(')')) fail("expected ')'");
      return add(f->second, 0, 0, arg);
    }
    for (size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i] == name) return add(Op::Var, 0, static_cast<int>(i));
    }
    if (auto k = constants_.find(name); k != constants_.end()) return add(Op::Const, k->second);
    if (name == "pi") return add(Op::Const, 3.14159265358979323846);
    pos_ = start;
    fail("unknown name '" + name + "'");
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  const std::map<std::string, double>& constants_;
  Expression& out_;
  size_t pos_ = 0;
};

Expression Expression::parse(std::string_view text, const std::vector<std::string>& variables,
                             const std::map<std::string, double>& constants) {
  if (variables.size() > 4) throw Error(ErrorCode::InvalidArgument, "at most four coordinates");
  Expression e;
  e.source_ = std::string(text);
  ExpressionParser parser(text, variables, constants, e);
  e.root_ = parser.run();
  return e;
}

Expression Expression::constant(double value) {
  Expression e;
  e.nodes_.push_back({Op::Const, value, 0, -1, -1});
  e.root_ = 0;
  e.source_ = std::to_string(value);
  return e;
}

bool Expression::is_zero() const {
  return root_ < 0 || (nodes_[root_].op == Op::Const && nodes_[root_].value == 0.0);
}

}  // namespace microloc
