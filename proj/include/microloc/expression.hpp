#pragma once

// Small arithmetic expression language used for Custom metric components.
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | func '(' expr ')' | '(' expr ')'
// func is one of sin cos exp log sqrt. Names resolve to coordinates first,
// then to named constants (pi is always defined).

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "microloc/dual.hpp"
#include "microloc/error.hpp"

namespace microloc {

class Expression {
 public:
  Expression() = default;

  static Expression parse(std::string_view text, const std::vector<std::string>& variables,
                          const std::map<std::string, double>& constants = {});
  static Expression constant(double value);

  template <class T>
  T eval(const std::array<T, 4>& vars) const {
    return eval_node(root_, vars);
  }

  const std::string& source() const { return source_; }
  bool is_zero() const;

 private:
  enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Sqrt };
  struct Node {
    Op op = Op::Const;
    double value = 0.0;
    int index = 0;
    int lhs = -1;
    int rhs = -1;
  };

  template <class T>
  T eval_node(int id, const std::array<T, 4>& vars) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::Const: return T(n.value);
      case Op::Var: return vars[n.index];
      case Op::Add: return eval_node(n.lhs, vars) + eval_node(n.rhs, vars);
      case Op::Sub: return eval_node(n.lhs, vars) - eval_node(n.rhs, vars);
      case Op::Mul: return eval_node(n.lhs, vars) * eval_node(n.rhs, vars);
      case Op::Div: return eval_node(n.lhs, vars) / eval_node(n.rhs, vars);
      case Op::Pow: {
        const Node& e = nodes_[n.rhs];
        if (e.op == Op::Const) return real_pow(eval_node(n.lhs, vars), e.value);
        return general_pow(eval_node(n.lhs, vars), eval_node(n.rhs, vars));
      }
      case Op::Neg: return T(0.0) - eval_node(n.lhs, vars);
      case Op::Sin: return sin(eval_node(n.lhs, vars));
      case Op::Cos: return cos(eval_node(n.lhs, vars));
      case Op::Exp: return exp(eval_node(n.lhs, vars));
      case Op::Log: return log(eval_node(n.lhs, vars));
      case Op::Sqrt: return sqrt(eval_node(n.lhs, vars));
    }
    return T(0.0);
  }

  friend class ExpressionParser;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::string source_;
};

}  // namespace microloc
