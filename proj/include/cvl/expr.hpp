// Abstract syntax shared by the parser, both evaluators and CPS conversion.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cvl/value.hpp"

namespace cvl {

enum class ExprKind : uint8_t {
  Const,
  Var,
  Lambda,
  App,
  If,
  Unary,
  Binary,
  ForwardJ,
  ReverseJ,
  CheckpointReverseJ,
  Interrupt,
  Resume,
  // converted-code forms
  Lambda3,
  Lambda4,
  App3,
  App4,
  LimitCheck,
  StepSucc,
};

enum class Prim : uint8_t {
  Sqrt, Sin, Cos, Exp, Log, Atan, Floor, IsZero, IsNull, Car, Cdr,
  Add, Sub, Mul, Div, Lt, Le, Eq, Cons,
};

const char* prim_name(Prim p);
bool prim_is_unary(Prim p);

struct VarRef {
  enum Where : uint8_t { Unresolved, Param, Captured, Global } where = Unresolved;
  int index = -1;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprKind kind;
  int line = 0, col = 0;

  Value constant;                    // Const
  std::string name;                  // Var
  VarRef ref;                        // Var
  Prim op = Prim::Add;               // Unary/Binary
  std::vector<std::string> params;   // Lambda, Lambda3, Lambda4
  std::vector<ExprPtr> kids;         // subexpressions, in evaluation order

  // Lambda*: free variables in first-occurrence order and where each one is
  // fetched from in the environment that creates the closure. Globals are
  // not captured.
  std::vector<std::string> free;
  std::vector<VarRef> captures;

  // Converted-code Interrupt/Resume read the current continuation and limit
  // out of the environment (kContName and kLimitName).
  bool reads_kl = false;
  VarRef k_ref, l_ref;

  explicit Expr(ExprKind k) : kind(k) {}
};

// Names bound by CPS conversion. User identifiers cannot contain '%'.
inline constexpr const char* kContName = "%k";
inline constexpr const char* kCountName = "%n";
inline constexpr const char* kLimitName = "%l";

ExprPtr make_const(Value v, int line = 0, int col = 0);
ExprPtr make_var(std::string name, int line = 0, int col = 0);
ExprPtr make_lambda(std::string param, ExprPtr body, int line = 0, int col = 0);
ExprPtr make_app(ExprPtr f, ExprPtr a, int line = 0, int col = 0);
ExprPtr make_if(ExprPtr c, ExprPtr t, ExprPtr e, int line = 0, int col = 0);
ExprPtr make_unary(Prim op, ExprPtr a, int line = 0, int col = 0);
ExprPtr make_binary(Prim op, ExprPtr a, ExprPtr b, int line = 0, int col = 0);
ExprPtr make_ternary(ExprKind k, ExprPtr a, ExprPtr b, ExprPtr c, int line = 0, int col = 0);
ExprPtr make_resume(ExprPtr z, bool reads_kl = false);
ExprPtr make_interrupt(ExprPtr f, ExprPtr x, ExprPtr budget, bool reads_kl);
ExprPtr make_lambda_n(ExprKind k, std::vector<std::string> params, ExprPtr body);
ExprPtr make_app_n(ExprKind k, std::vector<ExprPtr> parts);
ExprPtr make_limit_check(ExprPtr k, ExprPtr n, ExprPtr l, ExprPtr lam4);
ExprPtr make_step_succ(ExprPtr n);

bool is_lambda(const Expr& e);

// Free variables of e, in first-occurrence order.
std::vector<std::string> free_variables(const Expr& e);

// Number of nodes.
size_t expr_size(const Expr& e);

// True if any Resume node occurs in e.
bool contains_resume(const Expr& e);

}  // namespace cvl
