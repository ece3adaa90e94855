#include "cvl/expr.hpp"

#include <algorithm>
#include <unordered_set>

namespace cvl {

const char* prim_name(Prim p) {
  switch (p) {
    case Prim::Sqrt: return "sqrt";
    case Prim::Sin: return "sin";
    case Prim::Cos: return "cos";
    case Prim::Exp: return "exp";
    case Prim::Log: return "log";
    case Prim::Atan: return "atan";
    case Prim::Floor: return "floor";
    case Prim::IsZero: return "zero?";
    case Prim::IsNull: return "null?";
    case Prim::Car: return "car";
    case Prim::Cdr: return "cdr";
    case Prim::Add: return "+";
    case Prim::Sub: return "-";
    case Prim::Mul: return "*";
    case Prim::Div: return "/";
    case Prim::Lt: return "<";
    case Prim::Le: return "<=";
    case Prim::Eq: return "=";
    case Prim::Cons: return "cons";
  }
  return "?";
}

bool prim_is_unary(Prim p) { return p <= Prim::Cdr; }

static std::shared_ptr<Expr> node(ExprKind k, int line, int col) {
  auto e = std::make_shared<Expr>(k);
  e->line = line;
  e->col = col;
  return e;
}

ExprPtr make_const(Value v, int line, int col) {
  auto e = node(ExprKind::Const, line, col);
  e->constant = std::move(v);
  freeze(e->constant);
  return e;
}

ExprPtr make_var(std::string name, int line, int col) {
  auto e = node(ExprKind::Var, line, col);
  e->name = std::move(name);
  return e;
}

ExprPtr make_lambda(std::string param, ExprPtr body, int line, int col) {
  auto e = node(ExprKind::Lambda, line, col);
  e->params.push_back(std::move(param));
  e->kids.push_back(std::move(body));
  return e;
}

ExprPtr make_app(ExprPtr f, ExprPtr a, int line, int col) {
  auto e = node(ExprKind::App, line, col);
  e->kids = {std::move(f), std::move(a)};
  return e;
}

ExprPtr make_if(ExprPtr c, ExprPtr t, ExprPtr f, int line, int col) {
  auto e = node(ExprKind::If, line, col);
  e->kids = {std::move(c), std::move(t), std::move(f)};
  return e;
}

ExprPtr make_unary(Prim op, ExprPtr a, int line, int col) {
  auto e = node(ExprKind::Unary, line, col);
  e->op = op;
  e->kids = {std::move(a)};
  return e;
}

ExprPtr make_binary(Prim op, ExprPtr a, ExprPtr b, int line, int col) {
  auto e = node(ExprKind::Binary, line, col);
  e->op = op;
  e->kids = {std::move(a), std::move(b)};
  return e;
}

ExprPtr make_ternary(ExprKind k, ExprPtr a, ExprPtr b, ExprPtr c, int line, int col) {
  auto e = node(k, line, col);
  e->kids = {std::move(a), std::move(b), std::move(c)};
  return e;
}

ExprPtr make_resume(ExprPtr z, bool reads_kl) {
  auto e = node(ExprKind::Resume, 0, 0);
  e->kids = {std::move(z)};
  e->reads_kl = reads_kl;
  return e;
}

ExprPtr make_interrupt(ExprPtr f, ExprPtr x, ExprPtr budget, bool reads_kl) {
  auto e = node(ExprKind::Interrupt, 0, 0);
  e->kids = {std::move(f), std::move(x), std::move(budget)};
  e->reads_kl = reads_kl;
  return e;
}

ExprPtr make_lambda_n(ExprKind k, std::vector<std::string> params, ExprPtr body) {
  auto e = node(k, 0, 0);
  e->params = std::move(params);
  e->kids = {std::move(body)};
  return e;
}

ExprPtr make_app_n(ExprKind k, std::vector<ExprPtr> parts) {
  auto e = node(k, 0, 0);
  e->kids = std::move(parts);
  return e;
}

ExprPtr make_limit_check(ExprPtr k, ExprPtr n, ExprPtr l, ExprPtr lam4) {
  auto e = node(ExprKind::LimitCheck, 0, 0);
  e->kids = {std::move(k), std::move(n), std::move(l), std::move(lam4)};
  return e;
}

ExprPtr make_step_succ(ExprPtr n) {
  auto e = node(ExprKind::StepSucc, 0, 0);
  e->kids = {std::move(n)};
  return e;
}

bool is_lambda(const Expr& e) {
  return e.kind == ExprKind::Lambda || e.kind == ExprKind::Lambda3 || e.kind == ExprKind::Lambda4;
}

namespace {

struct FreeVars {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::vector<std::string> bound;

  bool is_bound(const std::string& n) const {
    return std::find(bound.begin(), bound.end(), n) != bound.end();
  }
  void note(const std::string& n) {
    if (!is_bound(n) && seen.insert(n).second) out.push_back(n);
  }

  void walk(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Var:
        note(e.name);
        return;
      case ExprKind::Lambda:
      case ExprKind::Lambda3:
      case ExprKind::Lambda4: {
        size_t mark = bound.size();
        for (auto& p : e.params) bound.push_back(p);
        walk(*e.kids[0]);
        bound.resize(mark);
        return;
      }
      case ExprKind::Interrupt:
      case ExprKind::Resume:
        if (e.reads_kl) {
          note(kContName);
          note(kLimitName);
        }
        break;
      default:
        break;
    }
    for (auto& k : e.kids) walk(*k);
  }
};

}  // namespace

std::vector<std::string> free_variables(const Expr& e) {
  FreeVars fv;
  fv.walk(e);
  return fv.out;
}

size_t expr_size(const Expr& e) {
  size_t n = 1;
  for (auto& k : e.kids) n += expr_size(*k);
  return n;
}

bool contains_resume(const Expr& e) {
  if (e.kind == ExprKind::Resume) return true;
  for (auto& k : e.kids)
    if (contains_resume(*k)) return true;
  return false;
}

}  // namespace cvl
