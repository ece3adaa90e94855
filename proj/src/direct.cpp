#include "cvl/direct.hpp"

namespace cvl {

Value lookup_var(const VarRef& r, const EnvA& env, const Globals& g, const Expr& at) {
  switch (r.where) {
    case VarRef::Param: return env.arg;
    case VarRef::Captured: return env.self.as<Closure>().captured[r.index];
    case VarRef::Global: {
      const Value& v = g[r.index];
      if (!v) throw EvalError("'" + at.name + "' used before its definition");
      return v;
    }
    case VarRef::Unresolved: break;
  }
  throw EvalError("unresolved variable '" + at.name + "'");
}

Value close_over(const Expr& lam, const EnvA& env) {
  std::vector<Value> cap;
  cap.reserve(lam.captures.size());
  for (size_t i = 0; i < lam.captures.size(); ++i) {
    const VarRef& r = lam.captures[i];
    cap.push_back(r.where == VarRef::Param ? env.arg : env.self.as<Closure>().captured[r.index]);
  }
  return Value(alloc<const Closure>(&lam, std::move(cap)));
}

Value DirectEvaluator::eval(Context& c, const EnvA& env0, const Expr& e0) {
  EnvA env = env0;
  const Expr* e = &e0;
  for (;;) {
    switch (e->kind) {
      case ExprKind::Const: return e->constant;
      case ExprKind::Var: return lookup_var(e->ref, env, globals_, *e);
      case ExprKind::Lambda: return close_over(*e, env);
      case ExprKind::App: {
        Value f = eval(c, env, *e->kids[0]);
        Value x = eval(c, env, *e->kids[1]);
        if (!f.is(Kind::Closure)) throw EvalError(std::string("cannot apply a ") + kind_name(f.kind()));
        const Closure& cl = f.as<Closure>();
        if (cl.suspended()) {
          env = cl.env;
          e = cl.body;
        } else {
          if (cl.lam->kind != ExprKind::Lambda) throw EvalError("cannot apply a converted closure here");
          e = cl.lam->kids[0].get();
          env = EnvA{std::move(f), std::move(x)};
        }
        continue;
      }
      case ExprKind::If:
        e = truthy(eval(c, env, *e->kids[0])) ? e->kids[1].get() : e->kids[2].get();
        continue;
      case ExprKind::Unary: return apply_prim1(c, e->op, eval(c, env, *e->kids[0]));
      case ExprKind::Binary: {
        Value a = eval(c, env, *e->kids[0]);
        Value b = eval(c, env, *e->kids[1]);
        return apply_prim2(c, e->op, a, b);
      }
      case ExprKind::ForwardJ:
      case ExprKind::ReverseJ:
      case ExprKind::CheckpointReverseJ: {
        Value f = eval(c, env, *e->kids[0]);
        Value x = eval(c, env, *e->kids[1]);
        Value s = eval(c, env, *e->kids[2]);
        auto r = e->kind == ExprKind::ForwardJ ? forward_j(c, *this, f, x, s) : reverse_j(c, *this, f, x, s);
        return make_pair(r.first, r.second);
      }
      default:
        throw EvalError("the direct evaluator cannot run this construct");
    }
  }
}

Value DirectEvaluator::apply_value(Context& c, const Value& f, const Value& x) {
  if (!f.is(Kind::Closure)) throw EvalError(std::string("cannot apply a ") + kind_name(f.kind()));
  const Closure& cl = f.as<Closure>();
  if (cl.suspended()) return eval(c, cl.env, *cl.body);
  if (cl.lam->kind != ExprKind::Lambda) throw EvalError("cannot apply a converted closure here");
  return eval(c, EnvA{f, x}, *cl.lam->kids[0]);
}

Value eval_direct(Context& c, const Globals& g, const EnvA& env, const Expr& e) {
  return DirectEvaluator(g).eval(c, env, e);
}

Value apply_direct(Context& c, const Globals& g, const Value& f, const Value& x) {
  return DirectEvaluator(g).apply_value(c, f, x);
}

}  // namespace cvl
