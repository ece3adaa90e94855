#include "cvl/converted.hpp"

#include "cvl/drivers.hpp"

namespace cvl {

namespace {

constexpr int64_t kInf = StepCount::kInfinite;

class Converter {
 public:
  ExprPtr convert(const ExprPtr& e, ExprPtr k, ExprPtr n, ExprPtr l) {
    return make_limit_check(std::move(k), std::move(n), std::move(l),
                            make_lambda_n(ExprKind::Lambda4, {kContName, kCountName, kLimitName, "%_"}, clause(e)));
  }

 private:
  int fresh_ = 0;

  std::string fresh() { return "%v" + std::to_string(++fresh_); }
  static ExprPtr K() { return make_var(kContName); }
  static ExprPtr N() { return make_var(kCountName); }
  static ExprPtr L() { return make_var(kLimitName); }
  static ExprPtr N1() { return make_step_succ(N()); }
  static ExprPtr deliver(ExprPtr k, ExprPtr n, ExprPtr v) { return make_app_n(ExprKind::App3, {std::move(k), std::move(n), L(), std::move(v)}); }
  static ExprPtr cont(const std::string& x, ExprPtr body) {
    return make_lambda_n(ExprKind::Lambda3, {kCountName, kLimitName, x}, std::move(body));
  }

  // The clause for e, reading its continuation, count and limit from %k %n %l.
  ExprPtr clause(const ExprPtr& e) {
    const auto& kid = e->kids;
    switch (e->kind) {
      case ExprKind::Const:
      case ExprKind::Var: return deliver(K(), N1(), e);
      case ExprKind::Lambda:
        return deliver(K(), N1(),
                       make_lambda_n(ExprKind::Lambda4, {kContName, kCountName, kLimitName, e->params[0]},
                                     convert(kid[0], K(), N(), L())));
      case ExprKind::App: {
        std::string x1 = fresh(), x2 = fresh();
        ExprPtr call = make_app_n(ExprKind::App4, {make_var(x1), K(), N(), L(), make_var(x2)});
        return convert(kid[0], cont(x1, convert(kid[1], cont(x2, call), N(), L())), N1(), L());
      }
      case ExprKind::If: {
        std::string x1 = fresh();
        ExprPtr branch = make_if(make_var(x1), convert(kid[1], K(), N(), L()), convert(kid[2], K(), N(), L()));
        return convert(kid[0], cont(x1, branch), N1(), L());
      }
      case ExprKind::Unary: {
        std::string x1 = fresh();
        return convert(kid[0], cont(x1, deliver(K(), N(), make_unary(e->op, make_var(x1)))), N1(), L());
      }
      case ExprKind::Binary: {
        std::string x1 = fresh(), x2 = fresh();
        ExprPtr inner = cont(x2, deliver(K(), N(), make_binary(e->op, make_var(x1), make_var(x2))));
        return convert(kid[0], cont(x1, convert(kid[1], inner, N(), L())), N1(), L());
      }
      case ExprKind::ForwardJ:
      case ExprKind::ReverseJ:
      case ExprKind::CheckpointReverseJ: {
        std::string x1 = fresh(), x2 = fresh(), x3 = fresh();
        ExprPtr op = make_ternary(e->kind, make_var(x1), make_var(x2), make_var(x3));
        ExprPtr c3 = cont(x3, deliver(K(), N(), op));
        ExprPtr c2 = cont(x2, convert(kid[2], c3, N(), L()));
        return convert(kid[0], cont(x1, convert(kid[1], c2, N(), L())), N1(), L());
      }
      default:
        throw EvalError("CPS conversion: unexpected construct in user code");
    }
  }
};

int64_t steps_of(const Value& v) {
  if (!v.is(Kind::StepCount)) throw EvalError("converted code: expected a step count");
  return v.as<StepCount>().n;
}

// Budgets are captured as step counts, which AD walks leave alone.
int64_t budget_of(const Value& v) {
  if (!v.is(Kind::StepCount) || v.as<StepCount>().n < 1)
    throw EvalError("interrupt: step budget must be a positive step count");
  return v.as<StepCount>().n;
}

}  // namespace

ExprPtr cps_convert(const ExprPtr& e) {
  Converter cv;
  return cv.convert(e, make_var(kContName), make_var(kCountName), make_var(kLimitName));
}

ExprPtr cps_convert_thunk(const ExprPtr& e) {
  return make_lambda_n(ExprKind::Lambda4, {kContName, kCountName, kLimitName, "%_"}, cps_convert(e));
}

ConvertedEvaluator::ConvertedEvaluator() {
  halt_lam_ = resolve(make_lambda_n(ExprKind::Lambda3, {kCountName, kLimitName, "%v"}, make_var("%v")), {});
  halt_ = Value(alloc<const Closure>(halt_lam_.get(), std::vector<Value>{}));
  // The captured budget must not be called l: the lambda's own limit
  // parameter would shadow it.
  auto body = make_interrupt(make_var("%f"), make_var("x"), make_var("%budget"), true);
  auto inner = make_lambda_n(ExprKind::Lambda4, {kContName, kCountName, kLimitName, "x"}, body);
  auto outer = resolve(make_lambda("%f", make_lambda("%budget", inner)), {});
  i_lam_ = outer->kids[0]->kids[0];
  r_lam_ = resolve(make_lambda_n(ExprKind::Lambda4, {kContName, kCountName, kLimitName, "z"},
                                 make_resume(make_var("z"), true)),
                   {});
  r_closure_ = Value(alloc<const Closure>(r_lam_.get(), std::vector<Value>{}));
}

void ConvertedEvaluator::load(Context& c, const Program& p) {
  std::vector<std::string> names;
  for (auto& d : p.defs) names.push_back(d.name);
  defs_.clear();
  for (auto& d : p.defs) {
    if (d.rhs->kind == ExprKind::Lambda) {
      auto lam = make_lambda_n(ExprKind::Lambda4, {kContName, kCountName, kLimitName, d.rhs->params[0]},
                               cps_convert(d.rhs->kids[0]));
      defs_.push_back(resolve(lam, names));
    } else {
      defs_.push_back(resolve(cps_convert_thunk(d.rhs), names));
    }
  }
  main_ = p.main ? resolve(cps_convert_thunk(p.main), names) : nullptr;
  globals_.assign(names.size(), Value());
  for (size_t i = 0; i < defs_.size(); ++i) {
    Value clo = close(*defs_[i], Env{});
    if (p.defs[i].rhs->kind == ExprKind::Lambda) {
      globals_[i] = clo;
    } else {
      globals_[i] = apply4(c, clo, halt_, 0, kInf, bottom_value()).v;
    }
  }
  for (auto& g : globals_) freeze(g);
}

Value ConvertedEvaluator::lookup(const VarRef& r, const Env& env, const Expr& at) const {
  switch (r.where) {
    case VarRef::Param: return env.args[r.index];
    case VarRef::Captured: return env.self.as<Closure>().captured[r.index];
    case VarRef::Global: {
      const Value& v = globals_[r.index];
      if (!v) throw EvalError("'" + at.name + "' used before its definition");
      return v;
    }
    case VarRef::Unresolved: break;
  }
  throw EvalError("unresolved variable '" + at.name + "'");
}

Value ConvertedEvaluator::close(const Expr& lam, const Env& env) const {
  std::vector<Value> cap;
  cap.reserve(lam.captures.size());
  for (const VarRef& r : lam.captures)
    cap.push_back(r.where == VarRef::Param ? env.args[r.index] : env.self.as<Closure>().captured[r.index]);
  return Value(alloc<const Closure>(&lam, std::move(cap)));
}

Value ConvertedEvaluator::value_of(Context& c, const Expr& e, const Env& env) {
  switch (e.kind) {
    case ExprKind::Const: return e.constant;
    case ExprKind::Var: return lookup(e.ref, env, e);
    case ExprKind::Lambda3:
    case ExprKind::Lambda4: return close(e, env);
    case ExprKind::StepSucc: return make_steps(steps_of(value_of(c, *e.kids[0], env)) + 1);
    case ExprKind::Unary: return apply_prim1(c, e.op, value_of(c, *e.kids[0], env));
    case ExprKind::Binary: {
      Value a = value_of(c, *e.kids[0], env);
      Value b = value_of(c, *e.kids[1], env);
      return apply_prim2(c, e.op, a, b);
    }
    case ExprKind::ForwardJ:
    case ExprKind::ReverseJ:
    case ExprKind::CheckpointReverseJ: {
      Value f = value_of(c, *e.kids[0], env);
      Value x = value_of(c, *e.kids[1], env);
      Value s = value_of(c, *e.kids[2], env);
      std::pair<Value, Value> r;
      switch (e.kind) {
        case ExprKind::ForwardJ: r = forward_j(c, *this, f, x, s); break;
        case ExprKind::ReverseJ: r = reverse_j(c, *this, f, x, s); break;
        default: r = checkpoint_reverse_j(c, *this, f, x, s); break;
      }
      return make_pair(std::move(r.first), std::move(r.second));
    }
    default:
      return run(c, &e, env);
  }
}

// Evaluates converted code. Every construct that can transfer control is in
// tail position, so this loops instead of recursing.
Value ConvertedEvaluator::run(Context& c, const Expr* e, Env env) {
  for (;;) {
    switch (e->kind) {
      case ExprKind::LimitCheck: {
        Value k = value_of(c, *e->kids[0], env);
        Value n = value_of(c, *e->kids[1], env);
        Value l = value_of(c, *e->kids[2], env);
        const Expr& lam = *e->kids[3];
        Value clo = close(lam, env);
        int64_t lv = steps_of(l);
        if (lv != kInf && steps_of(n) == lv) return Value(alloc<const Capsule>(std::move(k), std::move(clo)));
        env = Env{std::move(clo), {std::move(k), std::move(n), std::move(l), bottom_value()}};
        e = lam.kids[0].get();
        continue;
      }
      case ExprKind::App3: {
        Value f = value_of(c, *e->kids[0], env);
        Value n = value_of(c, *e->kids[1], env);
        Value l = value_of(c, *e->kids[2], env);
        Value v = value_of(c, *e->kids[3], env);
        if (!f.is(Kind::Closure) || f.as<Closure>().suspended() || f.as<Closure>().lam->kind != ExprKind::Lambda3)
          throw EvalError("converted code: continuation expected");
        const Expr* lam = f.as<Closure>().lam;
        if (lam == halt_lam_.get()) {
          c.halt_steps = steps_of(n);
          return v;
        }
        e = lam->kids[0].get();
        env = Env{std::move(f), {std::move(n), std::move(l), std::move(v), Value()}};
        continue;
      }
      case ExprKind::App4: {
        Value f = value_of(c, *e->kids[0], env);
        Value k = value_of(c, *e->kids[1], env);
        Value n = value_of(c, *e->kids[2], env);
        Value l = value_of(c, *e->kids[3], env);
        Value x = value_of(c, *e->kids[4], env);
        e = enter4(f, std::move(k), std::move(n), std::move(l), std::move(x), env);
        continue;
      }
      case ExprKind::If:
        e = truthy(value_of(c, *e->kids[0], env)) ? e->kids[1].get() : e->kids[2].get();
        continue;
      case ExprKind::Interrupt: {
        Value f = value_of(c, *e->kids[0], env);
        Value x = value_of(c, *e->kids[1], env);
        int64_t budget = budget_of(value_of(c, *e->kids[2], env));
        Value k = lookup(e->k_ref, env, *e);
        int64_t l = steps_of(lookup(e->l_ref, env, *e));
        if (l == kInf) {
          e = enter4(f, std::move(k), make_steps(0), make_steps(budget), std::move(x), env);
          continue;
        }
        if (budget <= l) throw EvalError("interrupt: nested budget must exceed the enclosing limit");
        Outcome o = apply4(c, f, k, 0, l, x);
        if (o.tag == Outcome::Interrupted) {
          const Capsule& z = o.v.as<Capsule>();
          return Value(alloc<const Capsule>(z.k, make_I(z.f, budget - l)));
        }
        return o.v;
      }
      case ExprKind::Resume: {
        Value z = value_of(c, *e->kids[0], env);
        if (!z.is(Kind::Capsule)) throw EvalError(std::string("resume: expected a capsule, got ") + kind_name(z.kind()));
        Value l = lookup(e->l_ref, env, *e);
        const Capsule& cap = z.as<Capsule>();
        Value f = cap.f, k = cap.k;
        e = enter4(f, std::move(k), make_steps(0), std::move(l), bottom_value(), env);
        continue;
      }
      default:
        return value_of(c, *e, env);
    }
  }
}

const Expr* ConvertedEvaluator::enter4(const Value& f, Value k, Value n, Value l, Value x, Env& env) {
  if (!f.is(Kind::Closure)) throw EvalError(std::string("cannot apply a ") + kind_name(f.kind()));
  const Closure& cl = f.as<Closure>();
  if (cl.suspended() || cl.lam->kind != ExprKind::Lambda4) throw EvalError("converted code: cannot apply this closure");
  env = Env{f, {std::move(k), std::move(n), std::move(l), std::move(x)}};
  return cl.lam->kids[0].get();
}

Outcome ConvertedEvaluator::outcome(Context& c, Value v) const {
  if (v.is(Kind::Capsule)) return Outcome{Outcome::Interrupted, std::move(v), 0};
  return Outcome{Outcome::Done, std::move(v), c.halt_steps};
}

Outcome ConvertedEvaluator::apply4(Context& c, const Value& f, const Value& k, int64_t n, int64_t l, const Value& x) {
  Env env;
  const Expr* body = enter4(f, k, make_steps(n), make_steps(l), x, env);
  return outcome(c, run(c, body, std::move(env)));
}

Outcome ConvertedEvaluator::apply(Context& c, const Value& f, const Value& x) { return apply4(c, f, halt_, 0, kInf, x); }

int64_t ConvertedEvaluator::primops(Context& c, const Value& f, const Value& x) { return apply(c, f, x).n; }

Value ConvertedEvaluator::interrupt(Context& c, const Value& f, const Value& x, int64_t l) {
  if (l <= 0) throw EvalError("interrupt: step budget must be positive");
  Outcome o = apply4(c, f, halt_, 0, l, x);
  if (o.tag == Outcome::Done) throw RanToCompletion();
  return o.v;
}

Outcome ConvertedEvaluator::resume(Context& c, const Value& z) {
  if (!z.is(Kind::Capsule)) throw EvalError(std::string("resume: expected a capsule, got ") + kind_name(z.kind()));
  return apply4(c, z.as<Capsule>().f, z.as<Capsule>().k, 0, kInf, bottom_value());
}

Value ConvertedEvaluator::make_I(const Value& f, int64_t l) {
  return Value(alloc<const Closure>(i_lam_.get(), std::vector<Value>{f, make_steps(l)}));
}

Value ConvertedEvaluator::make_R() { return r_closure_; }

Outcome ConvertedEvaluator::run_main(Context& c) {
  if (!main_) throw EvalError("program has no main expression");
  return apply4(c, close(*main_, Env{}), halt_, 0, kInf, bottom_value());
}

}  // namespace cvl
