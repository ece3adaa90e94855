#include "cvl/machine.hpp"

#include "cvl/drivers.hpp"

namespace cvl {

namespace {

constexpr int64_t kInf = StepCount::kInfinite;

std::shared_ptr<Frame> frame(FrameKind fk, const Value& next) {
  auto f = alloc<Frame>(fk);
  f->next = next;
  return f;
}

// Budgets are captured as step counts, which AD walks leave alone.
int64_t budget_of(const Value& v) {
  if (!v.is(Kind::StepCount) || v.as<StepCount>().n < 1)
    throw EvalError("interrupt: step budget must be a positive step count");
  return v.as<StepCount>().n;
}

}  // namespace

CpsMachine::CpsMachine() {
  // lambda f. lambda budget. lambda x. (interrupt f x budget), resolved so the
  // innermost lambda captures f and budget in that order.
  auto inner = make_lambda("x", make_interrupt(make_var("f"), make_var("x"), make_var("budget"), false));
  auto outer = resolve(make_lambda("f", make_lambda("budget", inner)), {});
  i_lam_ = outer->kids[0]->kids[0];
  r_lam_ = resolve(make_lambda("z", make_resume(make_var("z"))), {});
  r_closure_ = Value(alloc<const Closure>(r_lam_.get(), std::vector<Value>{}));
}

void CpsMachine::load(Context& c, const Program& p) {
  std::vector<std::string> names;
  for (auto& d : p.defs) names.push_back(d.name);
  prog_ = Program{};
  for (auto& d : p.defs) prog_.defs.push_back({d.name, resolve(d.rhs, names)});
  if (p.main) prog_.main = resolve(p.main, names);
  globals_.assign(names.size(), Value());
  for (size_t i = 0; i < prog_.defs.size(); ++i) {
    const Expr& rhs = *prog_.defs[i].rhs;
    if (rhs.kind == ExprKind::Lambda) {
      globals_[i] = close_over(rhs, EnvA{});
    } else {
      Outcome o = eval(c, rhs, EnvA{}, halt_frame(), 0, kInf);
      globals_[i] = o.v;
    }
  }
  for (auto& g : globals_) freeze(g);
}

Outcome CpsMachine::eval(Context& c, const Expr& e, const EnvA& env, const Value& k, int64_t n, int64_t l) {
  return run(c, Mode::Eval, &e, env, k, Value(), Value(), n, l);
}

Outcome CpsMachine::apply_k(Context& c, const Value& f, const Value& x, const Value& k, int64_t n, int64_t l) {
  return run(c, Mode::Apply, nullptr, EnvA{}, k, f, x, n, l);
}

Outcome CpsMachine::apply(Context& c, const Value& f, const Value& x) { return apply_k(c, f, x, halt_frame(), 0, kInf); }

int64_t CpsMachine::primops(Context& c, const Value& f, const Value& x) { return apply(c, f, x).n; }

Value CpsMachine::interrupt(Context& c, const Value& f, const Value& x, int64_t l) {
  if (l <= 0) throw EvalError("interrupt: step budget must be positive");
  Outcome o = apply_k(c, f, x, halt_frame(), 0, l);
  if (o.tag == Outcome::Done) throw RanToCompletion();
  return o.v;
}

Outcome CpsMachine::resume(Context& c, const Value& z) {
  if (!z.is(Kind::Capsule)) throw EvalError(std::string("resume: expected a capsule, got ") + kind_name(z.kind()));
  return apply_k(c, z.as<Capsule>().f, bottom_value(), z.as<Capsule>().k, 0, kInf);
}

Value CpsMachine::make_I(const Value& f, int64_t l) {
  return Value(alloc<const Closure>(i_lam_.get(), std::vector<Value>{f, make_steps(l)}));
}

Value CpsMachine::make_R() { return r_closure_; }

Outcome CpsMachine::run_main(Context& c) {
  if (!prog_.main) throw EvalError("program has no main expression");
  return eval(c, *prog_.main, EnvA{}, halt_frame(), 0, kInf);
}

// Registers: e/env for Eval; v/k for Return; v (callee), x, k for Apply.
Outcome CpsMachine::run(Context& c, Mode mode, const Expr* e, EnvA env, Value k, Value v, Value x, int64_t n,
                        int64_t l) {
  for (;;) {
    switch (mode) {
      case Mode::Eval: {
        if (l != kInf && n == l) {
          Value susp(alloc<const Closure>(e, std::move(env)));
          return Outcome{Outcome::Interrupted, Value(alloc<const Capsule>(std::move(k), std::move(susp))), n};
        }
        ++n;
        switch (e->kind) {
          case ExprKind::Const:
            v = e->constant;
            mode = Mode::Return;
            break;
          case ExprKind::Var:
            v = lookup_var(e->ref, env, globals_, *e);
            mode = Mode::Return;
            break;
          case ExprKind::Lambda:
            v = close_over(*e, env);
            mode = Mode::Return;
            break;
          case ExprKind::App: {
            auto fr = frame(FrameKind::AppArg, k);
            fr->e1 = e->kids[1].get();
            fr->env = env;
            k = Value(fr);
            e = e->kids[0].get();
            break;
          }
          case ExprKind::If: {
            auto fr = frame(FrameKind::IfBranch, k);
            fr->e1 = e->kids[1].get();
            fr->e2 = e->kids[2].get();
            fr->env = env;
            k = Value(fr);
            e = e->kids[0].get();
            break;
          }
          case ExprKind::Unary: {
            auto fr = frame(FrameKind::Unary, k);
            fr->op = static_cast<uint8_t>(e->op);
            k = Value(fr);
            e = e->kids[0].get();
            break;
          }
          case ExprKind::Binary: {
            auto fr = frame(FrameKind::BinArg, k);
            fr->op = static_cast<uint8_t>(e->op);
            fr->e1 = e->kids[1].get();
            fr->env = env;
            k = Value(fr);
            e = e->kids[0].get();
            break;
          }
          case ExprKind::ForwardJ:
          case ExprKind::ReverseJ:
          case ExprKind::CheckpointReverseJ:
          case ExprKind::Interrupt: {
            bool ad = e->kind != ExprKind::Interrupt;
            auto fr = frame(ad ? FrameKind::Ad1 : FrameKind::Int1, k);
            fr->op = static_cast<uint8_t>(e->kind);
            fr->e1 = e->kids[1].get();
            fr->e2 = e->kids[2].get();
            fr->env = env;
            k = Value(fr);
            e = e->kids[0].get();
            break;
          }
          case ExprKind::Resume: {
            k = Value(frame(FrameKind::Resume, k));
            e = e->kids[0].get();
            break;
          }
          default:
            throw EvalError("the CPS interpreter cannot run converted code");
        }
        break;
      }

      case Mode::Return: {
        const Frame& fr = k.as<Frame>();
        switch (fr.fk) {
          case FrameKind::Halt: return Outcome{Outcome::Done, std::move(v), n};
          case FrameKind::AppArg: {
            auto nf = frame(FrameKind::AppCall, fr.next);
            nf->v1 = std::move(v);
            e = fr.e1;
            env = fr.env;
            k = Value(nf);
            mode = Mode::Eval;
            break;
          }
          case FrameKind::AppCall:
            x = std::move(v);
            v = fr.v1;
            k = Value(fr.next);
            mode = Mode::Apply;
            break;
          case FrameKind::IfBranch:
            e = truthy(v) ? fr.e1 : fr.e2;
            env = fr.env;
            k = Value(fr.next);
            mode = Mode::Eval;
            break;
          case FrameKind::Unary:
            v = apply_prim1(c, static_cast<Prim>(fr.op), v);
            k = Value(fr.next);
            break;
          case FrameKind::BinArg: {
            auto nf = frame(FrameKind::BinOp, fr.next);
            nf->op = fr.op;
            nf->v1 = std::move(v);
            e = fr.e1;
            env = fr.env;
            k = Value(nf);
            mode = Mode::Eval;
            break;
          }
          case FrameKind::BinOp:
            v = apply_prim2(c, static_cast<Prim>(fr.op), fr.v1, v);
            k = Value(fr.next);
            break;
          case FrameKind::Ad1:
          case FrameKind::Int1: {
            auto nf = frame(fr.fk == FrameKind::Ad1 ? FrameKind::Ad2 : FrameKind::Int2, fr.next);
            nf->op = fr.op;
            nf->e2 = fr.e2;
            nf->env = fr.env;
            nf->v1 = std::move(v);
            e = fr.e1;
            env = fr.env;
            k = Value(nf);
            mode = Mode::Eval;
            break;
          }
          case FrameKind::Ad2:
          case FrameKind::Int2: {
            auto nf = frame(fr.fk == FrameKind::Ad2 ? FrameKind::Ad3 : FrameKind::Int3, fr.next);
            nf->op = fr.op;
            nf->v1 = fr.v1;
            nf->v2 = std::move(v);
            e = fr.e2;
            env = fr.env;
            k = Value(nf);
            mode = Mode::Eval;
            break;
          }
          case FrameKind::Ad3: {
            // Atomic: the operator runs its own count from zero with no limit.
            std::pair<Value, Value> r;
            switch (static_cast<ExprKind>(fr.op)) {
              case ExprKind::ForwardJ: r = forward_j(c, *this, fr.v1, fr.v2, v); break;
              case ExprKind::ReverseJ: r = reverse_j(c, *this, fr.v1, fr.v2, v); break;
              default: r = checkpoint_reverse_j(c, *this, fr.v1, fr.v2, v); break;
            }
            v = make_pair(std::move(r.first), std::move(r.second));
            k = Value(fr.next);
            break;
          }
          case FrameKind::Int3: {
            int64_t budget = budget_of(v);
            Value f = fr.v1, arg = fr.v2, next = fr.next;
            if (l == kInf) {
              v = std::move(f);
              x = std::move(arg);
              k = std::move(next);
              n = 0;
              l = budget;
              mode = Mode::Apply;
              break;
            }
            if (budget <= l) throw EvalError("interrupt: nested budget must exceed the enclosing limit");
            Outcome o = apply_k(c, f, arg, next, 0, l);
            if (o.tag == Outcome::Interrupted) {
              const Capsule& z = o.v.as<Capsule>();
              o.v = Value(alloc<const Capsule>(z.k, make_I(z.f, budget - l)));
            }
            return o;
          }
          case FrameKind::Resume: {
            if (!v.is(Kind::Capsule))
              throw EvalError(std::string("resume: expected a capsule, got ") + kind_name(v.kind()));
            const Capsule& z = v.as<Capsule>();
            x = bottom_value();
            k = z.k;
            v = Value(z.f);
            n = 0;
            mode = Mode::Apply;
            break;
          }
        }
        break;
      }

      case Mode::Apply: {
        if (!v.is(Kind::Closure)) throw EvalError(std::string("cannot apply a ") + kind_name(v.kind()));
        const Closure& cl = v.as<Closure>();
        if (cl.suspended()) {
          e = cl.body;
          env = cl.env;
        } else {
          if (cl.lam->kind != ExprKind::Lambda) throw EvalError("cannot apply a converted closure here");
          e = cl.lam->kids[0].get();
          env = EnvA{std::move(v), std::move(x)};
        }
        v = Value();
        x = Value();
        mode = Mode::Eval;
        break;
      }
    }
  }
}

}  // namespace cvl
