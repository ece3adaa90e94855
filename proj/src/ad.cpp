#include "cvl/ad.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace cvl {

// Cells created at one nesting level, in creation order.
struct TapeRegistry {
  Context& c;
  int level;
  std::vector<Value> cells;
  TapeRegistry* saved = nullptr;

  TapeRegistry(Context& ctx, int lv) : c(ctx), level(lv) {
    if (static_cast<int>(c.registries.size()) <= lv) c.registries.resize(lv + 1, nullptr);
    saved = c.registries[lv];
    c.registries[lv] = this;
  }
  ~TapeRegistry() {
    c.registries[level] = saved;
    c.counters.live_tape -= static_cast<int64_t>(cells.size());
    // Drop parent links newest-first so no release chain recurses deeply.
    for (auto it = cells.rbegin(); it != cells.rend(); ++it) {
      auto& t = const_cast<Tape&>(it->as<Tape>());
      t.parent[0] = t.parent[1] = Value();
      t.partial[0] = t.partial[1] = Value();
      t.cotangent = Value();
    }
  }
  TapeRegistry(const TapeRegistry&) = delete;
  TapeRegistry& operator=(const TapeRegistry&) = delete;
};

namespace {

const Value& one() {
  static const Value v = make_real(1.0);
  return v;
}

const Value& minus_one() {
  static const Value v = make_real(-1.0);
  return v;
}

Value new_cell(Context& c, Value primal, int level) {
  if (level >= static_cast<int>(c.registries.size()) || !c.registries[level])
    throw EvalError("tape value used outside its reverse-mode operator");
  auto cell = alloc<Tape>(std::move(primal), level, c.next_cell_id++);
  Value v(cell);
  c.registries[level]->cells.push_back(v);
  if (++c.counters.live_tape > c.counters.peak_tape) c.counters.peak_tape = c.counters.live_tape;
  return v;
}

const Value& primal_of(const Value& v) {
  return v.kind() == Kind::Dual ? v.as<Dual>().primal : v.as<Tape>().primal;
}

[[noreturn]] void type_error(Prim op, const Value& v) {
  throw EvalError(std::string(prim_name(op)) + ": expected a number, got " + kind_name(v.kind()));
}

double base1(Prim op, double x) {
  switch (op) {
    case Prim::Sqrt:
      if (x < 0) throw EvalError("sqrt: negative argument");
      return std::sqrt(x);
    case Prim::Sin: return std::sin(x);
    case Prim::Cos: return std::cos(x);
    case Prim::Exp: return std::exp(x);
    case Prim::Log:
      if (x <= 0) throw EvalError("log: non-positive argument");
      return std::log(x);
    case Prim::Atan: return std::atan(x);
    case Prim::Floor: return std::floor(x);
    default: break;
  }
  throw EvalError("not a numeric unary builtin");
}

double base2(Prim op, double x, double y) {
  switch (op) {
    case Prim::Add: return x + y;
    case Prim::Sub: return x - y;
    case Prim::Mul: return x * y;
    case Prim::Div:
      if (y == 0) throw EvalError("/: division by zero");
      return x / y;
    default: break;
  }
  throw EvalError("not a numeric binary builtin");
}

Value neg(Context& c, const Value& v) { return lift_binary(c, Prim::Mul, minus_one(), v); }

Value scaled(Context& c, const Value& partial, const Value& t) {
  if (partial.get() == one().get()) return t;
  return lift_binary(c, Prim::Mul, partial, t);
}

// Builds the result at level L from its primal and the local partials of the
// operands that live at L.
Value combine(Context& c, Kind k, int L, Value p, const Value* a, const Value& da, const Value* b,
              const Value& db) {
  if (k == Kind::Dual) {
    Value t;
    if (a) t = scaled(c, da, a->as<Dual>().tangent);
    if (b) {
      Value tb = scaled(c, db, b->as<Dual>().tangent);
      t = t ? lift_binary(c, Prim::Add, t, tb) : tb;
    }
    return Value(alloc<const Dual>(std::move(p), std::move(t), L));
  }
  Value cell = new_cell(c, std::move(p), L);
  auto& t = const_cast<Tape&>(cell.as<Tape>());
  if (a) {
    t.parent[t.nparents] = *a;
    t.partial[t.nparents++] = da;
  }
  if (b) {
    t.parent[t.nparents] = *b;
    t.partial[t.nparents++] = db;
  }
  return cell;
}

void accumulate(Context& c, const Tape& t, Value contrib) {
  if (!t.cotangent) t.cotangent = std::move(contrib);
  else t.cotangent = lift_binary(c, Prim::Add, t.cotangent, contrib);
}

void sweep(Context& c, TapeRegistry& reg) {
  for (auto it = reg.cells.rbegin(); it != reg.cells.rend(); ++it) {
    const Tape& t = it->as<Tape>();
    if (!t.cotangent) continue;
    for (int j = 0; j < t.nparents; ++j)
      accumulate(c, t.parent[j].as<Tape>(), lift_binary(c, Prim::Mul, t.partial[j], t.cotangent));
  }
}

// Children of composite values, in walk order.
int children(const Value& v, const Value* out[8], std::vector<const Value*>& many) {
  switch (v.kind()) {
    case Kind::Pair:
      out[0] = &v.as<Pair>().car;
      out[1] = &v.as<Pair>().cdr;
      return 2;
    case Kind::Capsule:
      out[0] = &v.as<Capsule>().k;
      out[1] = &v.as<Capsule>().f;
      return 2;
    case Kind::Frame: {
      const Frame& f = v.as<Frame>();
      out[0] = &f.env.self;
      out[1] = &f.env.arg;
      out[2] = &f.v1;
      out[3] = &f.v2;
      out[4] = &f.next;
      return 5;
    }
    case Kind::Closure: {
      const Closure& cl = v.as<Closure>();
      if (cl.suspended()) {
        out[0] = &cl.env.self;
        out[1] = &cl.env.arg;
        return 2;
      }
      many.clear();
      for (auto& x : cl.captured) many.push_back(&x);
      return -1;
    }
    default:
      return 0;
  }
}

Value rebuild(const Value& v, const Value* kids) {
  switch (v.kind()) {
    case Kind::Pair: return make_pair(kids[0], kids[1]);
    case Kind::Capsule: return Value(alloc<const Capsule>(kids[0], kids[1]));
    case Kind::Frame: {
      const Frame& f = v.as<Frame>();
      auto nf = alloc<Frame>(f.fk);
      nf->op = f.op;
      nf->e1 = f.e1;
      nf->e2 = f.e2;
      nf->env = EnvA{kids[0], kids[1]};
      nf->v1 = kids[2];
      nf->v2 = kids[3];
      nf->next = kids[4];
      return Value(nf);
    }
    case Kind::Closure: {
      const Closure& cl = v.as<Closure>();
      if (cl.suspended()) return Value(alloc<const Closure>(cl.body, EnvA{kids[0], kids[1]}));
      return Value(alloc<const Closure>(cl.lam, std::vector<Value>(kids, kids + cl.captured.size())));
    }
    default: return v;
  }
}

bool composite(const Value& v) { return v.is(Kind::Pair) || v.is_container(); }

}  // namespace

int level_of(const Value& v) {
  switch (v.kind()) {
    case Kind::Real: return 0;
    case Kind::Dual: return v.as<Dual>().level;
    case Kind::Tape: return v.as<Tape>().level;
    default: throw EvalError(std::string("expected a number, got ") + kind_name(v.kind()));
  }
}

Value lift_unary(Context& c, Prim op, const Value& a) {
  if (!a.is_numeric()) type_error(op, a);
  if (a.kind() == Kind::Real) return make_real(base1(op, a.as<Real>().x));
  const Value& pa = primal_of(a);
  if (op == Prim::Floor) return lift_unary(c, op, pa);  // zero derivative
  int L = level_of(a);
  Value p = lift_unary(c, op, pa);
  Value d;
  switch (op) {
    case Prim::Sqrt: d = lift_binary(c, Prim::Div, one(), lift_binary(c, Prim::Add, p, p)); break;
    case Prim::Sin: d = lift_unary(c, Prim::Cos, pa); break;
    case Prim::Cos: d = neg(c, lift_unary(c, Prim::Sin, pa)); break;
    case Prim::Exp: d = p; break;
    case Prim::Log: d = lift_binary(c, Prim::Div, one(), pa); break;
    case Prim::Atan:
      d = lift_binary(c, Prim::Div, one(), lift_binary(c, Prim::Add, one(), lift_binary(c, Prim::Mul, pa, pa)));
      break;
    default: throw EvalError("not a numeric unary builtin");
  }
  return combine(c, a.kind(), L, std::move(p), &a, d, nullptr, Value());
}

Value lift_binary(Context& c, Prim op, const Value& a, const Value& b) {
  if (!a.is_numeric()) type_error(op, a);
  if (!b.is_numeric()) type_error(op, b);
  if (a.kind() == Kind::Real && b.kind() == Kind::Real)
    return make_real(base2(op, a.as<Real>().x, b.as<Real>().x));
  int la = level_of(a), lb = level_of(b);
  int L = std::max(la, lb);
  bool ua = la == L, ub = lb == L;
  if (ua && ub && a.kind() != b.kind())
    throw EvalError("forward and reverse values meet at one nesting level");
  Kind k = ua ? a.kind() : b.kind();
  const Value& pa = ua ? primal_of(a) : a;
  const Value& pb = ub ? primal_of(b) : b;
  Value p = lift_binary(c, op, pa, pb);
  Value da, db;
  switch (op) {
    case Prim::Add:
      da = one();
      db = one();
      break;
    case Prim::Sub:
      da = one();
      db = minus_one();
      break;
    case Prim::Mul:
      da = pb;
      db = pa;
      break;
    case Prim::Div:
      if (ua) da = lift_binary(c, Prim::Div, one(), pb);
      if (ub) db = neg(c, lift_binary(c, Prim::Div, p, pb));
      break;
    default: throw EvalError("not a numeric binary builtin");
  }
  return combine(c, k, L, std::move(p), ua ? &a : nullptr, da, ub ? &b : nullptr, db);
}

Value apply_prim1(Context& c, Prim op, const Value& a) {
  switch (op) {
    case Prim::Car:
      if (!a.is(Kind::Pair)) throw EvalError(std::string("car: expected a pair, got ") + kind_name(a.kind()));
      return a.as<Pair>().car;
    case Prim::Cdr:
      if (!a.is(Kind::Pair)) throw EvalError(std::string("cdr: expected a pair, got ") + kind_name(a.kind()));
      return a.as<Pair>().cdr;
    case Prim::IsNull: return make_bool(a.is(Kind::Empty));
    case Prim::IsZero:
      if (!a.is_numeric()) type_error(op, a);
      return make_bool(number_of(a) == 0.0);
    default: return lift_unary(c, op, a);
  }
}

Value apply_prim2(Context& c, Prim op, const Value& a, const Value& b) {
  switch (op) {
    case Prim::Cons: return make_pair(a, b);
    case Prim::Lt:
    case Prim::Le:
    case Prim::Eq: {
      if (!a.is_numeric()) type_error(op, a);
      if (!b.is_numeric()) type_error(op, b);
      double x = number_of(a), y = number_of(b);
      return make_bool(op == Prim::Lt ? x < y : op == Prim::Le ? x <= y : x == y);
    }
    default: return lift_binary(c, op, a, b);
  }
}

Value map_leaves(const Value& root, bool positional, const std::function<Value(const Value&)>& fn) {
  struct Item {
    const Value* v;
    bool inside;
    bool expanded;
    size_t base;
  };
  std::unordered_map<const Obj*, Value> memo;
  std::vector<Item> stack;
  std::vector<Value> results;
  std::vector<const Value*> many;
  const Value* kids[8];
  stack.push_back({&root, !positional, false, 0});
  while (!stack.empty()) {
    Item it = stack.back();
    const Value& v = *it.v;
    if (!it.expanded) {
      if (!v || (it.inside && v.get()->frozen)) {
        results.push_back(v);
        stack.pop_back();
        continue;
      }
      if (v.is_numeric()) {
        if (it.inside) {
          auto m = memo.find(v.get());
          if (m != memo.end()) {
            results.push_back(m->second);
          } else {
            Value r = fn(v);
            memo.emplace(v.get(), r);
            results.push_back(std::move(r));
          }
        } else {
          results.push_back(fn(v));
        }
        stack.pop_back();
        continue;
      }
      if (!composite(v)) {
        results.push_back(v);
        stack.pop_back();
        continue;
      }
      bool inner = it.inside || v.is_container();
      if (inner) {
        auto m = memo.find(v.get());
        if (m != memo.end()) {
          results.push_back(m->second);
          stack.pop_back();
          continue;
        }
      }
      stack.back().expanded = true;
      stack.back().base = results.size();
      int n = children(v, kids, many);
      if (n < 0) {
        for (auto r = many.rbegin(); r != many.rend(); ++r) stack.push_back({*r, inner, false, 0});
      } else {
        for (int i = n - 1; i >= 0; --i) stack.push_back({kids[i], inner, false, 0});
      }
    } else {
      int n = children(v, kids, many);
      const Value* const* orig = n < 0 ? many.data() : kids;
      size_t count = n < 0 ? many.size() : static_cast<size_t>(n);
      bool same = true;
      for (size_t i = 0; i < count; ++i)
        if (results[it.base + i].get() != orig[i]->get()) same = false;
      Value out = same ? v : rebuild(v, results.data() + it.base);
      results.resize(it.base);
      if (it.inside || v.is_container()) memo.emplace(v.get(), out);
      results.push_back(std::move(out));
      stack.pop_back();
    }
  }
  return results.back();
}

void visit_leaves(const Value& root, bool positional, const std::function<void(const Value&)>& fn) {
  std::unordered_set<const Obj*> seen;
  std::vector<std::pair<const Value*, bool>> stack{{&root, !positional}};
  std::vector<const Value*> many;
  const Value* kids[8];
  while (!stack.empty()) {
    auto [vp, inside] = stack.back();
    stack.pop_back();
    const Value& v = *vp;
    if (!v || (inside && v.get()->frozen)) continue;
    if (v.is_numeric()) {
      if (!inside || seen.insert(v.get()).second) fn(v);
      continue;
    }
    if (!composite(v)) continue;
    bool inner = inside || v.is_container();
    if (inner && !seen.insert(v.get()).second) continue;
    int n = children(v, kids, many);
    if (n < 0) {
      for (auto r = many.rbegin(); r != many.rend(); ++r) stack.push_back({*r, inner});
    } else {
      for (int i = n - 1; i >= 0; --i) stack.push_back({kids[i], inner});
    }
  }
}

namespace {

// Positional walk of two congruent ground trees.
void zip_ground(const Value& a, const Value& b, const std::function<void(const Value&, const Value&)>& leaf) {
  std::vector<std::pair<const Value*, const Value*>> stack{{&a, &b}};
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    if (x->is(Kind::Pair)) {
      if (!y->is(Kind::Pair)) throw EvalError("shape mismatch between value and (co)tangent");
      stack.push_back({&x->as<Pair>().cdr, &y->as<Pair>().cdr});
      stack.push_back({&x->as<Pair>().car, &y->as<Pair>().car});
      continue;
    }
    if (y->is(Kind::Pair)) throw EvalError("shape mismatch between value and (co)tangent");
    leaf(*x, *y);
  }
}

}  // namespace

Value bundle(const Value& primal, const Value& tangent, int level) {
  std::vector<Value> tangents;
  zip_ground(primal, tangent, [&](const Value& p, const Value& t) {
    if (p.is_numeric() != t.is_numeric()) throw EvalError("shape mismatch between value and tangent");
    if (p.is_numeric()) tangents.push_back(t);
  });
  size_t i = 0;
  return map_leaves(primal, true, [&](const Value& p) {
    return Value(alloc<const Dual>(p, tangents[i++], level));
  });
}

std::pair<Value, Value> unbundle(const Value& v, int level) {
  if (!is_ground(v)) throw EvalError("forward-mode output must be ground data");
  auto check = [&](const Value& leaf) {
    if (level_of(leaf) > level) throw EvalError("perturbation escaped its forward-mode operator");
  };
  Value p = map_leaves(v, true, [&](const Value& leaf) {
    check(leaf);
    return leaf.is(Kind::Dual) && leaf.as<Dual>().level == level ? leaf.as<Dual>().primal : leaf;
  });
  Value t = map_leaves(v, true, [&](const Value& leaf) {
    return leaf.is(Kind::Dual) && leaf.as<Dual>().level == level ? leaf.as<Dual>().tangent : make_real(0.0);
  });
  return {p, t};
}

Value unshare(const Value& v) {
  return map_leaves(v, true, [](const Value& leaf) -> Value {
    switch (leaf.kind()) {
      case Kind::Real: return make_real(leaf.as<Real>().x);
      case Kind::Dual: {
        const Dual& d = leaf.as<Dual>();
        return Value(alloc<const Dual>(d.primal, d.tangent, d.level));
      }
      default: return leaf;
    }
  });
}

ReverseOut reverse_general(Context& c, Applier& ap, const Value& f, const Value& x, const Value* ybar,
                           const FlatCotangent* ybar_flat) {
  LevelScope scope(c);
  const int L = scope.level();
  TapeRegistry reg(c, L);
  const bool positional = is_ground(x);
  std::vector<Value> inputs;
  Value xt = map_leaves(x, positional, [&](const Value& leaf) {
    Value cell = new_cell(c, leaf, L);
    inputs.push_back(cell);
    return cell;
  });

  Outcome o = ap.apply(c, f, xt);
  ReverseOut out;
  out.tag = o.tag;
  out.steps = o.n;

  auto seed_into = [&](const Value& leaf, const Value& s) {
    if (leaf.is(Kind::Tape) && leaf.as<Tape>().level == L) accumulate(c, leaf.as<Tape>(), s);
  };
  if (ybar) {
    if (!is_ground(o.v)) throw EvalError("reverse-mode output must be ground data");
    zip_ground(o.v, *ybar, [&](const Value& leaf, const Value& s) {
      if (!s.is_numeric()) return;
      if (!leaf.is_numeric()) throw EvalError("cannot seed a non-numeric output leaf");
      seed_into(leaf, s);
    });
  } else {
    size_t i = 0;
    visit_leaves(o.v, false, [&](const Value& leaf) {
      if (i < ybar_flat->size() && (*ybar_flat)[i]) seed_into(leaf, (*ybar_flat)[i]);
      ++i;
    });
    if (i != ybar_flat->size())
      throw EvalError("cotangent has " + std::to_string(ybar_flat->size()) + " leaves but the output has " +
                      std::to_string(i));
  }

  sweep(c, reg);

  if (positional) {
    size_t i = 0;
    out.xbar = map_leaves(x, true, [&](const Value&) {
      const Value& cot = inputs[i++].as<Tape>().cotangent;
      return cot ? cot : make_real(0.0);
    });
  } else {
    out.xbar_flat.reserve(inputs.size());
    for (auto& cell : inputs) out.xbar_flat.push_back(cell.as<Tape>().cotangent);
  }

  if (ybar) {
    out.y = map_leaves(o.v, true, [&](const Value& leaf) -> Value {
      if (level_of(leaf) > L) throw EvalError("tape value escaped its reverse-mode operator");
      if (leaf.is(Kind::Tape) && leaf.as<Tape>().level == L) return leaf.as<Tape>().primal;
      if (leaf.is(Kind::Dual) && leaf.as<Dual>().level == L)
        throw EvalError("forward and reverse values meet at one nesting level");
      return leaf;
    });
  } else {
    out.y = o.v;
  }
  return out;
}

std::pair<Value, Value> forward_j(Context& c, Applier& ap, const Value& f, const Value& x, const Value& xdot) {
  if (!f.is(Kind::Closure)) throw EvalError("j*: first argument must be a function");
  if (!is_ground(x) || !is_ground(xdot)) throw EvalError("j*: primal and tangent must be ground data");
  LevelScope scope(c);
  Value bx = bundle(x, xdot, scope.level());
  Outcome o = ap.apply(c, f, bx);
  return unbundle(o.v, scope.level());
}

std::pair<Value, Value> reverse_j(Context& c, Applier& ap, const Value& f, const Value& x, const Value& ybar) {
  if (!f.is(Kind::Closure)) throw EvalError("*j: first argument must be a function");
  if (!is_ground(x) || !is_ground(ybar)) throw EvalError("*j: primal and cotangent must be ground data");
  ReverseOut r = reverse_general(c, ap, f, x, &ybar, nullptr);
  return {r.y, r.xbar};
}

}  // namespace cvl
