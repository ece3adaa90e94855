#include "cvl/value.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

#include "cvl/expr.hpp"

namespace cvl {

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Real: return "real";
    case Kind::Bool: return "boolean";
    case Kind::Empty: return "empty";
    case Kind::Bottom: return "bottom";
    case Kind::StepCount: return "step-count";
    case Kind::Pair: return "pair";
    case Kind::Closure: return "closure";
    case Kind::Dual: return "dual";
    case Kind::Tape: return "tape";
    case Kind::Capsule: return "capsule";
    case Kind::Frame: return "continuation";
  }
  return "?";
}

// Long cdr chains and continuation chains would otherwise be released
// recursively, one native frame per link.
Pair::~Pair() {
  std::shared_ptr<const Obj> next = cdr.ptr();
  cdr = Value();
  while (next && next.use_count() == 1 && next->kind == Kind::Pair) {
    auto& p = const_cast<Pair&>(static_cast<const Pair&>(*next));
    std::shared_ptr<const Obj> after = p.cdr.ptr();
    p.cdr = Value();
    next = std::move(after);
  }
}

Frame::~Frame() {
  std::shared_ptr<const Obj> nxt = next.ptr();
  next = Value();
  while (nxt && nxt.use_count() == 1 && nxt->kind == Kind::Frame) {
    auto& f = const_cast<Frame&>(static_cast<const Frame&>(*nxt));
    std::shared_ptr<const Obj> after = f.next.ptr();
    f.next = Value();
    nxt = std::move(after);
  }
}

Value make_real(double x) { return Value(alloc<const Real>(x)); }

Value make_bool(bool b) { return b ? true_value() : false_value(); }

Value make_steps(int64_t n) { return Value(alloc<const StepCount>(n)); }

Value make_pair(Value a, Value d) {
  return Value(alloc<const Pair>(std::move(a), std::move(d)));
}

Value empty_value() {
  static const Value v(std::make_shared<const Atom>(Kind::Empty));
  return v;
}

Value bottom_value() {
  static const Value v(std::make_shared<const Atom>(Kind::Bottom));
  return v;
}

Value true_value() {
  static const Value v(std::make_shared<const Bool>(true));
  return v;
}

Value false_value() {
  static const Value v(std::make_shared<const Bool>(false));
  return v;
}

Value halt_frame() {
  static const Value v(alloc<const Frame>(FrameKind::Halt));
  return v;
}

double real_of(const Value& v) {
  if (!v.is(Kind::Real)) throw EvalError(std::string("expected a real, got ") + kind_name(v.kind()));
  return v.as<Real>().x;
}

double number_of(const Value& v) {
  const Value* cur = &v;
  for (;;) {
    switch (cur->kind()) {
      case Kind::Real: return cur->as<Real>().x;
      case Kind::Dual: cur = &cur->as<Dual>().primal; break;
      case Kind::Tape: cur = &cur->as<Tape>().primal; break;
      default: throw EvalError(std::string("expected a number, got ") + kind_name(cur->kind()));
    }
  }
}

bool truthy(const Value& v) { return !(v.is(Kind::Bool) && !v.as<Bool>().b); }

bool is_ground(const Value& v) {
  std::vector<const Value*> todo{&v};
  while (!todo.empty()) {
    const Value* cur = todo.back();
    todo.pop_back();
    if (!*cur) continue;
    if (cur->is_container()) return false;
    if (cur->is(Kind::Pair)) {
      todo.push_back(&cur->as<Pair>().cdr);
      todo.push_back(&cur->as<Pair>().car);
    }
  }
  return true;
}

bool ground_equal(const Value& a, const Value& b) {
  std::vector<std::pair<const Value*, const Value*>> todo{{&a, &b}};
  while (!todo.empty()) {
    auto [x, y] = todo.back();
    todo.pop_back();
    if (x->kind() != y->kind()) return false;
    switch (x->kind()) {
      case Kind::Real: {
        double p = x->as<Real>().x, q = y->as<Real>().x;
        if (std::memcmp(&p, &q, sizeof p) != 0) return false;
        break;
      }
      case Kind::Bool:
        if (x->as<Bool>().b != y->as<Bool>().b) return false;
        break;
      case Kind::Empty:
      case Kind::Bottom:
        break;
      case Kind::StepCount:
        if (x->as<StepCount>().n != y->as<StepCount>().n) return false;
        break;
      case Kind::Pair:
        todo.push_back({&x->as<Pair>().cdr, &y->as<Pair>().cdr});
        todo.push_back({&x->as<Pair>().car, &y->as<Pair>().car});
        break;
      case Kind::Dual:
        if (x->as<Dual>().level != y->as<Dual>().level) return false;
        todo.push_back({&x->as<Dual>().tangent, &y->as<Dual>().tangent});
        todo.push_back({&x->as<Dual>().primal, &y->as<Dual>().primal});
        break;
      default:
        if (x->get() != y->get()) return false;
    }
  }
  return true;
}

std::string show_number(double x) {
  if (std::isnan(x)) return "+nan.0";
  if (std::isinf(x)) return x > 0 ? "+inf.0" : "-inf.0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

static void show_into(const Value& v, std::string& out) {
  if (!v) {
    out += "#<null>";
    return;
  }
  switch (v.kind()) {
    case Kind::Real: out += show_number(v.as<Real>().x); return;
    case Kind::Bool: out += v.as<Bool>().b ? "#t" : "#f"; return;
    case Kind::Empty: out += "()"; return;
    case Kind::Bottom: out += "#<bottom>"; return;
    case Kind::StepCount:
      out += v.as<StepCount>().infinite() ? "#<steps inf>" : "#<steps " + std::to_string(v.as<StepCount>().n) + ">";
      return;
    case Kind::Pair: {
      out += "(";
      const Value* cur = &v;
      bool first = true;
      while (cur->is(Kind::Pair)) {
        if (!first) out += " ";
        first = false;
        show_into(cur->as<Pair>().car, out);
        cur = &cur->as<Pair>().cdr;
      }
      if (!cur->is(Kind::Empty)) {
        out += " . ";
        show_into(*cur, out);
      }
      out += ")";
      return;
    }
    case Kind::Closure: out += "#<closure>"; return;
    case Kind::Dual:
      out += "#<dual ";
      show_into(v.as<Dual>().primal, out);
      out += " ";
      show_into(v.as<Dual>().tangent, out);
      out += " @" + std::to_string(v.as<Dual>().level) + ">";
      return;
    case Kind::Tape:
      out += "#<tape ";
      show_into(v.as<Tape>().primal, out);
      out += " @" + std::to_string(v.as<Tape>().level) + ">";
      return;
    case Kind::Capsule: out += "#<capsule>"; return;
    case Kind::Frame: out += "#<continuation>"; return;
  }
}

std::string show(const Value& v) {
  std::string s;
  show_into(v, s);
  return s;
}

Value list_of(const std::vector<Value>& xs) {
  Value acc = empty_value();
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) acc = make_pair(*it, acc);
  return acc;
}

Value list_of_reals(const std::vector<double>& xs) {
  std::vector<Value> vs;
  vs.reserve(xs.size());
  for (double x : xs) vs.push_back(make_real(x));
  return list_of(vs);
}

std::vector<Value> list_items(const Value& v) {
  std::vector<Value> out;
  const Value* cur = &v;
  while (cur->is(Kind::Pair)) {
    out.push_back(cur->as<Pair>().car);
    cur = &cur->as<Pair>().cdr;
  }
  return out;
}

}  // namespace cvl

namespace cvl {

void freeze(const Value& root) {
  std::vector<const Obj*> stack;
  auto push = [&](const Value& v) {
    if (v && !v.get()->frozen) stack.push_back(v.get());
  };
  push(root);
  while (!stack.empty()) {
    const Obj* o = stack.back();
    stack.pop_back();
    if (o->frozen) continue;
    o->frozen = true;
    switch (o->kind) {
      case Kind::Pair: {
        auto& p = static_cast<const Pair&>(*o);
        push(p.car);
        push(p.cdr);
        break;
      }
      case Kind::Closure: {
        auto& c = static_cast<const Closure&>(*o);
        for (auto& v : c.captured) push(v);
        push(c.env.self);
        push(c.env.arg);
        break;
      }
      case Kind::Capsule: {
        auto& z = static_cast<const Capsule&>(*o);
        push(z.k);
        push(z.f);
        break;
      }
      case Kind::Frame: {
        auto& f = static_cast<const Frame&>(*o);
        push(f.env.self);
        push(f.env.arg);
        push(f.v1);
        push(f.v2);
        push(f.next);
        break;
      }
      case Kind::Dual: {
        auto& d = static_cast<const Dual&>(*o);
        push(d.primal);
        push(d.tangent);
        break;
      }
      case Kind::Tape: push(static_cast<const Tape&>(*o).primal); break;
      default: break;
    }
  }
}

}  // namespace cvl
