// Runtime values. Everything is an immutable heap object behind a shared
// pointer; the only mutable slot in the system is a tape cell's cotangent
// accumulator.
#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <vector>

#include <boost/pool/pool_alloc.hpp>

namespace cvl {

// Runtime objects come from size-class free lists; evaluation allocates on
// nearly every step. Single-threaded.
template <class T>
using ObjAllocator =
    boost::fast_pool_allocator<T, boost::default_user_allocator_new_delete, boost::details::pool::null_mutex>;

template <class T, class... A>
std::shared_ptr<T> alloc(A&&... args) {
  using U = std::remove_const_t<T>;
  return std::allocate_shared<U>(ObjAllocator<U>(), std::forward<A>(args)...);
}

struct Expr;

enum class Kind : uint8_t {
  Real,
  Bool,
  Empty,
  Bottom,
  StepCount,
  Pair,
  Closure,
  Dual,
  Tape,
  Capsule,
  Frame,
};

const char* kind_name(Kind k);

struct Obj {
  const Kind kind;
  // Part of the program rather than of a computation: literals and values
  // reachable from top-level definitions. Walks inside closures and
  // capsules leave these alone.
  mutable bool frozen = false;
  explicit Obj(Kind k) : kind(k) {}
  virtual ~Obj() = default;
  Obj(const Obj&) = delete;
  Obj& operator=(const Obj&) = delete;
};

class Value {
 public:
  Value() = default;
  Value(std::shared_ptr<const Obj> p) : p_(std::move(p)) {}

  explicit operator bool() const { return static_cast<bool>(p_); }
  Kind kind() const { return p_->kind; }
  const Obj* get() const { return p_.get(); }
  const std::shared_ptr<const Obj>& ptr() const { return p_; }

  template <class T>
  const T& as() const {
    return static_cast<const T&>(*p_);
  }

  bool is(Kind k) const { return p_ && p_->kind == k; }
  bool is_numeric() const {
    return p_ && (p_->kind == Kind::Real || p_->kind == Kind::Dual ||
                  p_->kind == Kind::Tape);
  }
  // Closures, capsules and continuation frames.
  bool is_container() const {
    return p_ && (p_->kind == Kind::Closure || p_->kind == Kind::Capsule ||
                  p_->kind == Kind::Frame);
  }

  friend bool operator==(const Value& a, const Value& b) { return a.p_ == b.p_; }

 private:
  std::shared_ptr<const Obj> p_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by interrupt when the application finishes inside its budget.
class RanToCompletion : public EvalError {
 public:
  RanToCompletion() : EvalError("interrupt: application ran to completion") {}
};

struct Real final : Obj {
  double x;
  explicit Real(double v) : Obj(Kind::Real), x(v) {}
};

struct Bool final : Obj {
  bool b;
  explicit Bool(bool v) : Obj(Kind::Bool), b(v) {}
};

struct Atom final : Obj {
  explicit Atom(Kind k) : Obj(k) {}
};

// Step counts and limits live in values only in the converted pipeline.
struct StepCount final : Obj {
  int64_t n;  // kInfinite for the unbounded limit
  static constexpr int64_t kInfinite = -1;
  explicit StepCount(int64_t v) : Obj(Kind::StepCount), n(v) {}
  bool infinite() const { return n == kInfinite; }
};

struct Pair final : Obj {
  Value car, cdr;
  Pair(Value a, Value d) : Obj(Kind::Pair), car(std::move(a)), cdr(std::move(d)) {}
  ~Pair() override;
};

// Environment of the single-parameter evaluators: the running closure (for
// captured variables) and the bound argument.
struct EnvA {
  Value self;
  Value arg;
};

struct Closure final : Obj {
  // lam != nullptr: a lambda (any arity) with its captured free variables.
  // lam == nullptr: a suspended expression <lambda _. body, env> whose
  // argument is ignored.
  const Expr* lam = nullptr;
  std::vector<Value> captured;
  const Expr* body = nullptr;
  EnvA env;

  Closure(const Expr* l, std::vector<Value> c)
      : Obj(Kind::Closure), lam(l), captured(std::move(c)) {}
  Closure(const Expr* b, EnvA e) : Obj(Kind::Closure), body(b), env(std::move(e)) {}
  bool suspended() const { return lam == nullptr; }
};

struct Dual final : Obj {
  Value primal, tangent;
  int level;
  Dual(Value p, Value t, int lv)
      : Obj(Kind::Dual), primal(std::move(p)), tangent(std::move(t)), level(lv) {}
};

struct Tape final : Obj {
  Value primal;
  int level;
  uint64_t id;
  uint8_t nparents = 0;
  Value parent[2];
  Value partial[2];
  mutable Value cotangent;  // empty until the first contribution arrives

  Tape(Value p, int lv, uint64_t i) : Obj(Kind::Tape), primal(std::move(p)), level(lv), id(i) {}
};

struct Capsule final : Obj {
  Value k;  // continuation
  Value f;  // resumable closure
  Capsule(Value kk, Value ff) : Obj(Kind::Capsule), k(std::move(kk)), f(std::move(ff)) {}
};

enum class FrameKind : uint8_t {
  Halt,
  AppArg,    // have nothing, evaluate argument next
  AppCall,   // have callee, apply on argument
  IfBranch,
  Unary,
  BinArg,
  BinOp,
  Ad1,
  Ad2,
  Ad3,
  Int1,
  Int2,
  Int3,
  Resume,
};

// Defunctionalized continuation of the CPS interpreter. Fields are used per
// kind; unused ones stay empty.
struct Frame final : Obj {
  FrameKind fk;
  uint8_t op = 0;  // builtin or AD operator tag
  const Expr* e1 = nullptr;
  const Expr* e2 = nullptr;
  EnvA env;
  Value v1, v2;
  Value next;
  explicit Frame(FrameKind k) : Obj(Kind::Frame), fk(k) {}
  ~Frame() override;
};

Value make_real(double x);
Value make_bool(bool b);
Value make_steps(int64_t n);
Value make_pair(Value a, Value d);
Value empty_value();
Value bottom_value();
Value true_value();
Value false_value();
Value halt_frame();

double real_of(const Value& v);  // Real only
// Innermost primal of a numeric value.
double number_of(const Value& v);
bool truthy(const Value& v);

// No closures, capsules or frames anywhere inside.
bool is_ground(const Value& v);
// Structural (positional) equality on ground data; bitwise on reals.
bool ground_equal(const Value& a, const Value& b);
std::string show(const Value& v);
std::string show_number(double x);

// Marks v and everything reachable from it as frozen.
void freeze(const Value& v);

// Builds a proper list.
Value list_of(const std::vector<Value>& xs);
Value list_of_reals(const std::vector<double>& xs);
std::vector<Value> list_items(const Value& v);

}  // namespace cvl
