// Overloading-style AD: lifted arithmetic dispatching on epsilon levels,
// bundle/unbundle, leaf walks and the forward/reverse operators.
#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "cvl/context.hpp"
#include "cvl/expr.hpp"
#include "cvl/value.hpp"

namespace cvl {

// What an application produced: a value delivered to the final
// continuation, or a capsule returned at the step limit.
struct Outcome {
  enum Tag : uint8_t { Done, Interrupted } tag = Done;
  Value v;
  int64_t n = 0;  // steps taken when the outcome was produced
};

// The application entry point of a pipeline, used by the AD operators.
class Applier {
 public:
  virtual ~Applier() = default;
  virtual Outcome apply(Context& c, const Value& f, const Value& x) = 0;
};

int level_of(const Value& v);  // 0 for reals

Value lift_unary(Context& c, Prim op, const Value& a);
Value lift_binary(Context& c, Prim op, const Value& a, const Value& b);
// Every builtin, numeric or structural.
Value apply_prim1(Context& c, Prim op, const Value& a);
Value apply_prim2(Context& c, Prim op, const Value& a, const Value& b);

Value bundle(const Value& primal, const Value& tangent, int level);
std::pair<Value, Value> unbundle(const Value& v, int level);

// Leaf walks. Ground data outside any closure/capsule/frame is walked
// positionally; anything reached through one of those is visited once per
// object, in first-visit order.
Value map_leaves(const Value& v, bool positional, const std::function<Value(const Value&)>& fn);
void visit_leaves(const Value& v, bool positional, const std::function<void(const Value&)>& fn);

// Cotangent of a non-ground value, one slot per leaf in walk order. Empty
// slots mean no contribution reached that leaf.
using FlatCotangent = std::vector<Value>;

struct ReverseOut {
  Outcome::Tag tag = Outcome::Done;
  Value y;               // primal output (ground outputs) or the raw output
  Value xbar;            // ground input: cotangent tree
  FlatCotangent xbar_flat;  // non-ground input
  int64_t steps = 0;
};

// Seed is either a ground cotangent tree (ybar) or a flat cotangent
// (ybar_flat); exactly one is non-null.
ReverseOut reverse_general(Context& c, Applier& ap, const Value& f, const Value& x, const Value* ybar,
                           const FlatCotangent* ybar_flat);

// User-facing operators on ground data: (y, y') and (y, xbar).
std::pair<Value, Value> forward_j(Context& c, Applier& ap, const Value& f, const Value& x, const Value& xdot);
std::pair<Value, Value> reverse_j(Context& c, Applier& ap, const Value& f, const Value& x, const Value& ybar);

// Deep copy of ground data with fresh pairs and leaves.
Value unshare(const Value& v);

}  // namespace cvl
