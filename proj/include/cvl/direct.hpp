// Plain direct-style evaluator: the baseline semantics with no step
// counting. checkpoint-*j behaves as *j here.
#pragma once

#include "cvl/pipeline.hpp"

namespace cvl {

class DirectEvaluator : public Applier {
 public:
  explicit DirectEvaluator(const Globals& g) : globals_(g) {}

  Value eval(Context& c, const EnvA& env, const Expr& e);
  Value apply_value(Context& c, const Value& f, const Value& x);
  Outcome apply(Context& c, const Value& f, const Value& x) override { return {Outcome::Done, apply_value(c, f, x), 0}; }

 private:
  const Globals& globals_;
};

Value eval_direct(Context& c, const Globals& g, const EnvA& env, const Expr& e);
Value apply_direct(Context& c, const Globals& g, const Value& f, const Value& x);

}  // namespace cvl
