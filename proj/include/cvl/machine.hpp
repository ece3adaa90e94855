// The step-counting CPS interpreter. Continuations are defunctionalized
// frames so the AD walks can see everything a capsule holds.
#pragma once

#include "cvl/pipeline.hpp"
#include "cvl/syntax.hpp"

namespace cvl {

class CpsMachine : public Pipeline {
 public:
  CpsMachine();

  // Resolves and installs the program's definitions. Non-lambda right-hand
  // sides are evaluated in order.
  void load(Context& c, const Program& p);
  const Globals& globals() const { return globals_; }
  const Program& program() const { return prog_; }

  const char* name() const override { return "a"; }
  Outcome apply(Context& c, const Value& f, const Value& x) override;
  int64_t primops(Context& c, const Value& f, const Value& x) override;
  Value interrupt(Context& c, const Value& f, const Value& x, int64_t l) override;
  Outcome resume(Context& c, const Value& z) override;
  Value make_I(const Value& f, int64_t l) override;
  Value make_R() override;
  Outcome run_main(Context& c) override;

  // The evaluator proper: evaluate e in env, or apply f to x, delivering to
  // continuation k with count n and limit l (StepCount::kInfinite for none).
  Outcome eval(Context& c, const Expr& e, const EnvA& env, const Value& k, int64_t n, int64_t l);
  Outcome apply_k(Context& c, const Value& f, const Value& x, const Value& k, int64_t n, int64_t l);

 private:
  enum class Mode { Eval, Return, Apply };
  Outcome run(Context& c, Mode mode, const Expr* e, EnvA env, Value k, Value v, Value x, int64_t n, int64_t l);

  Program prog_;
  Globals globals_;
  ExprPtr i_lam_, r_lam_;
  Value r_closure_;
};

}  // namespace cvl
