// Second pipeline: CPS conversion that threads the continuation, step count
// and step limit through the program, and the extended direct-style
// evaluator that runs the converted code.
#pragma once

#include "cvl/pipeline.hpp"
#include "cvl/syntax.hpp"

namespace cvl {

// Converts a user expression (unresolved). The result is wrapped so that it
// delivers to %k with count %n and limit %l, which must be bound around it.
ExprPtr cps_convert(const ExprPtr& e);
// lambda4 %k %n %l _. <e>, a converted thunk.
ExprPtr cps_convert_thunk(const ExprPtr& e);

class ConvertedEvaluator : public Pipeline {
 public:
  ConvertedEvaluator();

  void load(Context& c, const Program& p);
  const Globals& globals() const { return globals_; }
  const std::vector<ExprPtr>& converted_defs() const { return defs_; }
  const ExprPtr& converted_main() const { return main_; }

  const char* name() const override { return "b"; }
  Outcome apply(Context& c, const Value& f, const Value& x) override;
  int64_t primops(Context& c, const Value& f, const Value& x) override;
  Value interrupt(Context& c, const Value& f, const Value& x, int64_t l) override;
  Outcome resume(Context& c, const Value& z) override;
  Value make_I(const Value& f, int64_t l) override;
  Value make_R() override;
  Outcome run_main(Context& c) override;

  // A4 f k n l x, run to its host return.
  Outcome apply4(Context& c, const Value& f, const Value& k, int64_t n, int64_t l, const Value& x);
  const Value& halt() const { return halt_; }

 private:
  struct Env {
    Value self;
    Value args[4];
  };
  Value run(Context& c, const Expr* e, Env env);
  // Binds a converted closure's parameters into env; returns its body.
  const Expr* enter4(const Value& f, Value k, Value n, Value l, Value x, Env& env);
  Value value_of(Context& c, const Expr& e, const Env& env);
  Value lookup(const VarRef& r, const Env& env, const Expr& at) const;
  Value close(const Expr& lam, const Env& env) const;
  Outcome outcome(Context& c, Value v) const;

  std::vector<ExprPtr> defs_;
  ExprPtr main_;
  Globals globals_;
  ExprPtr halt_lam_, i_lam_, r_lam_;
  Value halt_, r_closure_;
};

}  // namespace cvl
