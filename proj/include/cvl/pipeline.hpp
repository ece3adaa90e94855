// The interruption interface every step-counting pipeline exposes, plus the
// environment helpers shared by the single-argument evaluators.
#pragma once

#include <string>
#include <vector>

#include "cvl/ad.hpp"

namespace cvl {

// Global definitions of one pipeline, indexed by resolved Global refs.
using Globals = std::vector<Value>;

Value lookup_var(const VarRef& r, const EnvA& env, const Globals& g, const Expr& at);
// Closure for a single-argument lambda, fetching its captures from env.
Value close_over(const Expr& lam, const EnvA& env);

class Pipeline : public Applier {
 public:
  virtual const char* name() const = 0;

  // Steps of f(x) from a fresh count with no limit.
  virtual int64_t primops(Context& c, const Value& f, const Value& x) = 0;
  // Capsule after exactly l steps of f(x); RanToCompletion if f(x) finishes.
  virtual Value interrupt(Context& c, const Value& f, const Value& x, int64_t l) = 0;
  // Finishes the computation held by a capsule.
  virtual Outcome resume(Context& c, const Value& z) = 0;
  // lambda x.(interrupt f x l) and lambda z.(resume z) as closures of this pipeline.
  virtual Value make_I(const Value& f, int64_t l) = 0;
  virtual Value make_R() = 0;
  // Runs the main expression of the loaded program.
  virtual Outcome run_main(Context& c) = 0;
};

}  // namespace cvl
