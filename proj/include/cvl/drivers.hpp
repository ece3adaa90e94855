// Divide-and-conquer checkpointing on top of the interruption interface:
// binary bisection, generalized binary with snapshot/recompute budgets, and
// treeverse, with bisection or binomial split points.
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "cvl/ad.hpp"
#include "cvl/context.hpp"
#include "cvl/pipeline.hpp"

namespace cvl {

// Budget value meaning "no bound".
constexpr int64_t kUnbounded = std::numeric_limits<int64_t>::max();

inline int64_t dec(int64_t v) { return v == kUnbounded ? v : v - 1; }

// C(d+t, t), saturating at kUnbounded.
int64_t eta(int64_t d, int64_t t);

struct Pick {
  int64_t d = kUnbounded;
  int64_t t = kUnbounded;
};
// Solves eta(d,t)*alpha >= n for the free parameter of the criterion,
// taking the smallest value that satisfies it.
Pick pick(const Criterion& crit, int64_t n, int64_t alpha);

// Split point of [sigma, phi). Requires phi - sigma > alpha.
int64_t mid(Split s, int64_t delta, int64_t tau, int64_t sigma, int64_t phi, int64_t alpha);

// Merges snapshots taken at a position that is already held (the nested
// left branches of a binary tree) and renumbers snapshot ids by first use.
std::vector<TraceEvent> coalesce_left_chains(const std::vector<TraceEvent>& events);
std::vector<TraceEvent> canonical_ids(const std::vector<TraceEvent>& events);

// checkpoint-*j for a pipeline, configured by c.checkpoint.
std::pair<Value, Value> checkpoint_reverse_j(Context& c, Pipeline& p, const Value& f, const Value& x,
                                             const Value& ybar);

// Backend over a real pipeline: functions and arguments are values,
// cotangents are trees for ground data and flat vectors otherwise.
struct PipelineBackend {
  using Fn = Value;
  using Val = Value;
  struct Cot {
    Value tree;
    FlatCotangent flat;
    bool flat_form = false;
  };

  Context& c;
  Pipeline& p;

  int64_t primops(const Fn& f, const Val& x) { return p.primops(c, f, x); }
  Val interrupt(const Fn& f, const Val& x, int64_t l) { return p.interrupt(c, f, x, l); }
  Fn make_I(const Fn& f, int64_t l) { return p.make_I(f, l); }
  Fn make_R() { return p.make_R(); }
  std::pair<Val, Cot> reverse(const Fn& f, const Val& x, const Cot& ybar) {
    ReverseOut r = reverse_general(c, p, f, x, ybar.flat_form ? nullptr : &ybar.tree,
                                   ybar.flat_form ? &ybar.flat : nullptr);
    Cot xbar;
    if (r.xbar) {
      xbar.tree = std::move(r.xbar);
    } else {
      xbar.flat = std::move(r.xbar_flat);
      xbar.flat_form = true;
    }
    return {std::move(r.y), std::move(xbar)};
  }
};

// Step-arithmetic model of the interface: a value is the position reached
// in a computation of `total` steps, a function is how far it may run.
// Reproduces the drivers' traces and counters without evaluating anything.
struct SymbolicBackend {
  struct Fn {
    int64_t cap = kUnbounded;
  };
  using Val = int64_t;
  using Cot = int64_t;

  int64_t total;

  int64_t primops(const Fn& f, Val x) const { return std::min(f.cap, total - x); }
  Val interrupt(const Fn& f, Val x, int64_t l) const;
  Fn make_I(const Fn& f, int64_t l) const { return Fn{std::min(f.cap, l)}; }
  Fn make_R() const { return Fn{}; }
  std::pair<Val, Cot> reverse(const Fn& f, Val x, Cot) const { return {x + primops(f, x), 0}; }
};

template <class B>
class CheckpointDriver {
 public:
  using Fn = typename B::Fn;
  using Val = typename B::Val;
  using Cot = typename B::Cot;
  struct Result {
    Val y;
    Cot xbar;
  };

  CheckpointDriver(B& b, Context& c, const CheckpointConfig& cfg) : b_(b), c_(c), cfg_(cfg) {}

  Result run(const Fn& f, const Val& x, const Cot& ybar) {
    if (cfg_.alpha < 8) throw EvalError("checkpointing: base-case bound alpha must be at least 8");
    const int64_t n = b_.primops(f, x);
    c_.counters.L = n;
    Result r;
    if (cfg_.algorithm == Algorithm::Bisect) {
      r = bisect(f, x, ybar, n, 0);
    } else {
      Pick pk = pick(cfg_.criterion, n, cfg_.alpha);
      if (cfg_.algorithm == Algorithm::Binary) r = binary(f, x, ybar, pk.d, pk.t, n, 0);
      else r = treeverse(f, x, ybar, pk.d, pk.t, 0, 0, n);
    }
    c_.emit(TraceEvent::Done);
    return r;
  }

 private:
  B& b_;
  Context& c_;
  const CheckpointConfig& cfg_;
  std::map<int64_t, int> held_;  // snapshot position -> holders
  int64_t next_id_ = 1;
  bool seeded_ = false;

  int64_t acquire(int64_t at) {
    int64_t id = next_id_++;
    ++held_[at];
    c_.counters.peak_snapshots = std::max<int64_t>(c_.counters.peak_snapshots, static_cast<int64_t>(held_.size()));
    c_.emit(TraceEvent::Snapshot, id, at);
    return id;
  }
  void release(int64_t id, int64_t at) {
    auto it = held_.find(at);
    if (--it->second == 0) held_.erase(it);
    c_.emit(TraceEvent::Release, id);
  }
  Val advance(const Fn& f, const Val& x, int64_t from, int64_t to) {
    Val z = b_.interrupt(f, x, to - from);
    c_.counters.recompute_steps += to - from;
    c_.emit(TraceEvent::Advance, from, to);
    return z;
  }
  Result leaf(const Fn& f, const Val& x, const Cot& ybar, int64_t from, int64_t to) {
    if (!seeded_) {
      seeded_ = true;
      c_.emit(TraceEvent::Seed);
    }
    c_.emit(TraceEvent::Leaf, from, to);
    ++c_.counters.leaves;
    auto [y, xbar] = b_.reverse(f, x, ybar);
    return Result{std::move(y), std::move(xbar)};
  }

  // phi: steps of f(x); base: where f(x) starts in the root computation.
  Result bisect(const Fn& f, const Val& x, const Cot& ybar, int64_t phi, int64_t base) {
    if (phi <= cfg_.alpha) return leaf(f, x, ybar, base, base + phi);
    const int64_t kappa = phi / 2;
    int64_t id = acquire(base);
    Val z = advance(f, x, base, base + kappa);
    Result right = bisect(b_.make_R(), z, ybar, phi - kappa, base + kappa);
    Result left = bisect(b_.make_I(f, kappa), x, right.xbar, kappa, base);
    release(id, base);
    return Result{std::move(right.y), std::move(left.xbar)};
  }

  Result binary(const Fn& f, const Val& x, const Cot& ybar, int64_t delta, int64_t tau, int64_t phi, int64_t base) {
    if (phi <= cfg_.alpha || delta == 0 || tau == 0) return leaf(f, x, ybar, base, base + phi);
    const int64_t kappa = mid(cfg_.split, delta, tau, 0, phi, cfg_.alpha);
    int64_t id = acquire(base);
    Val z = advance(f, x, base, base + kappa);
    Result right = binary(b_.make_R(), z, ybar, dec(delta), tau, phi - kappa, base + kappa);
    Result left = binary(b_.make_I(f, kappa), x, right.xbar, delta, dec(tau), kappa, base);
    release(id, base);
    return Result{std::move(right.y), std::move(left.xbar)};
  }

  // f(x) stands at beta; the node covers [sigma, phi).
  Result treeverse(const Fn& f, const Val& x, const Cot& ybar, int64_t delta, int64_t tau, int64_t beta,
                   int64_t sigma, int64_t phi) {
    if (sigma > beta) {
      Val z = advance(f, x, beta, sigma);
      return first(b_.make_R(), z, ybar, dec(delta), tau, sigma, phi);
    }
    return first(f, x, ybar, delta, tau, sigma, phi);
  }

  bool splittable(int64_t delta, int64_t tau, int64_t sigma, int64_t phi) const {
    return phi - sigma > cfg_.alpha && delta != 0 && tau != 0;
  }

  // f(x) stands at sigma from here on.
  Result first(const Fn& f, const Val& x, const Cot& ybar, int64_t delta, int64_t tau, int64_t sigma, int64_t phi) {
    if (!splittable(delta, tau, sigma, phi)) return leaf(b_.make_I(f, phi - sigma), x, ybar, sigma, phi);
    int64_t id = acquire(sigma);
    const int64_t kappa = mid(cfg_.split, delta, tau, sigma, phi, cfg_.alpha);
    Result right = treeverse(f, x, ybar, delta, tau, sigma, kappa, phi);
    Result left = rest(f, x, right.xbar, delta, dec(tau), sigma, kappa);
    release(id, sigma);
    return Result{std::move(right.y), std::move(left.xbar)};
  }

  // The remaining splits of a node; tail recursive, so a loop.
  Result rest(const Fn& f, const Val& x, Cot ybar, int64_t delta, int64_t tau, int64_t sigma, int64_t phi) {
    while (splittable(delta, tau, sigma, phi)) {
      const int64_t kappa = mid(cfg_.split, delta, tau, sigma, phi, cfg_.alpha);
      Result r = treeverse(f, x, ybar, delta, tau, sigma, kappa, phi);
      ybar = std::move(r.xbar);
      tau = dec(tau);
      phi = kappa;
    }
    return leaf(b_.make_I(f, phi - sigma), x, ybar, sigma, phi);
  }
};

}  // namespace cvl
