#include "cvl/drivers.hpp"

#include <unordered_map>

namespace cvl {

const char* trace_event_name(TraceEvent::Type t) {
  switch (t) {
    case TraceEvent::Advance: return "advance";
    case TraceEvent::Snapshot: return "snapshot";
    case TraceEvent::Release: return "release";
    case TraceEvent::Leaf: return "leaf";
    case TraceEvent::Seed: return "seed";
    case TraceEvent::Done: return "done";
  }
  return "?";
}

int64_t eta(int64_t d, int64_t t) {
  if (d < 0 || t < 0) throw EvalError("eta: negative argument");
  if (d == kUnbounded || t == kUnbounded) return (d == 0 || t == 0) ? 1 : kUnbounded;
  int64_t k = std::min(d, t), m = std::max(d, t);
  constexpr __int128 cap = static_cast<__int128>(1) << 62;
  __int128 r = 1;
  // r = C(m+i, i) after step i; each division is exact.
  for (int64_t i = 1; i <= k; ++i) {
    r = r * (m + i) / i;
    if (r >= cap) return kUnbounded;
  }
  return static_cast<int64_t>(r);
}

Pick pick(const Criterion& crit, int64_t n, int64_t alpha) {
  if (n <= 0) throw EvalError("pick: step count must be positive");
  if (alpha <= 0) throw EvalError("pick: alpha must be positive");
  const int64_t need = (n + alpha - 1) / alpha;  // segments
  Pick p;
  auto smallest = [&](auto&& capacity) {
    int64_t v = 1;
    while (capacity(v) < need) ++v;
    return v;
  };
  switch (crit.kind) {
    case CriterionKind::None: break;
    case CriterionKind::FixedSpace:
      if (crit.param < 1) throw EvalError("fixed-space criterion needs d >= 1");
      p.d = crit.param;
      p.t = smallest([&](int64_t t) { return eta(p.d, t); });
      break;
    case CriterionKind::FixedTime:
      if (crit.param < 1) throw EvalError("fixed-time criterion needs t >= 1");
      p.t = crit.param;
      p.d = smallest([&](int64_t d) { return eta(d, p.t); });
      break;
    case CriterionKind::Logarithmic:
      p.d = p.t = smallest([&](int64_t v) { return eta(v, v); });
      break;
  }
  return p;
}

int64_t mid(Split s, int64_t delta, int64_t tau, int64_t sigma, int64_t phi, int64_t alpha) {
  const int64_t len = phi - sigma;
  if (len <= alpha) throw EvalError("mid: interval too small to split");
  if (s == Split::Bisection) return sigma + len / 2;
  if (delta < 1 || tau < 1) throw EvalError("mid: exhausted budget");
  // Binomial: with d snapshots and t sweeps at most eta(d,t) segments can be
  // reversed. Keep the left part within eta(d,t-1) (one sweep fewer) and the
  // right part within eta(d-1,t) (one snapshot fewer), each at least as long
  // as the next smaller capacity so neither side wastes a sweep.
  const int64_t m = (len + alpha - 1) / alpha;
  const int64_t d = std::min(delta, m);
  int64_t t = 1;
  while (eta(d, t) < m) ++t;
  if (tau != kUnbounded) t = std::min(t, tau);
  const int64_t left_floor = t >= 2 ? eta(d, t - 2) : 0;
  const int64_t right_cap = eta(d - 1, t);
  int64_t lambda = right_cap >= m ? left_floor : std::max(left_floor, m - right_cap);
  lambda = std::clamp<int64_t>(lambda, 1, m - 1);
  // Segments are len/m steps, which is alpha when alpha divides len. Spreading
  // the remainder keeps every piece above alpha/2, clear of the wrapper
  // preambles that a nested budget has to cover.
  return sigma + static_cast<int64_t>(static_cast<__int128>(lambda) * len / m);
}

std::vector<TraceEvent> canonical_ids(const std::vector<TraceEvent>& events) {
  std::unordered_map<int64_t, int64_t> ids;
  std::vector<TraceEvent> out;
  out.reserve(events.size());
  for (TraceEvent e : events) {
    if (e.type == TraceEvent::Snapshot || e.type == TraceEvent::Release) {
      auto it = ids.find(e.a);
      if (it == ids.end()) it = ids.emplace(e.a, static_cast<int64_t>(ids.size()) + 1).first;
      e.a = it->second;
    }
    out.push_back(e);
  }
  return out;
}

std::vector<TraceEvent> coalesce_left_chains(const std::vector<TraceEvent>& events) {
  std::unordered_map<int64_t, int64_t> holder;  // position -> id that holds it
  std::unordered_map<int64_t, int64_t> position;  // id -> position, for kept ids
  std::unordered_map<int64_t, bool> dropped;
  std::vector<TraceEvent> out;
  for (const TraceEvent& e : events) {
    if (e.type == TraceEvent::Snapshot) {
      if (holder.count(e.b)) {
        dropped[e.a] = true;
        continue;
      }
      holder[e.b] = e.a;
      position[e.a] = e.b;
    } else if (e.type == TraceEvent::Release) {
      if (dropped.count(e.a)) continue;
      holder.erase(position[e.a]);
    }
    out.push_back(e);
  }
  return canonical_ids(out);
}

SymbolicBackend::Val SymbolicBackend::interrupt(const Fn& f, Val x, int64_t l) const {
  if (l <= 0) throw EvalError("interrupt: step budget must be positive");
  if (l >= primops(f, x)) throw RanToCompletion();
  return x + l;
}

std::pair<Value, Value> checkpoint_reverse_j(Context& c, Pipeline& p, const Value& f, const Value& x,
                                             const Value& ybar) {
  if (!f.is(Kind::Closure)) throw EvalError("checkpoint-*j: first argument must be a function");
  if (!is_ground(x) || !is_ground(ybar))
    throw EvalError("checkpoint-*j: primal and cotangent must be ground data");
  if (c.checkpoint.plain) {
    ReverseOut r = reverse_general(c, p, f, x, &ybar, nullptr);
    c.counters.L = r.steps;
    return {std::move(r.y), std::move(r.xbar)};
  }
  PipelineBackend b{c, p};
  CheckpointDriver<PipelineBackend> d(b, c, c.checkpoint);
  PipelineBackend::Cot seed;
  seed.tree = ybar;
  // Shared leaves in x would merge into one tape cell inside capsules but
  // not in the positional walk at the root.
  auto r = d.run(f, unshare(x), seed);
  return {std::move(r.y), std::move(r.xbar.tree)};
}

}  // namespace cvl
