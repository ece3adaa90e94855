// Small helpers for driving a loaded corpus program from tests.
#pragma once

#include <string>
#include <vector>

#include "cvl/drivers.hpp"
#include "cvl/harness.hpp"

namespace support {

using namespace cvl;

struct Probe {
  Value y, xbar;
  RunCounters counters;
  std::vector<TraceEvent> trace;
};

inline Value get(Session& s, const char* name, char p = 'a') { return s.global(name, p); }

// *j on the program's f at x0 with ybar.
inline Probe plain(Session& s, char p = 'a') {
  s.ctx.counters = RunCounters{};
  auto [y, xbar] = reverse_j(s.ctx, s.pipeline(p), get(s, "f", p), get(s, "x0", p), get(s, "ybar", p));
  return {y, xbar, s.ctx.counters, {}};
}

// checkpoint-*j under cfg.
inline Probe checkpointed(Session& s, const CheckpointConfig& cfg, char p = 'a', bool trace = false) {
  Probe out;
  s.ctx.checkpoint = cfg;
  s.ctx.counters = RunCounters{};
  s.ctx.trace = trace ? &out.trace : nullptr;
  auto [y, xbar] = checkpoint_reverse_j(s.ctx, s.pipeline(p), get(s, "f", p), get(s, "x0", p), get(s, "ybar", p));
  s.ctx.trace = nullptr;
  out.y = y;
  out.xbar = xbar;
  out.counters = s.ctx.counters;
  return out;
}

inline bool same(const Probe& a, const Probe& b) { return ground_equal(a.y, b.y) && ground_equal(a.xbar, b.xbar); }

// Reals of ground data in positional order.
inline void flatten_into(const Value& v, std::vector<double>& out) {
  if (v.is(Kind::Pair)) {
    flatten_into(v.as<Pair>().car, out);
    flatten_into(v.as<Pair>().cdr, out);
  } else if (v.is(Kind::Real)) {
    out.push_back(v.as<Real>().x);
  }
}
inline std::vector<double> flatten(const Value& v) {
  std::vector<double> out;
  flatten_into(v, out);
  return out;
}

// Copy of ground data with its i-th real replaced.
inline Value replace_leaf(const Value& v, size_t& i, double x) {
  if (v.is(Kind::Pair)) {
    Value a = replace_leaf(v.as<Pair>().car, i, x);
    Value d = replace_leaf(v.as<Pair>().cdr, i, x);
    return make_pair(a, d);
  }
  if (v.is(Kind::Real)) return i-- == 0 ? make_real(x) : make_real(v.as<Real>().x);
  return v;
}
inline Value with_leaf(const Value& v, size_t i, double x) { return replace_leaf(v, i, x); }

// Every combination of algorithm, split and criterion exercised by the
// interchangeability checks.
inline std::vector<CheckpointConfig> all_configs(int64_t alpha) {
  std::vector<CheckpointConfig> out;
  CheckpointConfig bis;
  bis.alpha = alpha;
  out.push_back(bis);
  std::vector<Criterion> crits = {{CriterionKind::FixedSpace, 2}, {CriterionKind::FixedSpace, 3},
                                  {CriterionKind::FixedSpace, 5}, {CriterionKind::FixedTime, 2},
                                  {CriterionKind::FixedTime, 3},  {CriterionKind::FixedTime, 5},
                                  {CriterionKind::Logarithmic, 0}};
  for (Algorithm a : {Algorithm::Binary, Algorithm::Treeverse})
    for (Split sp : {Split::Bisection, Split::Binomial})
      for (const Criterion& c : crits) {
        CheckpointConfig cfg;
        cfg.algorithm = a;
        cfg.split = sp;
        cfg.criterion = c;
        cfg.alpha = alpha;
        out.push_back(cfg);
      }
  return out;
}

inline std::string describe(const CheckpointConfig& c) {
  return algorithm_name(c.algorithm) + "/" + split_name(c.split) + "/" + criterion_name(c.criterion) +
         "/alpha=" + std::to_string(c.alpha);
}

}  // namespace support
