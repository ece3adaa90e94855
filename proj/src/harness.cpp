#include "cvl/harness.hpp"

#include <chrono>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "cvl/drivers.hpp"

namespace cvl {

Session::Session(const std::string& text, bool with_converted) : source(parse_program(text)) {
  a.load(ctx, source);
  if (with_converted) b.load(ctx, source);
  ctx.counters = RunCounters{};
}

Value Session::global(const std::string& name, char which) const {
  for (size_t i = 0; i < source.defs.size(); ++i)
    if (source.defs[i].name == name) return which == 'b' ? b.globals().at(i) : a.globals().at(i);
  throw EvalError("no definition named '" + name + "'");
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Bisect: return "binary";
    case Algorithm::Binary: return "generalized-binary";
    case Algorithm::Treeverse: return "treeverse";
  }
  return "?";
}

std::string split_name(Split s) { return s == Split::Bisection ? "bisection" : "binomial"; }

std::string criterion_name(const Criterion& c) {
  switch (c.kind) {
    case CriterionKind::None: return "none";
    case CriterionKind::FixedSpace: return "fixed-space=" + std::to_string(c.param);
    case CriterionKind::FixedTime: return "fixed-time=" + std::to_string(c.param);
    case CriterionKind::Logarithmic: return "log";
  }
  return "?";
}

bool parse_criterion(const std::string& s, Criterion& out) {
  if (s == "none") {
    out = Criterion{};
    return true;
  }
  if (s == "log") {
    out = Criterion{CriterionKind::Logarithmic, 0};
    return true;
  }
  auto eq = s.find('=');
  if (eq == std::string::npos) return false;
  std::string key = s.substr(0, eq), val = s.substr(eq + 1);
  CriterionKind k;
  if (key == "fixed-space") k = CriterionKind::FixedSpace;
  else if (key == "fixed-time") k = CriterionKind::FixedTime;
  else return false;
  if (val.empty() || val.find_first_not_of("0123456789") != std::string::npos || val.size() > 9) return false;
  int64_t v = std::stoll(val);
  if (v < 1) return false;
  out = Criterion{k, v};
  return true;
}

RunResult run_program(const std::string& text, const RunOptions& opts) {
  Session s(text, opts.pipeline == 'b');
  RunResult r;
  s.ctx.checkpoint = opts.cfg;
  if (opts.trace) s.ctx.trace = &r.trace;
  auto t0 = std::chrono::steady_clock::now();
  Outcome o = s.pipeline(opts.pipeline).run_main(s.ctx);
  auto t1 = std::chrono::steady_clock::now();
  if (o.tag != Outcome::Done) throw EvalError("main expression was interrupted");
  r.value = o.v;
  RunMetrics& m = r.metrics;
  const bool plain = opts.cfg.plain;
  m.mode = plain ? "reverse" : "checkpoint";
  m.algorithm = plain ? "none" : algorithm_name(opts.cfg.algorithm);
  m.split = plain ? "none" : split_name(opts.cfg.split);
  m.criterion = plain ? "none" : criterion_name(opts.cfg.criterion);
  m.alpha = plain ? 0 : opts.cfg.alpha;
  m.pipeline = std::string(1, opts.pipeline);
  m.L = s.ctx.counters.L;
  m.peak_tape = s.ctx.counters.peak_tape;
  m.peak_snapshots = s.ctx.counters.peak_snapshots;
  m.recompute_steps = s.ctx.counters.recompute_steps;
  m.leaves = s.ctx.counters.leaves;
  m.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return r;
}

std::string csv_header() {
  return "mode,algorithm,split,criterion,alpha,pipeline,n,l,L,peak_tape,peak_snapshots,recompute_steps,leaves,wall_ms";
}

std::string csv_row(const RunMetrics& m) {
  auto opt = [](int64_t v) { return v < 0 ? std::string() : std::to_string(v); };
  char ms[32];
  std::snprintf(ms, sizeof ms, "%.3f", m.wall_ms);
  std::string row = m.mode + "," + m.algorithm + "," + m.split + "," + m.criterion + "," + std::to_string(m.alpha) +
                    "," + m.pipeline + "," + opt(m.n) + "," + opt(m.l) + "," + std::to_string(m.L) + "," +
                    std::to_string(m.peak_tape) + "," + std::to_string(m.peak_snapshots) + "," +
                    std::to_string(m.recompute_steps) + "," + std::to_string(m.leaves) + "," + ms;
  return row;
}

std::string trace_jsonl(const std::vector<TraceEvent>& events) {
  std::string out;
  for (const TraceEvent& e : events) {
    nlohmann::json j;
    j["event"] = trace_event_name(e.type);
    switch (e.type) {
      case TraceEvent::Advance:
      case TraceEvent::Leaf:
        j["from"] = e.a;
        j["to"] = e.b;
        break;
      case TraceEvent::Snapshot:
        j["id"] = e.a;
        j["at"] = e.b;
        break;
      case TraceEvent::Release: j["id"] = e.a; break;
      case TraceEvent::Seed:
      case TraceEvent::Done: break;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace cvl
