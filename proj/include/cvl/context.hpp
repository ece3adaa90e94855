// Per-evaluation state: the epsilon nesting counter, the active tape
// registries, checkpointing configuration and instrumentation hooks.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cvl/value.hpp"

namespace cvl {

enum class Algorithm : uint8_t { Bisect, Binary, Treeverse };
enum class Split : uint8_t { Bisection, Binomial };
enum class CriterionKind : uint8_t { None, FixedSpace, FixedTime, Logarithmic };

struct Criterion {
  CriterionKind kind = CriterionKind::None;
  int64_t param = 0;  // d for fixed space, t for fixed time
};

struct CheckpointConfig {
  bool plain = false;  // run checkpoint-*j as *j
  Algorithm algorithm = Algorithm::Bisect;
  Split split = Split::Bisection;
  Criterion criterion;
  int64_t alpha = 64;
};

struct TraceEvent {
  enum Type : uint8_t { Advance, Snapshot, Release, Leaf, Seed, Done } type;
  int64_t a = 0, b = 0;  // advance/leaf: from,to; snapshot: id,at; release: id
  bool operator==(const TraceEvent& o) const { return type == o.type && a == o.a && b == o.b; }
};

const char* trace_event_name(TraceEvent::Type t);

// Counters shared by the drivers and the tape; reset by the harness per run.
struct RunCounters {
  int64_t L = 0;                 // primal steps of the differentiated application
  int64_t peak_tape = 0;         // max live tape cells
  int64_t peak_snapshots = 0;
  int64_t recompute_steps = 0;
  int64_t leaves = 0;
  int64_t live_tape = 0;
};

struct TapeRegistry;

class Context {
 public:
  int level = 0;                             // epsilon nesting depth
  uint64_t next_cell_id = 1;
  std::vector<TapeRegistry*> registries;     // indexed by level
  CheckpointConfig checkpoint;
  RunCounters counters;
  std::vector<TraceEvent>* trace = nullptr;  // optional event sink
  int64_t halt_steps = 0;                    // converted pipeline: count at the final continuation

  void emit(TraceEvent::Type t, int64_t a = 0, int64_t b = 0) {
    if (trace) trace->push_back(TraceEvent{t, a, b});
  }
};

// Raises the epsilon level for a dynamic extent, restoring it on unwind.
class LevelScope {
 public:
  explicit LevelScope(Context& c) : c_(c) { level_ = ++c_.level; }
  ~LevelScope() { --c_.level; }
  int level() const { return level_; }
  LevelScope(const LevelScope&) = delete;
  LevelScope& operator=(const LevelScope&) = delete;

 private:
  Context& c_;
  int level_;
};

}  // namespace cvl
