// Running programs end to end: loading into both pipelines, metrics rows,
// trace serialization and the adaptive-grid benchmark program.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cvl/context.hpp"
#include "cvl/converted.hpp"
#include "cvl/machine.hpp"

namespace cvl {

// A parsed program installed in both step-counting pipelines.
class Session {
 public:
  explicit Session(const std::string& text, bool with_converted = true);
  Context ctx;
  Program source;
  CpsMachine a;
  ConvertedEvaluator b;
  Pipeline& pipeline(char which) { return which == 'b' ? static_cast<Pipeline&>(b) : a; }
  // Value of a top-level definition in pipeline 'a' or 'b'.
  Value global(const std::string& name, char which = 'a') const;
};

struct RunOptions {
  CheckpointConfig cfg;  // cfg.plain selects plain reverse mode
  char pipeline = 'a';
  bool trace = false;
};

struct RunMetrics {
  std::string mode, algorithm, split, criterion, pipeline;
  int64_t alpha = 0;
  int64_t n = -1, l = -1;  // benchmark parameters; -1 when not a benchmark run
  int64_t L = 0, peak_tape = 0, peak_snapshots = 0, recompute_steps = 0, leaves = 0;
  double wall_ms = 0;
};

struct RunResult {
  Value value;
  RunMetrics metrics;
  std::vector<TraceEvent> trace;
};

// Evaluates the main expression; checkpoint-*j inside follows opts.
RunResult run_program(const std::string& text, const RunOptions& opts);

std::string csv_header();
std::string csv_row(const RunMetrics& m);
std::string trace_jsonl(const std::vector<TraceEvent>& events);

std::string algorithm_name(Algorithm a);
std::string split_name(Split s);
std::string criterion_name(const Criterion& c);
bool parse_criterion(const std::string& s, Criterion& out);

struct ExampleParams {
  int n = 4;           // state dimension, even
  int l = 8;           // outer iterations
  int phi = 1;         // inner-duration hyperparameter
  bool checkpoint = true;  // checkpoint-*j or *j at the top
};

// Source text of the adaptive-grid example. The main expression returns
// (y . gradient) for the initial state.
std::string build_example(const ExampleParams& p);
// The same program minus the main expression, with the state builder and
// the differentiated function bound as `example-x0` and `example-f`.
std::string example_definitions(const ExampleParams& p);

}  // namespace cvl
