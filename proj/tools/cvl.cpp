// Command-line front end: run a program, sweep the benchmark example, or run
// the built-in invariant checks.
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cvl/harness.hpp"
#include "cvl/selftest.hpp"
#include "cvl/syntax.hpp"

namespace {

constexpr int kEvalError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModeFlags {
  std::string mode = "checkpoint";
  std::string algorithm = "binary";
  std::string split = "bisection";
  std::string criterion = "none";
  int64_t alpha = 64;
  std::string pipeline = "a";
};

void add_mode_flags(CLI::App* app, ModeFlags& f, bool allow_both) {
  std::vector<std::string> modes = {"reverse", "checkpoint"};
  if (allow_both) modes.push_back("both");
  app->add_option("--mode", f.mode, "reverse or checkpoint")->check(CLI::IsMember(modes));
  app->add_option("--algorithm", f.algorithm, "binary, generalized-binary or treeverse")
      ->check(CLI::IsMember({"binary", "generalized-binary", "treeverse"}));
  app->add_option("--split", f.split, "bisection or binomial")->check(CLI::IsMember({"bisection", "binomial"}));
  app->add_option("--criterion", f.criterion, "fixed-space=D, fixed-time=T or log");
  app->add_option("--alpha", f.alpha, "base-case step bound")->check(CLI::Range(int64_t{8}, int64_t{1} << 40));
  app->add_option("--pipeline", f.pipeline, "a (CPS interpreter) or b (CPS-converted)")
      ->check(CLI::IsMember({"a", "b"}));
}

cvl::RunOptions options_for(const ModeFlags& f, const std::string& mode, CLI::App* app) {
  cvl::RunOptions o;
  o.pipeline = f.pipeline[0];
  o.cfg.plain = mode == "reverse";
  if (o.cfg.plain) {
    for (const char* flag : {"--algorithm", "--split", "--criterion", "--alpha"})
      if (app->count(flag) > 0 && f.mode == "reverse") throw UsageError(std::string(flag) + " needs --mode checkpoint");
    return o;
  }
  if (!cvl::parse_criterion(f.criterion, o.cfg.criterion)) throw UsageError("bad --criterion '" + f.criterion + "'");
  o.cfg.split = f.split == "binomial" ? cvl::Split::Binomial : cvl::Split::Bisection;
  o.cfg.alpha = f.alpha;
  if (f.algorithm == "treeverse") {
    o.cfg.algorithm = cvl::Algorithm::Treeverse;
  } else if (f.algorithm == "binary" && o.cfg.criterion.kind == cvl::CriterionKind::None &&
             o.cfg.split == cvl::Split::Bisection) {
    o.cfg.algorithm = cvl::Algorithm::Bisect;
  } else {
    o.cfg.algorithm = cvl::Algorithm::Binary;
  }
  return o;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path + "'");
  out << text;
}

std::vector<int> parse_l_list(const std::string& s) {
  std::vector<int> out;
  auto range = s.find("..");
  auto as_int = [](const std::string& t) {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos || t.size() > 9)
      throw UsageError("bad l value '" + t + "'");
    return std::stoi(t);
  };
  if (range != std::string::npos) {
    // lo..hi doubles from lo up to hi
    int lo = as_int(s.substr(0, range)), hi = as_int(s.substr(range + 2));
    if (lo < 1 || hi < lo) throw UsageError("bad l range '" + s + "'");
    for (int64_t v = lo; v <= hi; v *= 2) out.push_back(static_cast<int>(v));
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(as_int(item));
  if (out.empty()) throw UsageError("empty --l-list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"checkpointed reverse-mode AD for a small functional language"};
  app.require_subcommand(1);

  ModeFlags run_flags;
  std::string file, metrics_path, trace_path;
  auto* run = app.add_subcommand("run", "evaluate a program");
  run->add_option("file", file, "program (.cvl)")->required();
  add_mode_flags(run, run_flags, false);
  run->add_option("--metrics", metrics_path, "write a CSV metrics row here");
  run->add_option("--trace", trace_path, "write driver events as JSON lines here");

  ModeFlags bench_flags;
  std::string target, l_list, bench_metrics;
  int n = 4, l = 0, phi = 1;
  auto* bench = app.add_subcommand("bench", "run the benchmark program over a sweep");
  bench->add_option("target", target, "benchmark program")->required()->check(CLI::IsMember({"example"}));
  bench->add_option("--n", n, "state dimension (even)");
  auto* l_opt = bench->add_option("--l", l, "outer iterations");
  bench->add_option("--l-list", l_list, "comma list or lo..hi (doubling)")->excludes(l_opt);
  bench->add_option("--phi", phi, "inner-duration hyperparameter");
  bench->add_option("--metrics", bench_metrics, "write CSV here instead of stdout");
  add_mode_flags(bench, bench_flags, true);

  auto* self = app.add_subcommand("selftest", "run the invariant checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (*run) {
      cvl::RunOptions o = options_for(run_flags, run_flags.mode, run);
      o.trace = !trace_path.empty();
      std::string text = read_file(file);
      cvl::RunResult r = cvl::run_program(text, o);
      std::cout << cvl::show(r.value) << "\n";
      std::string csv = cvl::csv_header() + "\n" + cvl::csv_row(r.metrics) + "\n";
      if (metrics_path.empty()) std::cout << csv;
      else write_file(metrics_path, csv);
      if (!trace_path.empty()) write_file(trace_path, cvl::trace_jsonl(r.trace));
      return 0;
    }
    if (*bench) {
      std::vector<int> ls = l_list.empty() ? std::vector<int>{l_opt->count() ? l : 8} : parse_l_list(l_list);
      if (n < 2 || n % 2 != 0) throw UsageError("--n must be an even number >= 2");
      if (phi < 0 || phi > 30) throw UsageError("--phi must be in 0..30");
      for (int li : ls)
        if (li < 1) throw UsageError("iteration counts must be positive");
      std::vector<std::string> modes =
          bench_flags.mode == "both" ? std::vector<std::string>{"reverse", "checkpoint"}
                                     : std::vector<std::string>{bench_flags.mode};
      std::ofstream file_out;
      if (!bench_metrics.empty()) {
        file_out.open(bench_metrics);
        if (!file_out) throw UsageError("cannot write '" + bench_metrics + "'");
      }
      std::ostream& out = bench_metrics.empty() ? std::cout : file_out;
      out << cvl::csv_header() << "\n" << std::flush;
      for (const auto& mode : modes) {
        cvl::RunOptions o = options_for(bench_flags, mode, bench);
        for (int li : ls) {
          cvl::ExampleParams p;
          p.n = n;
          p.l = li;
          p.phi = phi;
          cvl::RunResult r = cvl::run_program(cvl::build_example(p), o);
          r.metrics.n = n;
          r.metrics.l = li;
          out << cvl::csv_row(r.metrics) << "\n" << std::flush;
        }
      }
      return 0;
    }
    if (*self) return cvl::run_selftest(std::cout) ? 0 : kEvalError;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const cvl::SyntaxError& e) {
    std::cerr << "syntax error at " << e.line << ":" << e.col << ": " << e.what() << "\n";
    return kEvalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEvalError;
  }
  return 0;
}
