#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "corpus.hpp"
#include "cvl/converted.hpp"
#include "cvl/direct.hpp"
#include "cvl/drivers.hpp"
#include "cvl/harness.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cvl;
using support::get;

namespace {

// Value of a program's main expression on the given pipeline.
Value run_main(const std::string& text, char p = 'a') {
  Session s(text);
  Outcome o = s.pipeline(p).run_main(s.ctx);
  REQUIRE(o.tag == Outcome::Done);
  return o.v;
}

Value direct(const std::string& expr) {
  Context c;
  Globals g;
  return eval_direct(c, g, EnvA{}, *resolve(parse_expr(expr), {}));
}

double num(const Value& v) { return number_of(v); }

Value dual(double p, double t, int level) { return Value(std::shared_ptr<const Obj>(alloc<Dual>(make_real(p), make_real(t), level))); }

bool is_dual(const Value& v, double p, double t) {
  return v.is(Kind::Dual) && real_of(v.as<Dual>().primal) == p && real_of(v.as<Dual>().tangent) == t;
}

std::vector<std::string> sorted_free(const std::string& text) {
  auto fv = free_variables(*parse_expr(text));
  std::sort(fv.begin(), fv.end());
  return fv;
}

}  // namespace

TEST_SUITE("syntax") {
  TEST_CASE("parser produces the expected shapes") {
    ExprPtr id = parse_expr("(lambda (x) x)");
    CHECK(id->kind == ExprKind::Lambda);
    CHECK(id->params == std::vector<std::string>{"x"});
    CHECK(id->kids.at(0)->kind == ExprKind::Var);

    ExprPtr sq = parse_expr("((lambda (x) (* x x)) 3)");
    REQUIRE(sq->kind == ExprKind::App);
    CHECK(sq->kids[0]->kind == ExprKind::Lambda);
    CHECK(sq->kids[0]->kids[0]->kind == ExprKind::Binary);
    CHECK(sq->kids[0]->kids[0]->op == Prim::Mul);
    CHECK(sq->kids[1]->kind == ExprKind::Const);

    ExprPtr cj = parse_expr("(checkpoint-*j f x 1.0)");
    CHECK(cj->kind == ExprKind::CheckpointReverseJ);
    CHECK(cj->kids.size() == 3);
  }

  TEST_CASE("free variables") {
    CHECK(sorted_free("(lambda (x) x)").empty());
    CHECK(sorted_free("(lambda (x) (+ x y))") == std::vector<std::string>{"y"});
    CHECK(sorted_free("(f (lambda (z) f))") == std::vector<std::string>{"f"});
  }

  TEST_CASE("syntax errors carry a position") {
    CHECK_THROWS_AS(parse_program("(define (f x) (+ x 1)"), SyntaxError);
    CHECK_THROWS_AS(parse_program("(if 1 2)"), SyntaxError);
    // '%' is reserved for names introduced by conversion.
    CHECK_THROWS_AS(parse_program("(define %k 1)"), SyntaxError);
  }

  TEST_CASE("pretty printing round-trips") {
    const std::string text = "(define (f x) (if (< x 1) (* x x) (sin x)))\n(f 0.5)\n";
    Program p = parse_program(text);
    Program q = parse_program(pretty(p));
    CHECK(pretty(p) == pretty(q));
  }
}

TEST_SUITE("direct evaluator") {
  TEST_CASE("expressions") {
    CHECK(num(direct("((lambda (x) (* x x)) 3)")) == 9);
    CHECK(num(direct("(if (< 1 2) 10 20)")) == 10);
    CHECK(num(direct("(car (cons 1 2))")) == 1);
  }

  TEST_CASE("application") {
    Context c;
    Globals g;
    // Closures point into the expression tree, which must outlive them.
    ExprPtr id_e = resolve(parse_expr("(lambda (x) x)"), {});
    ExprPtr k_e = resolve(parse_expr("((lambda (y) (lambda (x) y)) 2)"), {});
    Value id = eval_direct(c, g, EnvA{}, *id_e);
    CHECK(num(apply_direct(c, g, id, make_real(7))) == 7);
    Value k = eval_direct(c, g, EnvA{}, *k_e);
    CHECK(num(apply_direct(c, g, k, make_real(0))) == 2);
    CHECK_THROWS_AS(apply_direct(c, g, make_real(3), make_real(0)), EvalError);
  }

  TEST_CASE("checkpoint-*j acts as *j") {
    CHECK(show(direct("(checkpoint-*j (lambda (x) (* x x)) 3 1)")) == show(direct("(*j (lambda (x) (* x x)) 3 1)")));
  }
}

TEST_SUITE("ad") {
  TEST_CASE("lifted arithmetic on duals") {
    Context c;
    CHECK(is_dual(lift_binary(c, Prim::Mul, dual(3, 1, 1), dual(3, 1, 1)), 9, 6));
    CHECK(is_dual(lift_unary(c, Prim::Sin, dual(0, 1, 1)), 0, 1));
  }

  TEST_CASE("bundle and unbundle") {
    Value b = bundle(make_pair(make_real(1), make_real(2)), make_pair(make_real(10), make_real(20)), 1);
    CHECK(is_dual(b.as<Pair>().car, 1, 10));
    CHECK(is_dual(b.as<Pair>().cdr, 2, 20));
    CHECK(is_dual(bundle(make_real(3), make_real(0), 1), 3, 0));
    CHECK_THROWS_AS(bundle(make_pair(make_real(1), make_real(2)),
                           make_pair(make_real(10), make_pair(make_real(20), make_real(30))), 1),
                    EvalError);

    auto [p, t] = unbundle(dual(9, 6, 1), 1);
    CHECK(num(p) == 9);
    CHECK(num(t) == 6);
    auto [p2, t2] = unbundle(make_real(4), 1);
    CHECK(num(p2) == 4);
    CHECK(num(t2) == 0);
    auto [p3, t3] = unbundle(make_pair(dual(1, 2, 1), make_real(3)), 1);
    CHECK(show(p3) == "(1 . 3)");
    CHECK(show(t3) == "(2 . 0)");
  }

  TEST_CASE("forward and reverse operators") {
    CHECK(show(run_main("(j* (lambda (x) (* x x)) 3 1)")) == "(9 . 6)");
    CHECK(show(run_main("(j* (lambda (x) (* x x)) 3 0)")) == "(9 . 0)");
    CHECK(show(run_main("(j* (lambda (x) (* x (sin x))) 0 1)")) == "(0 . 0)");
    CHECK(show(run_main("(*j (lambda (x) (* x x)) 3 1)")) == "(9 . 6)");
    CHECK(show(run_main("(*j (lambda (p) (* (car p) (cdr p))) (cons 3 4) 1)")) == "(12 4 . 3)");
    CHECK(show(run_main("(*j (lambda (x) (sin x)) 0 2)")) == "(0 . 2)");
  }

  TEST_CASE("nested derivatives") {
    const std::string d2 = R"(
(define (cube x) (* x (* x x)))
(define (d h) (lambda (x) (cdr (*j h x 1))))
((d (d cube)) 2)
)";
    for (char p : {'a', 'b'}) CHECK(num(run_main(d2, p)) == 12);
  }

  TEST_CASE("forward matches reverse on the corpus") {
    for (const auto& prog : corpus::small()) {
      Session s(prog.text, false);
      Value f = get(s, "f"), x = get(s, "x0");
      support::Probe r = support::plain(s);
      if (!r.y.is(Kind::Real)) continue;
      std::vector<double> xs = support::flatten(x), g = support::flatten(r.xbar);
      for (size_t i = 0; i < xs.size(); ++i) {
        size_t k = 0;
        Value dir = map_leaves(x, true, [&](const Value&) { return make_real(k++ == i ? 1.0 : 0.0); });
        double t = num(forward_j(s.ctx, s.a, f, x, dir).second) * num(get(s, "ybar"));
        CHECK_MESSAGE(std::abs(t - g[i]) <= 1e-12 * std::max(1.0, std::abs(g[i])), prog.name);
      }
    }
  }
}

TEST_SUITE("cps interpreter") {
  TEST_CASE("step counting") {
    Session s("(define (id x) x)\n(define (sq x) (* x x))\n");
    CpsMachine& m = s.a;
    Outcome o = m.eval(s.ctx, *parse_program("5").main, EnvA{}, halt_frame(), 0, StepCount::kInfinite);
    CHECK(o.tag == Outcome::Done);
    CHECK(num(o.v) == 5);
    CHECK(o.n == 1);

    Outcome cap = m.eval(s.ctx, *parse_program("5").main, EnvA{}, halt_frame(), 0, 0);
    CHECK(cap.tag == Outcome::Interrupted);
    CHECK(cap.v.is(Kind::Capsule));

    Session t("((lambda (x) x) 5)\n");
    Outcome app = t.a.run_main(t.ctx);
    CHECK(num(app.v) == 5);
    CHECK(app.n == 4);

    CHECK(m.primops(s.ctx, get(s, "id"), make_real(5)) == 1);
    // Binary +1 and one per variable reference.
    CHECK(m.primops(s.ctx, get(s, "sq"), make_real(3)) == 3);
  }

  TEST_CASE("interrupt and resume") {
    Session s("(define (loop k acc) (if (zero? k) acc (loop (- k 1) (+ acc (sin k)))))\n(define (f x) (loop 10 x))\n");
    for (char p : {'a', 'b'}) {
      CAPTURE(p);
      Pipeline& pl = s.pipeline(p);
      Value f = get(s, "f", p), x = make_real(0.5);
      Outcome whole = pl.apply(s.ctx, f, x);
      const int64_t L = pl.primops(s.ctx, f, x);
      REQUIRE(L > 20);

      Value z = pl.interrupt(s.ctx, f, x, L / 2);
      CHECK(z.is(Kind::Capsule));
      Outcome r1 = pl.resume(s.ctx, z), r2 = pl.resume(s.ctx, z);
      CHECK(ground_equal(r1.v, whole.v));
      CHECK(ground_equal(r2.v, whole.v));
      CHECK(r1.n == L - L / 2);

      CHECK_THROWS_AS(pl.interrupt(s.ctx, f, x, L), RanToCompletion);
      CHECK(pl.interrupt(s.ctx, pl.make_R(), z, 3).is(Kind::Capsule));
      CHECK_THROWS_AS(pl.resume(s.ctx, make_real(3)), EvalError);
      CHECK_THROWS_AS(pl.apply(s.ctx, pl.make_R(), make_real(1)), EvalError);

      // I f l applied to x is interrupt f x l.
      Outcome via_i = pl.apply(s.ctx, pl.make_I(f, L / 2), x);
      REQUIRE(via_i.v.is(Kind::Capsule));
      CHECK(pl.primops(s.ctx, pl.make_R(), via_i.v) == pl.primops(s.ctx, pl.make_R(), z));
      // Inside the language a budget that outlasts the computation just
      // yields its value; only the host-level interrupt reports completion.
      CHECK(ground_equal(pl.apply(s.ctx, pl.make_I(f, L), x).v, whole.v));

      // Nested budgets: the outer limit fires first, the inner residue is
      // re-armed when the capsule resumes.
      Value inner = pl.make_I(f, L / 2);
      Value outer = pl.interrupt(s.ctx, inner, x, L / 4);
      Outcome rest = pl.resume(s.ctx, outer);
      REQUIRE(rest.v.is(Kind::Capsule));
      CHECK(ground_equal(pl.resume(s.ctx, rest.v).v, whole.v));

      // R under a smaller I budget yields another capsule.
      Outcome again = pl.apply(s.ctx, pl.make_I(pl.make_R(), 5), z);
      CHECK(again.v.is(Kind::Capsule));
    }
  }
}

TEST_SUITE("conversion") {
  TEST_CASE("converted variables are limit checked") {
    ExprPtr v = cps_convert(make_var("x"));
    CHECK(contains_resume(*v) == false);
    const std::string text = pretty(*v);
    CHECK(text.find("%k") != std::string::npos);
    CHECK(text.find("%l") != std::string::npos);
  }

  TEST_CASE("pipelines agree on values and step counts") {
    for (const char* text : {"((lambda (x) (* x x)) 3)", "(if (< 1 2) 10 20)", "(car (cons 1 2))",
                             "((lambda (x) x) 5)"}) {
      CAPTURE(text);
      Session s(text);
      Outcome a = s.a.run_main(s.ctx), b = s.b.run_main(s.ctx);
      CHECK(ground_equal(a.v, b.v));
      CHECK(a.n == b.n);
    }
  }
}

TEST_SUITE("checkpointing") {
  TEST_CASE("mid, eta and pick") {
    CHECK(mid(Split::Bisection, kUnbounded, kUnbounded, 0, 10, 8) == 5);
    CHECK_THROWS(mid(Split::Bisection, kUnbounded, kUnbounded, 0, 8, 8));
    CHECK(eta(2, 2) == 6);
    CHECK(eta(3, 3) == 20);
    CHECK(eta(0, 5) == 1);
    for (int64_t d = 0; d <= 8; ++d)
      for (int64_t t = 0; t <= 8; ++t) CHECK(eta(d, t) == oracle::pascal(d, t));
    // Smallest t with C(3+t, t) >= 200.
    const int64_t t = pick({CriterionKind::FixedSpace, 3}, 200 * 64, 64).t;
    CHECK(t == oracle::first_reaching(3, 200));
    CHECK(t == 9);
    // Binomial split of six base segments under two snapshots and two sweeps.
    CHECK(mid(Split::Binomial, 2, 2, 0, 6 * 16, 16) == 3 * 16);
  }

  TEST_CASE("schedule oracle") {
    oracle::Schedule s;
    for (int64_t d = 1; d < 5; ++d) CHECK(s(1, d) == 0);
    for (int64_t m = 2; m < 12; ++m) CHECK(s(m, m - 1) <= m - 1);
  }

  TEST_CASE("checkpoint-*j equals *j") {
    CHECK(show(run_main("(checkpoint-*j (lambda (x) (* x x)) 3 1)")) == "(9 . 6)");
    CHECK_THROWS_AS(run_main("(checkpoint-*j 3 3 1)"), EvalError);

    auto prog = corpus::example(4, 32);
    Session s(prog.text);
    support::Probe ref = support::plain(s);
    for (const auto& cfg : support::all_configs(16))
      for (char p : {'a', 'b'}) {
        CAPTURE(support::describe(cfg));
        CHECK(support::same(support::checkpointed(s, cfg, p), ref));
      }
  }

  TEST_CASE("generalized binary without limits is bisection") {
    Context c1, c2;
    std::vector<TraceEvent> t1, t2;
    c1.trace = &t1;
    c2.trace = &t2;
    CheckpointConfig bis, gen;
    bis.alpha = gen.alpha = 10;
    gen.algorithm = Algorithm::Binary;
    SymbolicBackend b1{5000}, b2{5000};
    CheckpointDriver<SymbolicBackend>(b1, c1, bis).run({}, 0, 0);
    CheckpointDriver<SymbolicBackend>(b2, c2, gen).run({}, 0, 0);
    CHECK(t1 == t2);
  }

  TEST_CASE("tape grows linearly without checkpointing") {
    auto loop = [](int k) {
      return "(define (loop k x) (if (zero? k) x (loop (- k 1) (+ x (* 0.1 (sin x))))))\n(define (f x) (loop " +
             std::to_string(k) + " x))\n(define x0 0.3)\n(define ybar 1)\n";
    };
    Session s1(loop(2000), false), s2(loop(4000), false);
    auto p1 = support::plain(s1), p2 = support::plain(s2);
    const double ratio = static_cast<double>(p2.counters.peak_tape) / static_cast<double>(p1.counters.peak_tape);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.05));
  }

  TEST_CASE("bisection snapshot count") {
    Context c;
    CheckpointConfig cfg;
    SymbolicBackend b{int64_t{1} << 14};
    CheckpointDriver<SymbolicBackend>(b, c, cfg).run({}, 0, 0);
    CHECK(c.counters.peak_snapshots <= 14 + 1);
    CHECK(c.counters.leaves == (int64_t{1} << 14) / 64);
  }
}

TEST_SUITE("example") {
  TEST_CASE("gradient matches differences at small size") {
    auto prog = corpus::example(2, 1);
    Session s(prog.text, false);
    support::Probe r = support::plain(s);
    Value f = get(s, "f"), x = get(s, "x0");
    std::vector<double> xs = support::flatten(x), g = support::flatten(r.xbar);
    REQUIRE(xs.size() == 2);
    for (size_t i = 0; i < xs.size(); ++i) {
      auto at = [&](double xi) { return num(apply_direct(s.ctx, s.a.globals(), f, support::with_leaf(x, i, xi))); };
      const double h = 1e-4;
      const double fd = (4 * oracle::central(at, xs[i], h / 2) - oracle::central(at, xs[i], h)) / 3;
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }

  TEST_CASE("generated program is well formed") {
    ExampleParams p;
    p.n = 6;
    p.l = 3;
    Program prog = parse_program(build_example(p));
    REQUIRE(prog.main);
    CHECK(prog.main->kind == ExprKind::CheckpointReverseJ);
    p.checkpoint = false;
    CHECK(parse_program(build_example(p)).main->kind == ExprKind::ReverseJ);
    p.n = 5;
    CHECK_THROWS_AS(build_example(p), EvalError);
  }
}

TEST_SUITE("harness") {
  TEST_CASE("csv rows") {
    RunOptions o;
    o.cfg.alpha = 8;
    RunResult r = run_program("(define (f x) (* x (sin x)))\n(checkpoint-*j f 1 1)\n", o);
    std::string header = csv_header(), row = csv_row(r.metrics);
    CHECK(header ==
          "mode,algorithm,split,criterion,alpha,pipeline,n,l,L,peak_tape,peak_snapshots,recompute_steps,leaves,wall_ms");
    CHECK(std::count(row.begin(), row.end(), ',') == 13);
    CHECK(row.rfind("checkpoint,binary,bisection,none,8,a,,,", 0) == 0);

    o.cfg.plain = true;
    CHECK(csv_row(run_program("(*j (lambda (x) x) 1 1)", o).metrics).rfind("reverse,none,none,none,0,a", 0) == 0);
  }

  TEST_CASE("trace lines are json") {
    RunOptions o;
    o.cfg.alpha = 8;
    o.trace = true;
    const std::string text = std::string(corpus::small()[1].text) + "(checkpoint-*j f x0 1)\n";
    RunResult r = run_program(text, o);
    REQUIRE(!r.trace.empty());
    std::istringstream in(trace_jsonl(r.trace));
    int lines = 0;
    std::string last;
    for (std::string line; std::getline(in, line); ++lines) {
      auto j = nlohmann::json::parse(line);
      CHECK(j.contains("event"));
      last = j["event"];
    }
    CHECK(lines == static_cast<int>(r.trace.size()));
    CHECK(last == "done");
  }

  TEST_CASE("criterion names parse back") {
    for (const char* s : {"none", "log", "fixed-space=3", "fixed-time=12"}) {
      Criterion c;
      REQUIRE(parse_criterion(s, c));
      CHECK(criterion_name(c) == s);
    }
    Criterion c;
    CHECK_FALSE(parse_criterion("fixed-space=0", c));
    CHECK_FALSE(parse_criterion("fixed-time", c));
    CHECK_FALSE(parse_criterion("fast", c));
  }
}

TEST_SUITE("cli") {
  int cli(const std::string& args) {
    const std::string cmd = std::string(CVL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  TEST_CASE("exit codes") {
    const std::string ok = "cvl-unit-ok.cvl", bad = "cvl-unit-bad.cvl";
    std::ofstream(ok) << "(define (f x) (* x x))\n(checkpoint-*j f 3 1)\n";
    std::ofstream(bad) << "(car 1)\n";
    CHECK(cli("run " + ok) == 0);
    CHECK(cli("run " + ok + " --mode checkpoint --algorithm treeverse --split binomial --criterion fixed-space=5") == 0);
    CHECK(cli("run " + ok + " --pipeline b --alpha 8") == 0);
    CHECK(cli("run " + bad) == 1);
    CHECK(cli("run missing-file.cvl") == 2);
    CHECK(cli("run " + ok + " --criterion sometimes") == 2);
    CHECK(cli("run " + ok + " --mode reverse --alpha 8") == 2);
    CHECK(cli("bench example --n 3") == 2);
    CHECK(cli("bench example --n 2 --l 2") == 0);
    CHECK(cli("frobnicate") == 2);
    CHECK(cli("selftest") == 0);
    std::remove(ok.c_str());
    std::remove(bad.c_str());
  }
}
