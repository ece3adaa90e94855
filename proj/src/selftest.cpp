#include "cvl/selftest.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "cvl/drivers.hpp"
#include "cvl/harness.hpp"

namespace cvl {

namespace {

const char* kPoly = R"(
(define (loop k x acc) (if (zero? k) acc (loop (- k 1) x (+ (* acc x) (sin x)))))
(define (f x) (loop 40 x 1))
)";

bool same_pair(const Value& a, const Value& b) { return ground_equal(a, b); }

}  // namespace

bool run_selftest(std::ostream& out) {
  bool all = true;
  auto check = [&](const std::string& name, const std::function<bool()>& fn) {
    bool ok = false;
    std::string why;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      why = std::string(" (") + e.what() + ")";
    }
    out << (ok ? "ok   " : "FAIL ") << name << why << "\n";
    all = all && ok;
  };

  check("eta binomial values", [] { return eta(2, 2) == 6 && eta(3, 3) == 20 && eta(0, 7) == 1; });

  check("pipelines agree on step counts", [] {
    Session s(kPoly);
    for (double x : {0.5, 1.5, -2.0}) {
      Value a = s.global("f", 'a'), b = s.global("f", 'b');
      if (s.a.primops(s.ctx, a, make_real(x)) != s.b.primops(s.ctx, b, make_real(x))) return false;
    }
    return true;
  });

  check("interrupt then resume reproduces the value", [] {
    Session s(kPoly);
    for (char p : {'a', 'b'}) {
      Pipeline& pl = s.pipeline(p);
      Value f = s.global("f", p), x = make_real(0.75);
      Outcome whole = pl.apply(s.ctx, f, x);
      int64_t n = pl.primops(s.ctx, f, x);
      for (int64_t l : {int64_t{1}, n / 3, n - 1}) {
        Outcome r = pl.resume(s.ctx, pl.interrupt(s.ctx, f, x, l));
        if (r.tag != Outcome::Done || !ground_equal(r.v, whole.v) || r.n != n - l) return false;
      }
    }
    return true;
  });

  check("checkpointed gradient equals plain gradient", [] {
    std::string text = std::string(kPoly) + "(checkpoint-*j f 0.75 1)\n";
    RunOptions plain;
    plain.cfg.plain = true;
    Value ref = run_program(text, plain).value;
    for (Algorithm a : {Algorithm::Bisect, Algorithm::Binary, Algorithm::Treeverse})
      for (Split sp : {Split::Bisection, Split::Binomial})
        for (char p : {'a', 'b'}) {
          if (a == Algorithm::Bisect && sp == Split::Binomial) continue;
          RunOptions o;
          o.pipeline = p;
          o.cfg.algorithm = a;
          o.cfg.split = sp;
          o.cfg.alpha = 8;
          o.cfg.criterion = a == Algorithm::Bisect ? Criterion{} : Criterion{CriterionKind::FixedSpace, 2};
          if (!same_pair(run_program(text, o).value, ref)) return false;
        }
    return true;
  });

  check("gradient matches central differences", [] {
    Session s(kPoly);
    Value f = s.global("f");
    auto val = [&](double x) { return number_of(s.a.apply(s.ctx, f, make_real(x)).v); };
    auto [y, g] = reverse_j(s.ctx, s.a, f, make_real(0.3), make_real(1.0));
    const double h = 1e-6, fd = (val(0.3 + h) - val(0.3 - h)) / (2 * h);
    return std::abs(number_of(g) - fd) <= 1e-5 * std::max(1.0, std::abs(fd));
  });

  check("Hessian-vector product of x^4 at 2", [] {
    const char* text = R"(
(define (f x) (* (* x x) (* x x)))
(define (grad x) (cdr (checkpoint-*j f x 1)))
(cdr (j* grad 2 1))
)";
    RunOptions o;
    o.cfg.alpha = 8;
    return std::abs(number_of(run_program(text, o).value) - 48.0) <= 1e-10;
  });

  return all;
}

}  // namespace cvl
