// The adaptive-grid example: an n-vector state is rotated pairwise, first
// over odd-even then over even-odd coordinate pairs, by an angle
// proportional to its norm. The outer loop runs l times; the inner loop runs
// m(i) times, usually a handful but O(l) on a few iterations.
#include <cmath>
#include <cstdio>
#include <string>

#include "cvl/harness.hpp"
#include "cvl/value.hpp"

namespace cvl {

namespace {

int floor_lg(int64_t v) {
  int r = 0;
  while (v >= 2) {
    v /= 2;
    ++r;
  }
  return r;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const char* kLibrary = R"(; integer helpers on exact doubles
(define (ilg x) (if (< x 2) 0 (+ 1 (ilg (/ x 2)))))
(define (pow2 k) (if (zero? k) 1 (* 2 (pow2 (- k 1)))))
(define (mod a b) (- a (* b (floor (/ a b)))))

(define (sumsq xs) (if (null? xs) 0 (+ (* (car xs) (car xs)) (sumsq (cdr xs)))))
(define (total xs) (if (null? xs) 0 (+ (car xs) (total (cdr xs)))))

; rotate (x0,x1), (x2,x3), ... by the angle with cosine c and sine s
(define (rot-pairs c s xs)
  (if (null? xs)
      xs
      (if (null? (cdr xs))
          xs
          (let ((a (car xs)) (b (car (cdr xs))))
            (cons (- (* c a) (* s b))
                  (cons (+ (* s a) (* c b)) (rot-pairs c s (cdr (cdr xs)))))))))

(define (step xs)
  (let* ((theta (* 0.01 (sqrt (sumsq xs))))
         (c (cos theta))
         (s (sin theta))
         (ys (rot-pairs c s xs)))
    (cons (car ys) (rot-pairs c s (cdr ys)))))

(define (inner k xs) (if (zero? k) xs (inner (- k 1) (step xs))))
)";

}  // namespace

std::string example_definitions(const ExampleParams& p) {
  if (p.n < 2 || p.n % 2 != 0) throw EvalError("example: n must be even and at least 2");
  if (p.l < 1) throw EvalError("example: l must be at least 1");
  if (p.phi < 0 || p.phi > 30) throw EvalError("example: phi out of range");
  const int64_t k3 = static_cast<int64_t>(std::floor(std::pow(3.0, p.phi)));
  std::string s = kLibrary;
  s += "\n(define (duration i)\n  (pow2 (- " + std::to_string(floor_lg(p.l)) + " (ilg (+ 1 (mod (* " +
       std::to_string(1013 * k3) + " i) " + std::to_string(p.l) + "))))))\n";
  s += "(define (outer i xs) (if (< " + std::to_string(p.l) + " i) xs (outer (+ i 1) (inner (duration i) xs))))\n";
  s += "(define (example-f xs) (total (outer 1 xs)))\n";
  std::string x0 = "'()";
  for (int j = p.n; j-- > 0;) x0 = "(cons " + num(0.5 + 0.25 * std::sin(j + 1.0)) + " " + x0 + ")";
  s += "(define example-x0 " + x0 + ")\n";
  return s;
}

std::string build_example(const ExampleParams& p) {
  return example_definitions(p) +
         (p.checkpoint ? "(checkpoint-*j example-f example-x0 1)\n" : "(*j example-f example-x0 1)\n");
}

}  // namespace cvl
