// Test programs shared by the unit and acceptance suites. Each defines a
// function `f`, an input `x0` and an output cotangent `ybar`.
#pragma once

#include <string>
#include <vector>

#include "cvl/harness.hpp"

namespace corpus {

struct Program {
  std::string name;
  std::string text;  // definitions only
  bool smooth = true;
};

inline std::vector<Program> small() {
  return {
      {"cubic", R"(
(define (f x) (+ (* 3 (* x (* x x))) (- (* 2 x) 5)))
(define x0 1.3)
(define ybar 1)
)"},
      {"horner-loop", R"(
(define (horner k x acc) (if (zero? k) acc (horner (- k 1) x (+ (* acc x) (/ 1 k)))))
(define (f x) (horner 40 x 0))
(define x0 0.9)
(define ybar 1)
)"},
      {"trig-chain", R"(
(define (f x) (sin (cos (* x (exp (* 0.1 (atan x)))))))
(define x0 0.4)
(define ybar 1)
)"},
      {"pair-input", R"(
(define (f p) (* (car p) (sin (+ (cdr p) (* (car p) (cdr p))))))
(define x0 (cons 1.5 0.7))
(define ybar 1)
)"},
      {"pair-output", R"(
(define (f p)
  (let ((a (car p)) (b (cdr p)))
    (cons (* a (exp b)) (cons (/ a b) (sqrt (+ (* a a) (* b b)))))))
(define x0 (cons 0.8 1.7))
(define ybar (cons 1 (cons -0.5 2)))
)"},
      {"list-sumsq", R"(
(define (sq-sum xs) (if (null? xs) 0 (+ (* (car xs) (car xs)) (sq-sum (cdr xs)))))
(define (scale c xs) (if (null? xs) xs (cons (* c (car xs)) (scale c (cdr xs)))))
(define (iter k xs) (if (zero? k) xs (iter (- k 1) (scale (/ 1 (sqrt (+ 1 (sq-sum xs)))) xs))))
(define (f xs) (sq-sum (iter 6 xs)))
(define x0 (cons 0.3 (cons -1.2 (cons 2.1 (cons 0.05 (cons 1.0 (cons -0.7 '())))))))
(define ybar 1)
)"},
      {"branchy-map", R"(
(define (g x) (if (< x 0.5) (* 3.2 (* x (- 1 x))) (+ 0.25 (* 0.5 (sin x)))))
(define (iter k x) (if (zero? k) x (iter (- k 1) (g x))))
(define (f x) (iter 60 x))
(define x0 0.31)
(define ybar 1)
)"},
      {"newton-sqrt", R"(
(define (newton k a y) (if (zero? k) y (newton (- k 1) a (* 0.5 (+ y (/ a y))))))
(define (f a) (newton 25 a 1))
(define x0 7.5)
(define ybar 1)
)"},
      {"closures", R"(
(define (map1 g xs) (if (null? xs) xs (cons (g (car xs)) (map1 g (cdr xs)))))
(define (fold g acc xs) (if (null? xs) acc (fold g (g acc (car xs)) (cdr xs))))
(define (f xs)
  (let* ((m (fold (lambda (a b) (+ a b)) 0 xs))
         (ys (map1 (lambda (x) (* (- x m) (exp (* 0.1 x)))) xs)))
    (fold (lambda (a b) (+ a (* b b))) 0 ys)))
(define x0 (cons 1 (cons 2 (cons 0.5 (cons -1.5 '())))))
(define ybar 1)
)"},
      {"let-mix", R"(
(define (f p)
  (let* ((a (car p))
         (b (car (cdr p)))
         (c (cdr (cdr p)))
         (u (log (+ 2 (* a a))))
         (v (atan (* b c)))
         (w (sqrt (+ 1 (* u u) (* v v)))))
    (cons (* w (sin a)) (- u (* v w)))))
(define x0 (cons 0.6 (cons -0.4 1.1)))
(define ybar (cons 0.3 1))
)"},
      {"floor-piecewise", R"(
(define (saw x) (- x (floor x)))
(define (iter k x acc) (if (zero? k) acc (iter (- k 1) (* 1.7 x) (+ acc (* (saw x) (saw x))))))
(define (f x) (iter 12 x 0))
(define x0 0.213)
(define ybar 1)
)",
       false},
      {"nested-derivative", R"(
(define (cube x) (* x (* x x)))
(define (dcube x) (cdr (*j cube x 1)))
(define (f x) (+ (dcube x) (sin x)))
(define x0 1.25)
(define ybar 1)
)"},
  };
}

// The adaptive-grid example as a corpus entry.
inline Program example(int n, int l) {
  cvl::ExampleParams p;
  p.n = n;
  p.l = l;
  std::string text = cvl::example_definitions(p) + "(define (f xs) (example-f xs))\n(define x0 example-x0)\n(define ybar 1)\n";
  return {"example n=" + std::to_string(n) + " l=" + std::to_string(l), text};
}

}  // namespace corpus
