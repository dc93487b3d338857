#pragma once

// Time coefficients for the objective families and diffusion models: linear
// combinations of {1, exp(-a t), sin(pi a t), cos(pi a t), tanh(a t),
// (a t + b)/(c t + d)}, with analytic time derivatives.

#include <cmath>
#include <string>
#include <vector>

#include "tvdo/errors.hpp"

namespace tvdo {

class TimeFn {
 public:
  enum class Kind { constant, exp, sin, cos, tanh, rational };

  struct Term {
    Kind kind = Kind::constant;
    double coef = 0.0;
    double a = 1.0;            // decay / frequency / slope parameter
    double b = 0.0, c = 0.0, d = 1.0;  // rational: (a t + b)/(c t + d)
  };

  TimeFn() = default;

  double value(double t) const {
    double v = 0.0;
    for (const Term& m : terms_) {
      switch (m.kind) {
        case Kind::constant: v += m.coef; break;
        case Kind::exp: v += m.coef * std::exp(-m.a * t); break;
        case Kind::sin: v += m.coef * std::sin(M_PI * m.a * t); break;
        case Kind::cos: v += m.coef * std::cos(M_PI * m.a * t); break;
        case Kind::tanh: v += m.coef * std::tanh(m.a * t); break;
        case Kind::rational: v += m.coef * (m.a * t + m.b) / (m.c * t + m.d); break;
      }
    }
    return v;
  }

  double deriv(double t) const {
    double v = 0.0;
    for (const Term& m : terms_) {
      switch (m.kind) {
        case Kind::constant: break;
        case Kind::exp: v += -m.a * m.coef * std::exp(-m.a * t); break;
        case Kind::sin: v += M_PI * m.a * m.coef * std::cos(M_PI * m.a * t); break;
        case Kind::cos: v += -M_PI * m.a * m.coef * std::sin(M_PI * m.a * t); break;
        case Kind::tanh: {
          const double th = std::tanh(m.a * t);
          v += m.a * m.coef * (1.0 - th * th);
          break;
        }
        case Kind::rational: {
          const double den = m.c * t + m.d;
          v += m.coef * (m.a * m.d - m.b * m.c) / (den * den);
          break;
        }
      }
    }
    return v;
  }

  bool empty() const { return terms_.empty(); }

  TimeFn& operator+=(const TimeFn& other) {
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    return *this;
  }

  TimeFn scaled(double s) const {
    TimeFn f = *this;
    for (Term& m : f.terms_) m.coef *= s;
    return f;
  }

  static TimeFn constant(double c) { return single({Kind::constant, c}); }
  static TimeFn exp(double coef, double a = 1.0) { return single({Kind::exp, coef, a}); }
  static TimeFn sin(double coef, double a = 1.0) { return single({Kind::sin, coef, a}); }
  static TimeFn cos(double coef, double a = 1.0) { return single({Kind::cos, coef, a}); }
  static TimeFn tanh(double coef, double a = 1.0) { return single({Kind::tanh, coef, a}); }
  static TimeFn rational(double a, double b, double c, double d, double coef = 1.0) {
    Term m{Kind::rational, coef, a};
    m.b = b;
    m.c = c;
    m.d = d;
    return single(m);
  }
  // t itself, as the rational (1 t + 0)/(0 t + 1).
  static TimeFn linear(double coef = 1.0) { return rational(1.0, 0.0, 0.0, 1.0, coef); }

  const std::vector<Term>& terms() const { return terms_; }
  void add_term(const Term& m) { terms_.push_back(m); }

 private:
  static TimeFn single(Term m) {
    TimeFn f;
    f.terms_.push_back(m);
    return f;
  }

  std::vector<Term> terms_;
};

inline TimeFn operator+(TimeFn a, const TimeFn& b) {
  a += b;
  return a;
}

}  // namespace tvdo
