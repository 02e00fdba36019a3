#pragma once

#include <string>

#include "rbsde/errors.hpp"

namespace rbsde {

// Tagged monotone growth functions: symmetric, nondecreasing on [0, inf),
// clamped below by 1. The closed catalog keeps assumption validation
// decidable by sampling.
class GrowthFn {
  public:
    enum class Kind {
        constant,    // c
        affine,      // c (1 + |y|)
        exponential, // c exp(a |y|)
        log_affine,  // c (1 + |y|) log(1 + |y|)   (superlinear phi)
    };

    GrowthFn() : kind_(Kind::constant), c_(1.0), a_(0.0) {}
    GrowthFn(Kind kind, double c, double a = 0.0);

    static GrowthFn constant(double c) { return GrowthFn(Kind::constant, c); }
    static GrowthFn affine(double c) { return GrowthFn(Kind::affine, c); }
    static GrowthFn exponential(double c, double a) { return GrowthFn(Kind::exponential, c, a); }
    static GrowthFn log_affine(double c) { return GrowthFn(Kind::log_affine, c); }

    double operator()(double y) const;

    Kind kind() const { return kind_; }
    double c() const { return c_; }
    double a() const { return a_; }
    bool is_constant() const { return kind_ == Kind::constant; }

    // The constant value; throws for non-constant tags (callers that need a
    // scalar Lipschitz constant must be given one).
    double constant_value() const;

    // Same shape with the leading coefficient multiplied by `factor`.
    GrowthFn scaled(double factor) const { return GrowthFn(kind_, c_ * factor, a_); }

    std::string describe() const;

  private:
    Kind kind_;
    double c_;
    double a_;
};

}  // namespace rbsde
