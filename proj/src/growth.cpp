#include "rbsde/growth.hpp"

#include <cmath>
#include <sstream>

namespace rbsde {

GrowthFn::GrowthFn(Kind kind, double c, double a) : kind_(kind), c_(c), a_(a) {
    if (!(c > 0.0)) throw Error(ErrorKind::parameter, "growth function coefficient must be positive");
    if (kind == Kind::exponential && a < 0.0)
        throw Error(ErrorKind::parameter, "growth function exponent must be nonnegative");
}

double GrowthFn::operator()(double y) const {
    const double u = std::abs(y);
    double raw = 0.0;
    switch (kind_) {
        case Kind::constant: raw = c_; break;
        case Kind::affine: raw = c_ * (1.0 + u); break;
        case Kind::exponential: raw = c_ * std::exp(a_ * u); break;
        case Kind::log_affine: raw = c_ * (1.0 + u) * std::log1p(u); break;
    }
    return std::max(raw, 1.0);
}

double GrowthFn::constant_value() const {
    if (kind_ != Kind::constant)
        throw Error(ErrorKind::data, "a constant regularity parameter is required here, got " + describe());
    return c_;
}

std::string GrowthFn::describe() const {
    std::ostringstream out;
    switch (kind_) {
        case Kind::constant: out << c_; break;
        case Kind::affine: out << c_ << "*(1+|y|)"; break;
        case Kind::exponential: out << c_ << "*exp(" << a_ << "|y|)"; break;
        case Kind::log_affine: out << c_ << "*(1+|y|)log(1+|y|)"; break;
    }
    return out.str();
}

}  // namespace rbsde
