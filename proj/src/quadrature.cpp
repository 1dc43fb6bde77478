#include "phiexp/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "phiexp/errors.hpp"

namespace phiexp::quad {

namespace {

void check_finite(const Result& r, const char* rule) {
    if (!std::isfinite(r.value)) throw NumericError(std::string(rule) + ": non-finite integral value", r.error);
}

}  // namespace

Result gauss_kronrod(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    Result r;
    if (a == b) return r;
    using rule = boost::math::quadrature::gauss_kronrod<double, 15>;
    r.value = rule::integrate(f, a, b, 12, rel_tol, &r.error);
    check_finite(r, "gauss_kronrod");
    return r;
}

Result tanh_sinh(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    Result r;
    if (a == b) return r;
    boost::math::quadrature::tanh_sinh<double> rule(12);
    double l1 = 0.0;
    r.value = rule.integrate(f, a, b, rel_tol, &r.error, &l1);  // error is |I_k - I_{k-1}|, absolute
    check_finite(r, "tanh_sinh");
    return r;
}

Result power_tail(const std::function<double(double)>& f, double s0, double rel_tol) {
    if (!(s0 > 0.0)) throw DomainError("power_tail: lower limit must be positive");
    // s = s0/u, ds = -s0/u^2 du:  int_{s0}^{inf} f = int_0^1 f(s0/u) s0/u^2 du
    auto g = [&f, s0](double u) {
        const double s = s0 / u;
        const double fv = f(s);
        if (fv == 0.0) return 0.0;  // avoid 0 * inf when u underflows the jacobian
        return fv * s0 / (u * u);
    };
    return tanh_sinh(g, 0.0, 1.0, rel_tol);
}

}  // namespace phiexp::quad
