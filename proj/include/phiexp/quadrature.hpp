#pragma once

#include <functional>

namespace phiexp::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;  // absolute error estimate reported by the rule
};

/// Adaptive Gauss-Kronrod 7/15 on a finite interval of a smooth integrand.
Result gauss_kronrod(const std::function<double(double)>& f, double a, double b, double rel_tol);

/// tanh-sinh (double-exponential) rule on a finite interval; integrable
/// endpoint singularities are allowed at either end.
Result tanh_sinh(const std::function<double(double)>& f, double a, double b, double rel_tol);

/// Integral of f over [s0, inf) for integrands with power-law decay.
/// Maps u = s0/s so the far tail becomes a power singularity at u = 0,
/// then applies the tanh-sinh rule.
Result power_tail(const std::function<double(double)>& f, double s0, double rel_tol);

}  // namespace phiexp::quad
