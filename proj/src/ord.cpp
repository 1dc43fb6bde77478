#include "phiexp/ord.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace phiexp {

namespace {

// least-squares slope of y against x
double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

// least-squares intercept of y = c + a*x
double ls_intercept(const std::vector<double>& x, const std::vector<double>& y) {
    const double a = ls_slope(x, y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    return my / x.size() - a * mx / x.size();
}

double fit_phi_exponent(const PhiSpec& spec, double s_lo, double s_hi) {
    const int n = 31;
    std::vector<double> lx(n), ly(n);
    const double step = (std::log(s_hi) - std::log(s_lo)) / (n - 1);
    for (int i = 0; i < n; ++i) {
        lx[i] = std::log(s_lo) + i * step;
        ly[i] = std::log(spec(std::exp(lx[i])));
    }
    return ls_slope(lx, ly) - 1.0;  // phi ~ s^(1+delta)
}

// Order of ln_phi at t -> 0, from local slopes of ln|ln_phi| extrapolated
// in 1/log(t). The 1/u correction absorbs the logarithmic growth of the
// delta' = 0 cases (e.g. phi(s) = s) that a plain power fit misreads.
double fit_delta_prime(const DeformedLogExp& lx) {
    const double u_hi = std::log(1e-6), u_lo = std::log(1e-9);
    const int n = 25;
    const double step = (u_hi - u_lo) / (n - 1);
    std::vector<double> inv_u(n - 2), sigma(n - 2);
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = std::log(-lx.ln(std::exp(u_lo + i * step)));
    for (int i = 1; i + 1 < n; ++i) {
        sigma[i - 1] = (g[i + 1] - g[i - 1]) / (2.0 * step);
        inv_u[i - 1] = 1.0 / (u_lo + i * step);
    }
    const double sigma_limit = ls_intercept(inv_u, sigma);
    return std::max(-sigma_limit, 0.0);
}

}  // namespace

OrdReport validate_ord(const PhiSpec& spec, double a) {
    OrdReport report;
    report.ord_bound = a;
    report.delta_zero_est = fit_phi_exponent(spec, 1e-9, 1e-6);
    report.delta_inf_est = fit_phi_exponent(spec, 1e6, 1e9);

    constexpr double kFitTol = 0.02;
    if (std::abs(report.delta_zero_est - spec.delta_zero()) > kFitTol ||
        std::abs(report.delta_inf_est - spec.delta_inf()) > kFitTol) {
        std::ostringstream msg;
        msg << spec.label() << ": declared exponents (" << spec.delta_zero() << ", " << spec.delta_inf()
            << ") disagree with fitted (" << report.delta_zero_est << ", " << report.delta_inf_est << ")";
        throw MetadataError(msg.str());
    }

    DeformedLogExp lx(spec);
    report.delta_prime_est = fit_delta_prime(lx);

    const double max_declared = std::max(spec.delta_zero(), spec.delta_inf());
    report.admissible = max_declared < a;
    report.p_phi = (max_declared > 0.0) ? ExtReal(1.0 / max_declared - 1.0) : ExtReal::pos_inf();
    return report;
}

}  // namespace phiexp
