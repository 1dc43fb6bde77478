#include "phiexp/normalization.hpp"

#include <boost/math/tools/roots.hpp>
#include <cstdint>
#include <cmath>
#include <sstream>

#include "phiexp/quadrature.hpp"

namespace phiexp {

namespace {

double p_phi_of(const PhiSpec& spec) {
    const double m = std::max(spec.delta_zero(), spec.delta_inf());
    return m > 0.0 ? 1.0 / m - 1.0 : std::numeric_limits<double>::infinity();
}

void check_f_domain(const DeformedLogExp& lx, double p, double lambda) {
    if (!(p > -1.0) || !(p < p_phi_of(lx.phi()))) {
        std::ostringstream msg;
        msg << "f_integral: p = " << p << " outside (-1, p_phi = " << p_phi_of(lx.phi()) << ")";
        throw DomainError(msg.str());
    }
    if (!(lx.lower_bound() < lambda) || !(lambda < lx.upper_bound()))
        throw DomainError("f_integral: lambda outside (l_phi, L_phi)");
}

}  // namespace

double f_integral(const DeformedLogExp& lx, double p, double lambda, double rel_tol) {
    check_f_domain(lx, p, lambda);

    auto g = [&lx, p, lambda](double s) {
        const double e = lx.exp(lambda - s);
        if (e <= 0.0) return 0.0;  // also guards pow overflow deep in the tail
        return std::pow(s, p) * e;
    };

    const ExtReal l = lx.lower_bound();
    const bool finite_range = l.is_finite();
    const double range = finite_range ? lambda - l.value() : std::numeric_limits<double>::infinity();
    const double eps = std::min(1.0, finite_range ? 0.5 * range : 1.0);

    quad::Result near = quad::tanh_sinh(g, 0.0, eps, rel_tol);
    quad::Result bulk, far;
    if (finite_range) {
        const double mid = 0.5 * (eps + range);
        bulk = quad::gauss_kronrod(g, eps, mid, rel_tol);
        far = quad::tanh_sinh(g, mid, range, rel_tol);
    } else {
        const double shoulder = std::max({8.0, 2.0 * eps, 2.0 * std::abs(lambda) + 8.0});
        bulk = quad::gauss_kronrod(g, eps, shoulder, rel_tol);
        far = quad::power_tail(g, shoulder, rel_tol);
    }

    const double value = near.value + bulk.value + far.value;
    const double err = near.error + bulk.error + far.error;
    if (!(value >= 0.0) || !std::isfinite(value)) throw NumericError("f_integral: invalid value", err);
    // Achievable relative accuracy degrades in two regimes: interpolant-backed
    // generators plateau near 1e-12 (ln_phi is C1 at panel junctions), and
    // lambda -> l_phi loses digits to cancellation in exp_phi's argument.
    double gate = std::max(20.0 * rel_tol, 1e-9);
    if (finite_range) gate = std::max(gate, 3e-11 / std::min(1.0, range));
    if (err > gate * std::max(value, 1e-300))
        throw NumericError("f_integral: quadrature did not converge", err / std::max(value, 1e-300));
    return value;
}

double log_f_integral(const DeformedLogExp& lx, double p, double lambda, double rel_tol) {
    return std::log(f_integral(lx, p, lambda, rel_tol));
}

double log_big_F(const DeformedLogExp& lx, double p, double lambda) {
    if (!(p > 0.0) || !(p < p_phi_of(lx.phi()))) throw DomainError("big_F: p outside (0, p_phi)");
    return (p + 1.0) * log_f_integral(lx, p - 1.0, lambda) - p * log_f_integral(lx, p, lambda);
}

double big_F(const DeformedLogExp& lx, double p, double lambda) { return std::exp(log_big_F(lx, p, lambda)); }

NormalizationConstants solve_constants(const DeformedLogExp& lx, int d, const Eigen::MatrixXd& V, FamilyTag family) {
    lx.phi().require_admissible(d);
    if (V.rows() != d || V.cols() != d) throw InputError("solve_constants: V has wrong dimensions");
    if (!V.isApprox(V.transpose(), 1e-10)) throw InputError("solve_constants: V must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V);
    if (es.eigenvalues().minCoeff() <= 0.0) throw InputError("solve_constants: V must be positive definite");
    const double det_v = V.determinant();

    // For the G family the solve is V-independent (runs at I_d).
    const double det_solve = (family == FamilyTag::G) ? 1.0 : det_v;
    const double p = 0.5 * d;
    const double log_target = -p * std::log(d * M_PI) + std::lgamma(p) - 0.5 * std::log(det_solve);

    int evals = 0;
    auto residual_fn = [&](double lambda) {
        ++evals;
        return log_big_F(lx, p, lambda) - log_target;
    };

    // Geometric scan mapped through the ln_phi scale: lambda_j = ln_phi(t_j)
    // sweeps all of (l_phi, L_phi) as t_j sweeps (0, inf).
    constexpr int kScanPoints = 65;
    constexpr double kLogT0 = -8.0, kLogT1 = 8.0;
    double prev_lambda = 0.0, prev_g = 0.0;
    bool have_prev = false, bracketed = false;
    double lo = 0.0, hi = 0.0, g_lo = 0.0, g_hi = 0.0;
    int crossings = 0;
    for (int j = 0; j < kScanPoints; ++j) {
        const double t = std::pow(10.0, kLogT0 + (kLogT1 - kLogT0) * j / (kScanPoints - 1));
        const double lambda = lx.ln(t);
        const double g = residual_fn(lambda);
        if (!std::isfinite(g)) {
            have_prev = false;
            continue;
        }
        if (have_prev && ((prev_g <= 0.0) != (g <= 0.0))) {
            ++crossings;
            if (crossings == 1) {
                lo = prev_lambda;
                hi = lambda;
                g_lo = prev_g;
                g_hi = g;
                bracketed = true;
            }
        }
        prev_lambda = lambda;
        prev_g = g;
        have_prev = true;
    }
    if (!bracketed) {
        const double scan_lo = lx.ln(std::pow(10.0, kLogT0));
        const double scan_hi = lx.ln(std::pow(10.0, kLogT1));
        std::ostringstream msg;
        msg << "solve_constants: no sign change of F(d/2, lambda) - target over lambda in [" << scan_lo << ", "
            << scan_hi << "] (" << evals << " evaluations)";
        throw BracketError(msg.str(), scan_lo, scan_hi);
    }

    std::uintmax_t max_iter = 120;
    auto bracket = boost::math::tools::toms748_solve(residual_fn, lo, hi, g_lo, g_hi,
                                                     boost::math::tools::eps_tolerance<double>(52), max_iter);
    const double lambda = 0.5 * (bracket.first + bracket.second);
    const double res = std::abs(std::expm1(residual_fn(lambda)));
    if (res > 1e-10)
        throw NumericError("solve_constants: residual above 1e-10 after refinement", res);

    NormalizationConstants out;
    out.lambda = lambda;
    out.c = std::exp(log_f_integral(lx, p, lambda) - log_f_integral(lx, p - 1.0, lambda)) / d;
    out.dim = d;
    out.det_v = det_v;
    out.family = family;
    out.residual = res;
    out.multiple_crossings = crossings > 1;
    out.bracket_lo = bracket.first;
    out.bracket_hi = bracket.second;
    out.evaluations = evals;
    return out;
}

}  // namespace phiexp
