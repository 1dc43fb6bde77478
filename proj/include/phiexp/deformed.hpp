#pragma once

#include <utility>
#include <vector>

#include "phiexp/extended_real.hpp"
#include "phiexp/generators.hpp"

namespace phiexp {

/// Numerically realized ln_phi / exp_phi pair for one generator.
///
/// ln_phi(t) = int_1^t ds/phi(s) is strictly increasing and concave;
/// exp_phi is its inverse, extended to all of R by 0 below the infimum
/// l_phi and +inf above the supremum L_phi.
///
/// The power family alpha*s^q takes a closed-form path. Every other
/// generator is realized by panelwise Gauss-Legendre quadrature of 1/phi,
/// cached as a monotone cubic Hermite interpolant in log t over a working
/// interval, with fitted power-law extrapolation outside it. Evaluations
/// after construction are pure and safe under concurrent reads.
class DeformedLogExp {
public:
    struct BuildOptions {
        double t_max = 1e10;     // working interval [1/t_max, t_max] in t
        int panels = 4096;       // uniform panels in log t
        double exp_tol = 1e-12;  // inversion tolerance in tau
    };

    explicit DeformedLogExp(PhiSpec spec) : DeformedLogExp(std::move(spec), BuildOptions{}) {}
    DeformedLogExp(PhiSpec spec, BuildOptions opts);

    /// ln_phi(t) for t > 0.
    double ln(double t) const;

    /// exp_phi(tau) on all of R: 0 for tau <= l_phi, +inf for tau >= L_phi,
    /// the inverse of ln_phi in between (safeguarded Newton on the cached
    /// interpolant when no closed form exists).
    double exp(double tau) const;

    ExtReal lower_bound() const { return l_; }
    ExtReal upper_bound() const { return L_; }

    /// (l_phi, L_phi). Certifies the tail-extrapolation decision: throws
    /// InconclusiveError (carrying both bracket ends) when a declared tail
    /// exponent sits too close to the convergence/divergence boundary for
    /// the extrapolated bound to be trustworthy.
    std::pair<ExtReal, ExtReal> log_bounds() const;

    const PhiSpec& phi() const { return spec_; }
    double phi_at(double s) const { return spec_(s); }

    /// Diffusion coefficient rho/phi(rho) of the flow, reusing an already
    /// computed ln_phi(rho) on the closed-form path (hot loop of the PDE).
    double diffusivity_from_ln(double rho, double ln_val) const {
        if (closed_) return (1.0 + (1.0 - q_) * alpha_ * ln_val) / alpha_;  // = rho^(1-q)/alpha
        return rho / spec_(rho);
    }

private:
    double ln_interp(double t) const;
    double exp_interp(double tau) const;
    double hermite(int k, double u) const;
    double hermite_deriv(int k, double u) const;
    void build_interpolant();

    PhiSpec spec_;
    BuildOptions opts_;
    bool closed_ = false;
    double q_ = 1.0;      // closed form: generator alpha * s^q
    double alpha_ = 1.0;
    ExtReal l_, L_;

    // interpolant state (empty for the closed-form path)
    double u_lo_ = 0.0, u_hi_ = 0.0, h_ = 0.0;
    std::vector<double> vals_;   // ln_phi at the nodes
    std::vector<double> ders_;   // d ln_phi / d(log t) = t/phi(t) at the nodes
    double tail_coef_lo_ = 0.0;  // 1/phi(s) ~ coef * s^(-1-delta) beyond the interval
    double tail_coef_hi_ = 0.0;
};

}  // namespace phiexp
