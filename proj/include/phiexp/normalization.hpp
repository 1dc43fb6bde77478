#pragma once

#include <Eigen/Dense>

#include "phiexp/deformed.hpp"

namespace phiexp {

/// Which of the two mean/covariance parameterizations a set of constants
/// (or a family point) belongs to: N solves the normalization per
/// covariance, G solves it once at the identity and rescales by det V.
enum class FamilyTag { N, G };

/// The solved pair (lambda, c) normalizing exp_phi(lambda - c|x-v|_V^2),
/// together with solve diagnostics.
struct NormalizationConstants {
    double lambda = 0.0;  // in (l_phi, L_phi)
    double c = 0.0;       // positive
    int dim = 0;
    double det_v = 1.0;  // determinant of the covariance parameter V
    FamilyTag family = FamilyTag::N;

    double residual = 0.0;  // |F(d/2, lambda)/target - 1| at the solution
    bool multiple_crossings = false;
    double bracket_lo = 0.0;  // lambda bracket refined by the root solver
    double bracket_hi = 0.0;
    int evaluations = 0;  // F evaluations spent in scan + refinement
};

/// f_phi(p, lambda) = int_0^{exp_phi(lambda)} (lambda - ln_phi t)^p t/phi(t) dt
/// for p in (-1, p_phi), lambda in (l_phi, L_phi).
///
/// Computed after the substitution s = lambda - ln_phi(t), which turns the
/// integral into int_0^{lambda - l_phi} s^p exp_phi(lambda - s) ds: the
/// endpoint singularity at t = exp_phi(lambda) becomes the power s^p at
/// s = 0 and the t -> 0 endpoint becomes the far tail in s. Both singular
/// ends get a double-exponential rule, the smooth interior adaptive
/// Gauss-Kronrod, split at min(1, (lambda - l_phi)/2).
double f_integral(const DeformedLogExp& lx, double p, double lambda, double rel_tol = 1e-12);

/// log of f_integral; underflow-safe variant used by the solver.
double log_f_integral(const DeformedLogExp& lx, double p, double lambda, double rel_tol = 1e-12);

/// F_phi(p, lambda) = f(p-1, lambda)^(p+1) / f(p, lambda)^p, in log space.
double big_F(const DeformedLogExp& lx, double p, double lambda);
double log_big_F(const DeformedLogExp& lx, double p, double lambda);

/// Solves F(d/2, lambda) = (d pi)^(-d/2) Gamma(d/2) / sqrt(det V) for lambda
/// by a geometric bracket scan over lambda (mapped through the ln_phi scale)
/// followed by TOMS748 refinement, then computes c from the companion
/// formula. For family G the solve runs at V = I_d and det V is attached.
///
/// Monotonicity of lambda -> F is not assumed: the scan records every sign
/// change and flags multiplicity, returning the first crossing.
NormalizationConstants solve_constants(const DeformedLogExp& lx, int d, const Eigen::MatrixXd& V, FamilyTag family);

}  // namespace phiexp
