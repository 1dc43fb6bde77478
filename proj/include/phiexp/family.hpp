#pragma once

#include <Eigen/Dense>
#include <memory>

#include "phiexp/grid.hpp"
#include "phiexp/normalization.hpp"

namespace phiexp {

/// One member of the N or G family: mean v, SPD covariance V, and the solved
/// normalization constants. Immutable after construction; density evaluation
/// is pure.
///
/// N: x -> exp_phi(lambda(V) - c(V)|x-v|_V^2)
/// G: x -> exp_phi(lambda(I) - c(I)|x-v|_V^2) (det V)^(-1/2)
class FamilyPoint {
public:
    static FamilyPoint make(FamilyTag family, std::shared_ptr<const DeformedLogExp> lx, Eigen::VectorXd mean,
                            Eigen::MatrixXd cov);

    double density(const Eigen::VectorXd& x) const;
    /// Density at |x - v|_V = m (Mahalanobis radius); the density is radial
    /// in that variable.
    double density_mahalanobis(double m) const;

    FamilyTag family() const { return constants_.family; }
    int dim() const { return constants_.dim; }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }
    const NormalizationConstants& constants() const { return constants_; }
    const DeformedLogExp& logexp() const { return *lx_; }
    std::shared_ptr<const DeformedLogExp> logexp_ptr() const { return lx_; }

    /// Radius in |.|_V beyond which the density is exactly zero (+inf when
    /// the support is all of R^d).
    ExtReal support_radius() const;

private:
    FamilyPoint() = default;
    std::shared_ptr<const DeformedLogExp> lx_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd cov_inv_;
    NormalizationConstants constants_;
    double det_pow_ = 1.0;  // (det V)^(-1/2) for G, 1 for N
};

/// Quadrature verification of the moment contract (mass 1, mean v, cov V).
struct MomentReport {
    double mass = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double mass_deviation = 0.0;
    double mean_deviation = 0.0;
    double cov_deviation = 0.0;  // max abs entry of cov - V
    double truncation_radius = 0.0;
    bool passed = false;
};

/// Computes mass/mean/covariance by radial quadrature in whitened
/// coordinates (the Cartesian-to-polar reduction), truncating where the
/// estimated tail mass is below tol/10, and reports deviations from
/// (1, v, V). Throws TruncationError when the radius budget is exhausted
/// before the tail criterion is met (heavy tails near the admissibility
/// boundary).
MomentReport verify_moments(const FamilyPoint& point, double tol);

/// sup_x |g_phi(0, a^2 I)(x) - n_psi(0, a^2 I)(x)| / peak over a radial
/// grid; the families coincide at every scale a iff both generators are
/// (multiples of) the same power.
double coincidence_gap(std::shared_ptr<const DeformedLogExp> phi, std::shared_ptr<const DeformedLogExp> psi, int d,
                       double a, int grid_points = 2001);

/// Moment-projection fit of a grid density onto a family.
struct FitResult {
    Eigen::VectorXd fitted_mean;
    Eigen::MatrixXd fitted_cov;
    double l1_residual = 0.0;  // in [0, 2]
    FamilyTag family = FamilyTag::N;
};

/// Matches the empirical mean/covariance of the grid density, builds the
/// corresponding family member and returns the L1 distance between the two
/// densities. Degenerate empirical covariance raises DegenerateError.
FitResult fit_family(const DensityGrid& grid, std::shared_ptr<const DeformedLogExp> lx, FamilyTag family);

}  // namespace phiexp
