#pragma once

#include <Eigen/Dense>

#include "phiexp/family.hpp"

namespace phiexp {

/// Mean/covariance chart point. The covariance may be degenerate
/// (nonnegative definite): completion points such as Dirac measures are
/// parameterized by V = 0.
struct GaussianParams {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// The optimal (Brenier) map between two family members with covariances
/// V, U: x -> W(x - v) + u with W = U^(1/2)(U^(1/2) V U^(1/2))^(-1/2) U^(1/2).
struct OptimalMap {
    Eigen::MatrixXd W;
    Eigen::VectorXd source_mean;
    Eigen::VectorXd target_mean;

    Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return W * (x - source_mean) + target_mean; }
};

/// Symmetric square root by spectral decomposition; result^2 = M to 1e-12
/// relative. Eigenvalues above -1e-14 * trace are clamped to zero so
/// completion-boundary inputs pass; genuine indefiniteness or asymmetry
/// beyond 1e-10 raises InputError.
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& M);

/// W per the displayed formula, with W V W = U verified to 1e-10.
/// Near-singular inner matrix raises NumericError with a condition estimate.
OptimalMap optimal_matrix(const Eigen::MatrixXd& V, const Eigen::MatrixXd& U);
OptimalMap optimal_map(const GaussianParams& src, const GaussianParams& dst);

/// W2 distance in closed form:
///   W2^2 = |v-u|^2 + tr V + tr U - 2 tr (U^(1/2) V U^(1/2))^(1/2).
/// Depends only on the parameters, never on the generator. Degenerate
/// covariances are allowed. A tiny negative radicand (roundoff) is clamped
/// to zero; anything worse raises NumericError.
struct W2Diagnostics {
    bool clamped = false;
    double radicand = 0.0;
};
double w2_distance(const GaussianParams& p, const GaussianParams& q, W2Diagnostics* diag = nullptr);

/// Point on the Wasserstein geodesic:
///   w_t = (1-t)v + tu,  W_t = [(1-t)I + tW] V [(1-t)I + tW].
/// Requires a nondegenerate source; t outside [0,1] raises DomainError
/// unless allow_extension (the geodesic extends to [0, inf)).
GaussianParams geodesic_point(const GaussianParams& p, const GaussianParams& q, double t,
                              bool allow_extension = false);

/// max_x |rho(x) - sigma(W(x-v)+u) det W| / peak over a tensor grid of
/// points_per_axis^d points within `radii` Mahalanobis radii of the source
/// mean. A small residual certifies that the map pushes src forward to dst.
double pushforward_check(const FamilyPoint& src, const FamilyPoint& dst, const OptimalMap& map,
                         int points_per_axis = 41, double radii = 5.0);

}  // namespace phiexp
