#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <vector>

#include "phiexp/family.hpp"
#include "phiexp/grid.hpp"

namespace phiexp {

/// Parameters of the nonlinear flow
///   d rho / dt = div( rho grad( ln_phi(rho) + Psi ) ),  Psi(x) = c_phi(I_d) |x|^2.
struct FlowConfig {
    std::shared_ptr<const DeformedLogExp> lx;
    int dim = 2;
    double potential_coefficient = 0.0;  // c_phi(I_d), solved once by the caller
    double cfl = 0.9;                    // in (0,1)
    double t_end = 2.0;
    std::vector<double> output_times;  // snapshot times (t_end appended if missing)
    double density_floor = 0.0;        // 0 selects 1e-14 * initial peak
    bool with_potential = true;        // false: pure diffusion (free-boundary test mode)
    int max_expansions = 64;           // radial domain growth budget
};

struct FlowSnapshot {
    double time = 0.0;
    DensityGrid grid;
};

struct FlowResult {
    std::vector<FlowSnapshot> snapshots;
    std::vector<double> mass_series;  // mass at the snapshot times
    long long steps = 0;
};

/// Conservative finite-volume integration of the flow with upwinded face
/// densities (limited linear reconstruction from the upwind cell), no-flux
/// outer boundary, per-step CFL from the local diffusion and drift limits,
/// and SSP-RK2 time stepping. Mass is conserved by construction;
/// nonnegativity is enforced by the density floor inside ln_phi and a
/// per-cell outflow limiter at the free boundary. Requires phi(0) = 0
/// (delta_zero > -1 guarantees it for the built-in forms; enforced via the
/// sampled value).
FlowResult pde_evolve(const DensityGrid& init, const FlowConfig& cfg);

/// Memoized solve of the V-dependent constants along a trajectory of
/// covariances. lambda and c depend on V only through det V, so the cache
/// holds a 1-d table over log det V filled lazily and read through
/// monotone cubic interpolation. Both constants vary slowly on that scale;
/// the 0.1 spacing keeps the interpolation error orders below the 2%
/// ODE/PDE consistency band.
class DetConstantsCache {
public:
    DetConstantsCache(std::shared_ptr<const DeformedLogExp> lx, int dim);
    /// (lambda, c) at covariance determinant det_v (N-family solve).
    std::pair<double, double> at_det(double det_v);
    int solves() const { return solves_; }

private:
    std::pair<double, double> node(long long k);
    std::shared_ptr<const DeformedLogExp> lx_;
    int dim_;
    double spacing_ = 0.1;
    std::map<long long, std::pair<double, double>> nodes_;
    int solves_ = 0;
};

/// Covariance trajectory of the moment closure
///   dV/dt = 4 A_t V_t,  A_t = c(V_t) V_t^{-1} - c_phi(I_d) I_d,
/// which reduces to dV/dt = 4 (c(V_t) I - c_phi(I_d) V_t). The mean of
/// centered initial data stays zero and is stored as such.
struct MomentTrajectory {
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> covariances;
    std::vector<Eigen::MatrixXd> drifts;  // A_t, symmetrized
    std::vector<Eigen::VectorXd> means;   // identically zero
};

MomentTrajectory moment_ode_evolve(std::shared_ptr<const DeformedLogExp> lx, int d, const Eigen::MatrixXd& v0,
                                   double t_end, DetConstantsCache* cache = nullptr);

/// Family residual time series along a flow trajectory: fit_family at each
/// snapshot. A flat near-zero series certifies numerical stability of the
/// family; a growing one certifies departure.
struct StabilityPoint {
    double time = 0.0;
    double l1_residual = 0.0;
    Eigen::MatrixXd fitted_cov;
    bool valid = false;  // false: fit was degenerate at this time
};

std::vector<StabilityPoint> stability_diagnostic(const FlowResult& traj, std::shared_ptr<const DeformedLogExp> lx,
                                                 FamilyTag family = FamilyTag::N);

}  // namespace phiexp
