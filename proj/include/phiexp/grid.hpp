#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "phiexp/errors.hpp"

namespace phiexp {

/// Discretized nonnegative density, either on a uniform radial mesh (cells
/// in r carrying the surface measure of the (d-1)-sphere times r^(d-1) dr)
/// or on a uniform 2-d Cartesian mesh.
class DensityGrid {
public:
    enum class Geometry { Radial, Cartesian };

    static DensityGrid radial(int dim, int cells, double r_max);
    static DensityGrid cartesian2d(int cells_per_axis, double half_width);

    Geometry geometry() const { return geometry_; }
    int dim() const { return dim_; }
    std::size_t cell_count() const { return values.size(); }

    /// Position of the cell center.
    Eigen::VectorXd node(std::size_t i) const;
    double radius(std::size_t i) const;  // radial geometry only
    double cell_width() const { return dr_; }
    double extent() const { return r_max_; }
    int cells_per_axis() const { return n_; }

    /// Sample a density at the cell centers.
    void fill(const std::function<double(const Eigen::VectorXd&)>& rho);
    /// Rescale values so the total mass is exactly 1 (throws if mass <= 0).
    void normalize();
    /// Enforce the construction invariant |mass - 1| <= 1e-6, values >= 0.
    void check_initialized() const;

    double mass() const;

    struct Moments {
        double mass = 0.0;
        Eigen::VectorXd mean;
        Eigen::MatrixXd cov;
    };
    /// Mass-normalized empirical mean and covariance. A radial grid
    /// represents a centered isotropic density: mean is identically zero
    /// and the covariance a multiple of the identity.
    Moments moments() const;

    /// Grow the radial domain by appending vacuum cells (same cell width).
    void append_radial_cells(int extra);

    std::vector<double> values;   // density per cell, >= 0
    std::vector<double> volumes;  // cell measures

private:
    DensityGrid() = default;
    Geometry geometry_ = Geometry::Radial;
    int dim_ = 2;
    int n_ = 0;        // radial: cell count; cartesian: cells per axis
    double dr_ = 0.0;  // cell width
    double r_max_ = 0.0;
};

/// Surface area of the unit (d-1)-sphere, 2 pi^(d/2) / Gamma(d/2).
double sphere_surface(int d);

}  // namespace phiexp
