#include "phiexp/grid.hpp"

#include <cmath>

namespace phiexp {

namespace {

// Neumaier-compensated sum: deterministic and robust for long flux/mass sums.
double stable_sum(const std::vector<double>& a, const std::vector<double>& b,
                  const std::function<double(double, double)>& term) {
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = term(a[i], b[i]);
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

}  // namespace

double sphere_surface(int d) { return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d); }

DensityGrid DensityGrid::radial(int dim, int cells, double r_max) {
    if (dim < 2 || dim > 3) throw DomainError("DensityGrid::radial: dim must be 2 or 3");
    if (cells < 8 || !(r_max > 0.0)) throw DomainError("DensityGrid::radial: invalid cells/r_max");
    DensityGrid g;
    g.geometry_ = Geometry::Radial;
    g.dim_ = dim;
    g.n_ = cells;
    g.r_max_ = r_max;
    g.dr_ = r_max / cells;
    g.values.assign(cells, 0.0);
    g.volumes.resize(cells);
    const double omega = sphere_surface(dim);
    for (int i = 0; i < cells; ++i) {
        const double r0 = i * g.dr_, r1 = (i + 1) * g.dr_;
        g.volumes[i] = omega * (std::pow(r1, dim) - std::pow(r0, dim)) / dim;
    }
    return g;
}

DensityGrid DensityGrid::cartesian2d(int cells_per_axis, double half_width) {
    if (cells_per_axis < 8 || !(half_width > 0.0)) throw DomainError("DensityGrid::cartesian2d: invalid parameters");
    DensityGrid g;
    g.geometry_ = Geometry::Cartesian;
    g.dim_ = 2;
    g.n_ = cells_per_axis;
    g.r_max_ = half_width;
    g.dr_ = 2.0 * half_width / cells_per_axis;
    g.values.assign(static_cast<std::size_t>(cells_per_axis) * cells_per_axis, 0.0);
    g.volumes.assign(g.values.size(), g.dr_ * g.dr_);
    return g;
}

Eigen::VectorXd DensityGrid::node(std::size_t i) const {
    if (geometry_ == Geometry::Radial) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(dim_);
        x[0] = radius(i);
        return x;
    }
    const int row = static_cast<int>(i) / n_, col = static_cast<int>(i) % n_;
    Eigen::VectorXd x(2);
    x[0] = -r_max_ + (col + 0.5) * dr_;
    x[1] = -r_max_ + (row + 0.5) * dr_;
    return x;
}

double DensityGrid::radius(std::size_t i) const {
    if (geometry_ != Geometry::Radial) throw DomainError("DensityGrid::radius: not a radial grid");
    return (static_cast<double>(i) + 0.5) * dr_;
}

void DensityGrid::fill(const std::function<double(const Eigen::VectorXd&)>& rho) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = rho(node(i));
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("DensityGrid::fill: density must be finite and >= 0");
        values[i] = v;
    }
}

double DensityGrid::mass() const {
    return stable_sum(values, volumes, [](double v, double vol) { return v * vol; });
}

void DensityGrid::normalize() {
    const double m = mass();
    if (!(m > 0.0)) throw DomainError("DensityGrid::normalize: nonpositive mass");
    for (double& v : values) v /= m;
}

void DensityGrid::check_initialized() const {
    for (double v : values)
        if (!(v >= 0.0)) throw DomainError("DensityGrid: negative cell value");
    const double m = mass();
    if (std::abs(m - 1.0) > 1e-6) throw DomainError("DensityGrid: initial mass deviates from 1 by more than 1e-6");
}

DensityGrid::Moments DensityGrid::moments() const {
    Moments m;
    m.mass = mass();
    if (!(m.mass > 0.0)) throw DomainError("DensityGrid::moments: nonpositive mass");
    if (geometry_ == Geometry::Radial) {
        m.mean = Eigen::VectorXd::Zero(dim_);
        double second = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double r = radius(i);
            second += values[i] * volumes[i] * r * r;
        }
        m.cov = (second / (m.mass * dim_)) * Eigen::MatrixXd::Identity(dim_, dim_);
        return m;
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
    for (std::size_t i = 0; i < values.size(); ++i) mean += values[i] * volumes[i] * node(i);
    mean /= m.mass;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const Eigen::VectorXd d = node(i) - mean;
        cov += values[i] * volumes[i] * d * d.transpose();
    }
    m.mean = mean;
    m.cov = cov / m.mass;
    return m;
}

void DensityGrid::append_radial_cells(int extra) {
    if (geometry_ != Geometry::Radial) throw DomainError("append_radial_cells: not a radial grid");
    const double omega = sphere_surface(dim_);
    for (int k = 0; k < extra; ++k) {
        const double r0 = n_ * dr_, r1 = (n_ + 1) * dr_;
        values.push_back(0.0);
        volumes.push_back(omega * (std::pow(r1, dim_) - std::pow(r0, dim_)) / dim_);
        ++n_;
    }
    r_max_ = n_ * dr_;
}

}  // namespace phiexp
