#include "phiexp/family.hpp"

#include <cmath>

#include "phiexp/quadrature.hpp"

namespace phiexp {

FamilyPoint FamilyPoint::make(FamilyTag family, std::shared_ptr<const DeformedLogExp> lx, Eigen::VectorXd mean,
                              Eigen::MatrixXd cov) {
    const int d = static_cast<int>(mean.size());
    if (cov.rows() != d || cov.cols() != d) throw InputError("FamilyPoint: mean/cov dimension mismatch");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.eigenvalues().minCoeff() <= 0.0) throw DegenerateError("FamilyPoint: covariance must be positive definite");

    FamilyPoint p;
    p.lx_ = std::move(lx);
    p.constants_ = solve_constants(*p.lx_, d, cov, family);
    p.mean_ = std::move(mean);
    p.cov_inv_ = cov.inverse();
    p.cov_ = std::move(cov);
    p.det_pow_ = (family == FamilyTag::G) ? 1.0 / std::sqrt(p.constants_.det_v) : 1.0;
    return p;
}

double FamilyPoint::density(const Eigen::VectorXd& x) const {
    if (x.size() != mean_.size()) throw InputError("FamilyPoint::density: dimension mismatch");
    const Eigen::VectorXd d = x - mean_;
    const double m2 = d.dot(cov_inv_ * d);
    return lx_->exp(constants_.lambda - constants_.c * m2) * det_pow_;
}

double FamilyPoint::density_mahalanobis(double m) const {
    return lx_->exp(constants_.lambda - constants_.c * m * m) * det_pow_;
}

ExtReal FamilyPoint::support_radius() const {
    const ExtReal l = lx_->lower_bound();
    if (!l.is_finite()) return ExtReal::pos_inf();
    return ExtReal(std::sqrt((constants_.lambda - l.value()) / constants_.c));
}

namespace {

// int_0^inf exp_phi(lambda - u^2) u^k du with the truncation policy of
// verify_moments: exact edge for compact support, geometrically grown
// radius with a fitted power-decay tail estimate otherwise.
double radial_moment_integral(const DeformedLogExp& lx, double lambda, int k, double tail_budget,
                              double* used_radius) {
    auto integrand = [&lx, lambda, k](double u) { return lx.exp(lambda - u * u) * std::pow(u, k); };

    const ExtReal l = lx.lower_bound();
    if (l.is_finite()) {
        const double edge = std::sqrt(lambda - l.value());
        if (used_radius) *used_radius = edge;
        // split: Gauss-Kronrod on the smooth bulk, double-exponential at the
        // support edge where derivatives blow up
        const double mid = 0.5 * edge;
        return quad::gauss_kronrod(integrand, 0.0, mid, 1e-12).value +
               quad::tanh_sinh(integrand, mid, edge, 1e-12).value;
    }

    double radius = 8.0;
    double total = quad::gauss_kronrod(integrand, 0.0, radius, 1e-12).value;
    constexpr double kRadiusBudget = 1e9;
    while (true) {
        // local log-log slope of the integrand at the current radius
        const double h = 1e-3;
        const double f_hi = integrand(radius * (1.0 + h)), f_lo = integrand(radius * (1.0 - h));
        double tail = std::numeric_limits<double>::infinity();
        if (f_hi > 0.0 && f_lo > 0.0) {
            const double slope = std::log(f_hi / f_lo) / std::log((1.0 + h) / (1.0 - h));
            if (slope < -1.05) tail = integrand(radius) * radius / (-slope - 1.0);
        }
        if (tail <= tail_budget * std::max(total, 1e-300)) {
            if (used_radius) *used_radius = radius;
            return total;
        }
        if (radius > kRadiusBudget)
            throw TruncationError("verify_moments: truncation radius budget exhausted before tail criterion");
        total += quad::gauss_kronrod(integrand, radius, 2.0 * radius, 1e-12).value;
        radius *= 2.0;
    }
}

}  // namespace

MomentReport verify_moments(const FamilyPoint& point, double tol) {
    if (!(tol > 0.0)) throw DomainError("verify_moments: tol must be positive");
    const auto& k = point.constants();
    const int d = k.dim;
    // Whitened coordinates y = sqrt(c) V^(-1/2) (x - v) reduce all three
    // moment integrals to radial ones; the angular factors are analytic.
    const double det_factor = (k.family == FamilyTag::G) ? 1.0 : std::sqrt(k.det_v);
    const double omega = sphere_surface(d);
    double radius = 0.0;
    const double m_mass = radial_moment_integral(point.logexp(), k.lambda, d - 1, 0.1 * tol, &radius);
    double radius2 = 0.0;
    const double m_second = radial_moment_integral(point.logexp(), k.lambda, d + 1, 0.1 * tol, &radius2);

    MomentReport rep;
    rep.truncation_radius = std::max(radius, radius2);
    rep.mass = det_factor * std::pow(k.c, -0.5 * d) * omega * m_mass;
    rep.mean = point.mean();  // odd integrand: the angular average vanishes identically
    const double ratio = (m_second / m_mass) / (k.c * d);
    rep.cov = ratio * point.cov();

    rep.mass_deviation = std::abs(rep.mass - 1.0);
    rep.mean_deviation = 0.0;
    rep.cov_deviation = ((rep.cov - point.cov()).cwiseAbs()).maxCoeff();
    rep.passed = rep.mass_deviation < tol && rep.cov_deviation < tol;
    return rep;
}

double coincidence_gap(std::shared_ptr<const DeformedLogExp> phi, std::shared_ptr<const DeformedLogExp> psi, int d,
                       double a, int grid_points) {
    if (!(a > 0.0)) throw DomainError("coincidence_gap: a must be positive");
    const Eigen::MatrixXd V = a * a * Eigen::MatrixXd::Identity(d, d);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    const FamilyPoint g = FamilyPoint::make(FamilyTag::G, std::move(phi), zero, V);
    const FamilyPoint n = FamilyPoint::make(FamilyTag::N, std::move(psi), zero, V);

    // radius covering both supports (or 8 covariance radii for full support)
    auto reach = [a](const FamilyPoint& p) {
        const ExtReal s = p.support_radius();
        return s.is_finite() ? a * s.value() : 8.0 * a;
    };
    const double r_max = 1.05 * std::max(reach(g), reach(n));

    double gap = 0.0, peak = 0.0;
    for (int i = 0; i < grid_points; ++i) {
        const double r = r_max * i / (grid_points - 1);
        const double gv = g.density_mahalanobis(r / a);
        const double nv = n.density_mahalanobis(r / a);
        gap = std::max(gap, std::abs(gv - nv));
        peak = std::max({peak, gv, nv});
    }
    return gap / peak;
}

FitResult fit_family(const DensityGrid& grid, std::shared_ptr<const DeformedLogExp> lx, FamilyTag family) {
    const auto m = grid.moments();
    if (std::abs(m.mass - 1.0) > 1e-4) throw DomainError("fit_family: grid mass deviates from 1 by more than 1e-4");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.cov);
    if (es.eigenvalues().minCoeff() <= 0.0) throw DegenerateError("fit_family: empirical covariance not positive definite");

    const FamilyPoint fit = FamilyPoint::make(family, std::move(lx), m.mean, m.cov);
    double l1 = 0.0;
    for (std::size_t i = 0; i < grid.cell_count(); ++i)
        l1 += std::abs(grid.values[i] - fit.density(grid.node(i))) * grid.volumes[i];

    FitResult out;
    out.fitted_mean = m.mean;
    out.fitted_cov = m.cov;
    out.l1_residual = l1;
    out.family = family;
    return out;
}

}  // namespace phiexp
