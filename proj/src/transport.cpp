#include "phiexp/transport.hpp"

#include <cmath>
#include <sstream>

namespace phiexp {

namespace {

void require_symmetric(const Eigen::MatrixXd& M, const char* who) {
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if (((M - M.transpose()).cwiseAbs()).maxCoeff() > 1e-10 * scale)
        throw InputError(std::string(who) + ": matrix asymmetry beyond 1e-10");
}

// eigenvalues clamped at the completion boundary; expo applied entrywise.
// pinv: zero eigenvalues stay zero under negative powers (Moore-Penrose),
// used by the geodesic formula at degenerate completion targets.
Eigen::MatrixXd spectral_pow(const Eigen::MatrixXd& M, double expo, const char* who, bool pinv = false) {
    require_symmetric(M, who);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const Eigen::VectorXd lam = es.eigenvalues();
    const double clamp = 1e-14 * std::max(0.0, M.trace());
    const double scale = std::max(std::abs(lam.maxCoeff()), std::abs(lam.minCoeff()));
    Eigen::VectorXd out(lam.size());
    for (int i = 0; i < lam.size(); ++i) {
        double l = lam[i];
        if (l < -1e-10 * std::max(1.0, scale)) throw InputError(std::string(who) + ": matrix is not nonnegative definite");
        if (l < clamp) l = 0.0;
        if (l == 0.0 && expo < 0.0 && !pinv) {
            std::ostringstream msg;
            msg << who << ": singular matrix under negative power (condition ~ "
                << (scale > 0.0 ? scale / std::max(lam.minCoeff(), 1e-300) : 0.0) << ")";
            throw NumericError(msg.str(), scale);
        }
        out[i] = (l == 0.0) ? 0.0 : std::pow(l, expo);
    }
    return es.eigenvectors() * out.asDiagonal() * es.eigenvectors().transpose();
}

// W by the optimal-map formula with pseudo-inverse semantics; for U = 0 it
// degenerates to W = 0, the contraction onto the Dirac completion point.
Eigen::MatrixXd transport_matrix_pinv(const Eigen::MatrixXd& V, const Eigen::MatrixXd& U) {
    const Eigen::MatrixXd u_half = spectral_pow(U, 0.5, "geodesic_point");
    const Eigen::MatrixXd inner = u_half * V * u_half;
    const Eigen::MatrixXd inner_inv_sqrt = spectral_pow(0.5 * (inner + inner.transpose()), -0.5, "geodesic_point", true);
    Eigen::MatrixXd w = u_half * inner_inv_sqrt * u_half;
    return 0.5 * (w + w.transpose());
}

}  // namespace

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& M) { return spectral_pow(M, 0.5, "spd_sqrt"); }

OptimalMap optimal_matrix(const Eigen::MatrixXd& V, const Eigen::MatrixXd& U) {
    if (V.rows() != U.rows() || V.cols() != U.cols() || V.rows() != V.cols())
        throw InputError("optimal_matrix: dimension mismatch");
    const Eigen::MatrixXd u_half = spd_sqrt(U);
    const Eigen::MatrixXd inner = u_half * V * u_half;
    // symmetrize: the triple product picks up roundoff asymmetry
    const Eigen::MatrixXd inner_sym = 0.5 * (inner + inner.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner_sym);
    const double lam_max = es.eigenvalues().maxCoeff(), lam_min = es.eigenvalues().minCoeff();
    if (!(lam_min > 1e-13 * std::max(lam_max, 1.0))) {
        std::ostringstream msg;
        msg << "optimal_matrix: inner matrix near-singular (condition ~ " << lam_max / std::max(lam_min, 1e-300)
            << ")";
        throw NumericError(msg.str(), lam_max / std::max(lam_min, 1e-300));
    }
    const Eigen::MatrixXd inner_inv_sqrt = spectral_pow(inner_sym, -0.5, "optimal_matrix");

    OptimalMap map;
    map.W = u_half * inner_inv_sqrt * u_half;
    map.W = 0.5 * (map.W + map.W.transpose());
    map.source_mean = Eigen::VectorXd::Zero(V.rows());
    map.target_mean = Eigen::VectorXd::Zero(V.rows());

    const double scale = std::max(1.0, U.cwiseAbs().maxCoeff());
    if (((map.W * V * map.W - U).cwiseAbs()).maxCoeff() > 1e-10 * scale)
        throw NumericError("optimal_matrix: W V W = U violated beyond 1e-10", 0.0);
    return map;
}

OptimalMap optimal_map(const GaussianParams& src, const GaussianParams& dst) {
    OptimalMap map = optimal_matrix(src.cov, dst.cov);
    map.source_mean = src.mean;
    map.target_mean = dst.mean;
    return map;
}

double w2_distance(const GaussianParams& p, const GaussianParams& q, W2Diagnostics* diag) {
    if (p.mean.size() != q.mean.size()) throw InputError("w2_distance: dimension mismatch");
    const Eigen::MatrixXd q_half = spd_sqrt(q.cov);
    const Eigen::MatrixXd inner = q_half * p.cov * q_half;
    const Eigen::MatrixXd cross = spd_sqrt(0.5 * (inner + inner.transpose()));
    double radicand = (p.mean - q.mean).squaredNorm() + p.cov.trace() + q.cov.trace() - 2.0 * cross.trace();
    if (diag) {
        diag->radicand = radicand;
        diag->clamped = false;
    }
    if (radicand < 0.0) {
        const double scale = std::max(1.0, p.cov.trace() + q.cov.trace() + (p.mean - q.mean).squaredNorm());
        if (radicand < -1e-12 * scale)
            throw NumericError("w2_distance: radicand significantly negative", -radicand);
        radicand = 0.0;
        if (diag) diag->clamped = true;
    }
    return std::sqrt(radicand);
}

GaussianParams geodesic_point(const GaussianParams& p, const GaussianParams& q, double t, bool allow_extension) {
    if (t < 0.0 || (!allow_extension && t > 1.0))
        throw DomainError("geodesic_point: t outside [0,1] (pass allow_extension for t > 1)");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.cov);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw DomainError("geodesic_point: source covariance must be nondegenerate");
    const Eigen::MatrixXd w = transport_matrix_pinv(p.cov, q.cov);
    const int d = static_cast<int>(p.mean.size());
    const Eigen::MatrixXd blend = (1.0 - t) * Eigen::MatrixXd::Identity(d, d) + t * w;
    GaussianParams out;
    out.mean = (1.0 - t) * p.mean + t * q.mean;
    out.cov = blend * p.cov * blend;
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

double pushforward_check(const FamilyPoint& src, const FamilyPoint& dst, const OptimalMap& map, int points_per_axis,
                         double radii) {
    if (src.family() != FamilyTag::G || dst.family() != FamilyTag::G)
        throw DomainError("pushforward_check: both points must carry the G family tag");
    if (src.logexp().phi().label() != dst.logexp().phi().label())
        throw DomainError("pushforward_check: src and dst must share the generator");
    const int d = src.dim();
    if (d > 3) throw DomainError("pushforward_check: tensor grid limited to d <= 3");

    const Eigen::MatrixXd v_half = spd_sqrt(src.cov());
    const double det_w = map.W.determinant();

    double peak = 0.0, worst = 0.0;
    std::vector<int> idx(d, 0);
    const int n = points_per_axis;
    const std::size_t total = static_cast<std::size_t>(std::pow(n, d));
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        Eigen::VectorXd xi(d);
        for (int k = 0; k < d; ++k) {
            xi[k] = -radii + 2.0 * radii * static_cast<double>(rem % n) / (n - 1);
            rem /= n;
        }
        const Eigen::VectorXd x = src.mean() + v_half * xi;
        const double rho = src.density(x);
        const double sigma = dst.density(map(x));
        peak = std::max(peak, rho);
        worst = std::max(worst, std::abs(rho - sigma * det_w));
    }
    return worst / peak;
}

}  // namespace phiexp
