#include "phiexp/deformed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace phiexp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 15-point Gauss-Legendre on [-1,1]; plenty for one smooth panel.
constexpr int kGL = 15;
constexpr double kGLx[kGL] = {
    -0.9879925180204854, -0.9372733924007060, -0.8482065834104272, -0.7244177313601701, -0.5709721726085388,
    -0.3941513470775634, -0.2011940939974345, 0.0,                 0.2011940939974345,  0.3941513470775634,
    0.5709721726085388,  0.7244177313601701,  0.8482065834104272,  0.9372733924007060,  0.9879925180204854};
constexpr double kGLw[kGL] = {
    0.03075324199611727, 0.07036604748810812, 0.10715922046717194, 0.13957067792615432, 0.16626920581699392,
    0.18616100001556221, 0.19843148532711158, 0.20257824192556127, 0.19843148532711158, 0.18616100001556221,
    0.16626920581699392, 0.13957067792615432, 0.10715922046717194, 0.07036604748810812, 0.03075324199611727};

double require_positive_finite(double t) {
    if (!std::isfinite(t) || !(t > 0.0)) throw GeneratorError("ln_phi: argument must be finite and positive");
    return t;
}

}  // namespace

DeformedLogExp::DeformedLogExp(PhiSpec spec, BuildOptions opts) : spec_(std::move(spec)), opts_(opts) {
    if (const auto& cf = spec_.closed_form()) {
        closed_ = true;
        q_ = cf->q;
        alpha_ = cf->alpha;
        l_ = (q_ < 1.0) ? ExtReal(-1.0 / ((1.0 - q_) * alpha_)) : ExtReal::neg_inf();
        L_ = (q_ > 1.0) ? ExtReal(1.0 / ((q_ - 1.0) * alpha_)) : ExtReal::pos_inf();
    } else {
        spec_.validate_samples();
        build_interpolant();
    }
}

void DeformedLogExp::build_interpolant() {
    const int n = opts_.panels;
    if (n < 16 || n % 2 != 0) throw DomainError("DeformedLogExp: panels must be even and >= 16");
    u_hi_ = std::log(opts_.t_max);
    u_lo_ = -u_hi_;
    h_ = (u_hi_ - u_lo_) / n;
    vals_.assign(n + 1, 0.0);
    ders_.assign(n + 1, 0.0);

    auto w = [this](double u) {
        const double t = std::exp(u);
        return t / spec_(t);  // d ln_phi / du
    };
    for (int k = 0; k <= n; ++k) ders_[k] = w(u_lo_ + k * h_);

    std::vector<double> panel(n);
    for (int k = 0; k < n; ++k) {
        const double a = u_lo_ + k * h_;
        const double mid = a + 0.5 * h_, half = 0.5 * h_;
        double sum = 0.0;
        for (int j = 0; j < kGL; ++j) sum += kGLw[j] * w(mid + half * kGLx[j]);
        panel[k] = sum * half;
    }
    // accumulate outward from t = 1 so that ln_phi(1) = 0 exactly
    const int mid_node = n / 2;
    vals_[mid_node] = 0.0;
    for (int k = mid_node; k < n; ++k) vals_[k + 1] = vals_[k] + panel[k];
    for (int k = mid_node; k > 0; --k) vals_[k - 1] = vals_[k] - panel[k - 1];

    // Fritsch-Carlson safeguard so each Hermite panel stays monotone even
    // for rough table generators; inert for smooth phi.
    for (int k = 0; k <= n; ++k) {
        const double s_left = (k > 0) ? panel[k - 1] / h_ : panel[0] / h_;
        const double s_right = (k < n) ? panel[k] / h_ : panel[n - 1] / h_;
        const double cap = 3.0 * std::min(s_left, s_right);
        ders_[k] = std::clamp(ders_[k], 0.0, cap);
    }

    // fitted power-law tails: 1/phi(s) ~ coef * s^(-1-delta)
    const double t_min = std::exp(u_lo_), t_max = std::exp(u_hi_);
    const double d0 = spec_.delta_zero(), di = spec_.delta_inf();
    tail_coef_lo_ = std::pow(t_min, 1.0 + d0) / spec_(t_min);
    tail_coef_hi_ = std::pow(t_max, 1.0 + di) / spec_(t_max);

    l_ = (d0 < 0.0) ? ExtReal(vals_.front() - tail_coef_lo_ * std::pow(t_min, -d0) / (-d0)) : ExtReal::neg_inf();
    L_ = (di > 0.0) ? ExtReal(vals_.back() + tail_coef_hi_ * std::pow(t_max, -di) / di) : ExtReal::pos_inf();
}

double DeformedLogExp::ln(double t) const {
    require_positive_finite(t);
    if (closed_) {
        if (q_ == 1.0) return std::log(t) / alpha_;
        return (std::pow(t, 1.0 - q_) - 1.0) / ((1.0 - q_) * alpha_);
    }
    return ln_interp(t);
}

double DeformedLogExp::ln_interp(double t) const {
    const double u = std::log(t);
    if (u < u_lo_) {
        const double t_min = std::exp(u_lo_), d0 = spec_.delta_zero();
        if (d0 == 0.0) return vals_.front() - tail_coef_lo_ * (u_lo_ - u);
        return vals_.front() - tail_coef_lo_ * (std::pow(t, -d0) - std::pow(t_min, -d0)) / d0;
    }
    if (u > u_hi_) {
        const double t_max = std::exp(u_hi_), di = spec_.delta_inf();
        if (di == 0.0) return vals_.back() + tail_coef_hi_ * (u - u_hi_);
        return vals_.back() + tail_coef_hi_ * (std::pow(t_max, -di) - std::pow(t, -di)) / di;
    }
    int k = static_cast<int>((u - u_lo_) / h_);
    k = std::clamp(k, 0, static_cast<int>(vals_.size()) - 2);
    return hermite(k, u);
}

double DeformedLogExp::hermite(int k, double u) const {
    const double x = (u - (u_lo_ + k * h_)) / h_;
    const double x2 = x * x, x3 = x2 * x;
    return vals_[k] * (2 * x3 - 3 * x2 + 1) + h_ * ders_[k] * (x3 - 2 * x2 + x) + vals_[k + 1] * (-2 * x3 + 3 * x2) +
           h_ * ders_[k + 1] * (x3 - x2);
}

double DeformedLogExp::hermite_deriv(int k, double u) const {
    const double x = (u - (u_lo_ + k * h_)) / h_;
    const double x2 = x * x;
    return (vals_[k] * (6 * x2 - 6 * x) + h_ * ders_[k] * (3 * x2 - 4 * x + 1) + vals_[k + 1] * (-6 * x2 + 6 * x) +
            h_ * ders_[k + 1] * (3 * x2 - 2 * x)) /
           h_;
}

double DeformedLogExp::exp(double tau) const {
    if (std::isnan(tau)) throw GeneratorError("exp_phi: NaN argument");
    if (std::isinf(tau)) return tau < 0.0 ? 0.0 : kInf;
    if (tau <= l_) return 0.0;
    if (L_ <= tau) return kInf;
    if (closed_) {
        if (q_ == 1.0) return std::exp(alpha_ * tau);
        const double bracket = 1.0 + (1.0 - q_) * alpha_ * tau;
        // bracket is positive here: tau is strictly inside (l_phi, L_phi)
        return std::pow(bracket, 1.0 / (1.0 - q_));
    }
    return exp_interp(tau);
}

double DeformedLogExp::exp_interp(double tau) const {
    const double d0 = spec_.delta_zero(), di = spec_.delta_inf();
    const double t_min = std::exp(u_lo_), t_max = std::exp(u_hi_);
    if (tau < vals_.front()) {  // left tail, analytic inversion
        const double drop = vals_.front() - tau;
        if (d0 == 0.0) return t_min * std::exp(-drop / tail_coef_lo_);
        if (d0 < 0.0) {
            const double a = std::abs(d0);
            return std::pow(std::pow(t_min, a) - a * drop / tail_coef_lo_, 1.0 / a);
        }
        return std::pow(std::pow(t_min, -d0) + d0 * drop / tail_coef_lo_, -1.0 / d0);
    }
    if (tau > vals_.back()) {  // right tail
        const double rise = tau - vals_.back();
        if (di == 0.0) return t_max * std::exp(rise / tail_coef_hi_);
        if (di < 0.0) {
            const double a = std::abs(di);
            return std::pow(std::pow(t_max, a) + a * rise / tail_coef_hi_, 1.0 / a);
        }
        // finite L_phi: t^(-di) = di*(L_phi - tau)/coef
        return std::pow(di * (L_.value() - tau) / tail_coef_hi_, -1.0 / di);
    }

    // locate the bracketing panel by binary search on the node values
    auto it = std::upper_bound(vals_.begin(), vals_.end(), tau);
    int k = static_cast<int>(it - vals_.begin()) - 1;
    k = std::clamp(k, 0, static_cast<int>(vals_.size()) - 2);

    // safeguarded Newton in u, bisection fallback when a step leaves the bracket
    double ulo = u_lo_ + k * h_, uhi = ulo + h_;
    double u = 0.5 * (ulo + uhi);
    const double tol = opts_.exp_tol * std::max(1.0, std::abs(tau));
    for (int it_count = 0; it_count < 100; ++it_count) {
        const double val = hermite(k, u);
        if (val > tau)
            uhi = u;
        else
            ulo = u;
        const double der = hermite_deriv(k, u);
        double step = (val - tau) / (der > 0.0 ? der : std::numeric_limits<double>::min());
        double u_next = u - step;
        if (!(u_next > ulo) || !(u_next < uhi)) u_next = 0.5 * (ulo + uhi);
        const bool done = std::abs(val - tau) <= tol && std::abs(u_next - u) <= 1e-14 * std::max(1.0, std::abs(u));
        u = u_next;
        if (done || uhi - ulo <= 1e-16 * std::max(1.0, std::abs(u))) return std::exp(u);
    }
    std::ostringstream msg;
    msg << "exp_phi: Newton failed to converge at tau=" << tau << " (bracket width " << (uhi - ulo) << ")";
    throw NumericError(msg.str(), uhi - ulo);
}

std::pair<ExtReal, ExtReal> DeformedLogExp::log_bounds() const {
    if (!closed_) {
        // Extrapolated bounds are only trustworthy when the declared tail
        // exponent is clearly away from the integrability boundary.
        constexpr double kBoundaryBand = 5e-3;
        const double d0 = spec_.delta_zero(), di = spec_.delta_inf();
        if (d0 != 0.0 && std::abs(d0) < kBoundaryBand) {
            const double finite_guess =
                vals_.front() - tail_coef_lo_ * std::pow(std::exp(u_lo_), -std::min(d0, -kBoundaryBand)) /
                                    std::abs(std::min(d0, -kBoundaryBand));
            throw InconclusiveError("log_bounds: delta_zero too close to the convergence boundary", finite_guess,
                                    -kInf);
        }
        if (di != 0.0 && std::abs(di) < kBoundaryBand) {
            const double finite_guess =
                vals_.back() + tail_coef_hi_ * std::pow(std::exp(u_hi_), -std::max(di, kBoundaryBand)) /
                                   std::max(di, kBoundaryBand);
            throw InconclusiveError("log_bounds: delta_inf too close to the divergence boundary", finite_guess, kInf);
        }
    }
    return {l_, L_};
}

}  // namespace phiexp
