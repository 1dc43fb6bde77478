#include "phiexp/interp.hpp"

#include <algorithm>
#include <cmath>

#include "phiexp/errors.hpp"

namespace phiexp {

PchipCurve::PchipCurve(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw InputError("PchipCurve: need >= 2 nodes and matching sizes");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw InputError("PchipCurve: abscissae must be strictly increasing");

    // Fritsch-Carlson derivative estimates: harmonic-mean of adjacent secants
    // when they agree in sign, zero at local extrema.
    std::vector<double> slope(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) slope[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);

    d_.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (slope[i - 1] * slope[i] > 0.0) {
            const double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
            const double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
            d_[i] = (w1 + w2) / (w1 / slope[i - 1] + w2 / slope[i]);
        }
    }
    // one-sided ends, clipped to preserve shape
    auto end_slope = [](double s_adj, double s_far, double h_adj, double h_far) {
        double d = ((2.0 * h_adj + h_far) * s_adj - h_adj * s_far) / (h_adj + h_far);
        if (d * s_adj <= 0.0)
            d = 0.0;
        else if (s_adj * s_far <= 0.0 && std::abs(d) > 3.0 * std::abs(s_adj))
            d = 3.0 * s_adj;
        return d;
    };
    if (n == 2) {
        d_[0] = d_[1] = slope[0];
    } else {
        d_[0] = end_slope(slope[0], slope[1], x_[1] - x_[0], x_[2] - x_[1]);
        d_[n - 1] = end_slope(slope[n - 2], slope[n - 3], x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3]);
    }
}

std::size_t PchipCurve::locate(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    if (it == x_.begin()) return 0;
    std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(k, x_.size() - 2);
}

double PchipCurve::operator()(double x) const {
    if (x <= x_.front()) return y_.front() + d_.front() * (x - x_.front());
    if (x >= x_.back()) return y_.back() + d_.back() * (x - x_.back());
    const std::size_t k = locate(x);
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y_[k] * (2 * t3 - 3 * t2 + 1) + h * d_[k] * (t3 - 2 * t2 + t) + y_[k + 1] * (-2 * t3 + 3 * t2) +
           h * d_[k + 1] * (t3 - t2);
}

double PchipCurve::derivative(double x) const {
    if (x <= x_.front()) return d_.front();
    if (x >= x_.back()) return d_.back();
    const std::size_t k = locate(x);
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double t2 = t * t;
    return (y_[k] * (6 * t2 - 6 * t) + h * d_[k] * (3 * t2 - 4 * t + 1) + y_[k + 1] * (-6 * t2 + 6 * t) +
            h * d_[k + 1] * (3 * t2 - 2 * t)) /
           h;
}

}  // namespace phiexp
