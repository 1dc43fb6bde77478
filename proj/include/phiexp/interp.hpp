#pragma once

#include <cstddef>
#include <vector>

namespace phiexp {

/// Shape-preserving cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Monotone data yields a monotone curve; evaluation outside the node range
/// extends linearly with the end slope.
class PchipCurve {
public:
    PchipCurve() = default;
    PchipCurve(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    double derivative(double x) const;

    bool empty() const { return x_.empty(); }
    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }

private:
    std::size_t locate(double x) const;
    std::vector<double> x_, y_, d_;
};

}  // namespace phiexp
