#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "phiexp/errors.hpp"
#include "phiexp/interp.hpp"

namespace phiexp {

/// Analytic ln/exp pair available for the power family alpha * s^q.
struct PowerForm {
    double q = 1.0;
    double alpha = 1.0;  // overall scale of the generator
};

/// An admissible generator: a strictly increasing, positive, continuous
/// function on (0,inf) together with its growth-exponent metadata.
///
/// delta_zero and delta_inf are the declared exponents governing the
/// behaviour at s->0 and s->inf (for alpha*s^q both equal q-1). They are
/// authoritative; validate_ord() only sanity-checks them against samples.
class PhiSpec {
public:
    static PhiSpec power(double q);
    static PhiSpec perturbed_power(double q, double eps);
    /// Log-log monotone interpolation through (s, phi) samples; power-law
    /// extension outside the sampled range using the declared exponents.
    static PhiSpec table(std::vector<double> s, std::vector<double> phi, double delta_zero, double delta_inf,
                         std::string label = "table");
    static PhiSpec table_from_csv(const std::string& path, double delta_zero, double delta_inf);

    /// The generator s -> alpha*phi(s); exponent metadata is unchanged.
    PhiSpec scaled(double alpha) const;

    double operator()(double s) const;

    const std::string& label() const { return label_; }
    double delta_zero() const { return delta_zero_; }
    double delta_inf() const { return delta_inf_; }
    const std::optional<PowerForm>& closed_form() const { return closed_form_; }

    /// Ord(2/(d+2)) membership, the finite-second-moment condition.
    bool admissible_for_dim(int d) const;
    void require_admissible(int d) const;

    /// Spot-check positivity and strict monotonicity on a log-spaced sample.
    void validate_samples() const;

private:
    PhiSpec() = default;
    std::string label_;
    std::function<double(double)> eval_;
    double delta_zero_ = 0.0;
    double delta_inf_ = 0.0;
    std::optional<PowerForm> closed_form_;
};

}  // namespace phiexp
