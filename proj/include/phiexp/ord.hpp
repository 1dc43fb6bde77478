#pragma once

#include "phiexp/deformed.hpp"
#include "phiexp/extended_real.hpp"
#include "phiexp/generators.hpp"

namespace phiexp {

/// Result of the growth-exponent consistency check of a generator.
struct OrdReport {
    double delta_zero_est = 0.0;   // fitted exponent of phi at s -> 0
    double delta_inf_est = 0.0;    // fitted exponent of phi at s -> inf
    double delta_prime_est = 0.0;  // fitted order of ln_phi at t -> 0
    double ord_bound = 0.0;        // the class parameter a
    bool admissible = false;       // max{delta_zero, delta_inf} < a (declared metadata)
    ExtReal p_phi;                 // 1/max{delta_zero, delta_inf} - 1, or +inf
};

/// Fits log-log slopes of phi over three decades at each end, estimates the
/// order of ln_phi at zero, and checks both against the declared metadata.
/// Declared exponents are authoritative (they are infima, not computable
/// from samples); the fit is a consistency check only. A declared-vs-fitted
/// mismatch beyond 0.02 raises MetadataError.
OrdReport validate_ord(const PhiSpec& spec, double a);

}  // namespace phiexp
