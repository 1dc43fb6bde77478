#include <cmath>
#include <memory>

#include "doctest.h"
#include "oracles.hpp"
#include "phiexp/normalization.hpp"

using namespace phiexp;

namespace {

const DeformedLogExp& identity_lx() {
    static DeformedLogExp lx(PhiSpec::power(1.0));
    return lx;
}

}  // namespace

TEST_CASE("f_integral matches the Gamma closed form for phi(s) = s") {
    // substitution s = lambda - ln t gives f(p, lambda) = e^lambda Gamma(p+1)
    for (double p : {-0.5, 0.0, 0.5, 1.0, 1.5}) {
        for (double lambda : {-1.0, 0.0, 1.0}) {
            const double expected = std::exp(lambda) * std::tgamma(p + 1.0);
            const double got = f_integral(identity_lx(), p, lambda);
            CHECK(std::abs(got - expected) / expected < 1e-8);
        }
    }
    CHECK(f_integral(identity_lx(), 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(f_integral(identity_lx(), 0.5, 0.0) == doctest::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-10));
}

TEST_CASE("f_integral against a brute-force oracle for non-power paths") {
    // perturbed power: integrate s^p exp_phi(lambda - s) with plain Simpson,
    // exp_phi supplied by the library but the quadrature fully independent
    DeformedLogExp lx(PhiSpec::perturbed_power(1.0, 0.2));
    for (double p : {0.0, 0.7, 1.5}) {
        for (double lambda : {-0.5, 0.4}) {
            auto integrand = [&](double s) { return std::pow(s, p) * lx.exp(lambda - s); };
            const double expected = oracle::integrate_to_inf(integrand, 1e-12, 1e-13);
            const double got = f_integral(lx, p, lambda);
            CHECK(std::abs(got - expected) / expected < 1e-7);
        }
    }
}

TEST_CASE("f_integral vanishes toward l_phi") {
    DeformedLogExp lx(PhiSpec::power(0.5));  // l_phi = -2
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 10; ++k) {
        const double lambda = -2.0 + 2.0 * std::pow(0.25, k);
        const double v = f_integral(lx, 1.0, lambda);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("f_integral domain errors") {
    CHECK_THROWS_AS(f_integral(identity_lx(), -1.0, 0.0), DomainError);
    DeformedLogExp lx12(PhiSpec::power(1.2));  // p_phi = 4, L_phi = 5
    CHECK_THROWS_AS(f_integral(lx12, 4.5, 0.0), DomainError);
    CHECK_THROWS_AS(f_integral(lx12, 1.0, 5.5), DomainError);
    DeformedLogExp lx05(PhiSpec::power(0.5));  // l_phi = -2
    CHECK_THROWS_AS(f_integral(lx05, 1.0, -2.0), DomainError);
}

TEST_CASE("big_F closed-form values and monotonicity in p") {
    // for phi(s) = s: F(1, lambda) = e^lambda
    CHECK(big_F(identity_lx(), 1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(big_F(identity_lx(), 1.0, -std::log(2.0 * M_PI)) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-9));

    for (const auto& spec : {PhiSpec::power(1.2), PhiSpec::power(0.8), PhiSpec::perturbed_power(1.0, 0.2)}) {
        DeformedLogExp lx(spec);
        const double p_max = (std::max(spec.delta_zero(), spec.delta_inf()) > 0.0)
                                 ? 1.0 / std::max(spec.delta_zero(), spec.delta_inf()) - 1.0
                                 : 3.5;
        double prev = std::numeric_limits<double>::infinity();
        for (double p = 0.5; p < std::min(p_max, 3.5); p += 0.5) {
            const double v = big_F(lx, p, -0.3);
            CHECK(v <= prev * (1.0 + 1e-9));
            prev = v;
        }
    }
}

TEST_CASE("derivative identities of f in lambda") {
    for (const auto& spec : {PhiSpec::power(1.0), PhiSpec::power(1.2), PhiSpec::perturbed_power(1.0, 0.2)}) {
        CAPTURE(spec.label());
        DeformedLogExp lx(spec);
        for (double lambda : {-0.8, 0.2}) {
            const double h = 1e-4;
            // d f(0, .) / d lambda = exp_phi(lambda)
            const double fd0 = (f_integral(lx, 0.0, lambda + h) - f_integral(lx, 0.0, lambda - h)) / (2.0 * h);
            CHECK(std::abs(fd0 - lx.exp(lambda)) / lx.exp(lambda) < 1e-5);
            // d f(p, .) / d lambda = p f(p-1, lambda) for p in (1, p_phi)
            const double p = 2.5;
            const double fdp = (f_integral(lx, p, lambda + h) - f_integral(lx, p, lambda - h)) / (2.0 * h);
            const double expected = p * f_integral(lx, p - 1.0, lambda);
            CHECK(std::abs(fdp - expected) / expected < 1e-5);
        }
    }
}

TEST_CASE("log-convexity of f in p") {
    for (const auto& spec : {PhiSpec::power(1.0), PhiSpec::power(1.2), PhiSpec::power(0.8)}) {
        CAPTURE(spec.label());
        DeformedLogExp lx(spec);
        for (double lambda : {-0.5, 0.3}) {
            for (double p = -0.5; p < 2.5; p += 0.25) {
                const double f1 = f_integral(lx, p, lambda);
                const double f2 = f_integral(lx, p + 0.5, lambda);
                const double f3 = f_integral(lx, p + 1.0, lambda);
                CHECK(f2 * f2 <= f1 * f3 * (1.0 + 1e-8));
            }
        }
    }
}

TEST_CASE("endpoint limits of F(d/2, .)") {
    for (const auto& spec : {PhiSpec::power(1.2), PhiSpec::power(0.8)}) {
        CAPTURE(spec.label());
        DeformedLogExp lx(spec);
        const double p = 1.0;  // d = 2
        // toward l_phi: mapped through the ln_phi scale
        double low = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 14 && low > 1e-6; ++k) low = big_F(lx, p, lx.ln(std::pow(10.0, -k)));
        CHECK(low < 1e-6);
        double high = 0.0;
        for (int k = 1; k <= 14 && high < 1e6; ++k) high = big_F(lx, p, lx.ln(std::pow(10.0, k)));
        CHECK(high > 1e6);
    }
}

TEST_CASE("scaling relation of f under alpha*phi") {
    for (const auto& spec : {PhiSpec::power(1.2), PhiSpec::perturbed_power(1.0, 0.2)}) {
        CAPTURE(spec.label());
        DeformedLogExp base(spec);
        for (double alpha : {0.5, 3.0}) {
            DeformedLogExp scaled(spec.scaled(alpha));
            for (double p : {0.0, 1.0, 2.0}) {
                for (double lambda_base : {-0.6, 0.3}) {
                    const double lambda = lambda_base / alpha;
                    const double lhs = f_integral(scaled, p, lambda);
                    const double rhs = std::pow(alpha, -(p + 1.0)) * f_integral(base, p, alpha * lambda);
                    CHECK(std::abs(lhs - rhs) / rhs < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("solve_constants reproduces the Gaussian normalization") {
    const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
    const NormalizationConstants c2 = solve_constants(identity_lx(), 2, i2, FamilyTag::N);
    CHECK(c2.lambda == doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-10));
    CHECK(c2.c == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(c2.residual < 1e-10);
    CHECK_FALSE(c2.multiple_crossings);

    const Eigen::MatrixXd i3 = Eigen::MatrixXd::Identity(3, 3);
    const NormalizationConstants c3 = solve_constants(identity_lx(), 3, i3, FamilyTag::N);
    CHECK(c3.lambda == doctest::Approx(-1.5 * std::log(2.0 * M_PI)).epsilon(1e-10));
    CHECK(c3.c == doctest::Approx(0.5).epsilon(1e-10));

    // general V: lambda absorbs det V, c stays 1/2 for the Gaussian
    Eigen::MatrixXd v(2, 2);
    v << 2.0, 0.3, 0.3, 1.0;
    const NormalizationConstants cv = solve_constants(identity_lx(), 2, v, FamilyTag::N);
    CHECK(cv.c == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(cv.lambda == doctest::Approx(-std::log(2.0 * M_PI) - 0.5 * std::log(v.determinant())).epsilon(1e-9));
}

TEST_CASE("solve_constants solution actually normalizes the density") {
    // independent check by radial Simpson quadrature of the solved density
    DeformedLogExp lx(PhiSpec::power(1.2));
    const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
    const NormalizationConstants k = solve_constants(lx, 2, i2, FamilyTag::N);
    auto mass_integrand = [&](double r) { return lx.exp(k.lambda - k.c * r * r) * 2.0 * M_PI * r; };
    const double mass = oracle::integrate_to_inf(mass_integrand, 1e-13, 1e-13);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));

    // second-moment contract: per-axis variance 1
    auto second_integrand = [&](double r) { return lx.exp(k.lambda - k.c * r * r) * M_PI * r * r * r; };
    const double second = oracle::integrate_to_inf(second_integrand, 1e-13, 1e-13);
    CHECK(second == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("solve_constants scaling relation") {
    for (const auto& spec : {PhiSpec::power(1.2), PhiSpec::perturbed_power(1.0, 0.2)}) {
        CAPTURE(spec.label());
        DeformedLogExp base(spec);
        const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
        const NormalizationConstants kb = solve_constants(base, 2, i2, FamilyTag::N);
        for (double alpha : {0.5, 3.0}) {
            DeformedLogExp scaled(spec.scaled(alpha));
            const NormalizationConstants ks = solve_constants(scaled, 2, i2, FamilyTag::N);
            CHECK(ks.lambda == doctest::Approx(kb.lambda / alpha).epsilon(1e-8));
            CHECK(ks.c == doctest::Approx(kb.c / alpha).epsilon(1e-8));
        }
    }
}

TEST_CASE("solve_constants input validation") {
    const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
    DeformedLogExp inadmissible(PhiSpec::power(1.6));  // q outside Q_2
    CHECK_THROWS_AS(solve_constants(inadmissible, 2, i2, FamilyTag::N), DomainError);

    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(solve_constants(identity_lx(), 2, indefinite, FamilyTag::N), InputError);

    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(solve_constants(identity_lx(), 2, asym, FamilyTag::N), InputError);
}

TEST_CASE("G-family solve is V-independent with det attached") {
    DeformedLogExp lx(PhiSpec::power(1.2));
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2, 2) * 4.0;
    const NormalizationConstants kg = solve_constants(lx, 2, v, FamilyTag::G);
    const NormalizationConstants ki = solve_constants(lx, 2, Eigen::MatrixXd::Identity(2, 2), FamilyTag::N);
    CHECK(kg.lambda == doctest::Approx(ki.lambda).epsilon(1e-12));
    CHECK(kg.c == doctest::Approx(ki.c).epsilon(1e-12));
    CHECK(kg.det_v == doctest::Approx(16.0));
}
