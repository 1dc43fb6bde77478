#include <cmath>
#include <memory>

#include "doctest.h"
#include "phiexp/evolution.hpp"

using namespace phiexp;

namespace {

std::shared_ptr<const DeformedLogExp> make_lx(PhiSpec spec) {
    return std::make_shared<const DeformedLogExp>(std::move(spec));
}

DensityGrid family_grid(const FamilyPoint& p, int cells, double r_max) {
    DensityGrid g = DensityGrid::radial(p.dim(), cells, r_max);
    g.fill([&](const Eigen::VectorXd& x) { return p.density(x); });
    g.normalize();
    return g;
}

FlowConfig flow_config(std::shared_ptr<const DeformedLogExp> lx, double c_identity, double t_end,
                       std::vector<double> outputs) {
    FlowConfig cfg;
    cfg.lx = std::move(lx);
    cfg.dim = 2;
    cfg.potential_coefficient = c_identity;
    cfg.t_end = t_end;
    cfg.output_times = std::move(outputs);
    return cfg;
}

double c_identity_of(const DeformedLogExp& lx, int d) {
    return solve_constants(lx, d, Eigen::MatrixXd::Identity(d, d), FamilyTag::N).c;
}

}  // namespace

TEST_CASE("Gaussian flow tracks the Ornstein-Uhlenbeck covariance") {
    auto lx = make_lx(PhiSpec::power(1.0));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    const double ci = c_identity_of(*lx, 2);
    CHECK(ci == doctest::Approx(0.5).epsilon(1e-9));

    const FamilyPoint init = FamilyPoint::make(FamilyTag::N, lx, Eigen::VectorXd::Zero(2), 4.0 * I);
    const FlowResult res = pde_evolve(family_grid(init, 512, 16.0), flow_config(lx, ci, 1.0, {0.5, 1.0}));
    for (std::size_t i = 0; i < res.snapshots.size(); ++i) {
        const auto& s = res.snapshots[i];
        const double expect = 1.0 + 3.0 * std::exp(-2.0 * s.time);
        CHECK(s.grid.moments().cov(0, 0) == doctest::Approx(expect).epsilon(0.01));
        CHECK(std::abs(res.mass_series[i] - 1.0) < 1e-8);
        for (double v : s.grid.values) CHECK(v >= 0.0);
    }
}

TEST_CASE("grid convergence of the second moment is near second order") {
    auto run_err = [](int cells) {
        auto lx = make_lx(PhiSpec::power(1.0));
        const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
        const FamilyPoint init = FamilyPoint::make(FamilyTag::N, lx, Eigen::VectorXd::Zero(2), 4.0 * I);
        const FlowResult res =
            pde_evolve(family_grid(init, cells, 16.0), flow_config(lx, 0.5, 0.5, {0.5}));
        const double expect = 1.0 + 3.0 * std::exp(-1.0);
        return std::abs(res.snapshots.back().grid.moments().cov(0, 0) - expect) / expect;
    };
    const double coarse = run_err(256), fine = run_err(512);
    CHECK(coarse / fine >= 3.0);
}

TEST_CASE("stationary family point stays put") {
    auto lx = make_lx(PhiSpec::power(1.2));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    const double ci = c_identity_of(*lx, 2);
    const FamilyPoint st = FamilyPoint::make(FamilyTag::N, lx, Eigen::VectorXd::Zero(2), I);
    FlowConfig cfg = flow_config(lx, ci, 2.0, {0.0, 1.0, 2.0});
    const FlowResult res = pde_evolve(family_grid(st, 512, 8.0), cfg);
    const auto series = stability_diagnostic(res, lx, FamilyTag::N);
    REQUIRE(series.size() == 3);
    // the discrete state is an exact flux-free equilibrium: the residual sits
    // at the discretization floor and neither it nor the moments drift
    for (const auto& p : series) {
        CHECK(p.valid);
        CHECK(std::abs(p.l1_residual - series.front().l1_residual) < 1e-4);
        CHECK(std::abs(p.fitted_cov(0, 0) - series.front().fitted_cov(0, 0)) < 1e-4);
    }
    for (double m : res.mass_series) CHECK(std::abs(m - 1.0) < 1e-8);
}

TEST_CASE("free boundary spreads monotonically under pure diffusion") {
    auto lx = make_lx(PhiSpec::power(0.8));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    const double ci = c_identity_of(*lx, 2);
    const FamilyPoint init = FamilyPoint::make(FamilyTag::N, lx, Eigen::VectorXd::Zero(2), 0.25 * I);
    FlowConfig cfg = flow_config(lx, ci, 2.0, {0.0, 0.5, 1.0, 2.0});
    cfg.with_potential = false;  // Barenblatt-type test mode
    const FlowResult res = pde_evolve(family_grid(init, 256, 4.0), cfg);

    double prev_support = 0.0;
    for (const auto& s : res.snapshots) {
        double edge = 0.0;
        for (std::size_t i = 0; i < s.grid.cell_count(); ++i)
            if (s.grid.values[i] > 1e-12) edge = s.grid.radius(i);
        CHECK(edge >= prev_support);
        prev_support = edge;
    }
    // the support outgrew the initial box: the domain must have expanded
    CHECK(res.snapshots.back().grid.extent() > 4.0);
    CHECK(prev_support > 4.0);
    CHECK(std::abs(res.snapshots.back().grid.mass() - 1.0) < 1e-8);
}

TEST_CASE("cartesian flow handles anisotropic covariance") {
    auto lx = make_lx(PhiSpec::power(1.0));
    Eigen::MatrixXd v0 = Eigen::MatrixXd::Zero(2, 2);
    v0(0, 0) = 1.0;
    v0(1, 1) = 4.0;
    const FamilyPoint init = FamilyPoint::make(FamilyTag::N, lx, Eigen::VectorXd::Zero(2), v0);
    DensityGrid grid = DensityGrid::cartesian2d(192, 12.0);
    grid.fill([&](const Eigen::VectorXd& x) { return init.density(x); });
    grid.normalize();
    const FlowResult res = pde_evolve(grid, flow_config(lx, 0.5, 0.5, {0.5}));
    const auto m = res.snapshots.back().grid.moments();
    CHECK(m.cov(0, 0) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(m.cov(1, 1) == doctest::Approx(1.0 + 3.0 * std::exp(-1.0)).epsilon(0.02));
    CHECK(std::abs(m.cov(0, 1)) < 1e-10);
    CHECK(m.mean.norm() < 1e-10);
    CHECK(std::abs(res.snapshots.back().grid.mass() - 1.0) < 1e-8);
}

TEST_CASE("flow configuration validation") {
    auto lx = make_lx(PhiSpec::power(1.0));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    const FamilyPoint init = FamilyPoint::make(FamilyTag::N, lx, Eigen::VectorXd::Zero(2), I);
    DensityGrid grid = family_grid(init, 64, 8.0);

    FlowConfig bad_cfl = flow_config(lx, 0.5, 1.0, {});
    bad_cfl.cfl = 1.5;
    CHECK_THROWS_AS(pde_evolve(grid, bad_cfl), DomainError);

    FlowConfig bad_t = flow_config(lx, 0.5, -1.0, {});
    CHECK_THROWS_AS(pde_evolve(grid, bad_t), DomainError);

    // phi(0) > 0 violates the flow hypothesis
    std::vector<double> s, p;
    for (int k = 0; k <= 100; ++k) {
        const double x = std::pow(10.0, -10.0 + 20.0 * k / 100.0);
        s.push_back(x);
        p.push_back(1.0 + x);
    }
    FlowConfig shifted = flow_config(make_lx(PhiSpec::table(s, p, -0.9, 0.0, "shifted")), 0.5, 1.0, {});
    CHECK_THROWS_AS(pde_evolve(grid, shifted), DomainError);

    DensityGrid unnormalized = DensityGrid::radial(2, 64, 8.0);
    unnormalized.fill([](const Eigen::VectorXd&) { return 1.0; });
    CHECK_THROWS_AS(pde_evolve(unnormalized, flow_config(lx, 0.5, 1.0, {})), DomainError);
}

TEST_CASE("moment ODE: fixed point and the Gaussian closed form") {
    auto gauss = make_lx(PhiSpec::power(1.0));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);

    // V = I is an exact fixed point: A vanishes
    const MomentTrajectory fixed = moment_ode_evolve(gauss, 2, I, 1.0);
    for (std::size_t i = 0; i < fixed.times.size(); ++i) {
        CHECK((fixed.covariances[i] - I).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(fixed.drifts[i].cwiseAbs().maxCoeff() < 1e-8);
        CHECK(fixed.means[i].norm() == 0.0);
    }

    // V0 = 4I relaxes along 1 + 3 e^(-2t)
    const MomentTrajectory oru = moment_ode_evolve(gauss, 2, 4.0 * I, 2.0);
    for (std::size_t i = 0; i < oru.times.size(); ++i) {
        const double expect = 1.0 + 3.0 * std::exp(-2.0 * oru.times[i]);
        CHECK(oru.covariances[i](0, 0) == doctest::Approx(expect).epsilon(1e-6));
        CHECK(std::abs(oru.covariances[i](0, 1)) < 1e-12);
    }
    CHECK(oru.times.back() == doctest::Approx(2.0));

    // drift matrices stay symmetric
    for (const auto& a : oru.drifts) CHECK(a.isApprox(a.transpose(), 1e-10));
}

TEST_CASE("moment ODE agrees with the flow for a power generator") {
    auto lx = make_lx(PhiSpec::power(0.8));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    const double ci = c_identity_of(*lx, 2);
    const FamilyPoint init = FamilyPoint::make(FamilyTag::N, lx, Eigen::VectorXd::Zero(2), 4.0 * I);
    const FlowResult res = pde_evolve(family_grid(init, 512, 16.0), flow_config(lx, ci, 2.0, {0.5, 1.0, 2.0}));
    DetConstantsCache cache(lx, 2);
    const MomentTrajectory ode = moment_ode_evolve(lx, 2, 4.0 * I, 2.0, &cache);
    for (const auto& snap : res.snapshots) {
        std::size_t j = 0;
        while (j + 1 < ode.times.size() && ode.times[j + 1] < snap.time) ++j;
        const double w = (snap.time - ode.times[j]) / (ode.times[j + 1] - ode.times[j]);
        const double v_ode = (1.0 - w) * ode.covariances[j](0, 0) + w * ode.covariances[j + 1](0, 0);
        CHECK(snap.grid.moments().cov(0, 0) == doctest::Approx(v_ode).epsilon(0.02));
    }
}

TEST_CASE("determinant cache interpolates the exact solve") {
    auto lx = make_lx(PhiSpec::power(1.2));
    DetConstantsCache cache(lx, 2);
    for (double det : {0.37, 1.0, 2.83, 9.4}) {
        const auto [lam, c] = cache.at_det(det);
        const Eigen::MatrixXd v = std::sqrt(det) * Eigen::MatrixXd::Identity(2, 2);
        const NormalizationConstants exact = solve_constants(*lx, 2, v, FamilyTag::N);
        CHECK(lam == doctest::Approx(exact.lambda).epsilon(1e-6));
        CHECK(c == doctest::Approx(exact.c).epsilon(1e-6));
    }
    CHECK(cache.solves() > 0);
    // repeated queries hit the memo
    const int before = cache.solves();
    cache.at_det(1.0);
    CHECK(cache.solves() == before);
}

TEST_CASE("moment ODE input validation") {
    auto lx = make_lx(PhiSpec::power(1.0));
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(moment_ode_evolve(lx, 2, indefinite, 1.0), InputError);
    auto inadmissible = make_lx(PhiSpec::power(1.6));
    CHECK_THROWS_AS(moment_ode_evolve(inadmissible, 2, Eigen::MatrixXd::Identity(2, 2), 1.0), DomainError);
}

TEST_CASE("stability diagnostic records degenerate fits as missing points") {
    auto lx = make_lx(PhiSpec::power(1.0));
    FlowResult fake;
    DensityGrid point = DensityGrid::cartesian2d(16, 4.0);
    point.values[0] = 1.0;
    point.normalize();
    fake.snapshots.push_back({0.0, point});
    fake.mass_series.push_back(1.0);
    const auto series = stability_diagnostic(fake, lx, FamilyTag::N);
    REQUIRE(series.size() == 1);
    CHECK_FALSE(series.front().valid);
}
