#include "phiexp/evolution.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>

#include "phiexp/interp.hpp"

namespace phiexp {

namespace {

double minmod3(double a, double b, double c) {
    if (a > 0.0 && b > 0.0 && c > 0.0) return std::min({a, b, c});
    if (a < 0.0 && b < 0.0 && c < 0.0) return std::max({a, b, c});
    return 0.0;
}

// monotonized-central slope for the upwind-side reconstruction
double mc_slope(double left, double mid, double right, double dr) {
    return minmod3(0.5 * (right - left) / dr, 2.0 * (mid - left) / dr, 2.0 * (right - mid) / dr);
}

struct StepScales {
    double max_diffusivity = 0.0;  // rho/phi(rho) over non-vacuum cells
    double max_speed = 0.0;        // |face velocity|
};

/// Radial core. Cell i covers [i dr, (i+1) dr]; face areas carry the
/// r^(d-1) weight, so the face at r = 0 drops out naturally. Fluxes are
/// computed once per stage; the outflow limiter is applied afterwards for
/// the chosen step size, which keeps forward-Euler stages nonnegative.
class RadialScheme {
public:
    RadialScheme(const FlowConfig& cfg, int cells, double dr)
        : cfg_(cfg), n_(cells), dr_(dr), omega_(sphere_surface(cfg.dim)) {
        rebuild_geometry();
    }

    void rebuild_geometry() {
        area_.resize(n_ + 1);
        vol_.resize(n_);
        center_.resize(n_);
        for (int f = 0; f <= n_; ++f) area_[f] = omega_ * std::pow(f * dr_, cfg_.dim - 1);
        for (int i = 0; i < n_; ++i) {
            vol_[i] = omega_ * (std::pow((i + 1) * dr_, cfg_.dim) - std::pow(i * dr_, cfg_.dim)) / cfg_.dim;
            center_[i] = (i + 0.5) * dr_;
        }
    }

    void grow(int extra) {
        n_ += extra;
        rebuild_geometry();
    }

    int cells() const { return n_; }

    // face flux = rho_face * d_n(ln_phi rho + Psi), rho_face reconstructed
    // from the upwind cell; no outflow from cells at the density floor
    StepScales compute_fluxes(const std::vector<double>& rho, double floor) {
        const auto& lx = *cfg_.lx;
        const double c = cfg_.with_potential ? cfg_.potential_coefficient : 0.0;

        h_.resize(n_);
        slope_.resize(n_);
        flux_.assign(n_ + 1, 0.0);

        StepScales scales;
        for (int i = 0; i < n_; ++i) {
            const double r = std::max(rho[i], floor);
            const double ln_val = lx.ln(r);
            h_[i] = ln_val + c * center_[i] * center_[i];
            if (rho[i] > floor)
                scales.max_diffusivity = std::max(scales.max_diffusivity, lx.diffusivity_from_ln(r, ln_val));
        }
        for (int i = 0; i < n_; ++i) {
            const double left = (i > 0) ? rho[i - 1] : rho[0];  // even reflection at r = 0
            const double right = (i + 1 < n_) ? rho[i + 1] : rho[n_ - 1];
            slope_[i] = mc_slope(left, rho[i], right, dr_);
        }
        for (int f = 1; f < n_; ++f) {
            const double grad = (h_[f] - h_[f - 1]) / dr_;
            const double vel = -grad;
            const int up = (vel >= 0.0) ? f - 1 : f;
            if (rho[up] <= floor) continue;
            double rho_face = (up == f - 1) ? rho[f - 1] + 0.5 * slope_[f - 1] * dr_ : rho[f] - 0.5 * slope_[f] * dr_;
            rho_face = std::max(rho_face, 0.0);
            flux_[f] = rho_face * grad;  // d rho/dt = div(rho grad H)
            scales.max_speed = std::max(scales.max_speed, std::abs(vel));
        }
        return scales;
    }

    // limits each cell's outgoing fluxes to 95% of its mass over dt, then
    // forms the conservative rate
    void limited_rate(const std::vector<double>& rho, double dt, std::vector<double>& rate) {
        theta_.assign(n_, 1.0);
        for (int i = 0; i < n_; ++i) {
            const double out = area_[i + 1] * std::max(0.0, -flux_[i + 1]) + area_[i] * std::max(0.0, flux_[i]);
            const double cap = 0.95 * rho[i] * vol_[i];
            if (dt * out > cap && out > 0.0) theta_[i] = cap / (dt * out);
        }
        for (int f = 1; f < n_; ++f) {
            if (flux_[f] == 0.0) continue;
            flux_[f] *= theta_[(flux_[f] <= 0.0) ? f - 1 : f];  // scale by the donor cell
        }
        rate.resize(n_);
        for (int i = 0; i < n_; ++i) rate[i] = (area_[i + 1] * flux_[i + 1] - area_[i] * flux_[i]) / vol_[i];
    }

    // index of the outermost cell above the floor (-1 if none)
    int support_end(const std::vector<double>& rho, double floor) const {
        for (int i = n_ - 1; i >= 0; --i)
            if (rho[i] > floor) return i;
        return -1;
    }

private:
    const FlowConfig& cfg_;
    int n_;
    double dr_;
    double omega_;
    std::vector<double> area_, vol_, center_;
    std::vector<double> h_, slope_, flux_, theta_;
};

/// 2-d Cartesian core on a fixed box with no-flux walls.
class CartesianScheme {
public:
    CartesianScheme(const FlowConfig& cfg, int n, double half_width)
        : cfg_(cfg), n_(n), dr_(2.0 * half_width / n), half_(half_width) {}

    double coord(int k) const { return -half_ + (k + 0.5) * dr_; }
    std::size_t id(int ix, int iy) const { return static_cast<std::size_t>(iy) * n_ + ix; }

    StepScales compute_fluxes(const std::vector<double>& rho, double floor) {
        const auto& lx = *cfg_.lx;
        const double c = cfg_.with_potential ? cfg_.potential_coefficient : 0.0;
        const int n = n_;

        h_.resize(rho.size());
        fx_.assign(static_cast<std::size_t>(n + 1) * n, 0.0);
        fy_.assign(static_cast<std::size_t>(n + 1) * n, 0.0);

        StepScales scales;
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                const double r = std::max(rho[id(ix, iy)], floor);
                const double ln_val = lx.ln(r);
                const double x = coord(ix), y = coord(iy);
                h_[id(ix, iy)] = ln_val + c * (x * x + y * y);
                if (rho[id(ix, iy)] > floor)
                    scales.max_diffusivity = std::max(scales.max_diffusivity, lx.diffusivity_from_ln(r, ln_val));
            }

        auto face = [&](std::size_t a, std::size_t b, double slope_a, double slope_b) {
            const double grad = (h_[b] - h_[a]) / dr_;
            const double vel = -grad;
            const std::size_t up = (vel >= 0.0) ? a : b;
            if (rho[up] <= floor) return 0.0;
            double rho_face = (up == a) ? rho[a] + 0.5 * slope_a * dr_ : rho[b] - 0.5 * slope_b * dr_;
            rho_face = std::max(rho_face, 0.0);
            scales.max_speed = std::max(scales.max_speed, std::abs(vel));
            return rho_face * grad;
        };
        auto slope_x = [&](int ix, int iy) {
            const double l = (ix > 0) ? rho[id(ix - 1, iy)] : rho[id(ix, iy)];
            const double r = (ix + 1 < n) ? rho[id(ix + 1, iy)] : rho[id(ix, iy)];
            return mc_slope(l, rho[id(ix, iy)], r, dr_);
        };
        auto slope_y = [&](int ix, int iy) {
            const double l = (iy > 0) ? rho[id(ix, iy - 1)] : rho[id(ix, iy)];
            const double r = (iy + 1 < n) ? rho[id(ix, iy + 1)] : rho[id(ix, iy)];
            return mc_slope(l, rho[id(ix, iy)], r, dr_);
        };

        for (int iy = 0; iy < n; ++iy)
            for (int ix = 1; ix < n; ++ix)
                fx_[static_cast<std::size_t>(iy) * (n + 1) + ix] =
                    face(id(ix - 1, iy), id(ix, iy), slope_x(ix - 1, iy), slope_x(ix, iy));
        for (int iy = 1; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                fy_[static_cast<std::size_t>(ix) * (n + 1) + iy] =
                    face(id(ix, iy - 1), id(ix, iy), slope_y(ix, iy - 1), slope_y(ix, iy));
        return scales;
    }

    void limited_rate(const std::vector<double>& rho, double dt, std::vector<double>& rate) {
        const int n = n_;
        theta_.assign(rho.size(), 1.0);
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                const double out = std::max(0.0, -fx_[static_cast<std::size_t>(iy) * (n + 1) + ix + 1]) +
                                   std::max(0.0, fx_[static_cast<std::size_t>(iy) * (n + 1) + ix]) +
                                   std::max(0.0, -fy_[static_cast<std::size_t>(ix) * (n + 1) + iy + 1]) +
                                   std::max(0.0, fy_[static_cast<std::size_t>(ix) * (n + 1) + iy]);
                const double cap = 0.95 * rho[id(ix, iy)] * dr_;
                if (dt * out > cap && out > 0.0) theta_[id(ix, iy)] = cap / (dt * out);
            }
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 1; ix < n; ++ix) {
                auto& f = fx_[static_cast<std::size_t>(iy) * (n + 1) + ix];
                if (f != 0.0) f *= theta_[(f <= 0.0) ? id(ix - 1, iy) : id(ix, iy)];
            }
        for (int iy = 1; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix) {
                auto& f = fy_[static_cast<std::size_t>(ix) * (n + 1) + iy];
                if (f != 0.0) f *= theta_[(f <= 0.0) ? id(ix, iy - 1) : id(ix, iy)];
            }
        rate.resize(rho.size());
        for (int iy = 0; iy < n; ++iy)
            for (int ix = 0; ix < n; ++ix)
                rate[id(ix, iy)] =
                    (fx_[static_cast<std::size_t>(iy) * (n + 1) + ix + 1] -
                     fx_[static_cast<std::size_t>(iy) * (n + 1) + ix] +
                     fy_[static_cast<std::size_t>(ix) * (n + 1) + iy + 1] -
                     fy_[static_cast<std::size_t>(ix) * (n + 1) + iy]) /
                    dr_;
    }

private:
    const FlowConfig& cfg_;
    int n_;
    double dr_;
    double half_;
    std::vector<double> h_, fx_, fy_, theta_;
};

void validate_flow_config(const DensityGrid& init, const FlowConfig& cfg) {
    if (!cfg.lx) throw DomainError("pde_evolve: missing generator");
    if (!(cfg.cfl > 0.0) || !(cfg.cfl < 1.0)) throw DomainError("pde_evolve: cfl must lie in (0,1)");
    if (!(cfg.t_end > 0.0)) throw DomainError("pde_evolve: t_end must be positive");
    if (cfg.with_potential && !(cfg.potential_coefficient > 0.0))
        throw DomainError("pde_evolve: potential coefficient must be positive");
    if (init.dim() != cfg.dim) throw DomainError("pde_evolve: grid/config dimension mismatch");
    cfg.lx->phi().require_admissible(cfg.dim);
    // Theorem hypothesis phi(0) = 0, checked on a small sample
    if (cfg.lx->phi_at(1e-12) > 1e-6) throw DomainError("pde_evolve: phi(0) = 0 is required for the flow");
    init.check_initialized();
}

}  // namespace

FlowResult pde_evolve(const DensityGrid& init, const FlowConfig& cfg) {
    validate_flow_config(init, cfg);

    std::vector<double> outputs = cfg.output_times;
    std::sort(outputs.begin(), outputs.end());
    if (outputs.empty() || outputs.back() < cfg.t_end) outputs.push_back(cfg.t_end);

    DensityGrid grid = init;
    const double peak = *std::max_element(grid.values.begin(), grid.values.end());
    const double floor = (cfg.density_floor > 0.0) ? cfg.density_floor : 1e-14 * peak;
    const bool radial = grid.geometry() == DensityGrid::Geometry::Radial;

    RadialScheme radial_core(cfg, radial ? static_cast<int>(grid.cell_count()) : 8, grid.cell_width());
    CartesianScheme cart_core(cfg, grid.cells_per_axis(), grid.extent());

    // Domain growth is a free-boundary feature: it engages only when the
    // initial support leaves a vacuum margin (compactly supported data).
    // Full-support tails (q > 1) run against the no-flux wall at the
    // configured truncation radius instead.
    bool free_boundary = false;
    if (radial) {
        const int end = radial_core.support_end(grid.values, floor);
        free_boundary = end >= 0 && end < static_cast<int>(grid.cell_count()) * 9 / 10;
    }

    FlowResult result;
    double t = 0.0;
    std::size_t next_output = 0;
    int expansions = 0;
    const double dt_floor = std::max(1e-13, 1e-10 * cfg.t_end);
    std::vector<double> rate, stage;

    auto snapshot = [&](double time) {
        result.snapshots.push_back({time, grid});
        result.mass_series.push_back(grid.mass());
    };

    while (next_output < outputs.size()) {
        if (outputs[next_output] <= t + 1e-14) {
            snapshot(outputs[next_output]);
            ++next_output;
            continue;
        }

        // stage 1 fluxes double as the CFL probe
        const StepScales scales =
            radial ? radial_core.compute_fluxes(grid.values, floor) : cart_core.compute_fluxes(grid.values, floor);
        const double dr = grid.cell_width();
        const double diff_safety = radial ? 0.5 : 0.25;  // one sweep direction vs two
        double dt = cfg.t_end;
        if (scales.max_diffusivity > 0.0) dt = std::min(dt, diff_safety * dr * dr / scales.max_diffusivity);
        if (scales.max_speed > 0.0) dt = std::min(dt, (radial ? 1.0 : 0.5) * dr / scales.max_speed);
        dt *= cfg.cfl;
        dt = std::min(dt, outputs[next_output] - t);
        if (dt < dt_floor)
            throw StiffnessError("pde_evolve: CFL time step collapsed below the floor at t = " + std::to_string(t));

        // SSP-RK2 (Heun): both stages are limited forward-Euler updates
        if (radial)
            radial_core.limited_rate(grid.values, dt, rate);
        else
            cart_core.limited_rate(grid.values, dt, rate);
        stage.resize(grid.values.size());
        for (std::size_t i = 0; i < stage.size(); ++i) stage[i] = grid.values[i] + dt * rate[i];

        if (radial)
            radial_core.compute_fluxes(stage, floor);
        else
            cart_core.compute_fluxes(stage, floor);
        if (radial)
            radial_core.limited_rate(stage, dt, rate);
        else
            cart_core.limited_rate(stage, dt, rate);
        for (std::size_t i = 0; i < stage.size(); ++i) {
            const double v = 0.5 * (grid.values[i] + stage[i] + dt * rate[i]);
            if (v < 0.0)
                throw SchemeError("pde_evolve: negative cell value after flux limiting at t = " + std::to_string(t));
            grid.values[i] = v;
        }
        t += dt;
        ++result.steps;

        if (free_boundary) {
            const int end = radial_core.support_end(grid.values, floor);
            if (end >= static_cast<int>(grid.cell_count()) * 19 / 20) {
                if (++expansions > cfg.max_expansions)
                    throw SchemeError("pde_evolve: domain expansion budget exhausted");
                const int extra = std::max(64, static_cast<int>(grid.cell_count() / 4));
                grid.append_radial_cells(extra);
                radial_core.grow(extra);
            }
        }
    }
    return result;
}

DetConstantsCache::DetConstantsCache(std::shared_ptr<const DeformedLogExp> lx, int dim)
    : lx_(std::move(lx)), dim_(dim) {}

std::pair<double, double> DetConstantsCache::node(long long k) {
    auto it = nodes_.find(k);
    if (it != nodes_.end()) return it->second;
    const double det = std::exp(k * spacing_);
    // scalar-multiple covariance with the requested determinant
    const Eigen::MatrixXd v = std::pow(det, 1.0 / dim_) * Eigen::MatrixXd::Identity(dim_, dim_);
    const NormalizationConstants nc = solve_constants(*lx_, dim_, v, FamilyTag::N);
    ++solves_;
    return nodes_[k] = {nc.lambda, nc.c};
}

std::pair<double, double> DetConstantsCache::at_det(double det_v) {
    if (!(det_v > 0.0)) throw DomainError("DetConstantsCache: determinant must be positive");
    const double x = std::log(det_v);
    const long long k0 = static_cast<long long>(std::floor(x / spacing_));
    std::vector<double> xs(4), ls(4), cs(4);
    for (int j = 0; j < 4; ++j) {
        const long long k = k0 - 1 + j;
        const auto [lam, c] = node(k);
        xs[j] = k * spacing_;
        ls[j] = lam;
        cs[j] = c;
    }
    const PchipCurve lam_curve(xs, ls);
    const PchipCurve c_curve(xs, cs);
    return {lam_curve(x), c_curve(x)};
}

MomentTrajectory moment_ode_evolve(std::shared_ptr<const DeformedLogExp> lx, int d, const Eigen::MatrixXd& v0,
                                   double t_end, DetConstantsCache* cache) {
    lx->phi().require_admissible(d);
    if (v0.rows() != d || v0.cols() != d) throw InputError("moment_ode_evolve: V0 has wrong dimensions");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v0);
    if (es.eigenvalues().minCoeff() <= 0.0) throw InputError("moment_ode_evolve: V0 must be positive definite");

    DetConstantsCache local(lx, d);
    DetConstantsCache& consts = cache ? *cache : local;
    const double c_identity = consts.at_det(1.0).second;

    using state_type = std::vector<double>;
    auto system = [&](const state_type& v, state_type& dvdt, double /*t*/) {
        Eigen::Map<const Eigen::MatrixXd> vm(v.data(), d, d);
        const double det = vm.determinant();
        const double c = consts.at_det(det).second;
        Eigen::MatrixXd rhs = 4.0 * (c * Eigen::MatrixXd::Identity(d, d) - c_identity * vm);
        dvdt.assign(rhs.data(), rhs.data() + d * d);
    };

    MomentTrajectory traj;
    auto observer = [&](const state_type& v, double t) {
        Eigen::Map<const Eigen::MatrixXd> vm(v.data(), d, d);
        Eigen::MatrixXd vt = 0.5 * (vm + vm.transpose());
        const double c = consts.at_det(vt.determinant()).second;
        Eigen::MatrixXd a = c * vt.inverse() - c_identity * Eigen::MatrixXd::Identity(d, d);
        traj.times.push_back(t);
        traj.covariances.push_back(vt);
        traj.drifts.push_back(0.5 * (a + a.transpose()));
        traj.means.push_back(Eigen::VectorXd::Zero(d));
    };

    state_type state(v0.data(), v0.data() + d * d);
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_controlled(1e-10, 1e-10, ode::runge_kutta_dopri5<state_type>());
    ode::integrate_adaptive(stepper, system, state, 0.0, t_end, t_end / 256.0, observer);
    return traj;
}

std::vector<StabilityPoint> stability_diagnostic(const FlowResult& traj, std::shared_ptr<const DeformedLogExp> lx,
                                                 FamilyTag family) {
    std::vector<StabilityPoint> series;
    series.reserve(traj.snapshots.size());
    for (const auto& snap : traj.snapshots) {
        StabilityPoint pt;
        pt.time = snap.time;
        try {
            const FitResult fit = fit_family(snap.grid, lx, family);
            pt.l1_residual = fit.l1_residual;
            pt.fitted_cov = fit.fitted_cov;
            pt.valid = true;
        } catch (const DegenerateError&) {
            pt.valid = false;  // recorded as a missing point, not a failure
        }
        series.push_back(std::move(pt));
    }
    return series;
}

}  // namespace phiexp
