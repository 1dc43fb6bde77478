#include "phiexp/generators.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace phiexp {

namespace {

double checked_input(double s, const std::string& label) {
    if (!(s > 0.0) || !std::isfinite(s)) throw GeneratorError("phi '" + label + "': argument must be finite and positive");
    return s;
}

}  // namespace

PhiSpec PhiSpec::power(double q) {
    if (!(q > 0.0) || !std::isfinite(q)) throw GeneratorError("power generator: q must be finite and positive");
    PhiSpec spec;
    std::ostringstream label;
    label << "power(q=" << q << ")";
    spec.label_ = label.str();
    spec.eval_ = [q, lbl = spec.label_](double s) { return std::pow(checked_input(s, lbl), q); };
    spec.delta_zero_ = q - 1.0;
    spec.delta_inf_ = q - 1.0;
    spec.closed_form_ = PowerForm{q, 1.0};
    return spec;
}

PhiSpec PhiSpec::perturbed_power(double q, double eps) {
    if (!(q > 0.0) || !std::isfinite(q) || !std::isfinite(eps))
        throw GeneratorError("perturbed_power generator: invalid (q, eps)");
    if (q + eps <= 0.0) throw GeneratorError("perturbed_power generator: q + eps must be positive for monotonicity");
    PhiSpec spec;
    std::ostringstream label;
    label << "perturbed_power(q=" << q << ",eps=" << eps << ")";
    spec.label_ = label.str();
    spec.eval_ = [q, eps, lbl = spec.label_](double s) {
        checked_input(s, lbl);
        return std::pow(s, q) * std::pow(1.0 + s, eps);
    };
    spec.delta_zero_ = q - 1.0;
    spec.delta_inf_ = q + eps - 1.0;
    return spec;
}

PhiSpec PhiSpec::table(std::vector<double> s, std::vector<double> phi, double delta_zero, double delta_inf,
                       std::string label) {
    const std::size_t n = s.size();
    if (n < 4 || phi.size() != n) throw GeneratorError("table generator: need >= 4 matching samples");
    std::vector<double> ls(n), lp(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(s[i] > 0.0) || !(phi[i] > 0.0)) throw GeneratorError("table generator: samples must be positive");
        if (i > 0 && (!(s[i] > s[i - 1]) || !(phi[i] > phi[i - 1])))
            throw GeneratorError("table generator: columns must be strictly increasing");
        ls[i] = std::log(s[i]);
        lp[i] = std::log(phi[i]);
    }
    auto curve = std::make_shared<PchipCurve>(std::move(ls), std::move(lp));
    // power-law tails matched at the end samples
    const double s_lo = s.front(), p_lo = phi.front();
    const double s_hi = s.back(), p_hi = phi.back();
    PhiSpec spec;
    spec.label_ = std::move(label);
    spec.eval_ = [curve, s_lo, p_lo, s_hi, p_hi, delta_zero, delta_inf, lbl = spec.label_](double x) {
        checked_input(x, lbl);
        if (x < s_lo) return p_lo * std::pow(x / s_lo, 1.0 + delta_zero);
        if (x > s_hi) return p_hi * std::pow(x / s_hi, 1.0 + delta_inf);
        return std::exp((*curve)(std::log(x)));
    };
    spec.delta_zero_ = delta_zero;
    spec.delta_inf_ = delta_inf;
    return spec;
}

PhiSpec PhiSpec::table_from_csv(const std::string& path, double delta_zero, double delta_inf) {
    std::ifstream in(path);
    if (!in) throw GeneratorError("table generator: cannot open '" + path + "'");
    std::vector<double> s, phi;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double a, b;
        if (!(row >> a >> b)) throw GeneratorError("table generator: malformed row '" + line + "' in " + path);
        s.push_back(a);
        phi.push_back(b);
    }
    return table(std::move(s), std::move(phi), delta_zero, delta_inf, "table(" + path + ")");
}

PhiSpec PhiSpec::scaled(double alpha) const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw GeneratorError("scale_phi: alpha must be finite and positive");
    PhiSpec spec;
    std::ostringstream label;
    label << alpha << "*" << label_;
    spec.label_ = label.str();
    spec.eval_ = [alpha, base = eval_](double s) { return alpha * base(s); };
    spec.delta_zero_ = delta_zero_;
    spec.delta_inf_ = delta_inf_;
    if (closed_form_) spec.closed_form_ = PowerForm{closed_form_->q, alpha * closed_form_->alpha};
    return spec;
}

double PhiSpec::operator()(double s) const { return eval_(s); }

bool PhiSpec::admissible_for_dim(int d) const {
    if (d < 2) return false;
    return std::max(delta_zero_, delta_inf_) < 2.0 / (d + 2.0);
}

void PhiSpec::require_admissible(int d) const {
    if (d < 2) throw DomainError("dimension must be >= 2");
    if (!admissible_for_dim(d)) {
        std::ostringstream msg;
        msg << label_ << ": max{delta_zero, delta_inf} = " << std::max(delta_zero_, delta_inf_)
            << " is not < 2/(d+2) = " << 2.0 / (d + 2.0) << " for d = " << d;
        throw DomainError(msg.str());
    }
}

void PhiSpec::validate_samples() const {
    double prev = 0.0;
    for (int k = -24; k <= 24; ++k) {
        const double s = std::pow(10.0, 0.5 * k);
        const double v = eval_(s);
        if (!(v > 0.0) || !std::isfinite(v)) throw GeneratorError(label_ + ": non-positive value at s=" + std::to_string(s));
        if (!(v > prev)) throw GeneratorError(label_ + ": not strictly increasing near s=" + std::to_string(s));
        prev = v;
    }
}

}  // namespace phiexp
