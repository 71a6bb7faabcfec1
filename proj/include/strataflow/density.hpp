#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "catalog.hpp"
#include "varifold.hpp"

namespace strataflow {

inline double heat_kernel_weight(const SpacetimePoint& X0, const Vec& x, double t, int n) {
    require(t < X0.t, ErrorKind::InvalidInput, "heat_kernel_weight: need t < t0");
    double tau = X0.t - t;
    return std::pow(4 * std::numbers::pi * tau, -0.5 * n) * std::exp(-norm2(x - X0.x) / (4 * tau));
}

inline double cutoff_weight(const SpacetimePoint& X0, const Vec& x, double t, int n) {
    double v = 1 - norm2(x - X0.x) - 2 * n * (t - X0.t);
    return v > 0 ? v * v * v : 0.0;
}

struct DensityOptions {
    double spacing_factor = 1.0 / 3;  // quadrature spacing in units of sqrt(tau)
    double gaussian_radius2 = 160;    // kernel truncated at |x - x0|^2 = this * tau
};

// Theta(M, X0, tau): integral of phi (and rho when localized) against M_{t0 - tau}.
inline double gaussian_density_at_scale(const FlowTrack& flow, const SpacetimePoint& X0, double tau, bool localized,
                                        const DensityOptions& opt = {}) {
    require(tau > 0, ErrorKind::InvalidInput, "gaussian_density_at_scale: tau must be positive");
    require(X0.dim == flow.N, ErrorKind::InvalidInput, "gaussian_density_at_scale: dimension mismatch");
    const int n = flow.n;
    const double t = X0.t - tau;
    Window w;
    w.center = X0.x;
    w.radius = std::sqrt(opt.gaussian_radius2 * tau);
    if (localized) w.radius = std::min(w.radius, std::sqrt(1 + 2 * n * tau));
    w.spacing = opt.spacing_factor * std::sqrt(tau);
    const double pre = std::pow(4 * std::numbers::pi * tau, -0.5 * n);
    double sum = 0;
    auto acc = [&](const Vec& p, double m) {
        double d2 = norm2(p - X0.x);
        double v = pre * std::exp(-d2 / (4 * tau));
        if (localized) {
            double c = 1 - d2 + 2 * n * tau;
            v *= c > 0 ? c * c * c : 0.0;
        }
        sum += v * m;
    };
    if (flow.model) model_visit(*flow.model, t, w, acc);
    else visit_at_time(flow, t, w, acc);
    return sum;
}

struct DensityProfile {
    SpacetimePoint base;
    std::vector<std::pair<double, double>> samples;  // (tau, theta), tau decreasing
    bool localized = true;
};

inline DensityProfile density_profile(const FlowTrack& flow, const SpacetimePoint& X0, const std::vector<double>& taus,
                                      bool localized) {
    DensityProfile p;
    p.base = X0;
    p.localized = localized;
    for (double tau : taus) p.samples.emplace_back(tau, gaussian_density_at_scale(flow, X0, tau, localized));
    return p;
}

struct DensityLimitOptions {
    double tau0 = 0.25;
    double ratio = 2.0;
    double tolerance = 1e-3;
    int max_levels = 24;
    std::optional<bool> localized;  // default: plain for analytic tracks, localized otherwise
};

struct DensityLimit {
    double value = 0;
    bool converged = false;
    std::vector<std::pair<double, double>> ladder;
};

// Theta(M, X0) from a geometric tau ladder; Richardson step assumes an O(tau) remainder.
inline DensityLimit gaussian_density_limit(const FlowTrack& flow, const SpacetimePoint& X0,
                                           const DensityLimitOptions& opt = {}) {
    const bool localized = opt.localized.value_or(!flow.model.has_value());
    DensityLimit out;
    double tau = opt.tau0;
    for (int k = 0; k < opt.max_levels; ++k, tau /= opt.ratio) {
        double th;
        try {
            th = gaussian_density_at_scale(flow, X0, tau, localized);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::OutOfRange) throw;
            if (out.ladder.empty() && X0.t - tau < flow.t_first()) continue;  // ladder not yet inside the track
            break;
        }
        out.ladder.emplace_back(tau, th);
        std::size_t m = out.ladder.size();
        if (m >= 2 && std::abs(th - out.ladder[m - 2].second) < opt.tolerance) {
            out.converged = true;
            out.value = th + (th - out.ladder[m - 2].second) / (opt.ratio - 1);
            return out;
        }
    }
    require(!out.ladder.empty(), ErrorKind::OutOfRange, "gaussian_density_limit: no ladder level inside the track");
    out.value = out.ladder.back().second;
    return out;
}

inline double huisken_energy(const FlowTrack& flow, const SpacetimePoint& X, double r1, double r2, bool localized) {
    require(0.5 > r1 && r1 > r2 && r2 > 0, ErrorKind::InvalidInput, "huisken_energy: need 1/2 > r1 > r2 > 0");
    return gaussian_density_at_scale(flow, X, r1 * r1, localized) - gaussian_density_at_scale(flow, X, r2 * r2, localized);
}

struct DensityRatio {
    double ratio = 0;
    double bound = 0;
};

// M_t(B_r(x)) / r^n against the bound 4 Lambda.
inline DensityRatio density_ratio_check(const FlowTrack& flow, const SpacetimePoint& X, double r) {
    require(r > 0 && r <= 0.5, ErrorKind::InvalidInput, "density_ratio_check: need 0 < r <= 1/2");
    double mass = 0;
    if (flow.model && flow.model->is_plane()) {
        const auto& m = *flow.model;
        if (m.exists_at(X.t)) {
            Vec rel = X.x - m.center.x, perp = rel;
            for (int d = 0; d < m.n; ++d) perp = perp - dot(rel, m.frame[d]) * m.frame[d];
            double d2 = norm2(perp);
            if (d2 < r * r) mass = unit_ball_volume(m.n) * std::pow(r * r - d2, 0.5 * m.n);
        }
    } else {
        Window w{X.x, r, r / 256};
        auto acc = [&](const Vec& p, double m) {
            if (norm(p - X.x) < r) mass += m;
        };
        if (flow.model) model_visit(*flow.model, X.t, w, acc);
        else visit_at_time(flow, X.t, w, acc);
    }
    return {mass / std::pow(r, flow.n), 4 * flow.mass_bound};
}

}  // namespace strataflow
