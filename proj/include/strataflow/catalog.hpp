#pragma once

#include <algorithm>
#include <cmath>
#include <mutex>
#include <vector>

#include "model.hpp"
#include "numeric.hpp"
#include "varifold.hpp"

namespace strataflow {

namespace detail {

inline void require_supported(const SelfSimilarModel& m) {
    bool ok = m.is_plane() || (m.kind == ModelKind::ShrinkerSphere && m.N == m.n + 1 && m.n <= 2) ||
              (m.kind == ModelKind::ShrinkerCylinder && m.n == 2 && m.N == 3);
    require(ok, ErrorKind::InvalidInput, "model dimensions not supported by the analytic catalog");
}

inline Axis model_axis(const SelfSimilarModel& m) {
    Axis a;
    a.origin = m.center.x;
    a.dir = m.frame[0];
    a.e1 = m.frame[1];
    a.e2 = m.frame[2];
    return a;
}

}  // namespace detail

// Exact slice of a catalog model. Planes are sampled on the patch [-extent, extent]^n in
// plane coordinates; `resolution` counts samples per side (planes) or per great half
// circle (spheres); cylinders use `resolution` rings along [-extent, extent].
inline VarifoldSlice model_slice(const SelfSimilarModel& m, double t, int resolution, double extent = 2.0) {
    require(resolution >= 8, ErrorKind::InvalidInput, "model_slice: resolution must be >= 8");
    detail::require_supported(m);
    VarifoldSlice s;
    s.t = t;
    if (!m.exists_at(t)) return s;
    const double pi = std::numbers::pi;

    if (m.is_plane()) {
        const int n = m.n;
        const int K = resolution;
        const double h = 2 * extent / K;
        if (n == 1) {
            for (int i = 0; i <= K; ++i) {
                Sample p;
                p.position = m.center.x + (-extent + i * h) * m.frame[0];
                p.weight = (i == 0 || i == K) ? 0.5 * h : h;
                p.has_normal = true;
                p.normal = m.frame[1];
                p.set_curvatures({0.0});
                s.samples.push_back(p);
            }
            s.curves.push_back({0, s.samples.size(), false});
            return s;
        }
        std::array<int, 3> idx{};
        int total = 1;
        for (int d = 0; d < n; ++d) total *= K;
        for (int c = 0; c < total; ++c) {
            int r = c;
            Sample p;
            p.position = m.center.x;
            for (int d = 0; d < n; ++d) {
                idx[d] = r % K;
                r /= K;
                p.position = p.position + (-extent + (idx[d] + 0.5) * h) * m.frame[d];
            }
            p.weight = std::pow(h, n);
            p.has_normal = true;
            p.normal = m.frame[n];
            if (n == 2) p.set_curvatures({0.0, 0.0});
            else p.set_curvatures({0.0, 0.0, 0.0});
            s.samples.push_back(p);
        }
        return s;
    }

    const double R = *m.radius_at(t);
    if (m.kind == ModelKind::ShrinkerSphere && m.n == 1) {
        const int K = 2 * resolution;
        for (int i = 0; i < K; ++i) {
            double a = 2 * pi * i / K;
            Vec dir = std::cos(a) * m.frame[0] + std::sin(a) * m.frame[1];
            Sample p;
            p.position = m.center.x + R * dir;
            p.weight = 2 * pi * R / K;
            p.has_normal = true;
            p.normal = dir;
            p.set_curvatures({1.0 / R});
            s.samples.push_back(p);
        }
        s.curves.push_back({0, s.samples.size(), true});
        return s;
    }

    s.axis = detail::model_axis(m);
    if (m.kind == ModelKind::ShrinkerSphere) {
        const int K = resolution;
        for (int i = 0; i <= K; ++i) {
            double th = pi - pi * i / K;  // z increasing
            double lo = std::max(0.0, th - 0.5 * pi / K), hi = std::min(pi, th + 0.5 * pi / K);
            Ring r;
            r.z = R * std::cos(th);
            r.u = R * std::sin(th);
            if (i == 0 || i == K) r.u = 0;
            r.weight = 2 * pi * R * R * (std::cos(lo) - std::cos(hi));
            r.nz = std::cos(th);
            r.nu = std::sin(th);
            r.k_mer = r.k_par = 1.0 / R;
            s.rings.push_back(r);
        }
        s.profiles.push_back({0, s.rings.size(), false});
        return s;
    }

    // R x S^1 cylinder in R^3, axis frame[0]
    const int K = resolution;
    const double dz = 2 * extent / K;
    for (int i = 0; i <= K; ++i) {
        Ring r;
        r.z = -extent + i * dz;
        r.u = R;
        r.weight = 2 * pi * R * ((i == 0 || i == K) ? 0.5 * dz : dz);
        r.nz = 0;
        r.nu = 1;
        r.k_mer = 0;
        r.k_par = 1.0 / R;
        s.rings.push_back(r);
    }
    s.profiles.push_back({0, s.rings.size(), false});
    return s;
}

// Analytic track: slices at the given times, with the model attached for exact queries.
inline FlowTrack model_track(const SelfSimilarModel& m, const std::vector<double>& times, int resolution,
                             double extent = 2.0) {
    m.validate();
    FlowTrack f;
    f.n = m.n;
    f.N = m.N;
    f.model = m;
    double mass = 0;
    for (double t : times) {
        auto s = model_slice(m, t, resolution, extent);
        if (s.empty()) continue;
        mass = std::max(mass, s.mass());
        f.slices.push_back(std::move(s));
    }
    f.mass_bound = std::max(mass, 1e-300);
    if (m.is_shrinker()) {
        f.extinction_time = m.center.t;
        f.singular_times = {m.center.t};
        f.singular_points = {m.center};
    } else if (m.kind == ModelKind::QuasistaticPlane) {
        f.extinction_time = m.center.t + m.T;
    }
    f.closed = m.is_shrinker();
    return f;
}

// Integrates a function that is radial about w.center against the exact model slice.
// The restriction to radial integrands lets symmetric directions collapse to one node.
template <class F>
void model_visit(const SelfSimilarModel& m, double t, const Window& w, F&& f) {
    detail::require_supported(m);
    require(std::isfinite(w.radius) && std::isfinite(w.spacing), ErrorKind::InvalidInput,
            "model_visit: window must be bounded");
    if (!m.exists_at(t)) return;
    const double pi = std::numbers::pi;
    const double Rw = w.radius, h = w.spacing;
    Vec rel = w.center - m.center.x;

    if (m.is_plane()) {
        const int n = m.n;
        std::array<double, 3> a{};
        Vec foot = m.center.x;
        for (int d = 0; d < n; ++d) {
            a[d] = dot(rel, m.frame[d]);
            foot = foot + a[d] * m.frame[d];
        }
        double dperp = norm(w.center - foot);
        if (dperp >= Rw) return;
        double Rp = std::sqrt(Rw * Rw - dperp * dperp);
        int K = std::max(2, static_cast<int>(std::ceil(2 * Rp / h)));
        double hh = 2 * Rp / K;
        int total = 1;
        for (int d = 0; d < n; ++d) total *= K;
        double wt = std::pow(hh, n);
        for (int c = 0; c < total; ++c) {
            int r = c;
            Vec p = foot;
            for (int d = 0; d < n; ++d) {
                p = p + (-Rp + ((r % K) + 0.5) * hh) * m.frame[d];
                r /= K;
            }
            f(p, wt);
        }
        return;
    }

    const double R = *m.radius_at(t);
    if (m.kind == ModelKind::ShrinkerSphere && m.n == 1) {
        double x = dot(rel, m.frame[0]), y = dot(rel, m.frame[1]);
        double aa = std::hypot(x, y), psic = std::atan2(y, x);
        double delta = pi;
        if (aa > 0) {
            double c0 = (R * R + aa * aa - Rw * Rw) / (2 * R * aa);
            if (c0 >= 1) return;
            if (c0 > -1) delta = std::acos(c0);
        } else if (R > Rw) {
            return;
        }
        int K = std::max(16, static_cast<int>(std::ceil(2 * delta * R / h)));
        double dpsi = 2 * delta / K;
        for (int i = 0; i < K; ++i) {
            double psi = psic - delta + (i + 0.5) * dpsi;
            f(m.center.x + (R * std::cos(psi)) * m.frame[0] + (R * std::sin(psi)) * m.frame[1], R * dpsi);
        }
        return;
    }

    if (m.kind == ModelKind::ShrinkerSphere) {
        // polar coordinates about the direction of the window center; nodes uniform in cos(theta)
        double aa = norm(rel);
        Vec pole = aa > 0 ? (1.0 / aa) * rel : m.frame[0];
        Vec side = frame_from_axis(pole, 3)[1];
        double c0 = -1;
        if (aa > 0) {
            c0 = (R * R + aa * aa - Rw * Rw) / (2 * R * aa);
            if (c0 >= 1) return;
            c0 = std::max(c0, -1.0);
        } else if (R > Rw) {
            return;
        }
        double dw_target = std::min(h / R, 4 * h * h / (R * (aa + h)));
        int K = std::clamp(static_cast<int>(std::ceil((1 - c0) / dw_target)), 32, 200000);
        double dw = (1 - c0) / K;
        for (int i = 0; i < K; ++i) {
            double cw = c0 + (i + 0.5) * dw;
            double sw = std::sqrt(std::max(0.0, 1 - cw * cw));
            f(m.center.x + (R * cw) * pole + (R * sw) * side, 2 * pi * R * R * dw);
        }
        return;
    }

    // cylinder R x S^1
    double yc = dot(rel, m.frame[0]);
    double x = dot(rel, m.frame[1]), y = dot(rel, m.frame[2]);
    double aa = std::hypot(x, y), psic = std::atan2(y, x);
    double dmin = std::abs(R - aa);
    if (dmin >= Rw) return;
    double half = std::sqrt(Rw * Rw - dmin * dmin);
    int Ky = std::max(4, static_cast<int>(std::ceil(2 * half / h)));
    double dy = 2 * half / Ky;
    for (int j = 0; j < Ky; ++j) {
        double yy = -half + (j + 0.5) * dy;
        double r2 = Rw * Rw - yy * yy;
        double delta = pi;
        if (aa > 0) {
            double c0 = (R * R + aa * aa - r2) / (2 * R * aa);
            if (c0 >= 1) continue;
            if (c0 > -1) delta = std::acos(c0);
        }
        // radial integrand: symmetric in psi - psic, so integrate one side and double
        int K = std::max(8, static_cast<int>(std::ceil(delta * R / h)));
        double dpsi = delta / K;
        for (int i = 0; i < K; ++i) {
            double psi = psic + (i + 0.5) * dpsi;
            Vec p = m.center.x + (yc + yy) * m.frame[0] + (R * std::cos(psi)) * m.frame[1] +
                    (R * std::sin(psi)) * m.frame[2];
            f(p, 2 * R * dpsi * dy);
        }
    }
}

// Smooth bump with support in the unit ball and values in [0, 1].
inline double bump_profile(double rho) {
    if (rho >= 1) return 0;
    return std::exp(1 - 1 / (1 - rho * rho));
}

namespace detail {

// P_d(delta) = integral over R^d of bump(sqrt(|y|^2 + delta^2)) dy, tabulated on [0, 1].
class BumpSliceTable {
public:
    static const BumpSliceTable& get(int d) {
        static std::once_flag once;
        static std::array<BumpSliceTable, 4> tables;
        std::call_once(once, [] {
            for (int k = 0; k < 4; ++k) tables[k].build(k);
        });
        return tables[d];
    }
    double operator()(double delta) const {
        if (delta >= 1) return 0;
        double x = delta * kCells;
        int i = std::min(static_cast<int>(x), kCells - 1);
        double f = x - i;
        return v_[i] * (1 - f) + v_[i + 1] * f;
    }

private:
    static constexpr int kCells = 4096;
    std::vector<double> v_;
    void build(int d) {
        v_.assign(kCells + 1, 0.0);
        for (int i = 0; i <= kCells; ++i) {
            double delta = double(i) / kCells;
            if (d == 0) {
                v_[i] = bump_profile(delta);
                continue;
            }
            double top = std::sqrt(std::max(0.0, 1 - delta * delta));
            double val = numeric::integrate(
                [&](double r) { return bump_profile(std::sqrt(r * r + delta * delta)) * std::pow(r, d - 1); }, 0.0,
                top, numeric::gl48());
            v_[i] = unit_sphere_area(d - 1) * val;
        }
    }
};

}  // namespace detail

// Exact integral of bump(|x - c| / width) against the model slice at time t.
inline double model_bump_integral(const SelfSimilarModel& m, double t, const Vec& c, double width) {
    if (!m.exists_at(t)) return 0;
    Vec rel = c - m.center.x;
    if (m.is_plane()) {
        Vec perp = rel;
        for (int d = 0; d < m.n; ++d) perp = perp - dot(rel, m.frame[d]) * m.frame[d];
        return std::pow(width, m.n) * detail::BumpSliceTable::get(m.n)(norm(perp) / width);
    }
    detail::require_supported(m);
    const double R = *m.radius_at(t);
    const double pi = std::numbers::pi;
    const int flat = m.flat_dim;
    const auto& P = detail::BumpSliceTable::get(flat);
    Vec sph = rel;
    for (int d = 0; d < flat; ++d) sph = sph - dot(rel, m.frame[d]) * m.frame[d];
    double a = norm(sph);
    double scale = std::pow(width, flat);
    auto g = [&](double dist) { return scale * P(dist / width); };
    const int mdim = m.n - flat;  // sphere factor dimension
    if (a < 1e-14 * std::max(1.0, R)) return g(R) * unit_sphere_area(mdim) * std::pow(R, mdim);
    double c0 = (R * R + a * a - width * width) / (2 * R * a);
    if (c0 >= 1) return 0;
    c0 = std::max(c0, -1.0);
    if (mdim == 1) {
        double thmax = std::acos(c0);
        return 2 * R *
               numeric::integrate([&](double th) { return g(std::sqrt(std::max(0.0, R * R + a * a - 2 * R * a * std::cos(th)))); },
                                  0.0, thmax);
    }
    return 2 * pi * R * R *
           numeric::integrate([&](double cw) { return g(std::sqrt(std::max(0.0, R * R + a * a - 2 * R * a * cw))); }, c0,
                              1.0);
}

namespace detail {

inline VarifoldSlice rescale_slice(const VarifoldSlice& s, const SpacetimePoint& X, double r, int n) {
    VarifoldSlice o;
    o.t = (s.t - X.t) / (r * r);
    const double wscale = std::pow(r, -n);
    o.samples = s.samples;
    for (auto& p : o.samples) {
        p.position = (1.0 / r) * (p.position - X.x);
        p.weight *= wscale;
        for (int i = 0; i < p.ncurv; ++i) p.lambda[i] *= r;
    }
    o.curves = s.curves;
    o.rings = s.rings;
    o.profiles = s.profiles;
    o.axis = s.axis;
    if (!o.rings.empty()) {
        // shift the axis origin to the foot of X so that z, u rescale linearly
        double zx = dot(X.x - s.axis.origin, s.axis.dir);
        Vec foot = s.axis.origin + zx * s.axis.dir;
        o.axis.origin = (1.0 / r) * (foot - X.x);
        for (auto& ring : o.rings) {
            ring.z = (ring.z - zx) / r;
            ring.u /= r;
            ring.weight *= wscale;
            ring.k_mer *= r;
            ring.k_par *= r;
        }
    }
    return o;
}

}  // namespace detail

// M_{X,r}: parabolic rescaling about X, restricted to times in [-1, 1] of the new clock.
// Joined runs are kept whole so that quadrature stays valid near the unit ball boundary;
// loose samples outside the unit ball are dropped.
inline FlowTrack recenter_rescale(const FlowTrack& flow, const SpacetimePoint& X, double r) {
    require(r > 0 && r <= 1, ErrorKind::InvalidInput, "recenter_rescale: r must be in (0, 1]");
    require(X.dim == flow.N, ErrorKind::InvalidInput, "recenter_rescale: dimension mismatch");
    FlowTrack o;
    o.n = flow.n;
    o.N = flow.N;
    o.closed = flow.closed;
    double mass = flow.mass_bound;
    for (const auto& s : flow.slices) {
        double tn = (s.t - X.t) / (r * r);
        if (tn < -1 - 1e-12 || tn > 1 + 1e-12) continue;
        auto rs = detail::rescale_slice(s, X, r, flow.n);
        if (rs.curves.empty()) {
            std::vector<Sample> kept;
            for (const auto& p : rs.samples)
                if (norm(p.position) <= 1 + 1e-12) kept.push_back(p);
            rs.samples = std::move(kept);
        }
        if (rs.empty()) continue;
        mass = std::max(mass, rs.mass());
        o.slices.push_back(std::move(rs));
    }
    o.mass_bound = mass;
    if (flow.model) {
        SelfSimilarModel m = *flow.model;
        m.center.x = (1.0 / r) * (m.center.x - X.x);
        m.center.t = (m.center.t - X.t) / (r * r);
        m.T = m.T / (r * r);
        o.model = m;
    }
    if (flow.extinction_time) o.extinction_time = (*flow.extinction_time - X.t) / (r * r);
    for (double ts : flow.singular_times) o.singular_times.push_back((ts - X.t) / (r * r));
    for (auto p : flow.singular_points) {
        p.x = (1.0 / r) * (p.x - X.x);
        p.t = (p.t - X.t) / (r * r);
        o.singular_points.push_back(p);
    }
    return o;
}

}  // namespace strataflow
