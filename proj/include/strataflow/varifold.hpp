#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "core.hpp"
#include "model.hpp"

namespace strataflow {

struct Sample {
    Vec position{};
    double weight = 0;
    bool has_normal = false;
    Vec normal{};
    int ncurv = 0;                   // number of principal curvatures stored (0 = none)
    std::array<double, 3> lambda{};  // sorted ascending

    bool has_curvature() const { return ncurv > 0; }
    double mean_curvature() const {
        double h = 0;
        for (int i = 0; i < ncurv; ++i) h += lambda[i];
        return h;
    }
    double second_ff_norm() const {
        double a = 0;
        for (int i = 0; i < ncurv; ++i) a += lambda[i] * lambda[i];
        return std::sqrt(a);
    }
    void set_curvatures(std::initializer_list<double> ls) {
        ncurv = 0;
        for (double l : ls) lambda[ncurv++] = l;
        std::sort(lambda.begin(), lambda.begin() + ncurv);
    }
};

// One parallel circle of a surface of revolution, in axis coordinates (z along the
// axis, u distance from it). The weight is the area represented by the ring.
struct Ring {
    double z = 0, u = 0, weight = 0;
    double nz = 0, nu = 0;          // outward unit normal in the (z, u) half plane
    double k_mer = 0, k_par = 0;    // meridian and parallel principal curvatures
    bool has_curvature = true;

    double second_ff_norm(int n) const { return std::sqrt(k_mer * k_mer + (n - 1) * k_par * k_par); }
    double mean_curvature(int n) const { return k_mer + (n - 1) * k_par; }
};

struct Axis {
    Vec origin{};
    Vec dir = make_vec({1, 0, 0});
    Vec e1 = make_vec({0, 1, 0});
    Vec e2 = make_vec({0, 0, 1});

    Vec point(double z, double u, double phi) const {
        return origin + z * dir + (u * std::cos(phi)) * e1 + (u * std::sin(phi)) * e2;
    }
    // Cylindrical coordinates (z, u, phi) of an ambient point.
    std::array<double, 3> coords(const Vec& p) const {
        Vec d = p - origin;
        double z = dot(d, dir);
        double a = dot(d, e1), b = dot(d, e2);
        return {z, std::hypot(a, b), std::atan2(b, a)};
    }
};

struct Run {
    std::size_t begin = 0, end = 0;  // [begin, end)
    bool closed = false;
    std::size_t size() const { return end - begin; }
};

// A time slice as a weighted measure. Three storage modes are supported: loose samples,
// samples joined into polylines (curves), and rings of a surface of revolution joined
// into meridian profiles. Quadrature in `visit_measure` subdivides joined data so that
// integrands varying on small scales are still resolved.
struct VarifoldSlice {
    double t = 0;
    std::vector<Sample> samples;
    std::vector<Run> curves;
    std::vector<Ring> rings;
    std::vector<Run> profiles;
    Axis axis;

    bool empty() const { return samples.empty() && rings.empty(); }
    double mass() const {
        double m = 0;
        for (const auto& s : samples) m += s.weight;
        for (const auto& r : rings) m += r.weight;
        return m;
    }
    Sample ring_sample(const Ring& r, double phi, int n) const {
        Sample s;
        s.position = axis.point(r.z, r.u, phi);
        s.weight = r.weight;
        s.has_normal = true;
        Vec radial = std::cos(phi) * axis.e1 + std::sin(phi) * axis.e2;
        s.normal = r.nz * axis.dir + r.nu * radial;
        if (r.has_curvature) {
            if (n == 2) s.set_curvatures({r.k_mer, r.k_par});
            else s.set_curvatures({r.k_mer});
        }
        return s;
    }
};

struct Window {
    Vec center{};
    double radius = kInf;
    double spacing = kInf;
};

namespace detail {

inline double point_segment_distance(const Vec& c, const Vec& a, const Vec& b) {
    Vec ab = b - a;
    double l2 = norm2(ab);
    double s = l2 > 0 ? std::clamp(dot(c - a, ab) / l2, 0.0, 1.0) : 0.0;
    return norm(c - (a + s * ab));
}

inline double point_segment_distance_2d(double px, double py, double ax, double ay, double bx, double by) {
    double dx = bx - ax, dy = by - ay;
    double l2 = dx * dx + dy * dy;
    double s = l2 > 0 ? std::clamp(((px - ax) * dx + (py - ay) * dy) / l2, 0.0, 1.0) : 0.0;
    return std::hypot(px - ax - s * dx, py - ay - s * dy);
}

// Share of vertex weights carried by segment k of a run, proportional to length.
template <class Len, class W>
void segment_shares(std::size_t m, bool closed, Len&& len, W&& weight, std::size_t k, double& wa, double& wb) {
    std::size_t segs = closed ? m : m - 1;
    auto vertex_share = [&](std::size_t i) {
        double lp = (closed || i > 0) ? len(i == 0 ? segs - 1 : i - 1) : 0.0;
        double ln = (closed || i < segs) ? len(i) : 0.0;
        double tot = lp + ln;
        if (tot <= 0) return 0.5 * weight(i);
        return weight(i) * len(k) / tot;
    };
    wa = vertex_share(k);
    wb = vertex_share((k + 1) % m);
}

}  // namespace detail

// Calls f(position, weight) for quadrature nodes of the slice measure inside the window.
template <class F>
void visit_measure(const VarifoldSlice& s, const Window& w, F&& f) {
    const double R = w.radius;
    const double h = w.spacing;

    if (s.curves.empty()) {
        for (const auto& p : s.samples)
            if (norm(p.position - w.center) <= R) f(p.position, p.weight);
    } else {
        for (const auto& run : s.curves) {
            std::size_t m = run.size();
            if (m == 1) {
                const auto& p = s.samples[run.begin];
                if (norm(p.position - w.center) <= R) f(p.position, p.weight);
                continue;
            }
            std::size_t segs = run.closed ? m : m - 1;
            auto pos = [&](std::size_t i) -> const Vec& { return s.samples[run.begin + i % m].position; };
            auto len = [&](std::size_t k) { return norm(pos(k + 1) - pos(k)); };
            auto wt = [&](std::size_t i) { return s.samples[run.begin + i].weight; };
            for (std::size_t k = 0; k < segs; ++k) {
                const Vec& a = pos(k);
                const Vec& b = pos(k + 1);
                if (std::isfinite(R) && detail::point_segment_distance(w.center, a, b) > R) continue;
                double wa, wb;
                detail::segment_shares(m, run.closed, len, wt, k, wa, wb);
                double L = norm(b - a);
                int sub = std::isfinite(h) ? static_cast<int>(std::ceil(L / h)) : 1;
                if (sub <= 1) {
                    f(a, wa);
                    f(b, wb);
                    continue;
                }
                double W = (wa + wb) / sub;
                for (int q = 0; q <= sub; ++q) {
                    double c = (q == 0 || q == sub) ? 0.5 : 1.0;
                    f(a + (double(q) / sub) * (b - a), c * W);
                }
            }
        }
    }

    if (s.rings.empty()) return;
    auto cc = s.axis.coords(w.center);
    const double zc = cc[0], uc = cc[1], phic = cc[2];
    auto emit_ring = [&](double z, double u, double W) {
        if (W == 0) return;
        if (u <= 1e-14) {
            Vec p = s.axis.point(z, 0, 0);
            if (norm(p - w.center) <= R) f(p, W);
            return;
        }
        double delta = std::numbers::pi;
        if (std::isfinite(R) && uc > 0) {
            double c0 = ((z - zc) * (z - zc) + u * u + uc * uc - R * R) / (2 * u * uc);
            if (c0 > 1) return;
            if (c0 > -1) delta = std::acos(c0);
        } else if (std::isfinite(R) && (z - zc) * (z - zc) + u * u > R * R) {
            return;
        }
        double arc = 2 * delta * u;
        int K = std::isfinite(h) ? std::max(8, static_cast<int>(std::ceil(arc / h))) : 16;
        double wk = W * (delta / std::numbers::pi) / K;
        for (int q = 0; q < K; ++q) {
            double phi = phic - delta + (q + 0.5) * (2 * delta / K);
            f(s.axis.point(z, u, phi), wk);
        }
    };
    for (const auto& run : s.profiles) {
        std::size_t m = run.size();
        if (m == 1) {
            const auto& r = s.rings[run.begin];
            emit_ring(r.z, r.u, r.weight);
            continue;
        }
        std::size_t segs = run.closed ? m : m - 1;
        auto ring = [&](std::size_t i) -> const Ring& { return s.rings[run.begin + i % m]; };
        auto len = [&](std::size_t k) { return std::hypot(ring(k + 1).z - ring(k).z, ring(k + 1).u - ring(k).u); };
        auto wt = [&](std::size_t i) { return s.rings[run.begin + i].weight; };
        for (std::size_t k = 0; k < segs; ++k) {
            const Ring& a = ring(k);
            const Ring& b = ring(k + 1);
            if (std::isfinite(R) && detail::point_segment_distance_2d(zc, uc, a.z, a.u, b.z, b.u) > R) continue;
            double wa, wb;
            detail::segment_shares(m, run.closed, len, wt, k, wa, wb);
            double L = len(k);
            int sub = std::isfinite(h) ? static_cast<int>(std::ceil(L / h)) : 1;
            if (sub <= 1) {
                emit_ring(a.z, a.u, wa);
                emit_ring(b.z, b.u, wb);
                continue;
            }
            double norm_u = 0;
            for (int q = 0; q <= sub; ++q) {
                double c = (q == 0 || q == sub) ? 0.5 : 1.0;
                norm_u += c * (a.u + (double(q) / sub) * (b.u - a.u));
            }
            if (norm_u <= 0) continue;
            for (int q = 0; q <= sub; ++q) {
                double c = (q == 0 || q == sub) ? 0.5 : 1.0;
                double s_ = double(q) / sub;
                double u = a.u + s_ * (b.u - a.u);
                emit_ring(a.z + s_ * (b.z - a.z), u, (wa + wb) * c * u / norm_u);
            }
        }
    }
}

// Calls f(sample) for every curvature-carrying point of the slice. Rings are expanded
// at the representative angle phi = 0 only; callers that need rotation use ring data.
template <class F>
void for_each_point(const VarifoldSlice& s, int n, F&& f) {
    for (const auto& p : s.samples) f(p);
    for (const auto& r : s.rings) f(s.ring_sample(r, 0.0, n));
}

struct FlowTrack {
    int n = 1;
    int N = 2;
    double mass_bound = 1;
    std::vector<VarifoldSlice> slices;
    std::vector<double> singular_times;
    std::vector<SpacetimePoint> singular_points;
    std::optional<double> extinction_time;  // the flow is empty from this time on
    std::optional<SelfSimilarModel> model;  // analytic backing, if any
    bool closed = true;                     // compact slices: mass must not increase

    bool empty() const { return slices.empty() && !model; }
    double t_first() const { return slices.empty() ? -kInf : slices.front().t; }
    double t_last() const { return slices.empty() ? kInf : slices.back().t; }

    void validate() const {
        require(n >= 1 && N > n && N <= kMaxDim, ErrorKind::InvalidInput, "track: bad dimensions");
        require(mass_bound > 0, ErrorKind::InvalidInput, "track: mass bound must be positive");
        double prev_mass = kInf;
        for (std::size_t i = 0; i < slices.size(); ++i) {
            const auto& s = slices[i];
            if (i > 0) require(s.t > slices[i - 1].t, ErrorKind::InvalidInput, "track: slice times not increasing");
            for (const auto& p : s.samples) {
                require(p.weight > 0, ErrorKind::InvalidInput, "track: sample weight must be positive");
                if (p.ncurv > 0) require(p.ncurv == n, ErrorKind::InvalidInput, "track: curvature count != n");
            }
            for (const auto& r : s.rings) require(r.weight >= 0 && r.u >= 0, ErrorKind::InvalidInput, "track: bad ring");
            double m = s.mass();
            require(m <= mass_bound * (1 + 1e-9), ErrorKind::InvalidInput, "track: slice mass exceeds bound");
            if (closed) require(m <= prev_mass + 1e-6 * mass_bound, ErrorKind::InvalidInput, "track: mass increased");
            prev_mass = m;
        }
    }
};

// Linear-in-measure interpolation weights for time t.
struct TimeBracket {
    const VarifoldSlice* a = nullptr;
    const VarifoldSlice* b = nullptr;
    double wa = 0, wb = 0;
};

inline TimeBracket bracket(const FlowTrack& flow, double t) {
    const auto& sl = flow.slices;
    require(!sl.empty(), ErrorKind::OutOfRange, "track has no slices");
    constexpr double eps = 1e-12;
    if (t < sl.front().t - eps) throw Error(ErrorKind::OutOfRange, "time " + std::to_string(t) + " before track start");
    if (flow.extinction_time && t >= *flow.extinction_time) return {};
    if (t > sl.back().t + eps) {
        if (!flow.extinction_time)
            throw Error(ErrorKind::OutOfRange, "time " + std::to_string(t) + " after track end");
        double te = *flow.extinction_time;
        double w = (te - t) / (te - sl.back().t);
        return {&sl.back(), nullptr, w, 0};
    }
    auto it = std::lower_bound(sl.begin(), sl.end(), t, [](const VarifoldSlice& s, double v) { return s.t < v; });
    if (it == sl.end()) return {&sl.back(), nullptr, 1, 0};
    if (std::abs(it->t - t) <= eps || it == sl.begin()) return {&*it, nullptr, 1, 0};
    auto prev = it - 1;
    if (std::abs(prev->t - t) <= eps) return {&*prev, nullptr, 1, 0};
    double w = (t - prev->t) / (it->t - prev->t);
    return {&*prev, &*it, 1 - w, w};
}

template <class F>
void visit_at_time(const FlowTrack& flow, double t, const Window& w, F&& f) {
    auto br = bracket(flow, t);
    if (br.a && br.wa > 0) visit_measure(*br.a, w, [&](const Vec& p, double m) { f(p, br.wa * m); });
    if (br.b && br.wb > 0) visit_measure(*br.b, w, [&](const Vec& p, double m) { f(p, br.wb * m); });
}

}  // namespace strataflow
