#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "varifold.hpp"

namespace strataflow {

struct StopRule {
    double t_end = kInf;
    double max_curvature = kInf;     // stop once max|A| exceeds this
    double min_area_fraction = 0.0;  // curves: stop once enclosed area < fraction * initial
};

struct EmitPolicy {
    double cadence = 0.01;           // time between slices
    double curvature_change = 0.05;  // also emit when max|A| changed by this fraction
};

struct CurveState {
    std::vector<Vec> vertices;  // closed polygon in R^2
    double t = 0;
};

struct ProfileState {
    std::vector<double> z, u;  // z strictly increasing, u = 0 at both ends
    double t = 0;
};

struct RotsymOptions {
    bool restart = true;              // continue past a neckpinch by splitting into caps
    double pinch_fraction = 1e-3;     // pinch when min u < pinch_fraction * initial neck radius
    double vanish_fraction = 1e-3;    // component removed once its axial extent < fraction * initial extent
    double cfl = 0.2;
};

namespace sim {

inline double polygon_area(const std::vector<Vec>& v) {
    double a = 0;
    for (std::size_t i = 0, m = v.size(); i < m; ++i) {
        const Vec& p = v[i];
        const Vec& q = v[(i + 1) % m];
        a += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * a;
}

inline bool segments_cross(const Vec& a, const Vec& b, const Vec& c, const Vec& d) {
    auto orient = [](const Vec& p, const Vec& q, const Vec& r) {
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    };
    double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
    return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

inline bool self_intersects(const std::vector<Vec>& v) {
    const std::size_t m = v.size();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 2; j < m; ++j) {
            if (i == 0 && j == m - 1) continue;
            if (segments_cross(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m])) return true;
        }
    return false;
}

struct CurveGeometry {
    std::vector<double> len;    // edge i: v[i] -> v[i+1]
    std::vector<Vec> kvec;      // curvature vector per vertex
    std::vector<double> kappa;  // signed curvature, positive for convex (ccw)
    std::vector<Vec> normal;    // outward unit normal
    double max_k = 0, min_len = kInf;
};

inline CurveGeometry curve_geometry(const std::vector<Vec>& v, double orientation) {
    const std::size_t m = v.size();
    CurveGeometry g;
    g.len.resize(m);
    g.kvec.resize(m);
    g.kappa.resize(m);
    g.normal.resize(m);
    std::vector<Vec> T(m);
    for (std::size_t i = 0; i < m; ++i) {
        Vec e = v[(i + 1) % m] - v[i];
        g.len[i] = norm(e);
        T[i] = (1.0 / g.len[i]) * e;
        g.min_len = std::min(g.min_len, g.len[i]);
    }
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t ip = (i + m - 1) % m;
        g.kvec[i] = (2.0 / (g.len[ip] + g.len[i])) * (T[i] - T[ip]);
        Vec t = T[ip] + T[i];
        double tl = norm(t);
        t = tl > 0 ? (1.0 / tl) * t : T[i];
        Vec nrm{};
        nrm[0] = orientation * t[1];
        nrm[1] = -orientation * t[0];
        g.normal[i] = nrm;
        g.kappa[i] = -dot(g.kvec[i], nrm);
        g.max_k = std::max(g.max_k, std::abs(g.kappa[i]));
    }
    return g;
}

inline VarifoldSlice curve_slice(const std::vector<Vec>& v, double t, const CurveGeometry& g) {
    VarifoldSlice s;
    s.t = t;
    const std::size_t m = v.size();
    for (std::size_t i = 0; i < m; ++i) {
        Sample p;
        p.position = v[i];
        p.weight = 0.5 * (g.len[(i + m - 1) % m] + g.len[i]);
        p.has_normal = true;
        p.normal = g.normal[i];
        p.set_curvatures({g.kappa[i]});
        s.samples.push_back(p);
    }
    s.curves.push_back({0, m, true});
    return s;
}

// Centripetal Catmull-Rom point between p1 and p2.
inline std::array<double, 2> catmull_rom(std::array<double, 2> p0, std::array<double, 2> p1, std::array<double, 2> p2,
                                         std::array<double, 2> p3, double s) {
    auto knot = [](double ti, const std::array<double, 2>& a, const std::array<double, 2>& b) {
        return ti + std::pow(std::hypot(b[0] - a[0], b[1] - a[1]) + 1e-300, 0.5);
    };
    double t0 = 0, t1 = knot(t0, p0, p1), t2 = knot(t1, p1, p2), t3 = knot(t2, p2, p3);
    double t = t1 + s * (t2 - t1);
    auto lerp = [](const std::array<double, 2>& a, const std::array<double, 2>& b, double ta, double tb, double tt) {
        double w = (tt - ta) / (tb - ta);
        return std::array<double, 2>{a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])};
    };
    auto a1 = lerp(p0, p1, t0, t1, t), a2 = lerp(p1, p2, t1, t2, t), a3 = lerp(p2, p3, t2, t3, t);
    auto b1 = lerp(a1, a2, t0, t2, t), b2 = lerp(a2, a3, t1, t3, t);
    return lerp(b1, b2, t1, t2, t);
}

// Closed polygon resampled to equal arclength through the periodic Catmull-Rom curve.
inline std::vector<Vec> resample_closed(const std::vector<Vec>& v, const CurveGeometry& g) {
    const std::size_t m = v.size();
    std::vector<double> cum(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) cum[i + 1] = cum[i] + g.len[i];
    auto pt = [&](long i) {
        const Vec& p = v[static_cast<std::size_t>((i % long(m) + long(m)) % long(m))];
        return std::array<double, 2>{p[0], p[1]};
    };
    std::vector<Vec> out(m);
    std::size_t seg = 0;
    for (std::size_t j = 0; j < m; ++j) {
        double target = cum[m] * j / m;
        while (seg + 1 < m && cum[seg + 1] < target) ++seg;
        double s = std::clamp((target - cum[seg]) / g.len[seg], 0.0, 1.0);
        auto p = catmull_rom(pt(long(seg) - 1), pt(long(seg)), pt(long(seg) + 1), pt(long(seg) + 2), s);
        out[j] = make_vec({p[0], p[1]});
    }
    return out;
}

}  // namespace sim

inline CurveState circle_curve(double R, int vertices, Vec center = {}) {
    CurveState c;
    for (int i = 0; i < vertices; ++i) {
        double a = 2 * std::numbers::pi * i / vertices;
        Vec p = center;
        p[0] += R * std::cos(a);
        p[1] += R * std::sin(a);
        c.vertices.push_back(p);
    }
    return c;
}

inline CurveState ellipse_curve(double a, double b, int vertices) {
    CurveState c;
    for (int i = 0; i < vertices; ++i) {
        double s = 2 * std::numbers::pi * i / vertices;
        c.vertices.push_back(make_vec({a * std::cos(s), b * std::sin(s)}));
    }
    return c;
}

// Curve shortening flow by explicit stepping of the discrete curvature vector.
inline FlowTrack evolve_curve(const CurveState& initial, double dt_max, const StopRule& stop, const EmitPolicy& emit = {},
                              double cfl = 0.2) {
    auto v = initial.vertices;
    const std::size_t m = v.size();
    require(m >= 16, ErrorKind::InvalidInput, "evolve_curve: need at least 16 vertices");
    require(!sim::self_intersects(v), ErrorKind::InvalidInput, "evolve_curve: initial curve not simple");
    const double area0 = sim::polygon_area(v);
    const double orient = area0 > 0 ? 1.0 : -1.0;
    auto g = sim::curve_geometry(v, orient);
    require(dt_max <= 0.25 * g.min_len * g.min_len * (1 + 1e-12), ErrorKind::StepSize,
            "evolve_curve: dt_max exceeds (min edge)^2 / 4");

    FlowTrack f;
    f.n = 1;
    f.N = 2;
    double t = initial.t;
    f.slices.push_back(sim::curve_slice(v, t, g));
    f.mass_bound = f.slices.back().mass();
    double last_emit_t = t, last_emit_k = g.max_k;
    bool vanished = false;
    std::size_t steps = 0;
    auto emit_now = [&] {
        if (t > f.slices.back().t) f.slices.push_back(sim::curve_slice(v, t, g));
        last_emit_t = t;
        last_emit_k = g.max_k;
    };
    while (true) {
        if (t >= stop.t_end) break;
        if (g.max_k > stop.max_curvature) {
            vanished = true;
            break;
        }
        if (std::abs(sim::polygon_area(v)) < stop.min_area_fraction * std::abs(area0)) {
            vanished = true;
            break;
        }
        double dt = std::min({dt_max, cfl * g.min_len * g.min_len, 0.05 / (g.max_k * g.max_k + 1e-300)});
        dt = std::min(dt, stop.t_end - t);
        std::vector<Vec> prev = v;
        for (std::size_t i = 0; i < m; ++i) v[i] = v[i] + dt * g.kvec[i];
        t += dt;
        ++steps;
        g = sim::curve_geometry(v, orient);
        // vertices drift along the curve; keep the spacing near uniform
        if (*std::max_element(g.len.begin(), g.len.end()) > 1.5 * g.min_len) {
            v = sim::resample_closed(v, g);
            g = sim::curve_geometry(v, orient);
        }
        if (steps % 64 == 0 && sim::self_intersects(v))
            throw Error(ErrorKind::SimulationDegenerate,
                        "curve self-intersection; last valid time " + std::to_string(t - dt));
        bool kchange = std::abs(g.max_k - last_emit_k) > emit.curvature_change * last_emit_k;
        if (t - last_emit_t >= emit.cadence || kchange) emit_now();
    }
    emit_now();
    if (vanished) {
        double te = t + std::abs(sim::polygon_area(v)) / (2 * std::numbers::pi);
        Vec c{};
        for (const auto& p : v) c = c + (1.0 / m) * p;
        f.extinction_time = te;
        f.singular_times.push_back(te);
        f.singular_points.push_back(SpacetimePoint{2, c, te});
    }
    return f;
}

// ---------------------------------------------------------------------------------------
// Rotationally symmetric surfaces in R^3 about the x axis, as parametric meridian profiles
// (z_i, u_i) with both ends on the axis.

namespace sim {

struct Component {
    std::vector<double> z, u;
};

struct ProfileGeometry {
    std::vector<double> len;
    std::vector<double> nz, nu, kmer, kpar;
    double max_a = 0, min_len = kInf;
};

inline ProfileGeometry profile_geometry(const Component& c) {
    const std::size_t m = c.z.size();
    ProfileGeometry g;
    g.len.resize(m - 1);
    g.nz.assign(m, 0);
    g.nu.assign(m, 0);
    g.kmer.assign(m, 0);
    g.kpar.assign(m, 0);
    std::vector<double> tz(m - 1), tu(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        double dz = c.z[i + 1] - c.z[i], du = c.u[i + 1] - c.u[i];
        g.len[i] = std::hypot(dz, du);
        tz[i] = dz / g.len[i];
        tu[i] = du / g.len[i];
        g.min_len = std::min(g.min_len, g.len[i]);
    }
    for (std::size_t i = 1; i + 1 < m; ++i) {
        double az = tz[i - 1] + tz[i], au = tu[i - 1] + tu[i];
        double al = std::hypot(az, au);
        az /= al, au /= al;
        g.nz[i] = -au;
        g.nu[i] = az;
        double kz = 2 * (tz[i] - tz[i - 1]) / (g.len[i - 1] + g.len[i]);
        double ku = 2 * (tu[i] - tu[i - 1]) / (g.len[i - 1] + g.len[i]);
        g.kmer[i] = -(kz * g.nz[i] + ku * g.nu[i]);
        g.kpar[i] = g.nu[i] / c.u[i];
    }
    // tips: osculating sphere through the neighbouring vertex, centred on the axis
    auto tip = [&](std::size_t i, std::size_t j, double sign) {
        double dz = c.z[j] - c.z[i], uj = c.u[j];
        double k = 2 * std::abs(dz) / (dz * dz + uj * uj);
        g.kmer[i] = g.kpar[i] = k;
        g.nz[i] = sign;
        g.nu[i] = 0;
    };
    tip(0, 1, -1.0);
    tip(m - 1, m - 2, 1.0);
    for (std::size_t i = 0; i < m; ++i)
        g.max_a = std::max(g.max_a, std::sqrt(g.kmer[i] * g.kmer[i] + g.kpar[i] * g.kpar[i]));
    return g;
}

// Redistribute m points so that each interval carries equal monitor mass, where the
// monitor is half arclength and half |A| arclength.
inline Component remesh(const Component& c, const ProfileGeometry& g, std::size_t m) {
    const std::size_t k = c.z.size();
    std::vector<double> cum(k, 0.0);
    double L = 0, Ia = 0;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        L += g.len[i];
        double ai = std::hypot(g.kmer[i], g.kpar[i]), aj = std::hypot(g.kmer[i + 1], g.kpar[i + 1]);
        Ia += 0.5 * (ai + aj) * g.len[i];
    }
    for (std::size_t i = 0; i + 1 < k; ++i) {
        double ai = std::hypot(g.kmer[i], g.kpar[i]), aj = std::hypot(g.kmer[i + 1], g.kpar[i + 1]);
        cum[i + 1] = cum[i] + g.len[i] * (0.5 / L + 0.5 * 0.5 * (ai + aj) / Ia);
    }
    auto pt = [&](long i) -> std::array<double, 2> {
        if (i < 0) return {c.z[-i], -c.u[-i]};
        if (i >= static_cast<long>(k)) {
            long j = 2 * static_cast<long>(k) - 2 - i;
            return {c.z[j], -c.u[j]};
        }
        return {c.z[i], c.u[i]};
    };
    Component o;
    o.z.resize(m);
    o.u.resize(m);
    std::size_t seg = 0;
    for (std::size_t j = 0; j < m; ++j) {
        double target = cum.back() * j / (m - 1);
        while (seg + 2 < k && cum[seg + 1] < target) ++seg;
        double s = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
        s = std::clamp(s, 0.0, 1.0);
        auto p = catmull_rom(pt(long(seg) - 1), pt(long(seg)), pt(long(seg) + 1), pt(long(seg) + 2), s);
        o.z[j] = p[0];
        o.u[j] = std::max(0.0, p[1]);
    }
    o.u.front() = o.u.back() = 0;
    o.z.front() = c.z.front();
    o.z.back() = c.z.back();
    return o;
}

// Ratio of actual to equidistributed spacing, worst case over intervals.
inline double mesh_distortion(const Component& c, const ProfileGeometry& g) {
    const std::size_t k = c.z.size();
    double L = 0, Ia = 0;
    std::vector<double> w(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) {
        L += g.len[i];
        Ia += 0.5 * (std::hypot(g.kmer[i], g.kpar[i]) + std::hypot(g.kmer[i + 1], g.kpar[i + 1])) * g.len[i];
    }
    double worst = 1;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        double a = 0.5 * (std::hypot(g.kmer[i], g.kpar[i]) + std::hypot(g.kmer[i + 1], g.kpar[i + 1]));
        double share = g.len[i] * (0.5 / L + 0.5 * a / Ia);
        double r = share * (k - 1);
        worst = std::max({worst, r, 1 / r});
    }
    return worst;
}

inline void append_component(VarifoldSlice& s, const Component& c, const ProfileGeometry& g) {
    std::size_t begin = s.rings.size();
    const std::size_t m = c.z.size();
    for (std::size_t i = 0; i < m; ++i) {
        Ring r;
        r.z = c.z[i];
        r.u = c.u[i];
        double lp = i > 0 ? g.len[i - 1] : 0, ln = i + 1 < m ? g.len[i] : 0;
        r.weight = std::numbers::pi * c.u[i] * (lp + ln);
        r.nz = g.nz[i];
        r.nu = g.nu[i];
        r.k_mer = g.kmer[i];
        r.k_par = g.kpar[i];
        s.rings.push_back(r);
    }
    s.profiles.push_back({begin, s.rings.size(), false});
}

inline double component_area(const Component& c) {
    double a = 0;
    for (std::size_t i = 0; i + 1 < c.z.size(); ++i)
        a += std::numbers::pi * (c.u[i] + c.u[i + 1]) * std::hypot(c.z[i + 1] - c.z[i], c.u[i + 1] - c.u[i]);
    return a;
}

}  // namespace sim

inline ProfileState sphere_profile(double R, int samples, double z0 = 0) {
    ProfileState p;
    for (int i = 0; i <= samples; ++i) {
        double th = std::numbers::pi * (1.0 - double(i) / samples);
        p.z.push_back(z0 + R * std::cos(th));
        p.u.push_back(i == 0 || i == samples ? 0.0 : R * std::sin(th));
    }
    return p;
}

// Symmetric dumbbell: two spherical bells of radius Rb joined by a quartic neck
// u = a + b z^2 + e z^4 that meets each bell with C^2 contact at polar angle theta.
struct DumbbellShape {
    double neck = 0.5, bell = 2.0, theta = std::numbers::pi / 3;
    double b = 0, e = 0, z1 = 0, center = 0;

    static DumbbellShape make(double bell, double neck, double theta = std::numbers::pi / 3) {
        DumbbellShape d;
        d.bell = bell, d.neck = neck, d.theta = theta;
        double p = std::cos(theta) / std::sin(theta);
        double q = -1.0 / (bell * std::pow(std::sin(theta), 3));
        double u1 = bell * std::sin(theta);
        // value matching reduces to (-q/8) s^2 + (5p/8) s + (neck - u1) = 0
        double A = -q / 8, B = 5 * p / 8, C = neck - u1;
        require(C < 0, ErrorKind::InvalidInput, "dumbbell: neck must be thinner than the bell junction");
        double s = (-B + std::sqrt(B * B - 4 * A * C)) / (2 * A);
        d.z1 = s;
        d.e = (q * s - p) / (8 * s * s * s);
        d.b = (q - 12 * d.e * s * s) / 2;
        d.center = s + bell * std::cos(theta);
        require(d.b > 0, ErrorKind::InvalidInput, "dumbbell: neck is not a local minimum");
        return d;
    }
    double half_length() const { return center + bell; }
    double radius(double z) const {
        double a = std::abs(z);
        if (a <= z1) return neck + b * a * a + e * a * a * a * a;
        double d = a - center;
        return std::sqrt(std::max(0.0, bell * bell - d * d));
    }
};

inline ProfileState dumbbell_profile(const DumbbellShape& d, int samples, double scale = 1.0) {
    // sample by arclength on a fine auxiliary grid
    const int fine = 20000;
    std::vector<double> zs(fine + 1), us(fine + 1), cum(fine + 1, 0.0);
    double H = d.half_length();
    for (int i = 0; i <= fine; ++i) {
        // cosine spacing concentrates points at the tips where u' blows up
        double s = -std::cos(std::numbers::pi * i / fine);
        zs[i] = H * s;
        us[i] = (i == 0 || i == fine) ? 0.0 : d.radius(zs[i]);
        if (i > 0) cum[i] = cum[i - 1] + std::hypot(zs[i] - zs[i - 1], us[i] - us[i - 1]);
    }
    ProfileState p;
    int seg = 0;
    for (int j = 0; j <= samples; ++j) {
        double target = cum[fine] * j / samples;
        while (seg + 1 < fine && cum[seg + 1] < target) ++seg;
        double w = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
        double z = zs[seg] + w * (zs[seg + 1] - zs[seg]);
        double u = (j == 0 || j == samples) ? 0.0 : d.radius(z);
        p.z.push_back(scale * z);
        p.u.push_back(scale * u);
    }
    return p;
}

// Mean curvature flow of a closed surface of revolution. Normal velocity -H with
// H = k_mer + k_par; tips move along the axis. Optionally restarts after a neckpinch.
inline FlowTrack evolve_rotsym(const ProfileState& initial, double dt_max, const StopRule& stop,
                               const EmitPolicy& emit = {}, const RotsymOptions& opt = {}) {
    require(initial.z.size() == initial.u.size() && initial.z.size() >= 9, ErrorKind::InvalidInput,
            "evolve_rotsym: need at least 9 profile samples");
    for (std::size_t i = 1; i < initial.z.size(); ++i)
        require(initial.z[i] > initial.z[i - 1], ErrorKind::InvalidInput, "evolve_rotsym: z must be strictly increasing");
    for (std::size_t i = 1; i + 1 < initial.u.size(); ++i)
        require(initial.u[i] > 0, ErrorKind::InvalidInput, "evolve_rotsym: interior radii must be positive");
    const std::size_t M = initial.z.size();

    std::vector<sim::Component> comps{{initial.z, initial.u}};
    comps[0].u.front() = comps[0].u.back() = 0;

    // initial neck radius: smallest interior local minimum of u
    double neck0 = kInf;
    for (std::size_t i = 1; i + 1 < M; ++i)
        if (initial.u[i] <= initial.u[i - 1] && initial.u[i] <= initial.u[i + 1]) neck0 = std::min(neck0, initial.u[i]);
    const double pinch_u = std::isfinite(neck0) ? opt.pinch_fraction * neck0 : 0.0;
    const double extent0 = initial.z.back() - initial.z.front();

    FlowTrack f;
    f.n = 2;
    f.N = 3;
    double t = initial.t;
    std::vector<sim::ProfileGeometry> geo;
    auto refresh = [&] {
        geo.clear();
        for (const auto& c : comps) geo.push_back(sim::profile_geometry(c));
    };
    auto max_a = [&] {
        double a = 0;
        for (const auto& g : geo) a = std::max(a, g.max_a);
        return a;
    };
    auto make_slice = [&] {
        VarifoldSlice s;
        s.t = t;
        for (std::size_t k = 0; k < comps.size(); ++k) sim::append_component(s, comps[k], geo[k]);
        return s;
    };
    refresh();
    const double a0 = max_a();
    f.slices.push_back(make_slice());
    f.mass_bound = f.slices.back().mass();
    double last_emit_t = t, last_emit_a = a0;
    auto emit_now = [&] {
        if (comps.empty()) return;
        if (t > f.slices.back().t) f.slices.push_back(make_slice());
        last_emit_t = t;
        last_emit_a = max_a();
    };
    double last_vanish = -kInf;

    while (!comps.empty()) {
        if (t >= stop.t_end) break;
        double amax = max_a();
        if (amax > stop.max_curvature) break;

        // pinch detection and restart
        if (pinch_u > 0) {
            for (std::size_t k = 0; k < comps.size(); ++k) {
                auto& c = comps[k];
                std::size_t im = 0;
                double umin = kInf;
                for (std::size_t i = 1; i + 1 < c.z.size(); ++i)
                    if (c.u[i] < umin) umin = c.u[i], im = i;
                if (umin >= pinch_u) continue;
                if (im < 2 || im + 3 > c.z.size()) continue;  // at a tip: handled by vanishing
                double tstar = t + 0.5 * umin * umin;
                f.singular_times.push_back(tstar);
                f.singular_points.push_back(SpacetimePoint{3, make_vec({c.z[im], 0, 0}), tstar});
                emit_now();
                if (!opt.restart) {
                    comps.clear();
                    break;
                }
                // clip the pinched region (u < 2 umin) and close each side with a tip on the axis
                std::size_t jl = im - 1, jr = im + 1;
                while (jl > 1 && c.u[jl] < 2 * umin) --jl;
                while (jr + 2 < c.z.size() && c.u[jr] < 2 * umin) ++jr;
                sim::Component left, right;
                left.z.assign(c.z.begin(), c.z.begin() + jl + 1);
                left.u.assign(c.u.begin(), c.u.begin() + jl + 1);
                left.z.push_back(0.5 * (c.z[jl] + c.z[im]));
                left.u.push_back(0);
                right.z.push_back(0.5 * (c.z[im] + c.z[jr]));
                right.u.push_back(0);
                right.z.insert(right.z.end(), c.z.begin() + jr, c.z.end());
                right.u.insert(right.u.end(), c.u.begin() + jr, c.u.end());
                comps.erase(comps.begin() + k);
                for (auto* part : {&left, &right}) {
                    if (part->z.size() < 5) continue;
                    comps.push_back(*part);
                }
                break;
            }
            if (!opt.restart && comps.empty()) break;
            refresh();
        }

        // component vanishing
        for (std::size_t k = 0; k < comps.size();) {
            if (comps[k].z.back() - comps[k].z.front() < opt.vanish_fraction * extent0) {
                double area = sim::component_area(comps[k]);
                double tv = t + area / (16 * std::numbers::pi);  // sphere law: area = 4 pi R^2, R^2 = 4 (T - t)
                double zc = 0.5 * (comps[k].z.front() + comps[k].z.back());
                f.singular_times.push_back(tv);
                f.singular_points.push_back(SpacetimePoint{3, make_vec({zc, 0, 0}), tv});
                last_vanish = std::max(last_vanish, tv);
                emit_now();
                comps.erase(comps.begin() + k);
                geo.erase(geo.begin() + k);
            } else {
                ++k;
            }
        }
        if (comps.empty()) break;

        double minl = kInf;
        for (const auto& g : geo) minl = std::min(minl, g.min_len);
        amax = max_a();
        double dt = std::min({dt_max, opt.cfl * minl * minl, 0.05 / (amax * amax)});
        dt = std::min(dt, stop.t_end - t);
        for (std::size_t k = 0; k < comps.size(); ++k) {
            auto& c = comps[k];
            const auto& g = geo[k];
            const std::size_t m = c.z.size();
            for (std::size_t i = 1; i + 1 < m; ++i) {
                double H = g.kmer[i] + g.kpar[i];
                c.z[i] -= dt * H * g.nz[i];
                c.u[i] -= dt * H * g.nu[i];
            }
            c.z[0] += dt * 2 * g.kmer[0];
            c.z[m - 1] -= dt * 2 * g.kmer[m - 1];
            for (std::size_t i = 1; i < m; ++i)
                if (!(c.z[i] > c.z[i - 1]))
                    throw Error(ErrorKind::SimulationDegenerate,
                                "non-graphical profile at t=" + std::to_string(t + dt));
            for (std::size_t i = 1; i + 1 < m; ++i)
                if (!(c.u[i] > 0))
                    throw Error(ErrorKind::StepSize, "profile crossed the axis at t=" + std::to_string(t + dt));
        }
        t += dt;
        refresh();
        for (std::size_t k = 0; k < comps.size(); ++k) {
            if (sim::mesh_distortion(comps[k], geo[k]) > 1.6) {
                comps[k] = sim::remesh(comps[k], geo[k], comps[k].z.size());
                geo[k] = sim::profile_geometry(comps[k]);
            }
        }
        double a = max_a();
        if (t - last_emit_t >= emit.cadence || std::abs(a - last_emit_a) > emit.curvature_change * last_emit_a)
            emit_now();
    }
    if (!comps.empty()) {
        emit_now();
    } else if (std::isfinite(last_vanish)) {
        f.extinction_time = std::max(last_vanish, f.slices.back().t);
    }
    return f;
}

// min over samples of (lambda_1 + ... + lambda_k) / h.
inline double k_convexity_margin(const VarifoldSlice& s, int k, int n) {
    require(k >= 1 && k <= n, ErrorKind::InvalidInput, "k_convexity_margin: need 1 <= k <= n");
    double margin = kInf;
    bool any = false;
    for_each_point(s, n, [&](const Sample& p) {
        if (!p.has_curvature()) throw Error(ErrorKind::DataMissing, "k_convexity_margin: sample without curvatures");
        any = true;
        double h = p.mean_curvature();
        if (h <= 0) {
            margin = -kInf;
            return;
        }
        double sk = 0;
        for (int i = 0; i < k; ++i) sk += p.lambda[i];
        margin = std::min(margin, sk / h);
    });
    require(any, ErrorKind::DataMissing, "k_convexity_margin: empty slice");
    return margin;
}

inline double slice_max_curvature(const VarifoldSlice& s, int n) {
    double a = 0;
    for (const auto& p : s.samples) a = std::max(a, p.second_ff_norm());
    for (const auto& r : s.rings) a = std::max(a, r.second_ff_norm(n));
    return a;
}

// First blowup time: the earliest slice where max|A| exceeds factor * initial max|A|,
// refined by extrapolating 1/max|A|^2 linearly in t to zero.
inline std::optional<double> detect_first_singular_time(const FlowTrack& f, double factor = 100.0) {
    if (f.slices.size() < 3) return std::nullopt;
    double a0 = slice_max_curvature(f.slices.front(), f.n);
    if (!(a0 > 0)) return std::nullopt;
    for (std::size_t k = 0; k < f.slices.size(); ++k) {
        double a = slice_max_curvature(f.slices[k], f.n);
        if (a > factor * a0) {
            if (k < 2) return f.slices[k].t;
            double t1 = f.slices[k - 1].t, t2 = f.slices[k].t;
            double y1 = 1 / std::pow(slice_max_curvature(f.slices[k - 1], f.n), 2), y2 = 1 / (a * a);
            if (!(y1 > y2)) return t2;
            return t2 + y2 * (t2 - t1) / (y1 - y2);
        }
    }
    return std::nullopt;
}

}  // namespace strataflow
