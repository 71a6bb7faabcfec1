#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fit.hpp"
#include "numeric.hpp"
#include "parallel.hpp"
#include "varifold.hpp"

namespace strataflow {

inline constexpr int kRegularityGrid = 4096;  // r_M resolution 2^-12

namespace detail {

inline bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

// Where X sits on the track: slice, and the sample (curves, loose samples) or ring index.
struct Anchor {
    std::size_t slice = 0;
    std::size_t index = 0;
    bool ring = false;
    double z = 0, u = 0;  // axis coordinates for ring anchors
};

inline Anchor locate(const FlowTrack& flow, const SpacetimePoint& X, double tol = 1e-6) {
    require(X.dim == flow.N, ErrorKind::InvalidInput, "regularity: dimension mismatch");
    auto it = std::lower_bound(flow.slices.begin(), flow.slices.end(), X.t,
                               [](const VarifoldSlice& s, double t) { return s.t < t && !same_time(s.t, t); });
    require(it != flow.slices.end() && same_time(it->t, X.t), ErrorKind::InvalidInput,
            "regularity: X is not on a stored time slice");
    Anchor a;
    a.slice = static_cast<std::size_t>(it - flow.slices.begin());
    double best = kInf;
    for (std::size_t i = 0; i < it->samples.size(); ++i) {
        double d = norm(it->samples[i].position - X.x);
        if (d < best) best = d, a.index = i;
    }
    if (!it->rings.empty()) {
        auto c = it->axis.coords(X.x);
        for (std::size_t i = 0; i < it->rings.size(); ++i) {
            double d = std::hypot(it->rings[i].z - c[0], it->rings[i].u - c[1]);
            if (d < best) best = d, a.index = i, a.ring = true, a.z = c[0], a.u = c[1];
        }
    }
    require(best <= tol, ErrorKind::InvalidInput, "regularity: X is off the support of the flow");
    return a;
}

inline double sample_A(const Sample& s) {
    require(s.has_curvature(), ErrorKind::DataMissing, "regularity: sample has no curvature data");
    return s.second_ff_norm();
}

inline double ring_A(const Ring& r, int n) {
    require(r.has_curvature, ErrorKind::DataMissing, "regularity: ring has no curvature data");
    return r.second_ff_norm(n);
}

// Sample-based slices: every sample in B_r(x) has r|A| <= 1 and a normal on X's side,
// and on polylines the samples inside the ball form one run.
inline bool certify_samples(const VarifoldSlice& s, const Vec& x, const Vec& nx, double r) {
    for (const auto& p : s.samples) {
        if (norm(p.position - x) >= r) continue;
        if (r * sample_A(p) > 1) return false;
        if (p.has_normal && dot(p.normal, nx) <= 0) return false;
    }
    for (const auto& c : s.curves) {
        int runs = 0;
        bool prev = c.closed ? norm(s.samples[c.end - 1].position - x) < r : false;
        bool first = false;
        for (std::size_t i = c.begin; i < c.end; ++i) {
            bool in = norm(s.samples[i].position - x) < r;
            if (i == c.begin) first = in;
            if (in && !prev) ++runs;
            prev = in;
        }
        if (c.closed && runs == 0 && first) runs = 1;  // whole curve inside
        if (runs > 1) return false;
    }
    return true;
}

inline bool certify_rings(const VarifoldSlice& s, double zx, double ux, double nzx, double nux, double r, int n) {
    for (const auto& g : s.rings) {
        double base = (g.z - zx) * (g.z - zx) + g.u * g.u + ux * ux;
        double lo;  // smallest cos(phi) of the ring inside the ball
        if (g.u * ux > 0) {
            double c0 = (base - r * r) / (2 * g.u * ux);
            if (c0 >= 1) continue;
            lo = std::max(c0, -1.0);
        } else {
            if (base >= r * r) continue;
            lo = -1;
        }
        if (r * ring_A(g, n) > 1) return false;
        double f1 = g.nz * nzx + g.nu * nux, f0 = g.nz * nzx + g.nu * nux * lo;
        if (std::min(f0, f1) <= 0) return false;
    }
    return true;
}

// Largest grid radius with the r|A| <= 1 constraint on the shrinker model (graphicality is
// implied by it for round spheres and cylinders).
inline double model_regularity_scale(const SelfSimilarModel& m, const SpacetimePoint& X) {
    if (m.is_plane()) {
        require(m.exists_at(X.t), ErrorKind::InvalidInput, "regularity: X is off the support of the flow");
        return 1.0;
    }
    require(m.exists_at(X.t), ErrorKind::InvalidInput, "regularity: X is off the support of the flow");
    const double ratio = std::sqrt(static_cast<double>(m.n - m.flat_dim));
    auto ok = [&](double r) {
        double t = X.t + r * r;
        if (!m.exists_at(t)) return false;
        return r * ratio / *m.radius_at(t) <= 1;
    };
    int lo = 0, hi = kRegularityGrid;
    while (lo < hi) {
        int mid = (lo + hi + 1) / 2;
        if (ok(static_cast<double>(mid) / kRegularityGrid)) lo = mid;
        else hi = mid - 1;
    }
    return static_cast<double>(lo) / kRegularityGrid;
}

}  // namespace detail

struct RegularityPoint {
    SpacetimePoint X;
    double r_M = 0;
    double A = 0;  // |A| at X
};

inline double curvature_at(const FlowTrack& flow, const SpacetimePoint& X) {
    if (flow.model) {
        const auto& m = *flow.model;
        if (m.is_plane()) return 0;
        auto R = m.radius_at(X.t);
        require(R.has_value(), ErrorKind::InvalidInput, "regularity: X is off the support of the flow");
        return std::sqrt(static_cast<double>(m.n - m.flat_dim)) / *R;
    }
    auto a = detail::locate(flow, X);
    const auto& s = flow.slices[a.slice];
    return a.ring ? detail::ring_A(s.rings[a.index], flow.n) : detail::sample_A(s.samples[a.index]);
}

// r_M(X): binary search on the 2^-12 grid, capped at 1. A smaller cap r_max returns
// min(r_M, r_max) at lower cost, which is all a bad-set test at radius < r_max needs.
inline double regularity_scale(const FlowTrack& flow, const SpacetimePoint& X, double r_max = 1.0) {
    require(r_max > 0 && r_max <= 1, ErrorKind::InvalidInput, "regularity_scale: cap must lie in (0, 1]");
    if (flow.model) return std::min(r_max, detail::model_regularity_scale(*flow.model, X));
    auto a = detail::locate(flow, X);
    const auto& home = flow.slices[a.slice];
    Vec nx{};
    double nzx = 0, nux = 0;
    if (a.ring) {
        nzx = home.rings[a.index].nz, nux = home.rings[a.index].nu;
        detail::ring_A(home.rings[a.index], flow.n);
    } else {
        const auto& p = home.samples[a.index];
        detail::sample_A(p);
        nx = p.normal;
    }
    auto certify = [&](double r) {
        double r2 = r * r;
        auto lo = std::upper_bound(flow.slices.begin(), flow.slices.end(), X.t - r2,
                                   [](double t, const VarifoldSlice& s) { return t < s.t; });
        for (auto it = lo; it != flow.slices.end() && it->t < X.t + r2; ++it) {
            bool ok = a.ring ? detail::certify_rings(*it, a.z, a.u, nzx, nux, r, flow.n)
                             : detail::certify_samples(*it, X.x, nx, r);
            if (!ok) return false;
        }
        return true;
    };
    int lo = 0, hi = static_cast<int>(std::floor(r_max * kRegularityGrid));
    while (lo < hi) {
        int mid = (lo + hi + 1) / 2;
        if (certify(static_cast<double>(mid) / kRegularityGrid)) lo = mid;
        else hi = mid - 1;
    }
    return static_cast<double>(lo) / kRegularityGrid;
}

using RegularityField = std::vector<RegularityPoint>;

inline RegularityField regularity_field(const FlowTrack& flow, const std::vector<SpacetimePoint>& pts,
                                        double r_max = 1.0) {
    RegularityField f(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) { f[i] = {pts[i], regularity_scale(flow, pts[i], r_max), curvature_at(flow, pts[i])}; });
    return f;
}

// {X : r_M(X) <= r}
inline std::vector<SpacetimePoint> bad_set(const RegularityField& field, double r) {
    std::vector<SpacetimePoint> out;
    for (const auto& p : field)
        if (p.r_M <= r) out.push_back(p.X);
    return out;
}

inline std::vector<SpacetimePoint> bad_set(const FlowTrack& flow, double r, const std::vector<SpacetimePoint>& samples) {
    return bad_set(regularity_field(flow, samples), r);
}

struct EpsRegularity {
    bool premise = false;  // fit distance < eps at scale r / eps
    bool holds = true;     // premise implies r_M >= r
    double dist = kInf;
    double r_M = 0;
};

inline EpsRegularity epsilon_regularity_check(const FlowTrack& flow, const SpacetimePoint& X, double r, int k,
                                              double eps) {
    require(r > 0 && eps > 0, ErrorKind::InvalidInput, "epsilon_regularity_check: r and eps must be positive");
    double s = r / eps;
    require(s <= 1, ErrorKind::OutOfRange, "epsilon_regularity_check: r / eps exceeds the unit window");
    EpsRegularity e;
    auto fit = fit_selfsimilar(flow, X, s, k);
    if (!fit) return e;
    e.dist = fit->dist;
    e.premise = fit->dist < eps;
    if (e.premise) {
        e.r_M = regularity_scale(flow, X);
        e.holds = e.r_M >= r;
    }
    return e;
}

enum class LpMode { Slice, Spacetime };

struct LpOptions {
    LpMode mode = LpMode::Slice;
    double t = 0;                 // slice mode: evaluation time (measure interpolated)
    std::optional<double> t0, t1;  // spacetime mode: time range, default whole track
    std::size_t slice_stride = 1;  // spacetime mode: use every k-th slice
    std::size_t point_stride = 1;  // r_M integrands: evaluate every k-th sample
};

namespace detail {

// Sum of weight * g(X, |A|) over one slice.
template <class G>
double slice_integral(const FlowTrack& flow, const VarifoldSlice& s, G g, std::size_t stride) {
    double sum = 0;
    if (!s.rings.empty()) {
        for (std::size_t i = 0; i < s.rings.size(); i += stride) {
            const auto& r = s.rings[i];
            double A = ring_A(r, flow.n);
            sum += stride * r.weight * g(SpacetimePoint{flow.N, s.axis.point(r.z, r.u, 0), s.t}, A);
        }
    }
    for (std::size_t i = 0; i < s.samples.size(); i += stride) {
        const auto& p = s.samples[i];
        sum += stride * p.weight * g(SpacetimePoint{flow.N, p.position, s.t}, sample_A(p));
    }
    return sum;
}

// Closed form per slice for shrinker models, flat factor restricted to a unit box.
inline double model_slice_lp(const SelfSimilarModel& m, double t, double power) {
    if (m.is_plane() || !m.exists_at(t)) return 0;
    int mdim = m.n - m.flat_dim;
    double R = *m.radius_at(t);
    double A = std::sqrt(static_cast<double>(mdim)) / R;
    return unit_sphere_area(mdim) * std::pow(R, mdim) * std::pow(A, power);
}

template <class G>
double lp_generic(const FlowTrack& flow, double p, const LpOptions& o, G g, double extra_power) {
    require(p > 0, ErrorKind::InvalidInput, "lp: p must be positive");
    if (o.mode == LpMode::Slice) {
        auto br = bracket(flow, o.t);
        double v = 0;
        if (br.a && br.wa > 0) v += br.wa * slice_integral(flow, *br.a, [&](const SpacetimePoint& X, double A) { return g(X, A, p); }, o.point_stride);
        if (br.b && br.wb > 0) v += br.wb * slice_integral(flow, *br.b, [&](const SpacetimePoint& X, double A) { return g(X, A, p); }, o.point_stride);
        return v;
    }
    double t0 = o.t0.value_or(flow.t_first()), t1 = o.t1.value_or(flow.t_last());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < flow.slices.size(); ++i)
        if (flow.slices[i].t >= t0 && flow.slices[i].t <= t1) idx.push_back(i);
    std::vector<std::size_t> used;
    for (std::size_t k = 0; k < idx.size(); k += std::max<std::size_t>(1, o.slice_stride)) used.push_back(idx[k]);
    if (!idx.empty() && used.back() != idx.back()) used.push_back(idx.back());
    double total = 0, prev_t = 0, prev_v = 0;
    for (std::size_t k = 0; k < used.size(); ++k) {
        const auto& s = flow.slices[used[k]];
        double v = slice_integral(flow, s, [&](const SpacetimePoint& X, double A) { return g(X, A, p + extra_power); },
                                  o.point_stride);
        if (k > 0) total += 0.5 * (v + prev_v) * (s.t - prev_t);
        prev_t = s.t, prev_v = v;
    }
    return total;
}

}  // namespace detail

// Slice: integral of |A|^p dM_t. Spacetime: integral of |A|^{p+2} dM_t dt (trapezoid over slices).
// Shrinker models integrate in closed form per slice, with flat directions cut to a unit box.
inline double lp_curvature_norm(const FlowTrack& flow, double p, const LpOptions& o = {}) {
    require(p > 0, ErrorKind::InvalidInput, "lp: p must be positive");
    if (flow.model) {
        const auto& m = *flow.model;
        if (o.mode == LpMode::Slice) return detail::model_slice_lp(m, o.t, p);
        require(o.t0 && o.t1, ErrorKind::InvalidInput, "lp: analytic tracks need an explicit time range");
        double end = m.is_shrinker() ? std::min(*o.t1, m.center.t) : *o.t1;
        if (!(end > *o.t0)) return 0;
        return numeric::integrate([&](double t) { return detail::model_slice_lp(m, t, p + 2); }, *o.t0, end);
    }
    return detail::lp_generic(flow, p, o, [](const SpacetimePoint&, double A, double q) { return std::pow(A, q); }, 2);
}

// Same integrals with r_M^{-p} (slice) or r_M^{-(p+2)} (spacetime) as the integrand.
inline double lp_inverse_regscale(const FlowTrack& flow, double p, const LpOptions& o = {}) {
    require(p > 0, ErrorKind::InvalidInput, "lp: p must be positive");
    require(!flow.model || flow.model->is_plane(), ErrorKind::InvalidInput,
            "lp_inverse_regscale: analytic shrinker tracks are not supported; sample them first");
    if (flow.model) return 0;
    return detail::lp_generic(
        flow, p, o,
        [&](const SpacetimePoint& X, double, double q) {
            double r = regularity_scale(flow, X);
            return r > 0 ? std::pow(r, -q) : kInf;
        },
        2);
}

enum class Verdict { Converges, Diverges, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Converges: return "converges";
    case Verdict::Diverges: return "diverges";
    default: return "inconclusive";
    }
}

struct SharpnessStudy {
    Verdict verdict = Verdict::Inconclusive;
    double critical = 0;  // n + 1 - k
    std::vector<std::pair<double, double>> ladder;  // (tau_min, integral over (t_c - 1, t_c - tau_min))
};

// Spacetime integral of |A|^{p+2} for the shrinking cylinder R^{k-1} x S^{n+1-k} (flat factor
// cut to a unit box) as the cutoff tau_min approaches the singular time.
inline SharpnessStudy sharpness_study(int n, int k, double p, const std::vector<double>& taus = {}) {
    require(n >= 1 && k >= 1 && k <= n, ErrorKind::InvalidInput, "sharpness_study: need 1 <= k <= n");
    SharpnessStudy st;
    st.critical = n + 1 - k;
    require(std::abs(p - st.critical) > 1e-9, ErrorKind::InvalidInput, "sharpness_study: p is the critical exponent");
    require(p > 0, ErrorKind::InvalidInput, "sharpness_study: p must be positive");
    std::vector<double> ladder = taus;
    if (ladder.empty())
        for (int i = 1; i <= 4; ++i) ladder.push_back(std::pow(256.0, -i));
    auto m = k == 1 ? SelfSimilarModel::sphere(n, n + 1) : SelfSimilarModel::cylinder(n, n + 1, k - 1);
    // s = -t on log-spaced panels, exact enough for power laws
    auto panel = [&](double a, double b) {
        return numeric::integrate(
            [&](double sg) {
                double s = std::exp(sg);
                return s * detail::model_slice_lp(m, -s, p + 2);
            },
            std::log(a), std::log(b));
    };
    double acc = 0, hi = 1;
    for (double tau : ladder) {
        require(tau > 0 && tau < hi, ErrorKind::InvalidInput, "sharpness_study: ladder must decrease inside (0, 1)");
        for (double b = hi; b > tau * (1 + 1e-12);) {
            double a = std::max(tau, b / 4);
            acc += panel(a, b);
            b = a;
        }
        hi = tau;
        st.ladder.emplace_back(tau, acc);
    }
    bool grows = true, settles = true;
    for (std::size_t i = 1; i < st.ladder.size(); ++i) {
        double prev = st.ladder[i - 1].second, cur = st.ladder[i].second;
        grows = grows && cur >= 2 * prev;
        if (i >= 2) settles = settles && (cur - prev) < (prev - st.ladder[i - 2].second);
    }
    if (st.ladder.size() >= 2) {
        double last = st.ladder.back().second, prev = st.ladder[st.ladder.size() - 2].second;
        settles = settles && (last - prev) <= 0.05 * last;
    }
    if (grows) st.verdict = Verdict::Diverges;
    else if (settles) st.verdict = Verdict::Converges;
    return st;
}

// Frozen constants from the ellipse calibration (max observed ratio x 1.5).
inline constexpr double kDerivativeConstant[3] = {0, 0.97, 3.33};

struct DerivativeBound {
    double value = 0;  // r^{l+1} sup_{B_{r/2}(X)} |grad^l A|
    double ratio = 0;  // value / C_l
    double r = 0;
};

namespace detail {

// Nonuniform second-order differences of f along arclength s.
inline std::vector<double> differentiate(const std::vector<double>& s, const std::vector<double>& f) {
    std::vector<double> d(f.size(), 0.0);
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
        double h0 = s[i] - s[i - 1], h1 = s[i + 1] - s[i];
        d[i] = (-h1 / (h0 * (h0 + h1))) * f[i - 1] + ((h1 - h0) / (h0 * h1)) * f[i] + (h0 / (h1 * (h0 + h1))) * f[i + 1];
    }
    if (f.size() >= 2) {
        d.front() = d.size() > 2 ? d[1] : (f[1] - f[0]) / (s[1] - s[0]);
        d.back() = d.size() > 2 ? d[d.size() - 2] : d.front();
    }
    return d;
}

}  // namespace detail

// |grad A| via curvature differences along the curve (n = 1) or the profile of a surface of
// revolution, where |grad A|^2 = k_mer'^2 + 3 k_par'^2; l = 2 applies the same formula twice.
inline DerivativeBound derivative_bounds_check(const FlowTrack& flow, const SpacetimePoint& X, int l,
                                               std::optional<double> radius = std::nullopt) {
    require(l == 1 || l == 2, ErrorKind::InvalidInput, "derivative_bounds_check: l must be 1 or 2");
    DerivativeBound out;
    out.r = radius.value_or(regularity_scale(flow, X));
    require(out.r > 0, ErrorKind::InvalidInput, "derivative_bounds_check: X lies in the bad set");
    if (flow.model) return out;  // homogeneous: all curvature derivatives vanish
    auto a = detail::locate(flow, X);
    const auto& s = flow.slices[a.slice];
    const double half = out.r / 2;
    // the run containing X, as arclength + curvature channels
    std::vector<double> arc, c1, c2;
    std::vector<bool> inside;
    auto collect = [&](const Run& run, auto pos, auto k1, auto k2) {
        // closed runs are unrolled so that X sits in the middle
        std::vector<std::size_t> order;
        const std::size_t len = run.size();
        std::size_t start = run.closed ? (a.index - run.begin + len - len / 2) % len : 0;
        for (std::size_t k = 0; k < len; ++k) order.push_back(run.begin + (start + k) % len);
        const Vec xa = a.ring ? make_vec({a.z, a.u}) : X.x;
        double acc = 0;
        Vec prev{};
        for (std::size_t k = 0; k < order.size(); ++k) {
            std::size_t i = order[k];
            Vec p = pos(i);
            if (k > 0) acc += norm(p - prev);
            prev = p;
            arc.push_back(acc);
            c1.push_back(k1(i));
            c2.push_back(k2(i));
            inside.push_back(norm(p - xa) < half);
        }
    };
    bool found = false;
    if (a.ring) {
        for (const auto& run : s.profiles)
            if (a.index >= run.begin && a.index < run.end) {
                collect(run, [&](std::size_t i) { return make_vec({s.rings[i].z, s.rings[i].u}); },
                        [&](std::size_t i) { return s.rings[i].k_mer; }, [&](std::size_t i) { return s.rings[i].k_par; });
                found = true;
            }
    } else {
        for (const auto& run : s.curves)
            if (a.index >= run.begin && a.index < run.end) {
                collect(run, [&](std::size_t i) { return s.samples[i].position; },
                        [&](std::size_t i) {
                            detail::sample_A(s.samples[i]);
                            return s.samples[i].lambda[0];
                        },
                        [](std::size_t) { return 0.0; });
                found = true;
            }
    }
    require(found, ErrorKind::DataMissing, "derivative_bounds_check: point has no connectivity run");
    std::size_t count = std::count(inside.begin(), inside.end(), true);
    require(count >= static_cast<std::size_t>(l + 3), ErrorKind::Precision,
            "derivative_bounds_check: mesh too coarse for the requested differences");
    const double w2 = flow.n >= 2 ? 3.0 : 0.0;
    for (int d = 0; d < l; ++d) {
        c1 = detail::differentiate(arc, c1);
        c2 = detail::differentiate(arc, c2);
    }
    double sup = 0;
    for (std::size_t i = 0; i < arc.size(); ++i)
        if (inside[i]) sup = std::max(sup, std::sqrt(c1[i] * c1[i] + w2 * c2[i] * c2[i]));
    out.value = std::pow(out.r, l + 1) * sup;
    out.ratio = out.value / kDerivativeConstant[l];
    return out;
}

}  // namespace strataflow
