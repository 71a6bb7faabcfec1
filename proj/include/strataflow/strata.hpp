#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "density.hpp"
#include "fit.hpp"
#include "numeric.hpp"

namespace strataflow {

struct StratConfig {
    double gamma = 0.45;
    double delta = 0.01;
    int q = 2;
    double eta = 0.05;
    double epsilon = 0.05;
    int beta_max = 6;
    double Lambda = 1;
    int n = 1;

    void validate() const {
        require(gamma > 0 && gamma < 0.5, ErrorKind::InvalidInput, "config: gamma must lie in (0, 1/2)");
        require(delta > 0, ErrorKind::InvalidInput, "config: delta must be positive");
        require(q >= 1, ErrorKind::InvalidInput, "config: q must be >= 1");
        require(eta > 0 && epsilon > 0, ErrorKind::InvalidInput, "config: eta and epsilon must be positive");
        require(beta_max >= 1, ErrorKind::InvalidInput, "config: beta_max must be >= 1");
        require(Lambda > 0 && n >= 1, ErrorKind::InvalidInput, "config: need Lambda > 0 and n >= 1");
    }
    // (2q+1) Lambda / (delta pi^{n/2})
    double bad_scale_limit() const { return (2 * q + 1) * Lambda / (delta * std::pow(std::numbers::pi, 0.5 * n)); }
    long long Q() const { return static_cast<long long>(std::floor(bad_scale_limit())) + q; }
    // 2 beta^Q; overflows to +inf for realistic Q
    double class_bound(int beta) const { return 2 * std::pow(static_cast<double>(beta), static_cast<double>(Q())); }
};

// 1, gamma, gamma^2, ... down to r (r itself appended when it is not on the ladder).
inline std::vector<double> geometric_ladder(double r, double gamma) {
    require(r > 0 && r <= 1, ErrorKind::InvalidInput, "ladder: r must lie in (0, 1]");
    require(gamma > 0 && gamma < 1, ErrorKind::InvalidInput, "ladder: ratio must lie in (0, 1)");
    std::vector<double> out;
    for (double s = 1; s >= r * (1 - 1e-12); s *= gamma) out.push_back(s);
    if (out.back() > r * (1 + 1e-12)) out.push_back(r);
    return out;
}

struct Membership {
    bool member = false;
    bool near_threshold = false;  // ladder minimum within 10% of eta
    double min_dist = kInf;
    std::vector<double> dists;  // (j+1)-catalog distance per ladder scale
};

inline Membership quant_stratum_membership(const FlowTrack& flow, const SpacetimePoint& X, int j, double eta,
                                           const std::vector<double>& ladder, FitOptions opt = {}) {
    require(j >= 0 && j <= flow.n + 2, ErrorKind::InvalidInput, "membership: need 0 <= j <= n+2");
    require(!ladder.empty(), ErrorKind::InvalidInput, "membership: empty ladder");
    opt.skip_below = eta;
    Membership m;
    m.member = true;
    for (double s : ladder) {
        double d = fit_table(flow, X, s, opt).dist(j + 1);
        m.dists.push_back(d);
        m.min_dist = std::min(m.min_dist, d);
        if (d <= eta) m.member = false;
    }
    m.near_threshold = std::abs(m.min_dist - eta) <= 0.1 * eta;
    return m;
}

inline bool is_quant_stratum_member(const FlowTrack& flow, const SpacetimePoint& X, int j, double eta, double r,
                                    std::vector<double> ladder = {}, double gamma = 0.45) {
    if (ladder.empty()) ladder = geometric_ladder(r, gamma);
    return quant_stratum_membership(flow, X, j, eta, ladder).member;
}

using Signature = std::vector<int>;

inline std::string to_string(const Signature& s) {
    std::string out;
    for (int b : s) out += b ? '1' : '0';
    return out;
}

// T_alpha = 1 if alpha <= q or W_{gamma^{alpha-q}, gamma^{alpha+q}} > delta.
inline Signature scale_signature(const FlowTrack& flow, const SpacetimePoint& X, const StratConfig& cfg, int beta) {
    cfg.validate();
    require(beta >= 1 && beta <= cfg.beta_max, ErrorKind::InvalidInput, "scale_signature: need 1 <= beta <= beta_max");
    const bool localized = !flow.model.has_value();
    std::map<int, double> theta;  // gamma exponent -> Theta at tau = gamma^{2k}
    auto th = [&](int k) {
        auto it = theta.find(k);
        if (it != theta.end()) return it->second;
        double g = std::pow(cfg.gamma, k);
        return theta[k] = gaussian_density_at_scale(flow, X, g * g, localized);
    };
    Signature s(beta, 0);
    for (int a = 1; a <= beta; ++a) {
        if (a <= cfg.q) {
            s[a - 1] = 1;
            continue;
        }
        s[a - 1] = th(a - cfg.q) - th(a + cfg.q) > cfg.delta ? 1 : 0;
    }
    return s;
}

struct BadScaleReport {
    long long max_count = 0;
    double bound = 0;
    bool ok = true;
};

inline BadScaleReport bad_scale_bound(const StratConfig& cfg, const std::vector<Signature>& sigs) {
    BadScaleReport r;
    r.bound = cfg.bad_scale_limit();
    for (const auto& s : sigs) {
        long long c = 0;
        for (std::size_t a = cfg.q; a < s.size(); ++a) c += s[a];
        r.max_count = std::max(r.max_count, c);
    }
    r.ok = static_cast<double>(r.max_count) <= r.bound;
    return r;
}

// Points grouped by their first beta signature bits.
inline std::map<std::string, std::vector<std::size_t>> energy_decomposition(const std::vector<Signature>& sigs, int beta) {
    std::map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < sigs.size(); ++i) {
        require(static_cast<int>(sigs[i].size()) >= beta, ErrorKind::InvalidInput,
                "energy_decomposition: signature shorter than beta");
        out[to_string(Signature(sigs[i].begin(), sigs[i].begin() + beta))].push_back(i);
    }
    return out;
}

struct Covering {
    std::vector<std::vector<SpacetimePoint>> levels;  // ball centers, radius gamma^level
    std::vector<std::size_t> counts() const {
        std::vector<std::size_t> c;
        for (const auto& l : levels) c.push_back(l.size());
        return c;
    }
};

namespace detail {

// Greedy farthest-point cover of idx by balls of radius r centered in the set.
inline std::vector<std::size_t> farthest_point_cover(const std::vector<SpacetimePoint>& pts,
                                                     const std::vector<std::size_t>& idx, double r) {
    std::vector<std::size_t> centers;
    if (idx.empty()) return centers;
    std::vector<double> dist(idx.size(), kInf);
    std::size_t next = 0;
    while (true) {
        const std::size_t c = idx[next];
        centers.push_back(c);
        double far = -1;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            dist[k] = std::min(dist[k], parabolic_distance(pts[idx[k]], pts[c]));
            if (dist[k] > far) far = dist[k], next = k;
        }
        if (far < r) break;
    }
    return centers;
}

}  // namespace detail

// member[b][i]: point i lies in the stratum at scale gamma^b (b = 0..beta). Level 0 covers the
// members inside B_1(center); level b+1 covers, ball by ball, the members inside each level-b ball.
inline Covering recursive_covering(const std::vector<SpacetimePoint>& pts, const std::vector<std::vector<bool>>& member,
                                   double gamma, const SpacetimePoint& center) {
    require(gamma > 0 && gamma < 1, ErrorKind::InvalidInput, "covering: ratio must lie in (0, 1)");
    Covering cov;
    std::vector<std::size_t> prev_centers;
    for (std::size_t b = 0; b < member.size(); ++b) {
        require(member[b].size() == pts.size(), ErrorKind::InvalidInput, "covering: membership size mismatch");
        const double r = std::pow(gamma, static_cast<double>(b));
        std::vector<std::size_t> centers;
        if (b == 0) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < pts.size(); ++i)
                if (member[0][i] && parabolic_distance(pts[i], center) < 1) idx.push_back(i);
            centers = detail::farthest_point_cover(pts, idx, r);
        } else {
            const double rp = r / gamma;
            for (std::size_t c : prev_centers) {
                std::vector<std::size_t> idx;
                for (std::size_t i = 0; i < pts.size(); ++i)
                    if (member[b][i] && parabolic_distance(pts[i], pts[c]) < rp) idx.push_back(i);
                auto sub = detail::farthest_point_cover(pts, idx, r);
                centers.insert(centers.end(), sub.begin(), sub.end());
            }
        }
        std::vector<SpacetimePoint> level;
        for (std::size_t c : centers) level.push_back(pts[c]);
        cov.levels.push_back(std::move(level));
        prev_centers = std::move(centers);
    }
    return cov;
}

struct ParabolicBall {
    SpacetimePoint center;
    double radius = 1;
    bool contains(const SpacetimePoint& p) const { return parabolic_distance(p, center) < radius; }
};

struct TubularVolume {
    double volume = 0;
    bool precision_warning = false;
    long long cells = 0;
};

namespace detail {

struct CellHash {
    std::size_t operator()(const std::array<int, 4>& k) const {
        std::size_t h = 1469598103934665603ull;
        for (int v : k) h = (h ^ static_cast<std::size_t>(static_cast<unsigned>(v))) * 1099511628211ull;
        return h;
    }
};

// Cells of side h (space) and ht (time) whose centers lie within parabolic distance r of a
// point; `weight(center)` gives the cell measure, `keep(center)` the domain filter.
template <class Keep, class Weight>
TubularVolume count_cells(const std::vector<SpacetimePoint>& pts, int N, double r, double h, double ht, Keep keep,
                          Weight weight) {
    std::unordered_set<std::array<int, 4>, CellHash> seen;
    TubularVolume out;
    const double r2 = r * r;
    for (const auto& p : pts) {
        require(p.dim == N, ErrorKind::InvalidInput, "tubular_volume: dimension mismatch");
        std::array<int, 3> lo{}, hi{};
        for (int d = 0; d < 3; ++d) {
            lo[d] = d < N ? static_cast<int>(std::floor((p.x[d] - r) / h)) : 0;
            hi[d] = d < N ? static_cast<int>(std::floor((p.x[d] + r) / h)) : 0;
        }
        int k0 = static_cast<int>(std::floor((p.t - r2) / ht)), k1 = static_cast<int>(std::floor((p.t + r2) / ht));
        for (int i = lo[0]; i <= hi[0]; ++i)
            for (int j = lo[1]; j <= hi[1]; ++j)
                for (int l = lo[2]; l <= hi[2]; ++l) {
                    Vec c{};
                    std::array<int, 3> ijk{i, j, l};
                    for (int d = 0; d < N; ++d) c[d] = (ijk[d] + 0.5) * h;
                    if (norm2(c - p.x) > r2) continue;
                    for (int k = k0; k <= k1; ++k) {
                        double tc = (k + 0.5) * ht;
                        if (std::abs(tc - p.t) > r2) continue;
                        SpacetimePoint cp{N, c, tc};
                        if (!keep(cp)) continue;
                        if (seen.insert({i, j, l, k}).second) out.volume += weight(cp);
                    }
                }
    }
    out.cells = static_cast<long long>(seen.size());
    return out;
}

}  // namespace detail

// Grid-counted measure of T_r(points) within the domain; cells are r/cells_per_r in space and
// 2r^2/cells_per_r^2 in time.
inline TubularVolume tubular_volume(const std::vector<SpacetimePoint>& pts, double r,
                                    const std::optional<ParabolicBall>& domain = std::nullopt, int cells_per_r = 8) {
    require(r > 0, ErrorKind::InvalidInput, "tubular_volume: r must be positive");
    require(cells_per_r >= 1, ErrorKind::InvalidInput, "tubular_volume: grid resolution must be >= 1");
    if (pts.empty()) return {};
    const int N = pts.front().dim;
    const double h = r / cells_per_r, ht = 2 * r * r / (cells_per_r * cells_per_r);
    auto keep = [&](const SpacetimePoint& c) { return !domain || domain->contains(c); };
    auto w = [&](const SpacetimePoint&) { return std::pow(h, N) * ht; };
    auto out = detail::count_cells(pts, N, r, h, ht, keep, w);
    out.precision_warning = r <= 4 * h * std::sqrt(static_cast<double>(N));
    return out;
}

// Same measure for a set of full circles in R^3 invariant under rotation about an axis: each
// point is a ring representative (z, u) with u >= 0, and the count runs in the half-plane
// with cell weight 2 pi u. The domain ball is centered on the axis at (z0, t0).
inline TubularVolume tubular_volume_axisymmetric(const std::vector<SpacetimePoint>& rings, double r,
                                                 const std::optional<ParabolicBall>& domain = std::nullopt,
                                                 int cells_per_r = 8) {
    require(r > 0, ErrorKind::InvalidInput, "tubular_volume: r must be positive");
    if (rings.empty()) return {};
    const double h = r / cells_per_r, ht = 2 * r * r / (cells_per_r * cells_per_r);
    auto keep = [&](const SpacetimePoint& c) { return c.x[1] > 0 && (!domain || domain->contains(c)); };
    auto w = [&](const SpacetimePoint& c) { return 2 * std::numbers::pi * c.x[1] * h * h * ht; };
    auto out = detail::count_cells(rings, 2, r, h, ht, keep, w);
    out.precision_warning = r <= 4 * h * std::sqrt(3.0);
    return out;
}

struct MinkowskiFit {
    double slope = 0;
    double intercept = 0;
    std::size_t used = 0;
    std::vector<std::string> warnings;
};

inline MinkowskiFit minkowski_exponent_fit(const std::vector<std::pair<double, double>>& pairs) {
    MinkowskiFit f;
    std::vector<double> x, y;
    double rmin = kInf, rmax = 0;
    for (const auto& [r, v] : pairs) {
        require(r > 0, ErrorKind::InvalidInput, "minkowski_exponent_fit: radii must be positive");
        if (!(v > 0)) {
            f.warnings.push_back("dropped r=" + std::to_string(r) + ": nonpositive volume");
            continue;
        }
        x.push_back(std::log(r));
        y.push_back(std::log(v));
        rmin = std::min(rmin, r), rmax = std::max(rmax, r);
    }
    require(x.size() >= 4, ErrorKind::InvalidInput, "minkowski_exponent_fit: need at least 4 usable radii");
    require(rmax / rmin >= 8 * (1 - 1e-9), ErrorKind::InvalidInput, "minkowski_exponent_fit: radii must span 3 octaves");
    auto [s, c] = numeric::linear_fit(x, y);
    f.slope = s, f.intercept = c, f.used = x.size();
    return f;
}

namespace detail {

inline std::vector<Vec> extend_basis(const std::vector<Vec>& basis, const Vec& y) {
    Vec d = y;
    for (const auto& v : basis) d = d - dot(d, v) * v;
    auto out = basis;
    double l = norm(d);
    if (l > 1e-12) out.push_back((1.0 / l) * d);
    return out;
}

[[noreturn]] inline void case_violation(const std::string& msg) { throw Error(ErrorKind::CaseViolation, msg); }

}  // namespace detail

// Predicted spine after adding the point Y to W (positions relative to W's base point).
inline Spine cone_splitting_case(const Spine& W, const SpacetimePoint& Y, double rho) {
    require(rho > 0, ErrorKind::InvalidInput, "cone_splitting_case: rho must be positive");
    require(Y.dim == W.base.dim, ErrorKind::InvalidInput, "cone_splitting_case: dimension mismatch");
    const Vec y = Y.x - W.base.x;
    const double s = Y.t - W.base.t;
    const double dy = W.spatial_distance(Y.x);
    const bool far = dy >= rho;
    Spine out;
    out.base = W.base;
    out.basis = far ? detail::extend_basis(W.basis, y) : W.basis;
    switch (W.kind) {
    case SpineKind::TimeSlice: {
        const double sw = W.time - W.base.t;
        const double ds = s - sw;
        if (std::abs(ds) < rho * rho) {
            if (!far) detail::case_violation("Y lies in T_rho(W): d(y,V) < rho and |s| < rho^2");
            out.kind = SpineKind::TimeSlice;
            out.time = W.time;
        } else {
            out.kind = SpineKind::HalfCylinder;
            out.time = W.base.t + std::max(s, sw);
        }
        break;
    }
    case SpineKind::HalfCylinder: {
        const double T = W.time - W.base.t;
        out.kind = SpineKind::HalfCylinder;
        if (!far) {
            if (s < T + rho * rho) detail::case_violation("d(y,V) < rho requires s >= T + rho^2");
            out.time = W.base.t + s;
        } else {
            out.time = W.base.t + std::max(s, T);
        }
        break;
    }
    case SpineKind::FullCylinder:
        if (!far) detail::case_violation("static spine requires d(y,V) >= rho");
        out.kind = SpineKind::FullCylinder;
        break;
    }
    return out;
}

struct PromotionResult {
    bool ok = false;
    double dist = kInf;
    double misalignment = kInf;  // largest distance of a unit vector of V from the fitted plane
    ModelKind kind = ModelKind::StaticPlane;
    explicit operator bool() const { return ok; }
};

// Fit a static plane at (Y, gamma) and test that it contains y + V.
inline PromotionResult quasistatic_promotion_check(const FlowTrack& flow, const Spine& W, const SpacetimePoint& Y,
                                                   double gamma, double eps, double align_tol = 0.1) {
    if (W.kind != SpineKind::HalfCylinder) detail::case_violation("W must be a HALF_CYLINDER spine");
    require(gamma > 0 && gamma < 0.5, ErrorKind::InvalidInput, "quasistatic_promotion_check: gamma must lie in (0, 1/2)");
    if (norm(Y.x - W.base.x) >= 1 - 2 * gamma) detail::case_violation("Y must satisfy |y| < 1 - 2 gamma");
    if (Y.t - W.base.t <= -1) detail::case_violation("Y must satisfy s > -1");
    if (Y.t > W.time - 4 * gamma * gamma) detail::case_violation("Y must satisfy s <= T - (2 gamma)^2");
    PromotionResult res;
    require(W.dim() + 2 <= flow.n + 2, ErrorKind::InvalidInput, "quasistatic_promotion_check: spine too large");
    // a quasistatic plane vanishing after the window ties with the static one, so read the static entry
    auto fit = fit_table(flow, Y, gamma).of_kind(ModelKind::StaticPlane);
    if (!fit) return res;
    res.dist = fit->dist;
    res.kind = fit->model.kind;
    Spine V2 = fit->spine;
    res.misalignment = 0;
    for (const auto& v : W.basis) {
        Vec d = v;
        for (const auto& b : V2.basis) d = d - dot(d, b) * b;
        res.misalignment = std::max(res.misalignment, norm(d));
    }
    res.ok = fit->model.kind == ModelKind::StaticPlane && fit->dist < eps && res.misalignment < align_tol;
    return res;
}

}  // namespace strataflow
