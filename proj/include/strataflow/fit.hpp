#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <tuple>
#include <vector>

#include "brakke.hpp"
#include "model.hpp"
#include "numeric.hpp"

namespace strataflow {

struct FitOptions {
    int orientations = 17;  // grid points per angle
    int scales = 9;         // shrinker scales, log-spaced in [2^-1/2, 2^1/2]
    int t_values = 9;       // quasistatic T in [-1/2, 1/2]
    int iterations = 50;    // simplex refinement
    bool refine = true;
    double skip_below = -1;  // leave kinds whose coarse distance is already <= this unrefined
};

struct KindFit {
    ModelKind kind{};
    SelfSimilarModel model;   // in the rescaled frame: centered at the origin
    std::vector<double> params;
    double dist = kInf;
};

struct FitResult {
    SelfSimilarModel model;  // original coordinates
    Spine spine;
    double dist = kInf;
};

namespace detail {

// Kinds available for hypersurfaces in R^2 and R^3.
inline std::vector<ModelKind> catalog_kinds(int n, int N) {
    require(N == n + 1 && n >= 1 && n <= 2, ErrorKind::InvalidInput,
            "fit: catalog covers hypersurfaces with n = 1, 2 only");
    if (n == 1) return {ModelKind::StaticPlane, ModelKind::QuasistaticPlane, ModelKind::ShrinkerSphere};
    return {ModelKind::StaticPlane, ModelKind::QuasistaticPlane, ModelKind::ShrinkerCylinder, ModelKind::ShrinkerSphere};
}

inline int catalog_symmetry(ModelKind k, int n) {
    switch (k) {
    case ModelKind::StaticPlane: return n + 2;
    case ModelKind::QuasistaticPlane: return n;
    case ModelKind::ShrinkerCylinder: return 1;
    default: return 0;
    }
}

inline Vec direction(int N, const std::vector<double>& p, std::size_t off) {
    if (N == 2) return make_vec({std::cos(p[off]), std::sin(p[off])});
    double th = p[off], ph = p[off + 1];
    return make_vec({std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)});
}

inline int angle_count(ModelKind k, int N) {
    if (k == ModelKind::ShrinkerSphere) return 0;
    return N - 1;
}

inline SelfSimilarModel model_from_params(ModelKind k, int n, int N, const std::vector<double>& p) {
    switch (k) {
    case ModelKind::StaticPlane: return SelfSimilarModel::static_plane(n, N, frame_from_normal(direction(N, p, 0), N));
    case ModelKind::QuasistaticPlane:
        return SelfSimilarModel::quasistatic_plane(n, N, p[N - 1], frame_from_normal(direction(N, p, 0), N));
    case ModelKind::ShrinkerCylinder:
        return SelfSimilarModel::cylinder(n, N, 1, std::exp(p[N - 1]), frame_from_axis(direction(N, p, 0), N));
    case ModelKind::ShrinkerSphere: return SelfSimilarModel::sphere(n, N, std::exp(p[0]));
    }
    throw Error(ErrorKind::InvalidInput, "fit: unknown kind");
}

// Coarse grid in lexicographic parameter order, plus the simplex step per parameter.
inline std::pair<std::vector<std::vector<double>>, std::vector<double>> coarse_grid(ModelKind k, int N,
                                                                                    const FitOptions& o) {
    const double pi = std::numbers::pi;
    std::vector<std::vector<double>> angles{{}};
    std::vector<double> step;
    int na = angle_count(k, N);
    if (na == 1) {
        angles.clear();
        for (int i = 0; i < o.orientations; ++i) angles.push_back({pi * i / o.orientations});
        step.push_back(pi / o.orientations);
    } else if (na == 2) {
        angles.clear();
        for (int i = 0; i < o.orientations; ++i)
            for (int j = 0; j < o.orientations; ++j)
                angles.push_back({0.5 * pi * i / (o.orientations - 1), 2 * pi * j / o.orientations});
        step.push_back(0.5 * pi / (o.orientations - 1));
        step.push_back(2 * pi / o.orientations);
    }
    std::vector<double> extra;
    if (k == ModelKind::QuasistaticPlane) {
        for (int i = 0; i < o.t_values; ++i) extra.push_back(-0.5 + static_cast<double>(i) / (o.t_values - 1));
        step.push_back(1.0 / (o.t_values - 1));
    } else if (k == ModelKind::ShrinkerSphere || k == ModelKind::ShrinkerCylinder) {
        const double h = std::log(2.0) / (o.scales - 1);
        for (int i = 0; i < o.scales; ++i) extra.push_back(-0.5 * std::log(2.0) + i * h);
        step.push_back(h);
    }
    std::vector<std::vector<double>> grid;
    for (const auto& a : angles) {
        if (extra.empty()) {
            grid.push_back(a);
            continue;
        }
        for (double e : extra) {
            auto p = a;
            p.push_back(e);
            grid.push_back(p);
        }
    }
    return {grid, step};
}

struct CoarseTable {
    std::vector<std::vector<double>> params;
    std::vector<TestIntegrals> integrals;
    std::vector<double> step;
};

inline const CoarseTable& coarse_table(ModelKind k, int n, int N, const TestFunctionFamily& fam, const FitOptions& o) {
    using Key = std::tuple<int, int, int, std::string, int, int, int>;
    static std::mutex mu;
    static std::map<Key, std::unique_ptr<CoarseTable>> cache;
    Key key{static_cast<int>(k), n, N, fam.id(), o.orientations, o.scales, o.t_values};
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[key];
    if (!slot) {
        auto t = std::make_unique<CoarseTable>();
        auto [grid, step] = coarse_grid(k, N, o);
        t->params = grid;
        t->step = step;
        for (const auto& p : grid) t->integrals.push_back(model_test_integrals(model_from_params(k, n, N, p), fam));
        slot = std::move(t);
    }
    return *slot;
}

}  // namespace detail

// Best model of one catalog kind against the flow-side integrals F (rescaled frame).
inline KindFit fit_kind(const TestIntegrals& F, ModelKind k, int n, int N, const TestFunctionFamily& fam,
                        const FitOptions& o = {}) {
    const auto& table = detail::coarse_table(k, n, N, fam, o);
    KindFit best;
    best.kind = k;
    for (std::size_t i = 0; i < table.params.size(); ++i) {
        double d = brakke_distance(F, table.integrals[i], fam);
        if (d < best.dist) best.dist = d, best.params = table.params[i];
    }
    if (o.refine && !table.step.empty() && best.dist > 0 && best.dist > o.skip_below) {
        auto obj = [&](const std::vector<double>& p) {
            return brakke_distance(F, model_test_integrals(detail::model_from_params(k, n, N, p), fam), fam);
        };
        auto [x, fx] = numeric::nelder_mead(obj, best.params, table.step, o.iterations);
        if (fx < best.dist) best.dist = fx, best.params = x;
    }
    best.model = detail::model_from_params(k, n, N, best.params);
    return best;
}

// Per-kind fits at (X, r); the j-catalog minimum is taken over kinds with D >= j.
struct FitTable {
    SpacetimePoint X;
    double r = 1;
    int n = 1;
    bool empty = false;
    std::vector<KindFit> kinds;

    std::optional<FitResult> best(int j) const {
        if (empty) return std::nullopt;
        const KindFit* b = nullptr;
        for (const auto& k : kinds)
            if (detail::catalog_symmetry(k.kind, n) >= j && (!b || k.dist < b->dist)) b = &k;
        require(b != nullptr, ErrorKind::InvalidInput, "fit: no catalog model has " + std::to_string(j) + " symmetries");
        return result(*b);
    }
    // Best fit restricted to one model kind.
    std::optional<FitResult> of_kind(ModelKind k) const {
        if (empty) return std::nullopt;
        for (const auto& f : kinds)
            if (f.kind == k) return result(f);
        return std::nullopt;
    }
    // back in original coordinates
    FitResult result(const KindFit& k) const {
        FitResult out;
        SelfSimilarModel m = k.model;
        m.center = X;
        m.T = k.model.T * r * r;
        out.model = m;
        out.spine = spine_of(m);
        out.dist = k.dist;
        return out;
    }
    // +inf when no catalog model has j symmetries (every point then lies in the stratum).
    double dist(int j) const {
        if (j > n + 2) return kInf;
        auto b = best(j);
        return b ? b->dist : kInf;
    }
};

inline FitTable fit_table(const FlowTrack& flow, const SpacetimePoint& X, double r, const FitOptions& o = {}) {
    require(r > 0, ErrorKind::InvalidInput, "fit: scale must be positive");
    auto fam = TestFunctionFamily::standard(flow.N);
    FitTable t;
    t.X = X, t.r = r, t.n = flow.n;
    auto F = test_integrals(flow, X, r, fam);
    bool any = false;
    for (double v : F) any = any || v != 0;
    if (!any) {
        t.empty = true;
        return t;
    }
    for (auto k : detail::catalog_kinds(flow.n, flow.N)) t.kinds.push_back(fit_kind(F, k, flow.n, flow.N, fam, o));
    return t;
}

// nullopt marks an empty rescaled flow.
inline std::optional<FitResult> fit_selfsimilar(const FlowTrack& flow, const SpacetimePoint& X, double r, int j,
                                                const FitOptions& o = {}) {
    require(j >= 0 && j <= flow.n + 2, ErrorKind::InvalidInput, "fit_selfsimilar: need 0 <= j <= n+2");
    return fit_table(flow, X, r, o).best(j);
}

}  // namespace strataflow
