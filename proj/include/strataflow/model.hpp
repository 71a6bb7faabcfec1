#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core.hpp"

namespace strataflow {

enum class ModelKind { StaticPlane, ShrinkerSphere, ShrinkerCylinder, QuasistaticPlane };

inline const char* to_string(ModelKind k) {
    switch (k) {
    case ModelKind::StaticPlane: return "STATIC_PLANE";
    case ModelKind::ShrinkerSphere: return "SHRINKER_SPHERE";
    case ModelKind::ShrinkerCylinder: return "SHRINKER_CYLINDER";
    case ModelKind::QuasistaticPlane: return "QUASISTATIC_PLANE";
    }
    return "?";
}

inline std::optional<ModelKind> model_kind_from_string(const std::string& s) {
    for (auto k : {ModelKind::StaticPlane, ModelKind::ShrinkerSphere, ModelKind::ShrinkerCylinder,
                   ModelKind::QuasistaticPlane})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

using Frame = std::array<Vec, kMaxDim>;

inline Frame standard_frame() {
    Frame f{};
    for (int i = 0; i < kMaxDim; ++i) f[i][i] = 1.0;
    return f;
}

// Frame layout: the first `flat_dim` columns span the flat factor V. For planes the
// remaining columns are normals. For shrinkers the sphere factor S^{n-d} lives in the
// span of columns d..n, centered at the model center.
struct SelfSimilarModel {
    ModelKind kind = ModelKind::StaticPlane;
    int n = 1;
    int N = 2;
    SpacetimePoint center{};
    Frame frame = standard_frame();
    int flat_dim = 1;
    double T = 0;      // quasistatic: vanishes after center.t + T
    double scale = 1;  // shrinkers: multiplies the radius law

    static SelfSimilarModel static_plane(int n, int N, Frame f = standard_frame()) {
        SelfSimilarModel m;
        m.kind = ModelKind::StaticPlane;
        m.n = n, m.N = N, m.frame = f, m.flat_dim = n;
        m.center = SpacetimePoint::origin(N);
        return m;
    }
    static SelfSimilarModel quasistatic_plane(int n, int N, double T, Frame f = standard_frame()) {
        auto m = static_plane(n, N, f);
        m.kind = ModelKind::QuasistaticPlane;
        m.T = T;
        return m;
    }
    static SelfSimilarModel sphere(int n, int N, double scale = 1.0, Frame f = standard_frame()) {
        SelfSimilarModel m;
        m.kind = ModelKind::ShrinkerSphere;
        m.n = n, m.N = N, m.frame = f, m.flat_dim = 0, m.scale = scale;
        m.center = SpacetimePoint::origin(N);
        return m;
    }
    static SelfSimilarModel cylinder(int n, int N, int k, double scale = 1.0, Frame f = standard_frame()) {
        SelfSimilarModel m = sphere(n, N, scale, f);
        m.kind = ModelKind::ShrinkerCylinder;
        m.flat_dim = k;
        return m;
    }

    bool is_shrinker() const {
        return kind == ModelKind::ShrinkerSphere || kind == ModelKind::ShrinkerCylinder;
    }
    bool is_plane() const { return !is_shrinker(); }

    // Radius of the sphere factor at absolute time t; nullopt once vanished.
    std::optional<double> radius_at(double t) const {
        double s = t - center.t;
        if (s >= 0) return std::nullopt;
        return scale * std::sqrt(-2.0 * (n - flat_dim) * s);
    }

    bool exists_at(double t) const {
        switch (kind) {
        case ModelKind::StaticPlane: return true;
        case ModelKind::QuasistaticPlane: return t - center.t <= T;
        default: return t - center.t < 0;
        }
    }

    void validate() const {
        require(n >= 1 && N > n && N <= kMaxDim, ErrorKind::InvalidInput, "model: bad dimensions");
        require(center.dim == N, ErrorKind::InvalidInput, "model: center dimension mismatch");
        require(scale > 0, ErrorKind::InvalidInput, "model: scale must be positive");
        if (is_plane()) require(flat_dim == n, ErrorKind::InvalidInput, "model: plane must have flat_dim = n");
        if (kind == ModelKind::ShrinkerSphere) require(flat_dim == 0, ErrorKind::InvalidInput, "model: sphere has no flat factor");
        if (kind == ModelKind::ShrinkerCylinder)
            require(flat_dim >= 1 && flat_dim < n, ErrorKind::InvalidInput, "model: cylinder flat_dim must be in [1, n-1]");
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                double d = dot(frame[i], frame[j]) - (i == j ? 1.0 : 0.0);
                require(std::abs(d) < 1e-9, ErrorKind::InvalidInput, "model: frame not orthonormal");
            }
    }
};

inline int symmetry_count(const SelfSimilarModel& m) {
    return m.kind == ModelKind::StaticPlane ? m.flat_dim + 2 : m.flat_dim;
}

enum class SpineKind { TimeSlice, HalfCylinder, FullCylinder };

inline const char* to_string(SpineKind k) {
    switch (k) {
    case SpineKind::TimeSlice: return "TIME_SLICE";
    case SpineKind::HalfCylinder: return "HALF_CYLINDER";
    case SpineKind::FullCylinder: return "FULL_CYLINDER";
    }
    return "?";
}

// (x + V) x {t}, (x + V) x (-inf, T], or (x + V) x R. `basis` is orthonormal.
struct Spine {
    SpineKind kind = SpineKind::TimeSlice;
    SpacetimePoint base{};
    std::vector<Vec> basis;
    double time = 0;  // t for TIME_SLICE, T for HALF_CYLINDER (absolute)

    int dim() const { return static_cast<int>(basis.size()); }

    // Euclidean distance from y to the affine plane x + V.
    double spatial_distance(const Vec& y) const {
        Vec d = y - base.x;
        for (const auto& v : basis) d = d - dot(d, v) * v;
        return norm(d);
    }
};

// Spine of a model, in the model's own coordinates.
inline Spine spine_of(const SelfSimilarModel& m) {
    Spine w;
    w.base = m.center;
    int v = m.kind == ModelKind::StaticPlane || m.kind == ModelKind::QuasistaticPlane ? m.n : m.flat_dim;
    for (int i = 0; i < v; ++i) w.basis.push_back(m.frame[i]);
    switch (m.kind) {
    case ModelKind::StaticPlane: w.kind = SpineKind::FullCylinder; break;
    case ModelKind::QuasistaticPlane:
        w.kind = SpineKind::HalfCylinder;
        w.time = m.center.t + m.T;
        break;
    default:
        w.kind = SpineKind::TimeSlice;
        w.time = m.center.t;
        break;
    }
    return w;
}

// Frame whose first column is the unit vector a (completed by Gram-Schmidt).
inline Frame frame_from_axis(const Vec& a, int N) {
    Frame f{};
    f[0] = (1.0 / norm(a)) * a;
    int k = 1;
    for (int e = 0; e < N && k < N; ++e) {
        Vec v{};
        v[e] = 1.0;
        for (int i = 0; i < k; ++i) v = v - dot(v, f[i]) * f[i];
        double l = norm(v);
        if (l > 1e-6) f[k++] = (1.0 / l) * v;
    }
    return f;
}

// Frame whose last column (index N-1) is the unit normal nu; used for hyperplanes.
inline Frame frame_from_normal(const Vec& nu, int N) {
    Frame g = frame_from_axis(nu, N);
    Frame f{};
    for (int i = 1; i < N; ++i) f[i - 1] = g[i];
    f[N - 1] = g[0];
    return f;
}

}  // namespace strataflow
