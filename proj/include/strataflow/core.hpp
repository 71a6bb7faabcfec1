#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace strataflow {

inline constexpr int kMaxDim = 4;
using Vec = std::array<double, kMaxDim>;

enum class ErrorKind {
    InvalidInput,
    OutOfRange,
    DataMissing,
    SimulationDegenerate,
    StepSize,
    CaseViolation,
    Precision,
    Parse,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::DataMissing: return "data-missing";
    case ErrorKind::SimulationDegenerate: return "simulation-degenerate";
    case ErrorKind::StepSize: return "step-size";
    case ErrorKind::CaseViolation: return "case-violation";
    case ErrorKind::Precision: return "precision";
    case ErrorKind::Parse: return "parse";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) throw Error(kind, msg);
}

// Small fixed-capacity vector helpers. Unused trailing components stay zero.
inline Vec operator+(const Vec& a, const Vec& b) {
    Vec r;
    for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] + b[i];
    return r;
}
inline Vec operator-(const Vec& a, const Vec& b) {
    Vec r;
    for (int i = 0; i < kMaxDim; ++i) r[i] = a[i] - b[i];
    return r;
}
inline Vec operator*(double s, const Vec& a) {
    Vec r;
    for (int i = 0; i < kMaxDim; ++i) r[i] = s * a[i];
    return r;
}
inline double dot(const Vec& a, const Vec& b) {
    double s = 0;
    for (int i = 0; i < kMaxDim; ++i) s += a[i] * b[i];
    return s;
}
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec make_vec(std::initializer_list<double> xs) {
    Vec v{};
    int i = 0;
    for (double x : xs) {
        if (i >= kMaxDim) throw Error(ErrorKind::InvalidInput, "vector longer than kMaxDim");
        v[i++] = x;
    }
    return v;
}

struct SpacetimePoint {
    int dim = 0;
    Vec x{};
    double t = 0;

    static SpacetimePoint at(std::initializer_list<double> xs, double t) {
        SpacetimePoint p;
        p.dim = static_cast<int>(xs.size());
        p.x = make_vec(xs);
        p.t = t;
        return p;
    }
    static SpacetimePoint origin(int dim) { return SpacetimePoint{dim, Vec{}, 0.0}; }

    void validate() const {
        require(dim >= 1 && dim <= kMaxDim, ErrorKind::InvalidInput, "spacetime point dimension out of range");
        for (int i = 0; i < kMaxDim; ++i)
            require(std::isfinite(x[i]), ErrorKind::InvalidInput, "non-finite coordinate");
        require(std::isfinite(t), ErrorKind::InvalidInput, "non-finite time");
    }
};

inline double parabolic_distance(const SpacetimePoint& a, const SpacetimePoint& b) {
    require(a.dim == b.dim, ErrorKind::InvalidInput, "parabolic_distance: dimension mismatch");
    return std::max(norm(a.x - b.x), std::sqrt(std::abs(a.t - b.t)));
}

// Lebesgue volume of the unit ball in R^N.
inline double unit_ball_volume(int N) {
    return std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N + 1.0);
}

// Area of the unit sphere S^m in R^{m+1}.
inline double unit_sphere_area(int m) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * (m + 1)) / std::tgamma(0.5 * (m + 1));
}

// Parabolic ball volume: spatial N-ball times a time interval of length 2r^2.
inline double ball_volume(double r, int N) {
    require(r > 0, ErrorKind::InvalidInput, "ball_volume: r must be positive");
    return 2.0 * unit_ball_volume(N) * std::pow(r, N + 2);
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace strataflow
