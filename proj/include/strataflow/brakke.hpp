#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "catalog.hpp"
#include "varifold.hpp"

namespace strataflow {

struct Bump {
    Vec center{};
    double width = 1;
};

// Finite truncation of the countable dense family of test functions: bumps on dyadic
// lattices in the unit ball (widths 1, 1/2, 1/4) times dyadic times, weighted 2^-(a+b).
struct TestFunctionFamily {
    int N = 2;
    std::vector<Bump> bumps;    // alpha = 1, 2, ...
    std::vector<double> times;  // beta = 1, 2, ...

    std::size_t size() const { return bumps.size() * times.size(); }
    double weight(std::size_t a, std::size_t b) const { return std::ldexp(1.0, -static_cast<int>(a + b + 2)); }
    double tail_weight() const {
        // mass of all weights with alpha > A or beta > B
        double A = static_cast<double>(bumps.size()), B = static_cast<double>(times.size());
        return std::ldexp(1.0, -static_cast<int>(A)) + std::ldexp(1.0, -static_cast<int>(B)) -
               std::ldexp(1.0, -static_cast<int>(A + B));
    }
    std::string id() const { return "std-N" + std::to_string(N) + "-" + std::to_string(bumps.size()) + "x" + std::to_string(times.size()); }

    static TestFunctionFamily standard(int N, std::size_t n_bumps = 14, std::size_t n_times = 14) {
        TestFunctionFamily f;
        f.N = N;
        for (double w : {1.0, 0.5, 0.25}) {
            // lattice of spacing w, bumps supported inside the unit ball
            std::vector<Bump> level;
            int k = static_cast<int>(std::floor((1 - w) / w + 1e-9));
            std::array<int, 3> lo{}, hi{};
            for (int d = 0; d < 3; ++d) lo[d] = d < N ? -k : 0, hi[d] = d < N ? k : 0;
            for (int i = lo[0]; i <= hi[0]; ++i)
                for (int j = lo[1]; j <= hi[1]; ++j)
                    for (int l = lo[2]; l <= hi[2]; ++l) {
                        Vec c = make_vec({i * w, j * w, l * w});
                        if (norm(c) + w <= 1 + 1e-12) level.push_back({c, w});
                    }
            std::stable_sort(level.begin(), level.end(), [](const Bump& a, const Bump& b) {
                double na = norm2(a.center), nb = norm2(b.center);
                if (std::abs(na - nb) > 1e-12) return na < nb;
                return a.center < b.center;
            });
            for (const auto& b : level)
                if (f.bumps.size() < n_bumps) f.bumps.push_back(b);
        }
        // dyadic sixteenths in (-1, 1), nearest to -1/8 first
        std::vector<int> ticks;
        for (int k = -15; k <= 15; ++k) ticks.push_back(k);
        std::stable_sort(ticks.begin(), ticks.end(), [](int a, int b) {
            int da = std::abs(a + 2), db = std::abs(b + 2);
            if (da != db) return da < db;
            return a > b;
        });
        for (std::size_t i = 0; i < n_times && i < ticks.size(); ++i) f.times.push_back(ticks[i] / 16.0);
        return f;
    }
};

using TestIntegrals = std::vector<double>;  // index alpha * times + beta

// Integrals of the family against M_{X,s} without materialising the rescaled flow.
inline TestIntegrals test_integrals(const FlowTrack& flow, const SpacetimePoint& X, double s,
                                    const TestFunctionFamily& fam) {
    require(X.dim == flow.N && fam.N == flow.N, ErrorKind::InvalidInput, "test_integrals: dimension mismatch");
    const std::size_t A = fam.bumps.size(), B = fam.times.size();
    TestIntegrals out(A * B, 0.0);
    const double scale = std::pow(s, -flow.n);
    for (std::size_t b = 0; b < B; ++b) {
        double t = X.t + s * s * fam.times[b];
        if (flow.model) {
            for (std::size_t a = 0; a < A; ++a) {
                const auto& bump = fam.bumps[a];
                out[a * B + b] = scale * model_bump_integral(*flow.model, t, X.x + s * bump.center, s * bump.width);
            }
            continue;
        }
        auto br = bracket(flow, t);
        for (std::size_t a = 0; a < A; ++a) {
            const auto& bump = fam.bumps[a];
            Vec c = X.x + s * bump.center;
            double w = s * bump.width;
            Window win{c, w, w / 8};
            auto slice_sum = [&](const VarifoldSlice& sl) {
                double part = 0;
                visit_measure(sl, win, [&](const Vec& p, double m) { part += m * bump_profile(norm(p - c) / w); });
                return part;
            };
            double sum = 0;
            if (br.a && br.wa > 0) sum += br.wa * slice_sum(*br.a);
            if (br.b && br.wb > 0) sum += br.wb * slice_sum(*br.b);
            out[a * B + b] = scale * sum;
        }
    }
    return out;
}

// Test integrals of a catalog model in its own (already rescaled) coordinates.
inline TestIntegrals model_test_integrals(const SelfSimilarModel& m, const TestFunctionFamily& fam) {
    const std::size_t A = fam.bumps.size(), B = fam.times.size();
    TestIntegrals out(A * B, 0.0);
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t a = 0; a < A; ++a)
            out[a * B + b] = model_bump_integral(m, fam.times[b], fam.bumps[a].center, fam.bumps[a].width);
    return out;
}

inline double brakke_distance(const TestIntegrals& x, const TestIntegrals& y, const TestFunctionFamily& fam) {
    require(x.size() == fam.size() && y.size() == fam.size(), ErrorKind::InvalidInput, "brakke_distance: size mismatch");
    const std::size_t B = fam.times.size();
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double u = std::abs(x[i] - y[i]);
        d += fam.weight(i / B, i % B) * u / (1 + u);
    }
    return d;
}

// d_B between two flows already normalised to the unit parabolic ball.
inline double brakke_distance(const FlowTrack& a, const FlowTrack& b, const TestFunctionFamily& fam) {
    auto o = SpacetimePoint::origin(a.N);
    return brakke_distance(test_integrals(a, o, 1.0, fam), test_integrals(b, o, 1.0, fam), fam);
}

}  // namespace strataflow
