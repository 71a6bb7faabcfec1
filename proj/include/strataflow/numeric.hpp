#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

namespace strataflow::numeric {

struct Rule {
    std::vector<double> x, w;  // on [-1, 1]
};

inline Rule gauss_legendre(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1, p2 = 0;
            for (int j = 1; j <= n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1);
            double dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        r.x[i] = -z;
        r.x[n - 1 - i] = z;
        r.w[i] = r.w[n - 1 - i] = 2 / ((1 - z * z) * pp * pp);
    }
    return r;
}

inline const Rule& gl48() {
    static const Rule r = gauss_legendre(48);
    return r;
}

template <class F>
double integrate(F&& f, double a, double b, const Rule& r = gl48()) {
    if (b <= a) return 0;
    double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0;
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(c + h * r.x[i]);
    return s * h;
}

// Least-squares line through (x, y); returns (slope, intercept).
inline std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
    }
    double den = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / den;
    return {slope, (sy - slope * sx) / n};
}

// Deterministic Nelder-Mead on a fixed iteration budget.
inline std::pair<std::vector<double>, double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                                          std::vector<double> x0, const std::vector<double>& step,
                                                          int iterations) {
    const std::size_t d = x0.size();
    std::vector<std::vector<double>> p(d + 1, x0);
    std::vector<double> fv(d + 1);
    for (std::size_t i = 0; i < d; ++i) p[i + 1][i] += step[i];
    for (std::size_t i = 0; i <= d; ++i) fv[i] = f(p[i]);
    std::vector<std::size_t> idx(d + 1);
    for (int it = 0; it < iterations; ++it) {
        for (std::size_t i = 0; i <= d; ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::size_t best = idx[0], worst = idx[d], second = idx[d - 1];
        std::vector<double> c(d, 0.0);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t k = 0; k <= d; ++k)
                if (k != worst) c[i] += p[k][i] / d;
        auto along = [&](double a) {
            std::vector<double> x(d);
            for (std::size_t i = 0; i < d; ++i) x[i] = c[i] + a * (p[worst][i] - c[i]);
            return x;
        };
        auto xr = along(-1.0);
        double fr = f(xr);
        if (fr < fv[best]) {
            auto xe = along(-2.0);
            double fe = f(xe);
            if (fe < fr) p[worst] = xe, fv[worst] = fe;
            else p[worst] = xr, fv[worst] = fr;
        } else if (fr < fv[second]) {
            p[worst] = xr, fv[worst] = fr;
        } else {
            auto xc = fr < fv[worst] ? along(-0.5) : along(0.5);
            double fc = f(xc);
            if (fc < std::min(fr, fv[worst])) {
                p[worst] = xc, fv[worst] = fc;
            } else {
                for (std::size_t k = 0; k <= d; ++k) {
                    if (k == best) continue;
                    for (std::size_t i = 0; i < d; ++i) p[k][i] = p[best][i] + 0.5 * (p[k][i] - p[best][i]);
                    fv[k] = f(p[k]);
                }
            }
        }
    }
    std::size_t b = 0;
    for (std::size_t i = 1; i <= d; ++i)
        if (fv[i] < fv[b]) b = i;
    return {p[b], fv[b]};
}

}  // namespace strataflow::numeric
