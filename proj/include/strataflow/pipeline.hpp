#pragma once

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "density.hpp"
#include "parallel.hpp"
#include "regularity.hpp"
#include "scenario.hpp"
#include "strata.hpp"

namespace strataflow {

using nlohmann::json;

struct Report {
    json summary;
    std::string csv;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string point_cols(const SpacetimePoint& X, int N) {
    std::string s;
    for (int d = 0; d < 3; ++d) s += (d < N ? fmt(X.x[d]) : std::string("")) + ",";
    return s + fmt(X.t);
}

inline json point_json(const SpacetimePoint& X) {
    json x = json::array();
    for (int d = 0; d < X.dim; ++d) x.push_back(X.x[d]);
    return {{"x", x}, {"t", X.t}};
}

// Representative points of one slice: samples, or ring points at phi = 0.
inline void slice_points(const VarifoldSlice& s, int N, std::vector<SpacetimePoint>& out) {
    for (const auto& p : s.samples) out.push_back({N, p.position, s.t});
    for (const auto& r : s.rings) out.push_back({N, s.axis.point(r.z, r.u, 0), s.t});
}

// Deterministic draw of k indices (Fisher-Yates on the raw engine output).
inline std::vector<std::size_t> draw(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    idx.resize(std::min(n, k));
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace detail

// Center of the unit domain: the first singular point, else the model center or mid-track.
inline SpacetimePoint domain_center(const FlowTrack& flow) {
    if (!flow.singular_points.empty()) return flow.singular_points.front();
    if (flow.model) return flow.model->center;
    require(!flow.slices.empty(), ErrorKind::InvalidInput, "track is empty");
    const auto& s = flow.slices[flow.slices.size() / 2];
    std::vector<SpacetimePoint> pts;
    detail::slice_points(s, flow.N, pts);
    return pts.at(pts.size() / 2);
}

// Points of the flow inside the parabolic ball B_radius(X0) whose unit-scale windows stay
// inside the track (t >= t_first + 1/2).
inline std::vector<SpacetimePoint> candidate_points(const FlowTrack& flow, const SpacetimePoint& X0, double radius = 1) {
    std::vector<SpacetimePoint> all;
    if (flow.model) {
        const auto& m = *flow.model;
        for (int k = -19; k <= 19; ++k) {
            double t = X0.t + radius * radius * k / 20.0;
            if (!m.exists_at(t)) continue;
            auto s = model_slice(m, t, 24, 1.0);
            detail::slice_points(s, flow.N, all);
        }
    } else {
        double t_min = flow.t_first() + 0.5;
        for (const auto& s : flow.slices)
            if (s.t >= t_min && std::abs(s.t - X0.t) < radius * radius) detail::slice_points(s, flow.N, all);
    }
    std::vector<SpacetimePoint> out;
    for (const auto& p : all)
        if (parabolic_distance(p, X0) < radius) out.push_back(p);
    return out;
}

inline std::vector<SpacetimePoint> sample_points(const FlowTrack& flow, const SpacetimePoint& X0, int count,
                                                 std::uint64_t seed) {
    auto cand = candidate_points(flow, X0);
    std::vector<SpacetimePoint> out;
    for (std::size_t i : detail::draw(cand.size(), static_cast<std::size_t>(count), seed)) out.push_back(cand[i]);
    return out;
}

inline double slope_of_counts(const std::vector<std::size_t>& counts, double gamma) {
    std::vector<double> x, y;
    for (std::size_t b = 0; b < counts.size(); ++b)
        if (counts[b] > 0) x.push_back(b * std::log(1 / gamma)), y.push_back(std::log(static_cast<double>(counts[b])));
    if (x.size() < 2) return 0;
    return numeric::linear_fit(x, y).first;
}

inline std::vector<double> exponent_radii() {
    std::vector<double> r;
    for (int k = 7; k >= 3; --k) r.push_back(std::ldexp(1.0, -k));
    return r;
}

inline json exponent_report(const std::vector<std::pair<double, double>>& pairs) {
    json j{{"radii", json::array()}, {"volumes", json::array()}};
    for (const auto& [r, v] : pairs) j["radii"].push_back(r), j["volumes"].push_back(v);
    try {
        auto fit = minkowski_exponent_fit(pairs);
        j["slope"] = fit.slope;
        j["warnings"] = fit.warnings;
    } catch (const Error& e) {
        j["slope"] = nullptr;
        j["warnings"] = json::array({e.what()});
    }
    return j;
}

// Strata membership, signatures, decomposition, coverings and singular-set exponents.
inline Report run_stratify(const FlowTrack& flow, const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    StratConfig sc = cfg.strat;
    sc.n = flow.n;
    sc.Lambda = flow.mass_bound;
    sc.validate();
    const int n = flow.n, N = flow.N, B = sc.beta_max;
    const SpacetimePoint X0 = domain_center(flow);
    auto pts = sample_points(flow, X0, cfg.samples, cfg.seed);
    // singular points in the domain join the sample, first and in track order
    std::vector<int> sing_index(flow.singular_points.size(), -1);
    std::vector<SpacetimePoint> head;
    for (std::size_t k = 0; k < flow.singular_points.size(); ++k) {
        const auto& s = flow.singular_points[k];
        if (parabolic_distance(s, X0) < 1 && s.t >= flow.t_first() + 0.5) {
            sing_index[k] = static_cast<int>(head.size());
            head.push_back(s);
        }
    }
    pts.insert(pts.begin(), head.begin(), head.end());
    const std::size_t P = pts.size();
    std::vector<std::vector<FitTable>> fits(P, std::vector<FitTable>(B + 1));
    std::vector<Signature> sigs(P);
    FitOptions fo;
    fo.skip_below = sc.eta;
    parallel_for(P, [&](std::size_t i) {
        for (int b = 0; b <= B; ++b) fits[i][b] = fit_table(flow, pts[i], std::pow(sc.gamma, b), fo);
        sigs[i] = scale_signature(flow, pts[i], sc, B);
    });
    // member[j][b][i]
    const int J = n + 2;
    std::vector<std::vector<std::vector<bool>>> member(J, std::vector<std::vector<bool>>(B + 1, std::vector<bool>(P)));
    std::ostringstream csv;
    csv << "point,x0,x1,x2,t,scale,j,best_kind,dist,member\n";
    bool nested = true;
    for (int j = 0; j < J; ++j)
        for (std::size_t i = 0; i < P; ++i) {
            bool in = true;
            for (int b = 0; b <= B; ++b) {
                auto best = fits[i][b].best(j + 1);
                double d = best ? best->dist : kInf;
                in = in && d > sc.eta;
                member[j][b][i] = in;
                if (j > 0 && member[j - 1][b][i] && !in) nested = false;
                csv << i << ',' << detail::point_cols(pts[i], N) << ',' << detail::fmt(std::pow(sc.gamma, b)) << ',' << j
                    << ',' << (best ? to_string(best->model.kind) : "EMPTY") << ',' << detail::fmt(d) << ','
                    << (in ? 1 : 0) << '\n';
            }
        }
    std::vector<int> report_j = cfg.j;
    if (report_j.empty())
        for (int j = 0; j < J; ++j) report_j.push_back(j);
    for (int j : report_j)
        require(j >= 0 && j < J, ErrorKind::InvalidInput,
                "stratify: j must lie in [0, " + std::to_string(J - 1) + "], got " + std::to_string(j));
    json strata = json::array();
    for (int j : report_j) {
        json e{{"j", j}, {"members", json::array()}};
        for (int b = 0; b <= B; ++b) {
            std::size_t c = 0;
            for (std::size_t i = 0; i < P; ++i) c += member[j][b][i];
            e["members"].push_back(c);
        }
        auto cov = recursive_covering(pts, member[j], sc.gamma, X0);
        e["covering"] = cov.counts();
        e["covering_slope"] = slope_of_counts(cov.counts(), sc.gamma);
        strata.push_back(e);
    }
    std::size_t near = 0;
    for (std::size_t i = 0; i < P; ++i)
        for (int j = 0; j < J; ++j) {
            double lo = kInf;
            for (int b = 0; b <= B; ++b) lo = std::min(lo, fits[i][b].dist(j + 1));
            near += std::abs(lo - sc.eta) <= 0.1 * sc.eta;
        }
    auto bad = bad_scale_bound(sc, sigs);
    json classes = json::array();
    bool classes_ok = true;
    for (int b = 1; b <= B; ++b) {
        auto dec = energy_decomposition(sigs, b);
        bool ok = static_cast<double>(dec.size()) <= sc.class_bound(b);
        classes_ok = classes_ok && ok;
        classes.push_back({{"beta", b}, {"classes", dec.size()}, {"bound", sc.class_bound(b)}, {"ok", ok}});
    }
    json singular = json::array();
    for (std::size_t k = 0; k < flow.singular_points.size(); ++k) {
        const auto& s = flow.singular_points[k];
        json e = detail::point_json(s);
        // lowest stratum containing the point at the finest scale
        e["stratum"] = nullptr;
        if (sing_index[k] >= 0)
            for (int j = 0; j < J; ++j)
                if (member[j][B][sing_index[k]]) {
                    e["stratum"] = j;
                    break;
                }
        e["fits"] = json::array();
        for (double r : {0.1, 0.05, 0.025}) {
            try {
                auto f = fit_selfsimilar(flow, s, r, 0);
                if (f) e["fits"].push_back({{"r", r}, {"kind", to_string(f->model.kind)}, {"dist", f->dist}});
            } catch (const Error& err) {
                e["fits"].push_back({{"r", r}, {"error", err.what()}});
            }
        }
        singular.push_back(e);
    }
    std::vector<std::pair<double, double>> vols;
    for (double r : exponent_radii())
        vols.emplace_back(r, tubular_volume(flow.singular_points, r, std::nullopt, cfg.grid).volume);
    Report rep;
    rep.csv = csv.str();
    rep.summary = {{"config_hash", config_hash(cfg)},
                   {"scenario", cfg.scenario},
                   {"n", n},
                   {"N", N},
                   {"points", P},
                   {"domain_center", detail::point_json(X0)},
                   {"Q", sc.Q()},
                   {"strata", strata},
                   {"containment_ok", nested},
                   {"near_threshold", near},
                   {"bad_scales", {{"max_count", bad.max_count}, {"bound", bad.bound}, {"ok", bad.ok}}},
                   {"decomposition", classes},
                   {"decomposition_ok", classes_ok},
                   {"singular_points", singular},
                   {"singular_set_exponent", flow.singular_points.empty() ? json(nullptr) : exponent_report(vols)}};
    return rep;
}

// Candidate points for bad sets: everything on the track within parabolic distance `radius`
// of X0, optionally thinned to at most `limit` points.
inline std::vector<SpacetimePoint> dense_points(const FlowTrack& flow, const SpacetimePoint& X0, double radius,
                                                std::size_t limit, std::uint64_t seed) {
    std::vector<SpacetimePoint> all;
    for (const auto& s : flow.slices) {
        if (std::abs(s.t - X0.t) >= radius * radius) continue;
        std::vector<SpacetimePoint> sp;
        detail::slice_points(s, flow.N, sp);
        for (const auto& p : sp)
            if (parabolic_distance(p, X0) < radius) all.push_back(p);
    }
    std::vector<SpacetimePoint> out;
    for (std::size_t i : detail::draw(all.size(), limit, seed)) out.push_back(all[i]);
    return out;
}

// Vol(T_r(B_r) within B_radius(X0)) for each radius; rotationally symmetric tracks count in the
// half plane of the axis.
inline std::vector<std::pair<double, double>> bad_set_volumes(const FlowTrack& flow, const RegularityField& field,
                                                              const SpacetimePoint& X0, double radius, int grid) {
    std::vector<std::pair<double, double>> vols;
    const bool axisym = !flow.slices.empty() && !flow.slices.front().rings.empty();
    for (double r : exponent_radii()) {
        auto bad = bad_set(field, r);
        double v;
        if (axisym) {
            const auto& ax = flow.slices.front().axis;
            auto c0 = ax.coords(X0.x);
            std::vector<SpacetimePoint> rings;
            for (const auto& p : bad) {
                auto c = ax.coords(p.x);
                rings.push_back({2, make_vec({c[0], c[1]}), p.t});
            }
            ParabolicBall dom{{2, make_vec({c0[0], 0.0}), X0.t}, radius};
            v = tubular_volume_axisymmetric(rings, r, dom, grid).volume;
        } else {
            v = tubular_volume(bad, r, ParabolicBall{X0, radius}, grid).volume;
        }
        vols.emplace_back(r, v);
    }
    return vols;
}

inline Report run_regularity(const FlowTrack& flow, const RunConfig& cfg) {
    const int N = flow.N;
    const SpacetimePoint X0 = domain_center(flow);
    auto pts = sample_points(flow, X0, cfg.samples, cfg.seed);
    auto field = regularity_field(flow, pts);
    std::ostringstream csv;
    csv << "point,x0,x1,x2,t,r_M,A\n";
    std::size_t violations = 0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const auto& f = field[i];
        violations += f.r_M * f.A > 1;
        csv << i << ',' << detail::point_cols(f.X, N) << ',' << detail::fmt(f.r_M) << ',' << detail::fmt(f.A) << '\n';
    }
    json lp = json::array();
    for (double p : cfg.p) {
        json e{{"p", p}};
        LpOptions so;
        so.t = X0.t - 0.25;
        e["slice_time"] = so.t;
        try {
            e["slice_curvature"] = lp_curvature_norm(flow, p, so);
            if (!flow.model) e["slice_inverse_regscale"] = lp_inverse_regscale(flow, p, so);
        } catch (const Error& err) {
            e["slice_error"] = err.what();
        }
        LpOptions st;
        st.mode = LpMode::Spacetime;
        if (flow.model) {
            st.t0 = X0.t - 1, st.t1 = X0.t;
            e["spacetime_curvature"] = lp_curvature_norm(flow, p, st);
        } else {
            st.slice_stride = std::max<std::size_t>(1, flow.slices.size() / 40);
            st.point_stride = 4;
            e["spacetime_curvature"] = lp_curvature_norm(flow, p, st);
            // each r_M costs a binary search, so the inverse integral is sampled more sparsely
            st.slice_stride = std::max<std::size_t>(1, flow.slices.size() / 20);
            st.point_stride = 16;
            e["spacetime_inverse_regscale"] = lp_inverse_regscale(flow, p, st);
        }
        lp.push_back(e);
    }
    Report rep;
    rep.summary = {{"config_hash", config_hash(cfg)}, {"scenario", cfg.scenario},     {"n", flow.n},
                   {"N", N},                          {"points", field.size()},       {"domain_center", detail::point_json(X0)},
                   {"domination_violations", violations}, {"lp", lp}};
    if (flow.model && flow.model->kind == ModelKind::ShrinkerCylinder) {
        json sh = json::array();
        const int k = flow.model->flat_dim + 1;
        for (double p : cfg.p) {
            try {
                auto st = sharpness_study(flow.n, k, p);
                sh.push_back({{"p", p}, {"k", k}, {"verdict", to_string(st.verdict)}, {"critical", st.critical}});
            } catch (const Error& err) {
                sh.push_back({{"p", p}, {"k", k}, {"error", err.what()}});
            }
        }
        rep.summary["sharpness"] = sh;
    }
    if (!flow.model && !flow.singular_points.empty()) {
        auto dense = dense_points(flow, X0, 0.5, 3000, cfg.seed);
        auto dfield = regularity_field(flow, dense, 0.25);
        rep.summary["bad_set_exponent"] = exponent_report(bad_set_volumes(flow, dfield, X0, 0.5, cfg.grid));
    }
    // derivative bounds and epsilon-regularity on the sampled points
    double worst = 0;
    std::size_t checked = 0;
    json eps = json::array();
    json calibrated;  // largest swept epsilon with no counterexample
    if (!flow.model) {
        for (const auto& f : field) {
            if (f.r_M <= 0) continue;
            try {
                worst = std::max(worst, derivative_bounds_check(flow, f.X, 1, f.r_M).ratio);
                ++checked;
            } catch (const Error&) {
            }
        }
    }
    for (double e : {0.2, 0.1, 0.05, 0.02}) {
        std::size_t premise = 0, holds = 0;
        for (const auto& f : field) {
            try {
                auto c = epsilon_regularity_check(flow, f.X, e / 2, std::max(1, flow.n), e);
                premise += c.premise;
                holds += c.premise && c.holds;
            } catch (const Error&) {
            }
        }
        eps.push_back({{"epsilon", e}, {"premise", premise}, {"holds", holds}});
        if (premise > 0 && holds == premise && calibrated.is_null()) calibrated = e;
    }
    rep.summary["derivative_bound"] = {{"checked", checked}, {"max_ratio", worst}};
    rep.summary["epsilon_regularity"] = eps;
    rep.summary["calibrated_epsilon"] = calibrated;
    rep.csv = csv.str();
    return rep;
}

// Combine summaries that share a config hash; mismatched hashes are refused.
inline json aggregate(const std::vector<json>& summaries) {
    require(!summaries.empty(), ErrorKind::InvalidInput, "aggregate: nothing to aggregate");
    const auto hash = summaries.front().value("config_hash", std::string());
    for (const auto& s : summaries)
        require(s.value("config_hash", std::string()) == hash, ErrorKind::InvalidInput,
                "aggregate: config hash mismatch (" + hash + " vs " + s.value("config_hash", std::string()) + ")");
    return {{"config_hash", hash}, {"reports", summaries}};
}

}  // namespace strataflow
