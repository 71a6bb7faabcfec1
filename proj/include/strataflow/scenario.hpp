#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "catalog.hpp"
#include "simulator.hpp"
#include "strata.hpp"

namespace strataflow {

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"circle",          "ellipse",          "sphere",
                                                "dumbbell",        "plane",            "quasistatic-plane",
                                                "shrinking-circle", "shrinking-sphere", "shrinking-cylinder"};
    return names;
}

inline bool is_scenario(const std::string& s) {
    for (const auto& n : scenario_names())
        if (n == s) return true;
    return false;
}

struct RunConfig {
    std::string scenario = "circle";
    double radius = 2;
    double a = 2, b = 1;              // ellipse semi-axes
    double bell = 2, neck = 0.5;      // dumbbell shape
    double scale = 2.5;               // dumbbell enlargement
    int resolution = 256;             // vertices / profile samples
    double cadence = 0.005;           // slice emission interval
    StratConfig strat{};
    std::vector<int> j;               // strata to report; empty means all
    std::vector<double> p{0.5, 1.5};
    int grid = 8;                     // tubular-volume cells per radius
    int samples = 100;
    std::uint64_t seed = 1;
};

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json s{{"gamma", c.strat.gamma}, {"delta", c.strat.delta}, {"q", c.strat.q},
                     {"eta", c.strat.eta},     {"epsilon", c.strat.epsilon}, {"beta_max", c.strat.beta_max}};
    return {{"scenario", c.scenario}, {"radius", c.radius}, {"a", c.a},         {"b", c.b},
            {"bell", c.bell},         {"neck", c.neck},     {"scale", c.scale}, {"resolution", c.resolution},
            {"cadence", c.cadence},   {"strat", s},         {"j", c.j},         {"p", c.p},
            {"grid", c.grid},         {"samples", c.samples}, {"seed", c.seed}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    auto get = [&](const char* k, auto& v) {
        if (j.contains(k)) v = j.at(k).get<std::decay_t<decltype(v)>>();
    };
    try {
        get("scenario", c.scenario);
        get("radius", c.radius);
        get("a", c.a);
        get("b", c.b);
        get("bell", c.bell);
        get("neck", c.neck);
        get("scale", c.scale);
        get("resolution", c.resolution);
        get("cadence", c.cadence);
        get("j", c.j);
        get("p", c.p);
        get("grid", c.grid);
        get("samples", c.samples);
        get("seed", c.seed);
        if (j.contains("strat")) {
            const auto& s = j.at("strat");
            auto sget = [&](const char* k, auto& v) {
                if (s.contains(k)) v = s.at(k).get<std::decay_t<decltype(v)>>();
            };
            sget("gamma", c.strat.gamma);
            sget("delta", c.strat.delta);
            sget("q", c.strat.q);
            sget("eta", c.strat.eta);
            sget("epsilon", c.strat.epsilon);
            sget("beta_max", c.strat.beta_max);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("config: ") + e.what());
    }
    return c;
}

// FNV-1a of the canonical JSON text; keys are sorted so the hash is stable.
inline std::string config_hash(const RunConfig& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : to_json(c).dump()) h = (h ^ ch) * 1099511628211ull;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline void validate(const RunConfig& c) {
    require(is_scenario(c.scenario), ErrorKind::InvalidInput, "unknown scenario " + c.scenario);
    require(c.radius > 0 && c.a > 0 && c.b > 0 && c.bell > 0 && c.neck > 0 && c.scale > 0, ErrorKind::InvalidInput,
            "config: geometric parameters must be positive");
    require(c.resolution >= 16, ErrorKind::InvalidInput, "config: resolution must be >= 16");
    require(c.cadence > 0, ErrorKind::InvalidInput, "config: cadence must be positive");
    require(c.grid >= 1 && c.samples >= 1, ErrorKind::InvalidInput, "config: grid and samples must be >= 1");
    c.strat.validate();
}

// Builds the flow named by the scenario: simulations run to extinction, catalog scenarios
// return analytic tracks backed by their model.
inline FlowTrack make_track(const RunConfig& c) {
    validate(c);
    EmitPolicy emit;
    emit.cadence = c.cadence;
    const std::string& s = c.scenario;
    auto analytic = [&](SelfSimilarModel m) {
        FlowTrack f;
        f.n = m.n, f.N = m.N;
        f.model = m;
        f.closed = false;
        f.mass_bound = 1;
        if (m.is_shrinker()) {
            f.singular_times.push_back(m.center.t);
            f.singular_points.push_back(m.center);
            if (m.kind == ModelKind::ShrinkerSphere) f.extinction_time = m.center.t, f.closed = true;
            // Lambda bounds the density ratios; the round sphere's is below 2 by monotonicity
            f.mass_bound = 2;
        }
        return f;
    };
    if (s == "plane") return analytic(SelfSimilarModel::static_plane(2, 3));
    if (s == "quasistatic-plane") return analytic(SelfSimilarModel::quasistatic_plane(2, 3, 0.0));
    if (s == "shrinking-circle") return analytic(SelfSimilarModel::sphere(1, 2));
    if (s == "shrinking-sphere") return analytic(SelfSimilarModel::sphere(2, 3));
    if (s == "shrinking-cylinder") return analytic(SelfSimilarModel::cylinder(2, 3, 1));
    if (s == "circle" || s == "ellipse") {
        auto init = s == "circle" ? circle_curve(c.radius, c.resolution) : ellipse_curve(c.a, c.b, c.resolution);
        double per = 0, h = kInf;
        for (std::size_t i = 0; i < init.vertices.size(); ++i) {
            double e = norm(init.vertices[(i + 1) % init.vertices.size()] - init.vertices[i]);
            per += e;
            h = std::min(h, e);
        }
        StopRule stop;
        stop.max_curvature = 600 / (per / (2 * std::numbers::pi));  // radius down to 1/600 of the start
        return evolve_curve(init, 0.2 * h * h, stop, emit);
    }
    ProfileState init = s == "sphere" ? sphere_profile(c.radius, c.resolution)
                                      : dumbbell_profile(DumbbellShape::make(c.bell, c.neck), c.resolution, c.scale);
    return evolve_rotsym(init, 1e-3, StopRule{}, emit);
}

}  // namespace strataflow
