#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "strataflow/pipeline.hpp"

namespace sft {

using namespace strataflow;

// Scenario flows with default settings, simulated once per process.
inline const FlowTrack& flow(const std::string& name) {
    static std::mutex mu;
    static std::map<std::string, FlowTrack> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(name);
    if (it == cache.end()) {
        RunConfig c;
        c.scenario = name;
        it = cache.emplace(name, make_track(c)).first;
    }
    return it->second;
}

// |S^m| from the Gamma function.
inline double sphere_area(int m) {
    return 2 * std::pow(std::numbers::pi, 0.5 * (m + 1)) / std::tgamma(0.5 * (m + 1));
}

// Gaussian density of the round shrinking S^n.
inline double shrinker_density(int n) {
    return std::pow(4 * std::numbers::pi, -0.5 * n) * sphere_area(n) * std::pow(2.0 * n, 0.5 * n) * std::exp(-0.5 * n);
}

inline SpacetimePoint ring_point(const VarifoldSlice& s, std::size_t i) {
    const auto& r = s.rings[i];
    return {3, s.axis.point(r.z, r.u, 0), s.t};
}

}  // namespace sft
