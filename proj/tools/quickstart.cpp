// Simulate the dumbbell, then look at its neck pinch.
#include <cstdio>

#include "strataflow/pipeline.hpp"

using namespace strataflow;

int main() {
    RunConfig c;
    c.scenario = "dumbbell";
    auto flow = make_track(c);
    const auto& X = flow.singular_points.front();
    std::printf("%zu slices, pinch at t=%.4f x=(%.4f, %.4f, %.4f)\n", flow.slices.size(), X.t, X.x[0], X.x[1], X.x[2]);

    for (double r : {0.1, 0.05, 0.025}) {
        auto fit = fit_selfsimilar(flow, X, r, 0);
        if (fit) std::printf("r=%.3f  best fit %s  d=%.4f\n", r, to_string(fit->model.kind), fit->dist);
    }
    auto lim = gaussian_density_limit(flow, X);
    std::printf("density at the pinch %.4f (cylinder %.4f)\n", lim.value, std::sqrt(2 * std::numbers::pi / std::exp(1.0)));
}
