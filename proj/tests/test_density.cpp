#include <gtest/gtest.h>

#include "support.hpp"

using namespace strataflow;

namespace {

FlowTrack analytic(const SelfSimilarModel& m) {
    FlowTrack f;
    f.n = m.n, f.N = m.N;
    f.model = m;
    return f;
}

// Base points on the flow in the unit domain of its first singular point.
std::vector<SpacetimePoint> base_points(const FlowTrack& f, int count) {
    auto X0 = domain_center(f);
    return sample_points(f, X0, count, 3);
}

}  // namespace

TEST(Density, PlaneIsOne) {
    auto f = analytic(SelfSimilarModel::static_plane(2, 3));
    for (double tau : {0.5, 0.1, 0.01})
        EXPECT_NEAR(gaussian_density_at_scale(f, SpacetimePoint::origin(3), tau, false), 1.0, 1e-6);
}

TEST(Density, ShrinkingCircleConstant) {
    auto f = analytic(SelfSimilarModel::sphere(1, 2));
    const double oracle = sft::shrinker_density(1);
    EXPECT_NEAR(oracle, std::sqrt(2 * std::numbers::pi / std::exp(1.0)), 1e-12);
    for (double tau : {0.05, 0.2, 0.5})
        EXPECT_NEAR(gaussian_density_at_scale(f, SpacetimePoint::origin(2), tau, false), oracle, 1e-3);
}

TEST(Density, ShrinkingSphereConstant) {
    auto f = analytic(SelfSimilarModel::sphere(2, 3));
    EXPECT_NEAR(gaussian_density_at_scale(f, SpacetimePoint::origin(3), 0.25, false), sft::shrinker_density(2), 1e-3);
    EXPECT_NEAR(sft::shrinker_density(2), 4 / std::exp(1.0), 1e-12);
}

TEST(Density, CylinderMatchesSphereFactor) {
    auto f = analytic(SelfSimilarModel::cylinder(2, 3, 1));
    EXPECT_NEAR(gaussian_density_at_scale(f, SpacetimePoint::origin(3), 0.3, false), sft::shrinker_density(1), 1e-3);
}

TEST(Density, RegularPointLimitIsOne) {
    const auto& f = sft::flow("circle");
    const auto& s = f.slices[f.slices.size() / 3];
    SpacetimePoint X{2, s.samples[5].position, s.t};
    auto lim = gaussian_density_limit(f, X);
    EXPECT_NEAR(lim.value, 1.0, 1e-2);
}

TEST(Density, MonotoneInScale) {
    for (const char* name : {"circle", "sphere", "dumbbell"}) {
        const auto& f = sft::flow(name);
        for (const auto& X : base_points(f, 6)) {
            double prev = kInf;
            for (double tau : {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625}) {
                if (X.t - tau < f.t_first()) continue;
                double th = gaussian_density_at_scale(f, X, tau, true);
                EXPECT_LE(th, prev + 1e-3) << name << " tau=" << tau;
                prev = th;
            }
        }
    }
}

TEST(HuiskenEnergy, NonnegativeAndTelescoping) {
    const auto& f = sft::flow("dumbbell");
    for (const auto& X : base_points(f, 5)) {
        if (X.t - 0.25 < f.t_first()) continue;
        double w12 = huisken_energy(f, X, 0.45, 0.2, true);
        double w23 = huisken_energy(f, X, 0.2, 0.05, true);
        double w13 = huisken_energy(f, X, 0.45, 0.05, true);
        EXPECT_GE(w12, -1e-3);
        EXPECT_GE(w23, -1e-3);
        EXPECT_NEAR(w12 + w23, w13, 1e-12);
    }
}

TEST(HuiskenEnergy, RejectsBadScales) {
    const auto& f = sft::flow("circle");
    auto X = domain_center(f);
    EXPECT_THROW(huisken_energy(f, X, 0.1, 0.2, true), Error);
    EXPECT_THROW(huisken_energy(f, X, 0.6, 0.2, true), Error);
}

TEST(DensityRatio, PlaneRatioIsBallVolume) {
    auto f = analytic(SelfSimilarModel::static_plane(2, 3));
    auto r = density_ratio_check(f, SpacetimePoint::at({0.1, 0.2, 0}, 0), 0.3);
    EXPECT_NEAR(r.ratio, std::numbers::pi, 1e-12);
    EXPECT_LE(r.ratio, r.bound);
}

TEST(DensityRatio, BoundedOnSimulatedFlows) {
    for (const char* name : {"circle", "dumbbell"}) {
        const auto& f = sft::flow(name);
        for (const auto& X : base_points(f, 8))
            for (double r : {0.5, 0.1, 0.02}) {
                auto d = density_ratio_check(f, X, r);
                EXPECT_LE(d.ratio, d.bound) << name;
            }
    }
}
