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

SpacetimePoint on_slice(const FlowTrack& f, std::size_t k, std::size_t i) {
    const auto& s = f.slices[k];
    if (!s.rings.empty()) return sft::ring_point(s, i % s.rings.size());
    return {f.N, s.samples[i % s.samples.size()].position, s.t};
}

}  // namespace

TEST(RegularityScale, ShrinkingCircleClosedForm) {
    // r / R(t + r^2) <= 1 with R^2 = -2t gives r <= sqrt(-2t/3)
    auto f = analytic(SelfSimilarModel::sphere(1, 2));
    for (double t : {-2.0, -1.0, -0.3, -0.05, -0.001}) {
        double expect = std::min(1.0, std::sqrt(-2 * t / 3));
        EXPECT_NEAR(regularity_scale(f, SpacetimePoint::at({std::sqrt(-2 * t), 0}, t)), expect, 1.0 / 4096) << t;
    }
}

TEST(RegularityScale, PlaneIsCapped) {
    auto f = analytic(SelfSimilarModel::static_plane(2, 3));
    EXPECT_EQ(regularity_scale(f, SpacetimePoint::at({0.3, 0.1, 0}, 0.2)), 1.0);
    EXPECT_EQ(regularity_scale(f, SpacetimePoint::at({0.3, 0.1, 0}, 0.2), 0.25), 0.25);
}

TEST(RegularityScale, SimulatedCircleNearClosedForm) {
    const auto& f = sft::flow("circle");
    for (double frac : {0.2, 0.5, 0.75}) {
        std::size_t k = static_cast<std::size_t>(frac * (f.slices.size() - 1));
        auto X = on_slice(f, k, 7);
        double expect = std::min(1.0, std::sqrt((4 - 2 * X.t) / 3));
        EXPECT_NEAR(regularity_scale(f, X), expect, 0.05 * expect) << X.t;
    }
}

TEST(RegularityScale, DominatesCurvature) {
    for (const char* name : {"ellipse", "dumbbell"}) {
        const auto& f = sft::flow(name);
        std::vector<SpacetimePoint> pts;
        for (std::size_t k = 0; k < f.slices.size(); k += f.slices.size() / 12)
            for (std::size_t i = 0; i < 4; ++i) pts.push_back(on_slice(f, k, 31 * i));
        for (const auto& p : regularity_field(f, pts)) EXPECT_LE(p.r_M * p.A, 1 + 1e-9) << name;
    }
}

TEST(BadSet, MonotoneInRadius) {
    const auto& f = sft::flow("dumbbell");
    auto pts = sample_points(f, domain_center(f), 40, 9);
    auto field = regularity_field(f, pts, 0.5);
    std::size_t prev = 0;
    for (double r : {0.01, 0.05, 0.1, 0.2, 0.5}) {
        auto b = bad_set(field, r);
        EXPECT_GE(b.size(), prev);
        prev = b.size();
    }
    EXPECT_EQ(prev, pts.size());  // capped at 0.5, so every point is bad at 0.5
}

TEST(EpsRegularity, PlaneHolds) {
    auto f = analytic(SelfSimilarModel::static_plane(2, 3));
    auto e = epsilon_regularity_check(f, SpacetimePoint::at({0.1, 0, 0}, 0), 0.05, 2, 0.1);
    EXPECT_TRUE(e.premise);
    EXPECT_TRUE(e.holds);
    EXPECT_EQ(e.r_M, 1.0);
}

TEST(EpsRegularity, WindowTooLarge) {
    auto f = analytic(SelfSimilarModel::static_plane(2, 3));
    try {
        epsilon_regularity_check(f, SpacetimePoint::origin(3), 0.2, 2, 0.1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::OutOfRange);
    }
}

TEST(Lp, SphereModelSlice) {
    auto f = analytic(SelfSimilarModel::sphere(2, 3));
    for (double p : {0.5, 1.5, 3.0}) {
        double t = -0.5, R = std::sqrt(-4 * t);
        LpOptions o;
        o.t = t;
        double expect = 4 * std::numbers::pi * R * R * std::pow(std::sqrt(2.0) / R, p);
        EXPECT_NEAR(lp_curvature_norm(f, p, o), expect, 1e-9 * expect);
    }
}

TEST(Lp, SimulatedCircleSlice) {
    // integral of kappa^p over a circle of radius R is 2 pi R^{1-p}
    const auto& f = sft::flow("circle");
    for (double p : {0.5, 1.5}) {
        LpOptions o;
        o.t = 1.0;
        double R = std::sqrt(2.0);
        EXPECT_NEAR(lp_curvature_norm(f, p, o) / (2 * std::numbers::pi * std::pow(R, 1 - p)), 1, 1e-2) << p;
    }
}

TEST(Lp, InverseScaleRejectsShrinkerModels) {
    auto f = analytic(SelfSimilarModel::sphere(2, 3));
    EXPECT_THROW(lp_inverse_regscale(f, 1.0), Error);
}

TEST(Sharpness, CylinderVerdicts) {
    EXPECT_EQ(sharpness_study(2, 2, 0.5).verdict, Verdict::Converges);
    EXPECT_EQ(sharpness_study(2, 2, 1.5).verdict, Verdict::Diverges);
    EXPECT_EQ(sharpness_study(2, 1, 1.0).verdict, Verdict::Converges);
    EXPECT_EQ(sharpness_study(2, 1, 3.0).verdict, Verdict::Diverges);
    EXPECT_THROW(sharpness_study(2, 2, 1.0), Error);
}

TEST(Sharpness, MatchesAntiderivative) {
    // R x S^1 with R(s)^2 = 2s: slice integrand 2 pi (2s)^{-(p+1)/2} on a unit box
    for (double p : {0.5, 1.5}) {
        auto st = sharpness_study(2, 2, p);
        const double a = (1 - p) / 2, c = 2 * std::numbers::pi * std::pow(2.0, -(p + 1) / 2);
        for (const auto& [tau, value] : st.ladder) {
            double exact = c * (1 - std::pow(tau, a)) / a;
            EXPECT_NEAR(value / exact, 1, 0.02) << "p=" << p << " tau=" << tau;
        }
    }
}

TEST(DerivativeBounds, RatioBelowOne) {
    for (const char* name : {"circle", "ellipse", "dumbbell"}) {
        const auto& f = sft::flow(name);
        for (std::size_t k = f.slices.size() / 10; k < f.slices.size() * 9 / 10; k += f.slices.size() / 8) {
            auto X = on_slice(f, k, 13);
            for (int l : {1, 2}) {
                auto b = derivative_bounds_check(f, X, l);
                EXPECT_LE(b.ratio, 1.0) << name << " l=" << l << " t=" << X.t;
            }
        }
    }
}

TEST(DerivativeBounds, CoarseMeshIsPrecisionError) {
    const auto& f = sft::flow("circle");
    auto X = on_slice(f, 10, 0);
    try {
        derivative_bounds_check(f, X, 2, 1e-3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Precision);
    }
}

TEST(Lp, InverseScaleDominatesCurvature) {
    // |A| <= 1 / r_M pointwise, so the integrals compare the same way
    for (const char* name : {"circle", "ellipse", "sphere", "dumbbell"}) {
        const auto& f = sft::flow(name);
        LpOptions o;
        o.t = 0.5 * (f.t_first() + f.singular_points.front().t);
        o.point_stride = 4;
        for (double p : {0.5, 1.5}) EXPECT_GE(lp_inverse_regscale(f, p, o), lp_curvature_norm(f, p, o)) << name;
    }
}

TEST(EpsRegularity, CylinderAwayFromSingularTime) {
    auto f = analytic(SelfSimilarModel::cylinder(2, 3, 1));
    SpacetimePoint X = SpacetimePoint::at({0.2, std::sqrt(2.0), 0}, -1);
    auto e = epsilon_regularity_check(f, X, 0.005, 2, 0.1);
    EXPECT_TRUE(e.premise) << e.dist;
    EXPECT_TRUE(e.holds);
    EXPECT_GT(e.r_M, 0.5);
}
