#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "strataflow/io.hpp"
#include "support.hpp"

using namespace strataflow;

TEST(ParabolicDistance, TimeCountsAsSquareRoot) {
    auto a = SpacetimePoint::at({0, 0}, 0);
    EXPECT_DOUBLE_EQ(parabolic_distance(a, SpacetimePoint::at({0.3, 0.4}, 0)), 0.5);
    EXPECT_DOUBLE_EQ(parabolic_distance(a, SpacetimePoint::at({0.1, 0}, -0.25)), 0.5);
}

TEST(ParabolicDistance, MetricAxiomsAndScaling) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    auto draw = [&] { return SpacetimePoint::at({u(rng), u(rng), u(rng)}, u(rng)); };
    for (int i = 0; i < 200; ++i) {
        auto a = draw(), b = draw(), c = draw();
        EXPECT_EQ(parabolic_distance(a, b), parabolic_distance(b, a));
        EXPECT_LE(parabolic_distance(a, c), parabolic_distance(a, b) + parabolic_distance(b, c) + 1e-12);
        double lam = 0.5 + u(rng) * 0.25;
        SpacetimePoint sa = a, sb = b;
        for (int d = 0; d < 3; ++d) sa.x[d] *= lam, sb.x[d] *= lam;
        sa.t *= lam * lam, sb.t *= lam * lam;
        EXPECT_NEAR(parabolic_distance(sa, sb), lam * parabolic_distance(a, b), 1e-12);
    }
}

TEST(Geometry, BallVolumes) {
    EXPECT_NEAR(unit_ball_volume(1), 2.0, 1e-14);
    EXPECT_NEAR(unit_ball_volume(2), std::numbers::pi, 1e-14);
    EXPECT_NEAR(unit_ball_volume(3), 4 * std::numbers::pi / 3, 1e-14);
    EXPECT_NEAR(unit_sphere_area(2), sft::sphere_area(2), 1e-12);
}

TEST(Model, RadiusLaws) {
    auto s = SelfSimilarModel::sphere(2, 3);
    EXPECT_NEAR(*s.radius_at(-1), 2.0, 1e-14);
    EXPECT_FALSE(s.radius_at(0).has_value());
    auto c = SelfSimilarModel::cylinder(2, 3, 1);
    EXPECT_NEAR(*c.radius_at(-0.5), 1.0, 1e-14);
    auto q = SelfSimilarModel::quasistatic_plane(1, 2, 0.25);
    EXPECT_TRUE(q.exists_at(0.25));
    EXPECT_FALSE(q.exists_at(0.3));
}

TEST(Model, SymmetryCountsAndSpines) {
    EXPECT_EQ(symmetry_count(SelfSimilarModel::static_plane(2, 3)), 4);
    EXPECT_EQ(symmetry_count(SelfSimilarModel::quasistatic_plane(2, 3, 0)), 2);
    EXPECT_EQ(symmetry_count(SelfSimilarModel::cylinder(2, 3, 1)), 1);
    EXPECT_EQ(symmetry_count(SelfSimilarModel::sphere(2, 3)), 0);
    EXPECT_EQ(spine_of(SelfSimilarModel::static_plane(2, 3)).kind, SpineKind::FullCylinder);
    EXPECT_EQ(spine_of(SelfSimilarModel::quasistatic_plane(2, 3, 0.5)).kind, SpineKind::HalfCylinder);
    EXPECT_DOUBLE_EQ(spine_of(SelfSimilarModel::quasistatic_plane(2, 3, 0.5)).time, 0.5);
    auto sp = spine_of(SelfSimilarModel::cylinder(2, 3, 1));
    EXPECT_EQ(sp.kind, SpineKind::TimeSlice);
    EXPECT_EQ(sp.dim(), 1);
}

TEST(Model, InvalidModelsRejected) {
    auto m = SelfSimilarModel::cylinder(2, 3, 2);
    EXPECT_THROW(m.validate(), Error);
    auto s = SelfSimilarModel::sphere(1, 2);
    s.scale = -1;
    EXPECT_THROW(s.validate(), Error);
}

TEST(Catalog, SliceMassMatchesExactArea) {
    // circle of radius sqrt(2) at t = -1, sphere of radius 2 at t = -1
    auto c = model_slice(SelfSimilarModel::sphere(1, 2), -1, 64);
    EXPECT_NEAR(c.mass() / (2 * std::numbers::pi * std::sqrt(2.0)), 1, 1e-6);
    auto s = model_slice(SelfSimilarModel::sphere(2, 3), -1, 64);
    EXPECT_NEAR(s.mass() / (4 * std::numbers::pi * 4), 1, 1e-6);
}

TEST(Catalog, RecenteredShrinkerKeepsRadiusLaw) {
    auto m = SelfSimilarModel::sphere(2, 3);
    auto f = model_track(m, {-1, -0.5, -0.25}, 32);
    auto g = recenter_rescale(f, m.center, 0.5);
    for (const auto& s : g.slices) {
        double R = std::sqrt(-4 * s.t);
        for (const auto& r : s.rings) EXPECT_NEAR(std::hypot(r.z, r.u), R, 1e-9);
    }
}

TEST(TrackIO, RoundTripIsExact) {
    RunConfig c;
    c.scenario = "circle";
    c.resolution = 32;
    auto f = make_track(c);
    std::stringstream ss;
    write_track(ss, f, {{"config_hash", config_hash(c)}});
    auto back = read_track(ss);
    EXPECT_EQ(back.meta.at("config_hash"), config_hash(c));
    ASSERT_EQ(back.track.slices.size(), f.slices.size());
    for (std::size_t k = 0; k < f.slices.size(); k += 17) {
        const auto &a = f.slices[k], &b = back.track.slices[k];
        EXPECT_EQ(a.t, b.t);
        ASSERT_EQ(a.samples.size(), b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            EXPECT_EQ(a.samples[i].position, b.samples[i].position);
            EXPECT_EQ(a.samples[i].weight, b.samples[i].weight);
            EXPECT_EQ(a.samples[i].lambda, b.samples[i].lambda);
        }
    }
    EXPECT_EQ(back.track.singular_points.size(), 1u);
}

TEST(TrackIO, ModelSurvivesRoundTrip) {
    FlowTrack f;
    f.n = 2, f.N = 3;
    f.model = SelfSimilarModel::cylinder(2, 3, 1, 1.5);
    std::stringstream ss;
    write_track(ss, f);
    auto back = read_track(ss).track;
    ASSERT_TRUE(back.model.has_value());
    EXPECT_EQ(back.model->kind, ModelKind::ShrinkerCylinder);
    EXPECT_EQ(back.model->scale, 1.5);
}

TEST(TrackIO, MalformedNumberReportsLine) {
    std::stringstream ss("# note x\ntrack 1 2 1 1\nslice 0 1 2 1\n0.5 zero 1\n");
    try {
        read_track(ss);
        FAIL() << "expected a parse error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Parse);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
}
