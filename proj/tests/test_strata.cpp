#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace strataflow;

namespace {

FlowTrack analytic(const SelfSimilarModel& m) {
    FlowTrack f;
    f.n = m.n, f.N = m.N;
    f.model = m;
    f.mass_bound = 2;
    return f;
}

SelfSimilarModel random_model(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 1);
    double a = std::numbers::pi * u(rng);
    Frame fr = frame_from_normal(make_vec({std::cos(a), std::sin(a)}), 2);
    switch (rng() % 3) {
    case 0: return SelfSimilarModel::static_plane(1, 2, fr);
    case 1: return SelfSimilarModel::quasistatic_plane(1, 2, u(rng) - 0.5, fr);
    default: return SelfSimilarModel::sphere(1, 2, 0.7 + 0.6 * u(rng));
    }
}

Spine spine(SpineKind k, std::vector<Vec> basis, double time = 0) {
    Spine w;
    w.kind = k;
    w.base = SpacetimePoint::origin(3);
    w.basis = std::move(basis);
    w.time = time;
    return w;
}

}  // namespace

TEST(TestFamily, StandardLayout) {
    auto fam = TestFunctionFamily::standard(2);
    ASSERT_EQ(fam.bumps.size(), 14u);
    ASSERT_EQ(fam.times.size(), 14u);
    EXPECT_EQ(fam.times[0], -0.125);
    EXPECT_EQ(fam.bumps[0].width, 1.0);
    for (const auto& b : fam.bumps) EXPECT_LE(norm(b.center) + b.width, 1 + 1e-12);
    for (double t : fam.times) EXPECT_TRUE(t > -1 && t < 1);
    // all weights of the infinite family sum to one
    double sum = 0;
    for (std::size_t a = 0; a < fam.bumps.size(); ++a)
        for (std::size_t b = 0; b < fam.times.size(); ++b) sum += fam.weight(a, b);
    EXPECT_NEAR(sum + fam.tail_weight(), 1.0, 1e-15);
    EXPECT_LT(fam.tail_weight(), std::ldexp(1.0, -12));
}

TEST(BrakkeDistance, PseudometricOnRandomModels) {
    std::mt19937_64 rng(11);
    auto fam = TestFunctionFamily::standard(2);
    for (int i = 0; i < 20; ++i) {
        auto a = model_test_integrals(random_model(rng), fam);
        auto b = model_test_integrals(random_model(rng), fam);
        auto c = model_test_integrals(random_model(rng), fam);
        EXPECT_EQ(brakke_distance(a, a, fam), 0.0);
        EXPECT_EQ(brakke_distance(a, b, fam), brakke_distance(b, a, fam));
        EXPECT_LE(brakke_distance(a, c, fam), brakke_distance(a, b, fam) + brakke_distance(b, c, fam) + 1e-12);
        EXPECT_LE(brakke_distance(a, b, fam), 1.0);
    }
}

TEST(Fit, ExactShrinkingCircle) {
    auto f = analytic(SelfSimilarModel::sphere(1, 2));
    for (double r : {1.0, 0.3}) {
        auto fit = fit_selfsimilar(f, SpacetimePoint::origin(2), r, 0);
        ASSERT_TRUE(fit);
        EXPECT_EQ(fit->model.kind, ModelKind::ShrinkerSphere);
        EXPECT_LT(fit->dist, 1e-3);
    }
}

TEST(Fit, ExactPlane) {
    auto f = analytic(SelfSimilarModel::static_plane(2, 3));
    auto fit = fit_selfsimilar(f, SpacetimePoint::at({0.2, -0.1, 0}, 0.3), 0.5, 4);
    ASSERT_TRUE(fit);
    EXPECT_EQ(fit->model.kind, ModelKind::StaticPlane);
    EXPECT_LT(fit->dist, 1e-3);
    EXPECT_EQ(fit->spine.kind, SpineKind::FullCylinder);
}

TEST(Fit, RegularPointConvergesToPlane) {
    // off the spine of the shrinking circle the plane fit improves as the scale shrinks
    auto f = analytic(SelfSimilarModel::sphere(1, 2));
    SpacetimePoint X = SpacetimePoint::at({std::sqrt(2.0), 0}, -1);
    double prev = kInf;
    for (double r : {0.2, 0.1, 0.05, 0.025}) {
        double d = fit_table(f, X, r).dist(3);
        EXPECT_LT(d, prev);
        prev = d;
    }
    EXPECT_LT(prev, 0.05);
}

TEST(Fit, EmptyWindowGivesNoFit) {
    auto f = analytic(SelfSimilarModel::sphere(1, 2));
    EXPECT_FALSE(fit_selfsimilar(f, SpacetimePoint::at({0, 0}, 5), 0.5, 0).has_value());
}

TEST(Strata, LadderAndConfig) {
    auto l = geometric_ladder(0.1, 0.45);
    ASSERT_EQ(l.size(), 4u);
    EXPECT_DOUBLE_EQ(l[2], 0.45 * 0.45);
    EXPECT_DOUBLE_EQ(l.back(), 0.1);
    StratConfig c;
    c.Lambda = 1, c.n = 2;
    EXPECT_EQ(c.Q(), static_cast<long long>(std::floor(5 / (0.01 * std::numbers::pi))) + 2);
    EXPECT_TRUE(std::isfinite(c.class_bound(2)));
    c.Lambda = 10;
    EXPECT_TRUE(std::isinf(c.class_bound(6)));
    c.gamma = 0.6;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Strata, PlaneStrataEmpty) {
    auto f = analytic(SelfSimilarModel::static_plane(1, 2));
    for (int j = 0; j <= 2; ++j) EXPECT_FALSE(is_quant_stratum_member(f, SpacetimePoint::at({0.3, 0}, 0), j, 0.05, 0.05));
    // no catalog flow has four symmetries when n = 1, so everything lies in the top stratum
    EXPECT_TRUE(is_quant_stratum_member(f, SpacetimePoint::at({0.3, 0}, 0), 3, 0.05, 0.05));
}

TEST(Strata, SphereSingularPointInBottomStratum) {
    const auto& f = sft::flow("sphere");
    auto m = quant_stratum_membership(f, f.singular_points[0], 0, 0.05, geometric_ladder(0.05, 0.45));
    EXPECT_TRUE(m.member);
    EXPECT_GT(m.min_dist, 0.05);
}

TEST(Strata, ContainmentOnBooleanGrid) {
    const auto& f = sft::flow("dumbbell");
    auto pts = sample_points(f, domain_center(f), 3, 5);
    pts.push_back(f.singular_points.front());
    const std::vector<double> etas{0.08, 0.05}, rs{0.45 * 0.45 * 0.45, 0.45};
    for (const auto& X : pts) {
        // member[j][eta][r]
        bool m[4][2][2];
        for (int j = 0; j < 4; ++j)
            for (int e = 0; e < 2; ++e)
                for (int k = 0; k < 2; ++k) m[j][e][k] = is_quant_stratum_member(f, X, j, etas[e], rs[k]);
        for (int j = 0; j < 4; ++j)
            for (int jj = j; jj < 4; ++jj)
                for (int e = 0; e < 2; ++e)
                    for (int ee = e; ee < 2; ++ee)  // eta decreasing
                        for (int k = 0; k < 2; ++k)
                            for (int kk = k; kk < 2; ++kk) {
                                if (m[j][e][k]) {
                                    EXPECT_TRUE(m[jj][ee][kk]);
                                }
                            }
    }
}

TEST(Signature, LeadingBitsAndDecomposition) {
    const auto& f = sft::flow("circle");
    StratConfig c;
    c.Lambda = f.mass_bound;
    auto pts = sample_points(f, domain_center(f), 8, 2);
    std::vector<Signature> sigs;
    for (const auto& X : pts) {
        auto s = scale_signature(f, X, c, 6);
        EXPECT_EQ(s[0], 1);
        EXPECT_EQ(s[1], 1);
        sigs.push_back(s);
    }
    auto rep = bad_scale_bound(c, sigs);
    EXPECT_TRUE(rep.ok);
    for (int beta = 1; beta <= 6; ++beta) {
        auto dec = energy_decomposition(sigs, beta);
        EXPECT_LE(static_cast<double>(dec.size()), std::ldexp(1.0, beta));
        std::size_t total = 0;
        for (const auto& [key, members] : dec) {
            EXPECT_EQ(key.size(), static_cast<std::size_t>(beta));
            total += members.size();
        }
        EXPECT_EQ(total, sigs.size());
    }
}

TEST(Covering, CountsGrowWithDimension) {
    // points on a spatial segment: each level needs about 1/gamma times more balls
    std::vector<SpacetimePoint> pts;
    for (int i = 0; i <= 400; ++i) pts.push_back(SpacetimePoint::at({-0.9 + 1.8 * i / 400, 0}, 0));
    std::vector<std::vector<bool>> member(5, std::vector<bool>(pts.size(), true));
    auto cov = recursive_covering(pts, member, 0.45, SpacetimePoint::origin(2));
    auto c = cov.counts();
    for (std::size_t b = 2; b < c.size(); ++b) {
        double ratio = static_cast<double>(c[b]) / c[b - 1];
        EXPECT_GT(ratio, 1 / 0.45 / 3);
        EXPECT_LT(ratio, 3 / 0.45);
    }
    // a single point is one ball at every level
    std::vector<std::vector<bool>> one(5, std::vector<bool>(1, true));
    for (auto n : recursive_covering({SpacetimePoint::origin(2)}, one, 0.45, SpacetimePoint::origin(2)).counts())
        EXPECT_EQ(n, 1u);
}

TEST(TubularVolume, PointMatchesParabolicBall) {
    for (int N : {1, 2, 3}) {
        for (double r : {0.05, 0.1}) {
            auto v = tubular_volume({SpacetimePoint{N, Vec{}, 0.3}}, r, std::nullopt, N == 3 ? 10 : 16);
            double exact = unit_ball_volume(N) * std::pow(r, N) * 2 * r * r;
            EXPECT_NEAR(v.volume / exact, 1, 0.03) << "N=" << N;
        }
    }
}

TEST(TubularVolume, AxisymmetricRingMatchesTorusTube) {
    // a fixed circle of radius 1 at one instant: tube volume 2 pi * pi r^2 * 2 r^2
    double r = 0.05;
    auto v = tubular_volume_axisymmetric({SpacetimePoint::at({0, 1}, 0)}, r, std::nullopt, 16);
    double exact = 2 * std::numbers::pi * std::numbers::pi * r * r * 2 * r * r;
    EXPECT_NEAR(v.volume / exact, 1, 0.03);
}

TEST(TubularVolume, DomainClipsVolume) {
    auto full = tubular_volume({SpacetimePoint::origin(2)}, 0.1).volume;
    auto half = tubular_volume({SpacetimePoint::origin(2)}, 0.1, ParabolicBall{SpacetimePoint::at({1, 0}, 0), 1}).volume;
    EXPECT_NEAR(half / full, 0.5, 0.1);
}

TEST(Minkowski, RecoversPowerLaw) {
    std::vector<std::pair<double, double>> pts;
    for (int k = 3; k <= 7; ++k) {
        double r = std::ldexp(1.0, -k);
        pts.emplace_back(r, 3.5 * std::pow(r, 4.2));
    }
    EXPECT_NEAR(minkowski_exponent_fit(pts).slope, 4.2, 1e-12);
    pts.emplace_back(0.3, 0.0);
    auto f = minkowski_exponent_fit(pts);
    EXPECT_EQ(f.warnings.size(), 1u);
    EXPECT_EQ(f.used, 5u);
    EXPECT_THROW(minkowski_exponent_fit({{0.1, 1}, {0.11, 2}, {0.12, 3}, {0.13, 4}}), Error);
}

TEST(Minkowski, SegmentHasSlopeN) {
    std::vector<SpacetimePoint> seg;
    for (int i = 0; i <= 500; ++i) seg.push_back(SpacetimePoint::at({-0.5 + i / 500.0, 0}, 0));
    std::vector<std::pair<double, double>> vols;
    for (int k = 3; k <= 6; ++k) {
        double r = std::ldexp(1.0, -k);
        vols.emplace_back(r, tubular_volume(seg, r).volume);
    }
    EXPECT_NEAR(minkowski_exponent_fit(vols).slope, 3.0, 0.15);  // N + 2 - 1
}

TEST(ConeSplitting, CaseTable) {
    const Vec e1 = make_vec({1, 0, 0}), e2 = make_vec({0, 1, 0}), e3 = make_vec({0, 0, 1});
    // time slice, |s| < rho^2, far from V: span grows, stays a time slice
    auto a = cone_splitting_case(spine(SpineKind::TimeSlice, {e1}), SpacetimePoint::at({0, 0, 1}, 0), 0.5);
    EXPECT_EQ(a.kind, SpineKind::TimeSlice);
    EXPECT_EQ(a.dim(), 2);
    EXPECT_NEAR(a.spatial_distance(e3), 0, 1e-12);
    // time slice, |s| >= rho^2, on V: half cylinder up to max(s, 0)
    auto b = cone_splitting_case(spine(SpineKind::TimeSlice, {e1}), SpacetimePoint::at({0.3, 0, 0}, 0.5), 0.5);
    EXPECT_EQ(b.kind, SpineKind::HalfCylinder);
    EXPECT_EQ(b.dim(), 1);
    EXPECT_DOUBLE_EQ(b.time, 0.5);
    // time slice, |s| >= rho^2, far from V
    auto c = cone_splitting_case(spine(SpineKind::TimeSlice, {e1}), SpacetimePoint::at({0, 1, 0}, -0.5), 0.5);
    EXPECT_EQ(c.kind, SpineKind::HalfCylinder);
    EXPECT_EQ(c.dim(), 2);
    EXPECT_DOUBLE_EQ(c.time, 0);
    // half cylinder, on V, s >= T + rho^2
    auto d = cone_splitting_case(spine(SpineKind::HalfCylinder, {e1}, 0.1), SpacetimePoint::at({0.2, 0, 0}, 0.5), 0.5);
    EXPECT_EQ(d.kind, SpineKind::HalfCylinder);
    EXPECT_EQ(d.dim(), 1);
    EXPECT_DOUBLE_EQ(d.time, 0.5);
    // half cylinder, far from V
    auto e = cone_splitting_case(spine(SpineKind::HalfCylinder, {e1}, 0.1), SpacetimePoint::at({0, 0, 1}, -0.3), 0.5);
    EXPECT_EQ(e.kind, SpineKind::HalfCylinder);
    EXPECT_EQ(e.dim(), 2);
    EXPECT_DOUBLE_EQ(e.time, 0.1);
    // static spine, far from V
    auto f = cone_splitting_case(spine(SpineKind::FullCylinder, {}), SpacetimePoint::at({0, 1, 0}, 0.2), 0.5);
    EXPECT_EQ(f.kind, SpineKind::FullCylinder);
    EXPECT_EQ(f.dim(), 1);
    EXPECT_NEAR(f.spatial_distance(e2), 0, 1e-12);
}

TEST(ConeSplitting, ViolationsNameTheInequality) {
    const Vec e1 = make_vec({1, 0, 0});
    try {
        cone_splitting_case(spine(SpineKind::TimeSlice, {e1}), SpacetimePoint::at({0.3, 0.1, 0}, 0.1), 0.5);
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.kind(), ErrorKind::CaseViolation);
    }
    EXPECT_THROW(cone_splitting_case(spine(SpineKind::HalfCylinder, {e1}, 0.1), SpacetimePoint::at({0.2, 0, 0}, 0.2), 0.5),
                 Error);
    EXPECT_THROW(cone_splitting_case(spine(SpineKind::FullCylinder, {e1}), SpacetimePoint::at({0.2, 0.1, 0}, 0), 0.5),
                 Error);
}

TEST(Promotion, ExactQuasistaticPlane) {
    auto f = analytic(SelfSimilarModel::quasistatic_plane(1, 2, 0));
    auto W = spine_of(*f.model);
    auto res = quasistatic_promotion_check(f, W, SpacetimePoint::at({0.1, 0}, -0.5), 0.2, 0.05);
    EXPECT_TRUE(res.ok);
    EXPECT_LT(res.dist, 1e-4);
    try {
        quasistatic_promotion_check(f, W, SpacetimePoint::at({0.1, 0}, -0.04), 0.2, 0.05);  // s = T - gamma^2
        FAIL();
    } catch (const Error& err) {
        EXPECT_EQ(err.kind(), ErrorKind::CaseViolation);
    }
}

TEST(Promotion, PostRestartDumbbellCap) {
    const auto& f = sft::flow("dumbbell");
    const double tp = f.singular_points.front().t;
    const VarifoldSlice* s = nullptr;
    for (const auto& sl : f.slices)
        if (sl.t >= tp + 0.3) {
            s = &sl;
            break;
        }
    ASSERT_NE(s, nullptr);
    std::size_t best = 0;
    for (std::size_t i = 0; i < s->rings.size(); ++i)
        if (s->rings[i].z > 0 && s->rings[i].u > s->rings[best].u) best = i;
    auto Y = sft::ring_point(*s, best);
    Spine W;
    W.kind = SpineKind::HalfCylinder;
    W.base = {3, Y.x, Y.t + 0.5};
    W.time = W.base.t;
    auto res = quasistatic_promotion_check(f, W, Y, 0.2, 0.05);
    EXPECT_TRUE(res.ok) << res.dist;
}
