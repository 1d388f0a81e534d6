#include "etaq/domain.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace etaq;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }
} // namespace

TEST(DomainSpec, Validation) {
    EXPECT_NO_THROW(DomainSpec::ball(3, 1.0).validate());
    EXPECT_THROW(DomainSpec::ball(3, -1.0).validate(), ArgumentError);
    EXPECT_THROW(DomainSpec::ball(1, 1.0).validate(), ArgumentError);
    EXPECT_THROW(DomainSpec::superellipsoid(v2(1, 1), 1.5).validate(), ArgumentError);
    EXPECT_THROW(DomainSpec::superellipsoid(v2(1, 1), 7.0).validate(), ArgumentError);
    EXPECT_THROW(DomainSpec::box(v2(1, 0)).validate(), ArgumentError);
}

TEST(DomainSpec, Radii) {
    const DomainSpec b = DomainSpec::box(v2(3, 4));
    EXPECT_EQ(b.inradius(), 3.0);
    EXPECT_EQ(b.outradius(), 5.0);
    const DomainSpec e = DomainSpec::ellipsoid(v3(1, 2, 0.5));
    EXPECT_EQ(e.inradius(), 0.5);
    EXPECT_EQ(e.outradius(), 2.0);
    EXPECT_EQ(to_string(Shape::superellipsoid), "superellipsoid");
}

TEST(SignedDistance, Ball) {
    const DomainSpec d = DomainSpec::ball(2, 1.0);
    EXPECT_NEAR(signed_distance(d, v2(0, 0)), 1.0, 1e-14);
    EXPECT_NEAR(signed_distance(d, v2(0.5, 0)), 0.5, 1e-14);
    EXPECT_NEAR(signed_distance(d, v2(2, 0)), -1.0, 1e-14);
    EXPECT_NEAR(signed_distance(d, v2(0.6, 0.8)), 0.0, 1e-14);
}

TEST(SignedDistance, Box) {
    const DomainSpec d = DomainSpec::box(v2(1, 2));
    EXPECT_NEAR(signed_distance(d, v2(0, 0)), 1.0, 1e-14);
    EXPECT_NEAR(signed_distance(d, v2(0.5, 1.9)), 0.1, 1e-14);
    EXPECT_NEAR(signed_distance(d, v2(2, 0)), -1.0, 1e-14);
    EXPECT_NEAR(signed_distance(d, v2(4, 6)), -5.0, 1e-14);  // corner (1,2) at distance 5
}

TEST(SignedDistance, EllipseAgainstDenseBoundarySampling) {
    // Brute force: min distance to 200000 boundary points.
    const DomainSpec d = DomainSpec::ellipsoid(v2(2, 1));
    std::vector<Vec> pts;
    for (int i = 0; i < 200000; ++i) {
        const double t = 2.0 * std::numbers::pi * i / 200000;
        pts.push_back(v2(2 * std::cos(t), std::sin(t)));
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(-2.5, 2.5), uy(-1.5, 1.5);
    for (int s = 0; s < 40; ++s) {
        const Vec x = v2(ux(rng), uy(rng));
        double best = 1e300;
        for (const Vec& p : pts) best = std::min(best, (p - x).norm());
        const bool inside = x[0] * x[0] / 4 + x[1] * x[1] < 1;
        EXPECT_NEAR(std::abs(signed_distance(d, x)), best, 1e-4) << x.transpose();
        EXPECT_EQ(signed_distance(d, x) > 0, inside);
    }
}

TEST(SignedDistance, Lipschitz) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const DomainSpec& d : {DomainSpec::ellipsoid(v3(1, 0.6, 1.2)), DomainSpec::superellipsoid(v3(1, 1, 0.8), 4.0),
                                DomainSpec::box(v3(1, 0.5, 0.7))}) {
        for (int s = 0; s < 200; ++s) {
            const Vec x = v3(u(rng), u(rng), u(rng));
            const Vec y = v3(u(rng), u(rng), u(rng));
            EXPECT_LE(std::abs(signed_distance(d, x) - signed_distance(d, y)), (x - y).norm() + 1e-9);
        }
    }
}

TEST(BoundaryCurvatures, EllipseVertices) {
    const DomainSpec d = DomainSpec::ellipsoid(v2(2, 1));
    EXPECT_NEAR(boundary_curvatures(d, v2(2, 0)).kappa_b[0], 2.0, 1e-12);   // a / b^2
    EXPECT_NEAR(boundary_curvatures(d, v2(0, 1)).kappa_b[0], 0.25, 1e-12);  // b / a^2
    const BoundaryPoint bp = boundary_curvatures(d, v2(2, 0));
    EXPECT_NEAR(bp.inward_normal[0], -1.0, 1e-14);
}

TEST(BoundaryCurvatures, EllipseGeneralPointClosedForm) {
    const double a = 2, b = 1;
    const DomainSpec d = DomainSpec::ellipsoid(v2(a, b));
    for (double t : {0.3, 1.0, 2.2, 4.0}) {
        const Vec x = v2(a * std::cos(t), b * std::sin(t));
        const double exact = a * b / std::pow(a * a * std::sin(t) * std::sin(t) + b * b * std::cos(t) * std::cos(t), 1.5);
        EXPECT_NEAR(boundary_curvatures(d, x).kappa_b[0], exact, 1e-10);
    }
}

TEST(BoundaryCurvatures, SphereRotationInvariant) {
    const DomainSpec d = DomainSpec::ball(3, 2.0);
    for (const Vec& s : sphere_samples(3, 50)) {
        const EigenTuple k = boundary_curvatures(d, 2.0 * s).kappa_b;
        EXPECT_LE((k.array() - 0.5).abs().maxCoeff(), 1e-12);
    }
}

TEST(BoundaryCurvatures, OffBoundaryRejected) {
    EXPECT_THROW((void)boundary_curvatures(DomainSpec::ball(2, 1.0), v2(0.5, 0)), ArgumentError);
    EXPECT_THROW((void)boundary_curvatures(DomainSpec::box(v2(1, 1)), v2(1, 1)), ArgumentError);
}

TEST(BoundaryCurvatures, BoxFaceFlat) {
    const BoundaryPoint bp = boundary_curvatures(DomainSpec::box(v3(1, 1, 1)), v3(1, 0.2, -0.3));
    EXPECT_LE(bp.kappa_b.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BoundarySamples, LieOnBoundary) {
    for (const DomainSpec& d : {DomainSpec::ellipsoid(v3(1, 0.5, 2)), DomainSpec::superellipsoid(v3(1, 1, 1), 6.0),
                                DomainSpec::box(v3(1, 2, 3))}) {
        for (const Vec& x : boundary_samples(d, 100)) EXPECT_LT(std::abs(signed_distance(d, x)), 1e-10);
    }
}

TEST(EtaConvexity, BallCertifiedAtKOne) {
    const ConvexityCertificate c = eta_k_convexity(DomainSpec::ball(3, 1.0), 2, 64.0);
    EXPECT_TRUE(c.certified);
    EXPECT_EQ(c.K_found, 1.0);
    EXPECT_EQ(c.samples, 64 * 9);
}

TEST(EtaConvexity, BoxIsNonSmooth) {
    const ConvexityCertificate c = eta_k_convexity(DomainSpec::box(v3(1, 1, 1)), 2, 64.0);
    EXPECT_FALSE(c.certified);
    EXPECT_TRUE(c.non_smooth);
}

TEST(EtaConvexity, KRangeChecked) {
    EXPECT_THROW((void)eta_k_convexity(DomainSpec::ball(3, 1.0), 3, 8.0), ArgumentError);
    EXPECT_THROW((void)eta_k_convexity(DomainSpec::ball(3, 1.0), 0, 8.0), ArgumentError);
}

TEST(EtaConvexity, MonotoneInK) {
    // tilde-Gamma_k shrinks with k, so the K needed cannot decrease.
    for (const DomainSpec& d : {DomainSpec::ellipsoid(v3(1, 0.3, 0.3)), DomainSpec::superellipsoid(v3(1, 1, 0.5), 6.0)}) {
        const ConvexityCertificate c1 = eta_k_convexity(d, 1, 1024.0, 400);
        const ConvexityCertificate c2 = eta_k_convexity(d, 2, 1024.0, 400);
        ASSERT_TRUE(c1.certified);
        if (c2.certified) {
            EXPECT_LE(c1.K_found, c2.K_found);
        }
    }
}

TEST(EtaConvexity, Deterministic) {
    const DomainSpec d = DomainSpec::ellipsoid(v3(1, 0.5, 0.25));
    const ConvexityCertificate a = eta_k_convexity(d, 2, 64.0), b = eta_k_convexity(d, 2, 64.0);
    EXPECT_EQ(a.certified, b.certified);
    EXPECT_EQ(a.K_found, b.K_found);
}
