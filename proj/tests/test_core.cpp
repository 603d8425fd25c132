#include "memsfb/core.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace memsfb;

namespace
{

DeflectionProfile quartic(const Grid1D& g, double c)
{
    return DeflectionProfile::sample(g, [c](double x) { return -c * (1 - x * x) * (1 - x * x); });
}

std::vector<double> sampled(const Grid1D& g, double (*f)(double))
{
    std::vector<double> v(g.size());
    for (int i = 0; i < g.size(); ++i)
        v[i] = f(g.x(i));
    return v;
}

} // namespace

TEST(ModelParams, RejectsInvalidValues)
{
    ModelParams p;
    EXPECT_NO_THROW(p.validate());
    p.beta = 0;
    EXPECT_THROW(p.validate(), DomainError);
    p = {};
    p.tau = -1;
    EXPECT_THROW(p.validate(), DomainError);
    p = {};
    p.a = -0.1;
    EXPECT_THROW(p.validate(), DomainError);
    p = {};
    p.epsilon = 0;
    EXPECT_THROW(p.validate(), DomainError);
}

TEST(Grid1D, NodesAreSymmetricAndIncludeZero)
{
    EXPECT_THROW(Grid1D(4), DomainError);
    EXPECT_THROW(Grid1D(3), DomainError);
    const Grid1D g(129);
    EXPECT_DOUBLE_EQ(g.h(), 2.0 / 128);
    EXPECT_EQ(g.x(0), -1.0);
    EXPECT_EQ(g.x(128), 1.0);
    EXPECT_EQ(g.x(g.center()), 0.0);
    for (int i = 0; i < g.size(); ++i)
        EXPECT_EQ(g.x(g.mirror(i)), -g.x(i));
}

TEST(Grid2D, CoversTheRectangle)
{
    EXPECT_THROW(Grid2D(33, 6), DomainError);
    const Grid2D g(33, 17);
    EXPECT_EQ(g.eta(0), 0.0);
    EXPECT_EQ(g.eta(16), 1.0);
    EXPECT_EQ(g.points(), 33u * 17u);
    EXPECT_DOUBLE_EQ(g.heta(), 1.0 / 16);
}

TEST(DeflectionProfile, InvariantsAndTransforms)
{
    const Grid1D g(33);
    EXPECT_THROW(DeflectionProfile(g, std::vector<double>(5)), DomainError);
    auto u = quartic(g, 0.5);
    EXPECT_TRUE(u.is_clamped());
    EXPECT_TRUE(u.admissible());
    EXPECT_EQ(u.asymmetry(), 0.0);
    EXPECT_DOUBLE_EQ(u.min(), -0.5);
    EXPECT_DOUBLE_EQ(u.sup_norm(), 0.5);
    EXPECT_DOUBLE_EQ(u.scaled(2.0).min(), -1.0);
    EXPECT_FALSE(u.scaled(2.0).admissible());

    auto v = u;
    v.mutable_values()[3] += 0.1;
    EXPECT_GT(v.asymmetry(), 0.09);
    v.symmetrize();
    EXPECT_EQ(v.asymmetry(), 0.0);
    EXPECT_DOUBLE_EQ(v[3], u[3] + 0.05);

    EXPECT_THROW(require_gap(u.scaled(1.999999)), TouchdownError);
    EXPECT_THROW(require_admissible(u.scaled(-1.0)), DomainError);
}

TEST(Quadrature, OneDimensionalExamples)
{
    const Grid1D g(129);
    EXPECT_NEAR(quad1d(g, std::vector<double>(129, 1.0)), 2.0, 1e-14);
    EXPECT_NEAR(quad1d(g, sampled(g, [](double x) { return x * x; })), 2.0 / 3.0, 1e-14);
    // Simpson's error on a quartic is exactly (b-a) h^4 f''''/180 = 4 h^4/15.
    const double h4 = std::pow(g.h(), 4);
    const double q  = quad1d(g, sampled(g, [](double x) { return (1 - x * x) * (1 - x * x); }));
    EXPECT_NEAR(q, 16.0 / 15.0 + 4.0 * h4 / 15.0, 1e-14);
    EXPECT_NEAR(q, 16.0 / 15.0, 2e-8);
    EXPECT_THROW(quad1d(g, std::vector<double>(5, 1.0)), DomainError);
}

TEST(Quadrature, ExactForCubicsOnEveryGrid)
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> c(-3, 3);
    for (int n : {5, 7, 9, 33, 65})
    {
        const Grid1D g(n);
        for (int trial = 0; trial < 5; ++trial)
        {
            const double a0 = c(rng), a1 = c(rng), a2 = c(rng), a3 = c(rng);
            std::vector<double> f(n);
            for (int i = 0; i < n; ++i)
            {
                const double x = g.x(i);
                f[i]           = a0 + a1 * x + a2 * x * x + a3 * x * x * x;
            }
            EXPECT_NEAR(quad1d(g, f), 2 * a0 + 2 * a2 / 3, 1e-12) << "n=" << n;
        }
    }
}

TEST(Quadrature, TwoDimensionalExamples)
{
    const Grid2D g(129, 65);
    std::vector<double> one(g.points(), 1.0), eta(g.points()), x2e2(g.points());
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.neta(); ++j)
        {
            eta[g.index(i, j)]  = g.eta(j);
            x2e2[g.index(i, j)] = g.x(i) * g.x(i) * g.eta(j) * g.eta(j);
        }
    EXPECT_NEAR(quad2d(g, one), 2.0, 1e-13);
    EXPECT_NEAR(quad2d(g, eta), 1.0, 1e-13);
    EXPECT_NEAR(quad2d(g, x2e2), 2.0 / 9.0, 1e-12);
    EXPECT_THROW(quad2d(g, std::vector<double>(10)), DomainError);
}

TEST(Differences, ZeroAndSymmetry)
{
    const Grid1D g(65);
    const DeflectionProfile zero(g);
    for (double v : d1(zero))
        EXPECT_EQ(v, 0.0);
    for (double v : d2(zero))
        EXPECT_EQ(v, 0.0);

    const auto u = quartic(g, -1.0); // (1-x^2)^2
    const auto a = d1(u), b = d2(u);
    EXPECT_EQ(a[g.center()], 0.0);
    for (int i = 0; i < g.size(); ++i)
    {
        EXPECT_EQ(a[g.mirror(i)], -a[i]);
        EXPECT_EQ(b[g.mirror(i)], b[i]);
    }
    // Reflected ghosts make the end slopes vanish.
    EXPECT_EQ(a.front(), 0.0);
    EXPECT_EQ(a.back(), 0.0);
}

// The centered first difference of (1-x^2)^2 is 4x(1-x^2) - 4x h^2, so its
// squared norm is 256/105 - (128/15) h^2 + O(h^4). At n = 257 the h^2 term is
// about 5.2e-4; the expansion is checked tightly and the plain limit loosely.
TEST(Differences, FirstDifferenceNormMatchesSymbolicIntegral)
{
    const Grid1D g(257);
    const auto u   = quartic(g, -1.0);
    const auto du  = d1(u);
    const double h = g.h();
    const double exact = oracle::integrate([](double x) { return 16 * x * x * (1 - x * x) * (1 - x * x); });
    EXPECT_NEAR(exact, 256.0 / 105.0, 1e-13);
    const double computed = quad1d(g, std::vector<double>(
                                          [&] {
                                              std::vector<double> s(du.size());
                                              for (std::size_t i = 0; i < du.size(); ++i)
                                                  s[i] = du[i] * du[i];
                                              return s;
                                          }()));
    EXPECT_NEAR(computed, exact - 128.0 / 15.0 * h * h, 2e-6);
    EXPECT_NEAR(computed, exact, 1e-3);
}

TEST(Differences, SecondAndFourthDifferencesConverge)
{
    for (int n : {65, 129})
    {
        const Grid1D g(n);
        const auto u  = quartic(g, -1.0);
        const auto b  = d2(u);
        const auto q4 = d4(u);
        double e2 = 0, e4 = 0;
        for (int i = 2; i < n - 2; ++i)
        {
            const double x = g.x(i);
            e2 = std::max(e2, std::abs(b[i] - (12 * x * x - 4)));
            e4 = std::max(e4, std::abs(q4[i] - 24.0));
        }
        EXPECT_LT(e2, 3 * g.h() * g.h());
        EXPECT_LT(e4, 1e-6 * n * n * n * n / 1e4);
        EXPECT_EQ(q4.front(), 0.0);
        EXPECT_EQ(q4.back(), 0.0);
    }
}

TEST(Differences, OpenDifferenceIsSecondOrderAtTheEnds)
{
    const Grid1D g(33);
    const auto f  = sampled(g, [](double x) { return x * x + 3 * x; });
    const auto df = diff_open(f, g.h());
    for (int i = 0; i < g.size(); ++i)
        EXPECT_NEAR(df[i], 2 * g.x(i) + 3, 1e-12);
}

TEST(SummationByParts, PairingIdentitiesHoldExactly)
{
    const Grid1D g(65);
    const auto u = DeflectionProfile::sample(g, [](double x) {
        const double s = 1 - x * x;
        return -0.4 * s * s - 0.2 * s * s * s * (1 + 0.5 * x * x);
    });
    const auto q4 = d4(u), q2 = d2(u);
    std::vector<double> m2(q2.size());
    for (std::size_t i = 0; i < q2.size(); ++i)
        m2[i] = -q2[i];
    m2.front() = m2.back() = 0.0;
    EXPECT_NEAR(bending_norm(u), pairing(g, q4, u.values()), 1e-10 * bending_norm(u));
    EXPECT_NEAR(stretch_norm(u), pairing(g, m2, u.values()), 1e-12);
}

TEST(MechanicalEnergy, Examples)
{
    const Grid1D g(257);
    ModelParams p;
    EXPECT_EQ(mechanical_energy(DeflectionProfile(g), p), 0.0);

    const auto u = quartic(g, 0.5);
    const double bend = oracle::integrate([](double x) { return 0.25 * (12 * x * x - 4) * (12 * x * x - 4); });
    const double str  = oracle::integrate([](double x) { return 0.25 * 16 * x * x * (1 - x * x) * (1 - x * x); });
    EXPECT_NEAR(bend, 0.25 * 128.0 / 5.0, 1e-12);
    EXPECT_NEAR(str, 64.0 / 105.0, 1e-12);
    EXPECT_NEAR(mechanical_energy(u, p), 3.2, 1e-3);

    p.tau = 1;
    p.a   = 2;
    const double expected = 0.5 * bend + 0.5 * (1 + 0.5 * 2 * str) * str;
    EXPECT_NEAR(expected, 3.6905, 1e-4);
    EXPECT_NEAR(mechanical_energy(u, p), expected, 1e-3);

    EXPECT_THROW(mechanical_energy(u.scaled(-1.0), p), DomainError);
    EXPECT_THROW(mechanical_energy(u.scaled(2.0), p), TouchdownError);
}

TEST(MechanicalEnergy, HomogeneityAndTermBounds)
{
    const Grid1D g(129);
    ModelParams p;
    p.tau        = 0.7;
    const auto u = DeflectionProfile::sample(g, [](double x) {
        const double s = 1 - x * x;
        return -0.3 * s * s * s;
    });
    for (double c : {0.1, 0.5, 2.0})
        EXPECT_NEAR(mechanical_energy(u.scaled(c), p), c * c * mechanical_energy(u, p), 1e-12);
    p.a = 3.0;
    EXPECT_GE(mechanical_energy(u, p), 0.5 * p.beta * bending_norm(u));
    EXPECT_GT(mechanical_energy(u, p), 0.0);
}
