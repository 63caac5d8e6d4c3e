#include <catch2/catch_amalgamated.hpp>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "zals/generators.hpp"
#include "zals/rng.hpp"

using zals::Generator;
using zals::GeneratorKind;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<GeneratorKind> kind_grid() {
    std::vector<GeneratorKind> kinds{GeneratorKind::log_normal()};
    for (double xi : {1.0, 3.0, 10.0})
        kinds.push_back(GeneratorKind::log_student_t(xi));
    for (double xi : {-0.5, 0.0, 0.5, 1.0})
        kinds.push_back(GeneratorKind::log_power_exponential(xi));
    for (double xi : {0.5, 1.0, 2.0})
        kinds.push_back(GeneratorKind::extended_birnbaum_saunders(xi));
    return kinds;
}

}  // namespace

TEST_CASE("kernel point values") {
    CHECK(zals::kernel(GeneratorKind::log_normal(), 0.0) == 1.0);
    CHECK_THAT(zals::kernel(GeneratorKind::log_student_t(1.0), 1.0),
               WithinRel(0.5, 1e-14));
    // cosh(1) exp(-0.5 sinh^2(1)), high-precision reference
    CHECK_THAT(zals::kernel(GeneratorKind::extended_birnbaum_saunders(2.0), 1.0),
               WithinRel(0.77354758461646719023, 1e-14));
}

TEST_CASE("kernel domain errors") {
    CHECK_THROWS_AS(zals::kernel(GeneratorKind::log_normal(), -0.1),
                    std::invalid_argument);
    CHECK_THROWS_AS(GeneratorKind::log_student_t(0.0), std::invalid_argument);
    CHECK_THROWS_AS(GeneratorKind::log_student_t(-2.0), std::invalid_argument);
    CHECK_THROWS_AS(GeneratorKind::log_power_exponential(-1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(GeneratorKind::log_power_exponential(1.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(GeneratorKind::extended_birnbaum_saunders(0.0),
                    std::invalid_argument);
}

TEST_CASE("log_kernel point values and stability") {
    CHECK(zals::log_kernel(GeneratorKind::log_normal(), 100.0) == -50.0);
    CHECK(zals::log_kernel(GeneratorKind::log_student_t(3.0), 0.0) == 0.0);
    // logcosh(20) - 8 sinh^2(20), extended-precision reference
    CHECK_THAT(zals::log_kernel(
                   GeneratorKind::extended_birnbaum_saunders(0.5), 400.0),
               WithinRel(-4.7077053367403994751e17, 1e-10));
    // no spurious overflow on the way to large arguments
    const double big = zals::log_kernel(
        GeneratorKind::extended_birnbaum_saunders(1.0), 1e4);
    CHECK(std::isfinite(big));
    CHECK(big < -1e40);
}

TEST_CASE("log_kernel consistent with log of kernel") {
    for (const auto& kind : kind_grid()) {
        for (double u : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 400.0}) {
            const double k = zals::kernel(kind, u);
            const double lk = zals::log_kernel(kind, u);
            if (k <= 0.0 || lk < -700.0) continue;  // underflow region
            CHECK_THAT(lk, WithinRel(std::log(k), 1e-12));
        }
    }
}

TEST_CASE("normalizer closed forms") {
    CHECK_THAT(Generator(GeneratorKind::log_normal()).normalizer(),
               WithinRel(0.39894228040143267794, 1e-14));
    CHECK_THAT(Generator(GeneratorKind::log_student_t(1.0)).normalizer(),
               WithinRel(1.0 / M_PI, 1e-12));
    CHECK_THAT(Generator(GeneratorKind::log_student_t(2.0)).normalizer(),
               WithinRel(0.3535533905932737622, 1e-12));
    // power-exponential against 1/((1+xi) 2^{(1+xi)/2} Gamma((1+xi)/2))
    CHECK_THAT(Generator(GeneratorKind::log_power_exponential(0.5)).normalizer(),
               WithinRel(0.323483734855358848, 1e-9));
    CHECK_THAT(Generator(GeneratorKind::log_power_exponential(1.0)).normalizer(),
               WithinRel(0.25, 1e-9));
    // extended Birnbaum-Saunders against 2/(xi sqrt(2 pi))
    CHECK_THAT(
        Generator(GeneratorKind::extended_birnbaum_saunders(2.0)).normalizer(),
        WithinRel(0.398942280401432678, 1e-9));
    CHECK_THAT(
        Generator(GeneratorKind::extended_birnbaum_saunders(0.5)).normalizer(),
        WithinRel(1.59576912160573071, 1e-9));
}

TEST_CASE("normalizer makes the kernel integrate to one") {
    for (const auto& kind : kind_grid()) {
        const Generator gen(kind);
        const double mass = oracle::integrate_symmetric(
            [&](double z) { return gen.normalizer() * zals::kernel(kind, z * z); });
        INFO(kind.name() << " xi=" << kind.xi);
        CHECK_THAT(mass, WithinAbs(1.0, 1e-8));
    }
}

TEST_CASE("cdf at zero and reference points") {
    for (const auto& kind : kind_grid()) {
        CHECK(Generator(kind).cdf(0.0) == 0.5);
    }
    CHECK_THAT(Generator(GeneratorKind::log_normal()).cdf(1.6448536269514722),
               WithinAbs(0.95, 1e-12));
    CHECK_THAT(
        Generator(GeneratorKind::extended_birnbaum_saunders(1.0)).cdf(1.3),
        WithinAbs(0.99965906235321438209, 1e-8));
    // same value straight from the quadrature oracle
    {
        const GeneratorKind kind = GeneratorKind::extended_birnbaum_saunders(1.0);
        const Generator gen(kind);
        const double ref =
            0.5 + gen.normalizer() *
                      oracle::integrate(
                          [&](double z) { return zals::kernel(kind, z * z); },
                          0.0, 1.3);
        CHECK_THAT(gen.cdf(1.3), WithinAbs(ref, 1e-8));
    }
}

TEST_CASE("cdf symmetry") {
    for (const auto& kind : kind_grid()) {
        const Generator gen(kind);
        for (double w : {0.1, 0.5, 1.0, 2.0, 5.0}) {
            INFO(kind.name() << " xi=" << kind.xi << " w=" << w);
            CHECK_THAT(gen.cdf(w) + gen.cdf(-w), WithinAbs(1.0, 1e-10));
        }
    }
}

TEST_CASE("quantile basics and round trip") {
    for (const auto& kind : kind_grid()) {
        const Generator gen(kind);
        CHECK(gen.quantile(0.5) == 0.0);
        for (double p : {0.01, 0.1, 0.5, 0.9, 0.99}) {
            INFO(kind.name() << " xi=" << kind.xi << " p=" << p);
            CHECK_THAT(gen.cdf(gen.quantile(p)), WithinAbs(p, 1e-8));
        }
        CHECK_THROWS_AS(gen.quantile(0.0), std::invalid_argument);
        CHECK_THROWS_AS(gen.quantile(1.0), std::invalid_argument);
    }
    CHECK_THAT(Generator(GeneratorKind::log_normal()).quantile(0.975),
               WithinAbs(1.9599639845400542, 1e-9));
    // bisection-on-cdf oracle for the power-exponential kernel
    CHECK_THAT(
        Generator(GeneratorKind::log_power_exponential(0.5)).quantile(0.9),
        WithinAbs(1.9637443820819972, 1e-8));
    // monotone in p
    const Generator ebs(GeneratorKind::extended_birnbaum_saunders(1.5));
    double prev = -1e9;
    for (double p : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        const double w = ebs.quantile(p);
        CHECK(w > prev);
        prev = w;
    }
}

TEST_CASE("student-t kernel approaches the normal one for huge xi") {
    const Generator lt(GeneratorKind::log_student_t(1e6));
    const Generator ln(GeneratorKind::log_normal());
    for (double w = -3.0; w <= 3.0; w += 0.25) {
        CHECK_THAT(lt.cdf(w), WithinAbs(ln.cdf(w), 1e-3));
    }
}

TEST_CASE("sampling follows the standardized law") {
    // KS test at 1e4 draws for one kind per family
    const std::vector<GeneratorKind> kinds{
        GeneratorKind::log_normal(), GeneratorKind::log_student_t(3.0),
        GeneratorKind::log_power_exponential(0.5),
        GeneratorKind::extended_birnbaum_saunders(1.0)};
    for (const auto& kind : kinds) {
        const Generator gen(kind);
        zals::Rng rng(20250810);
        std::vector<double> draws(10000);
        for (double& d : draws) d = gen.sample(rng);
        const double p = oracle::ks_test_pvalue(
            draws, [&](double x) { return gen.cdf(x); });
        INFO(kind.name() << " xi=" << kind.xi);
        CHECK(p > 0.01);
    }
}

TEST_CASE("lognormal sampling is the inverse-normal transform of the stream") {
    const Generator gen(GeneratorKind::log_normal());
    zals::Rng a(7), b(7);
    const boost::math::normal_distribution<double> n01;
    for (int i = 0; i < 100; ++i) {
        CHECK(gen.sample(a) == boost::math::quantile(n01, b.uniform()));
    }
}

TEST_CASE("sample median is near zero") {
    const Generator gen(GeneratorKind::log_student_t(3.0));
    zals::Rng rng(99);
    std::vector<double> draws(100000);
    for (double& d : draws) d = gen.sample(rng);
    std::nth_element(draws.begin(), draws.begin() + draws.size() / 2,
                     draws.end());
    CHECK_THAT(draws[draws.size() / 2], WithinAbs(0.0, 0.02));
}
