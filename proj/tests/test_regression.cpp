#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "zals/regression.hpp"
#include "zals/simulation.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using zals::FitOptions;
using zals::FittedModel;
using zals::Generator;
using zals::GeneratorKind;
using zals::ModelSpec;
using zals::QuantileLS;
using zals::SimDesign;
using zals::Zals;

namespace {

// Small spec with a fixed zero pattern for the likelihood unit tests.
ModelSpec toy_spec(GeneratorKind kind = GeneratorKind::log_normal(),
                   double q = 0.5, int n = 40, std::uint64_t seed = 5) {
    zals::Rng rng(seed);
    Eigen::MatrixXd X(n, 2), W(n, 2), V(n, 2);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = W(i, 0) = V(i, 0) = 1.0;
        X(i, 1) = rng.uniform();
        W(i, 1) = rng.uniform();
        V(i, 1) = rng.uniform();
        z[i] = (i % 3 == 0) ? 0.0 : 0.2 + 3.0 * rng.uniform();
    }
    return ModelSpec(kind, q, X, W, V, z);
}

ModelSpec sim_dataset(double q, int n, std::uint64_t seed,
                      GeneratorKind kind = GeneratorKind::log_normal()) {
    SimDesign design;
    design.kind = kind;
    zals::Rng rng(seed);
    return zals::generate_dataset(design, q, n, rng);
}

}  // namespace

TEST_CASE("links") {
    Eigen::RowVectorXd x(3);
    x << 1.0, 0.0, 0.0;
    Eigen::VectorXd beta(3);
    beta << 0.5, 0.7, 1.0;
    CHECK_THAT(zals::link_quantile(x, beta), WithinRel(std::exp(0.5), 1e-14));
    CHECK(zals::link_zero_prob(x, Eigen::VectorXd::Zero(3)) == 0.5);

    Eigen::RowVectorXd one(1);
    one << 1.0;
    Eigen::VectorXd low(1);
    low << -745.0;
    const double p = zals::link_zero_prob(one, low);
    CHECK(p > 0.0);
    CHECK(std::isfinite(p));

    Eigen::VectorXd wrong(2);
    CHECK_THROWS_AS(zals::link_quantile(x, wrong), std::invalid_argument);
}

TEST_CASE("model spec validation") {
    const auto kind = GeneratorKind::log_normal();
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(5, 1);
    Eigen::VectorXd z(5);
    z << 0.0, 1.0, 2.0, 0.0, 3.0;

    CHECK_THROWS_AS(ModelSpec(kind, 1.5, X, X, X, z), std::invalid_argument);

    Eigen::VectorXd bad = z;
    bad[2] = -0.5;
    CHECK_THROWS_WITH(ModelSpec(kind, 0.5, X, X, X, bad),
                      Catch::Matchers::ContainsSubstring("nonnegative"));

    Eigen::MatrixXd deficient(5, 2);
    deficient.col(0).setOnes();
    deficient.col(1).setOnes();  // duplicate of the intercept
    CHECK_THROWS_WITH(ModelSpec(kind, 0.5, deficient, X, X, z),
                      Catch::Matchers::ContainsSubstring("rank deficient"));

    Eigen::VectorXd shorter(4);
    shorter << 0.0, 1.0, 2.0, 3.0;
    CHECK_THROWS_AS(ModelSpec(kind, 0.5, X, X, X, shorter),
                    std::invalid_argument);

    const ModelSpec ok(kind, 0.5, X, X, X, z);
    CHECK(ok.n_zero() == 2);
    CHECK(ok.n_positive() == 3);
    CHECK(ok.z_p() == 0.0);
    const ModelSpec other = ok.with_q_level(0.9);
    CHECK_THAT(other.z_p(), WithinAbs(1.2815515655446004, 1e-9));
    CHECK(other.n_zero() == 2);
}

TEST_CASE("zero-part likelihood") {
    // 40 zeros out of n = 100, intercept-only
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(100, 1);
    Eigen::VectorXd z(100);
    for (int i = 0; i < 100; ++i) z[i] = i < 40 ? 0.0 : 1.0 + i;
    const ModelSpec spec(GeneratorKind::log_normal(), 0.5, X, X, X, z);

    Eigen::VectorXd eta_hat(1);
    eta_hat << zals::logit(0.4);
    CHECK_THAT(zals::loglik_zero_part(spec, eta_hat),
               WithinRel(100.0 * (0.4 * std::log(0.4) + 0.6 * std::log(0.6)),
                         1e-12));
    CHECK_THAT(zals::loglik_zero_part(spec, Eigen::VectorXd::Zero(1)),
               WithinRel(100.0 * std::log(0.5), 1e-12));

    // arbitrary eta against a direct summation oracle
    const ModelSpec toy = toy_spec();
    Eigen::VectorXd eta(2);
    eta << 0.3, -1.1;
    double direct = 0.0;
    for (Eigen::Index i = 0; i < toy.n(); ++i) {
        const double pi = 1.0 / (1.0 + std::exp(-toy.V().row(i).dot(eta)));
        direct += toy.is_zero(i) ? std::log(pi) : std::log(1.0 - pi);
    }
    CHECK_THAT(zals::loglik_zero_part(toy, eta), WithinAbs(direct, 1e-12));
}

TEST_CASE("positive-part likelihood") {
    // single positive observation sitting exactly at its Q_i
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 1);
    Eigen::VectorXd z(2);
    z << 0.0, 2.0;
    const ModelSpec spec(GeneratorKind::log_normal(), 0.5, X, X, X, z);
    Eigen::VectorXd beta(1), kappa(1);
    beta << std::log(2.0);
    kappa << 0.0;
    CHECK_THAT(zals::loglik_positive_part(spec, beta, kappa),
               WithinRel(std::log(0.39894228040143267794) - std::log(2.0),
                         1e-12));

    // all-zero response: empty sum
    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(2);
    const ModelSpec all0(GeneratorKind::log_normal(), 0.5, X, X, X, zeros);
    CHECK(zals::loglik_positive_part(all0, beta, kappa) == 0.0);

    // brute force via the distribution objects
    const ModelSpec toy =
        toy_spec(GeneratorKind::extended_birnbaum_saunders(1.5), 0.7);
    Eigen::VectorXd b(2), k(2);
    b << 0.4, -0.3;
    k << -0.2, 0.5;
    double direct = 0.0;
    for (Eigen::Index i = 0; i < toy.n(); ++i) {
        if (toy.is_zero(i)) continue;
        const QuantileLS d(0.7, std::exp(toy.X().row(i).dot(b)),
                           std::exp(toy.W().row(i).dot(k)), toy.generator());
        direct += std::log(d.pdf(toy.z()[i]));
    }
    CHECK_THAT(zals::loglik_positive_part(toy, b, k), WithinAbs(direct, 1e-10));

    // gradient of l2 against the Richardson oracle
    const ModelSpec data = sim_dataset(0.5, 300, 11);
    const zals::ObjectiveFn l2 = [&data](const Eigen::VectorXd& t) {
        return zals::loglik_positive_part(data, t.head(3), t.tail(3));
    };
    Eigen::VectorXd at(6);
    at << 0.4, 0.6, 0.9, 0.4, 0.7, 0.9;
    const Eigen::VectorXd g = zals::gradient_fd(l2, at);
    const Eigen::VectorXd ref = oracle::richardson_gradient(l2, at);
    for (int j = 0; j < 6; ++j) CHECK_THAT(g[j], WithinRel(ref[j], 1e-5));
}

TEST_CASE("factorization and separability") {
    zals::Rng rng(2024);
    for (int rep = 0; rep < 20; ++rep) {
        const GeneratorKind kind =
            rep % 2 == 0 ? GeneratorKind::log_normal()
                         : GeneratorKind::log_student_t(3.0 + rep);
        const double q = 0.1 + 0.8 * rng.uniform();
        const ModelSpec spec = toy_spec(kind, q, 30, 100 + rep);
        Eigen::VectorXd beta(2), kappa(2), eta(2);
        for (int j = 0; j < 2; ++j) {
            beta[j] = 2.0 * rng.uniform() - 1.0;
            kappa[j] = 2.0 * rng.uniform() - 1.0;
            eta[j] = 2.0 * rng.uniform() - 1.0;
        }

        // direct evaluation of the full mixture log-likelihood
        double direct = 0.0;
        for (Eigen::Index i = 0; i < spec.n(); ++i) {
            const double pi = zals::logistic(spec.V().row(i).dot(eta));
            const Zals mix(pi,
                           QuantileLS(q, std::exp(spec.X().row(i).dot(beta)),
                                      std::exp(spec.W().row(i).dot(kappa)),
                                      spec.generator(), spec.z_p()));
            direct += std::log(mix.density_or_mass(spec.z()[i]));
        }
        const double l1 = zals::loglik_zero_part(spec, eta);
        const double l2 = zals::loglik_positive_part(spec, beta, kappa);
        CHECK_THAT(l1 + l2, WithinAbs(direct, 1e-10));

        // cross-block perturbations change nothing, exactly
        Eigen::VectorXd eta2 = eta;
        eta2[0] += 5.0;
        CHECK(zals::loglik_positive_part(spec, beta, kappa) == l2);
        CHECK(zals::loglik_zero_part(spec, eta2) != l1);
        Eigen::VectorXd beta2 = beta;
        beta2[1] -= 2.0;
        CHECK(zals::loglik_zero_part(spec, eta) == l1);
        CHECK(zals::loglik_positive_part(spec, beta2, kappa) != l2);
    }
}

TEST_CASE("starting values") {
    // balanced zeros give a zero intercept start
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(100, 1);
    Eigen::VectorXd z(100);
    for (int i = 0; i < 100; ++i) z[i] = i < 50 ? 0.0 : 1.0 + i;
    const ModelSpec spec(GeneratorKind::log_normal(), 0.5, X, X, X, z);
    CHECK(zals::initial_values(spec).eta[0] == 0.0);

    // constant positive response: beta0 starts at log c (phi0 floored)
    Eigen::VectorXd zc(100);
    for (int i = 0; i < 100; ++i) zc[i] = i < 20 ? 0.0 : 7.5;
    const ModelSpec cspec(GeneratorKind::log_normal(), 0.5, X, X, X, zc);
    CHECK_THAT(zals::initial_values(cspec).beta[0],
               WithinAbs(std::log(7.5), 1e-3));

    // the quantile-scale shift: at q = 0.9 the start exceeds the location
    // intercept by sqrt(phi0) z_p
    const ModelSpec sim = sim_dataset(0.9, 400, 3);
    const zals::Coefficients init = zals::initial_values(sim);
    Eigen::MatrixXd Xp(sim.n_positive(), 3);
    Eigen::VectorXd y(sim.n_positive());
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sim.n(); ++i) {
        if (sim.is_zero(i)) continue;
        Xp.row(r) = sim.X().row(i);
        y[r] = std::log(sim.z()[i]);
        ++r;
    }
    const Eigen::VectorXd ls = Xp.colPivHouseholderQr().solve(y);
    const double phi0 =
        std::max((y - Xp * ls).squaredNorm() / sim.n_positive(), 1e-8);
    CHECK_THAT(init.beta[0] - ls[0],
               WithinRel(std::sqrt(phi0) * sim.z_p(), 1e-12));
    CHECK(init.beta[0] > ls[0]);

    // fuzz: always finite when constructible
    for (int rep = 0; rep < 25; ++rep) {
        const ModelSpec fuzz =
            toy_spec(GeneratorKind::log_power_exponential(0.3),
                     0.05 + 0.02 * rep, 25, 900 + rep);
        const zals::Coefficients c = zals::initial_values(fuzz);
        CHECK(c.beta.allFinite());
        CHECK(c.kappa.allFinite());
        CHECK(c.eta.allFinite());
    }

    // too few positive rows for the quantile design
    Eigen::MatrixXd X3(5, 3);
    X3 << 1, 0.1, 0.2, 1, 0.3, 0.9, 1, 0.7, 0.4, 1, 0.2, 0.8, 1, 0.9, 0.1;
    Eigen::VectorXd z3(5);
    z3 << 0.0, 0.0, 0.0, 1.0, 2.0;
    const ModelSpec tight(GeneratorKind::log_normal(), 0.5, X3,
                          Eigen::MatrixXd::Ones(5, 1),
                          Eigen::MatrixXd::Ones(5, 1), z3);
    CHECK_THROWS_AS(zals::initial_values(tight), std::invalid_argument);
}

TEST_CASE("fit recovers the generating coefficients") {
    // seeded: deviations at this n are ~1 se, the tolerances below are
    // sub-se, so the draw is pinned
    const ModelSpec data = sim_dataset(0.5, 5000, 32);
    const FittedModel m = zals::fit(data);
    REQUIRE(m.converged());
    REQUIRE(m.zero_block_fitted);
    REQUIRE(m.continuous_block_fitted);

    const double tol_beta = 0.1, tol_kappa = 0.15, tol_eta = 0.15;
    CHECK_THAT(m.beta[0], WithinAbs(0.5, tol_beta));
    CHECK_THAT(m.beta[1], WithinAbs(0.7, tol_beta));
    CHECK_THAT(m.beta[2], WithinAbs(1.0, tol_beta));
    CHECK_THAT(m.kappa[0], WithinAbs(0.5, tol_kappa));
    CHECK_THAT(m.kappa[1], WithinAbs(0.8, tol_kappa));
    CHECK_THAT(m.kappa[2], WithinAbs(1.0, tol_kappa));
    CHECK_THAT(m.eta[0], WithinAbs(0.5, tol_eta));
    CHECK_THAT(m.eta[1], WithinAbs(0.3, tol_eta));
    CHECK_THAT(m.eta[2], WithinAbs(0.5, tol_eta));

    // standard errors present and sane at this sample size
    REQUIRE(m.zero_se_available);
    REQUIRE(m.continuous_se_available);
    for (int j = 0; j < 3; ++j) {
        CHECK(m.se_beta[j] > 0.0);
        CHECK(m.se_beta[j] < 0.2);
        CHECK(m.se_eta[j] > 0.0);
        CHECK(m.se_eta[j] < 0.3);
    }

    // bookkeeping identities
    CHECK_THAT(m.loglik_total, WithinAbs(m.loglik_zero + m.loglik_positive, 1e-10));
    CHECK(m.n_params == 9);
    CHECK_THAT(m.aic, WithinAbs(-2.0 * m.loglik_total + 18.0, 1e-9));
    CHECK_THAT(m.bic,
               WithinAbs(-2.0 * m.loglik_total + 9.0 * std::log(5000.0), 1e-9));
}

TEST_CASE("zero block equals a standalone logistic regression") {
    for (std::uint64_t seed : {21, 22, 23, 24, 25}) {
        const ModelSpec data = sim_dataset(0.5, 1000, seed);
        const FittedModel m = zals::fit(data);
        REQUIRE(m.zero_block_fitted);
        Eigen::VectorXd d(data.n());
        for (Eigen::Index i = 0; i < data.n(); ++i)
            d[i] = data.is_zero(i) ? 1.0 : 0.0;
        const Eigen::VectorXd ref = oracle::irls_logistic(data.V(), d);
        INFO("seed " << seed);
        CHECK((m.eta - ref).lpNorm<Eigen::Infinity>() < 1e-4);
    }
}

TEST_CASE("intercept-only zero block has the closed form") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(120, 1);
    Eigen::VectorXd z(120);
    for (int i = 0; i < 120; ++i) z[i] = i < 42 ? 0.0 : 0.5 + i;
    const ModelSpec spec(GeneratorKind::log_normal(), 0.5, X, X, X, z);
    const FittedModel m = zals::fit(spec);
    CHECK_THAT(m.eta[0], WithinAbs(zals::logit(42.0 / 120.0), 1e-6));
}

TEST_CASE("degenerate responses collapse as documented") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(30, 1);

    // no zeros: the zero block is skipped
    Eigen::VectorXd zpos(30);
    for (int i = 0; i < 30; ++i) zpos[i] = 0.5 + i;
    const FittedModel pos =
        zals::fit(ModelSpec(GeneratorKind::log_normal(), 0.5, X, X, X, zpos));
    CHECK_FALSE(pos.zero_block_fitted);
    CHECK(pos.continuous_block_fitted);
    CHECK(pos.loglik_zero == 0.0);
    CHECK(pos.n_params == 2);

    // all zeros: only the zero block is fitted
    const FittedModel zero =
        zals::fit(ModelSpec(GeneratorKind::log_normal(), 0.5, X, X, X,
                            Eigen::VectorXd::Zero(30)));
    CHECK(zero.zero_block_fitted);
    CHECK_FALSE(zero.continuous_block_fitted);
    CHECK(zero.loglik_positive == 0.0);
}

TEST_CASE("aic and bic recompute from the stored pieces") {
    const FittedModel m = zals::fit(toy_spec());
    CHECK(m.aic == -2.0 * m.loglik_total + 2.0 * m.n_params);
    CHECK(m.bic == -2.0 * m.loglik_total +
                       m.n_params * std::log(static_cast<double>(m.spec->n())));
}

TEST_CASE("scale equivariance of the fit") {
    const ModelSpec data = sim_dataset(0.5, 1500, 99);
    const FittedModel base = zals::fit(data);
    Eigen::VectorXd scaled = data.z() * 10.0;
    const ModelSpec sdata(data.kind(), data.q_level(), data.X(), data.W(),
                          data.V(), scaled);
    const FittedModel shifted = zals::fit(sdata);
    REQUIRE(base.converged());
    REQUIRE(shifted.converged());

    CHECK_THAT(shifted.beta[0] - base.beta[0], WithinAbs(std::log(10.0), 1e-3));
    for (int j = 1; j < 3; ++j)
        CHECK_THAT(shifted.beta[j], WithinAbs(base.beta[j], 1e-4));
    for (int j = 0; j < 3; ++j) {
        CHECK_THAT(shifted.kappa[j], WithinAbs(base.kappa[j], 1e-4));
        CHECK_THAT(shifted.eta[j], WithinAbs(base.eta[j], 1e-12));
    }
}

TEST_CASE("randomized quantile residuals") {
    // well-specified model: residuals look standard normal
    const ModelSpec data = sim_dataset(0.5, 2000, 314);
    const FittedModel m = zals::fit(data);
    REQUIRE(m.converged());
    zals::Rng rng(271828);
    const Eigen::VectorXd r = zals::randomized_quantile_residuals(m, rng);
    REQUIRE(r.size() == 2000);
    for (Eigen::Index i = 0; i < r.size(); ++i) CHECK(std::isfinite(r[i]));

    std::vector<double> rv(r.data(), r.data() + r.size());
    CHECK(oracle::ks_test_pvalue(rv, oracle::normal_cdf) > 0.01);

    // identical seed, identical residuals
    zals::Rng rng2(271828);
    const Eigen::VectorXd r2 = zals::randomized_quantile_residuals(m, rng2);
    CHECK(r == r2);

    // no zero block and an observation at the fitted conditional median
    Eigen::MatrixXd one = Eigen::MatrixXd::Ones(3, 1);
    Eigen::VectorXd zm(3);
    zm << 2.0, 1.0, 4.0;
    FittedModel manual;
    manual.spec = std::make_shared<const ModelSpec>(
        ModelSpec(GeneratorKind::log_normal(), 0.5, one, one, one, zm));
    manual.continuous_block_fitted = true;
    manual.beta = Eigen::VectorXd::Constant(1, std::log(2.0));
    manual.kappa = Eigen::VectorXd::Zero(1);
    zals::Rng rng3(5);
    const Eigen::VectorXd rm = zals::randomized_quantile_residuals(manual, rng3);
    CHECK(rm[0] == 0.0);  // z = Q at q = 0.5, pi = 0
    CHECK(rm[1] < 0.0);
    CHECK(rm[2] > 0.0);
}

TEST_CASE("quantile sweep") {
    const ModelSpec data = sim_dataset(0.5, 600, 1001);

    // a single-point grid reduces to one fit
    const zals::SweepResult single = zals::fit_sweep(data, {0.5});
    const FittedModel direct = zals::fit(data.with_q_level(0.5));
    REQUIRE(single.entries.size() == 1);
    CHECK(single.entries[0].ok);
    CHECK(single.entries[0].model.beta == direct.beta);
    CHECK(single.entries[0].model.aic == direct.aic);
    CHECK(single.n_excluded == 0);

    // eta does not depend on the quantile level
    const zals::SweepResult sweep = zals::fit_sweep(data, {0.2, 0.5, 0.8});
    REQUIRE(sweep.entries.size() == 3);
    for (const auto& e : sweep.entries) {
        REQUIRE(e.ok);
        CHECK(e.model.eta == sweep.entries[0].model.eta);
    }
    CHECK(std::isfinite(sweep.mean_aic));
    CHECK(std::isfinite(sweep.mean_bic));

    // grid validation
    CHECK_THROWS_AS(zals::fit_sweep(data, {}), std::invalid_argument);
    CHECK_THROWS_AS(zals::fit_sweep(data, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(zals::fit_sweep(data, {0.5, 0.2}), std::invalid_argument);
}
