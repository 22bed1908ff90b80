#include <doctest.h>

#include <cmath>
#include <random>

#include "atyp/glm.hpp"

using namespace atyp;

namespace {

Design intercept_only(std::vector<double> y) {
    Design d;
    d.x = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(y.size()), 1);
    d.y = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    d.names = {"Intercept"};
    return d;
}

Design random_design(std::mt19937_64& rng, int n, int p) {
    std::normal_distribution<double> z(0, 1);
    Design d;
    d.x.resize(n, p);
    for (int i = 0; i < n; ++i) {
        d.x(i, 0) = 1.0;
        for (int k = 1; k < p; ++k) d.x(i, k) = z(rng);
    }
    d.names.push_back("Intercept");
    for (int k = 1; k < p; ++k) d.names.push_back("x" + std::to_string(k));
    d.y.resize(n);
    return d;
}

// Independent Poisson MLE by plain Newton on the canonical link.
Eigen::VectorXd poisson_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(x.cols());
    b(0) = std::log(y.mean());
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd mu = (x * b).array().exp();
        Eigen::VectorXd g = x.transpose() * (y - mu);
        Eigen::MatrixXd h = x.transpose() * mu.asDiagonal() * x;
        Eigen::VectorXd step = h.ldlt().solve(g);
        b += step;
        if (step.norm() < 1e-14) break;
    }
    return b;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST_CASE("intercept-only MLEs") {
    auto nb = fit_negbin(intercept_only({1, 2, 3}), 1.0);
    CHECK(nb.converged);
    CHECK(std::abs(nb.coefficients[0].coef - std::log(2.0)) < 1e-8);

    // 1-D grid check of the same likelihood
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 1);
    const Eigen::VectorXd y = (Eigen::VectorXd(3) << 1, 2, 3).finished();
    double best = -1e300, arg = 0;
    for (double b = 0.0; b <= 1.5; b += 1e-4) {
        const double ll = negbin_loglik(x, y, 1.0, Eigen::VectorXd::Constant(1, b));
        if (ll > best) best = ll, arg = b;
    }
    CHECK(std::abs(arg - std::log(2.0)) < 1e-4);

    auto lg = fit_logistic(intercept_only({0, 1, 1, 1}));
    CHECK(lg.converged);
    CHECK(std::abs(lg.coefficients[0].coef - std::log(3.0)) < 1e-8);
    REQUIRE(lg.pseudo_r2);
    CHECK(std::abs(*lg.pseudo_r2) < 1e-10);
}

TEST_CASE("degenerate outcomes") {
    CHECK_THROWS_AS(fit_negbin(intercept_only({0, 0, 0, 0}), 1.0), BoundaryError);
    CHECK_THROWS_AS(fit_negbin(intercept_only({1, -1, 2}), 1.0), InvalidOutcomeError);
    CHECK_THROWS_AS(fit_negbin(intercept_only({1.5, 1, 2}), 1.0), InvalidOutcomeError);
    CHECK_THROWS_AS(fit_logistic(intercept_only({0, 2, 1})), InvalidOutcomeError);

    Design sep;
    sep.x.resize(6, 2);
    sep.x << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
    sep.y = (Eigen::VectorXd(6) << 0, 0, 0, 1, 1, 1).finished();
    sep.names = {"Intercept", "x"};
    CHECK_THROWS_AS(fit_logistic(sep), SeparationError);

    Design rank;
    rank.x.resize(4, 3);
    rank.x << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8;
    rank.y = (Eigen::VectorXd(4) << 1, 2, 3, 4).finished();
    rank.names = {"Intercept", "a", "b"};
    try {
        fit_ols(rank);
        FAIL("expected rank deficiency");
    } catch (const RankDeficientError& e) {
        CHECK(std::string(e.what()).find('b') != std::string::npos);
    }
}

TEST_CASE("analytic gradients match central differences") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z(0, 0.3);
    auto d = random_design(rng, 40, 4);
    std::poisson_distribution<int> pois(3.0);
    for (int i = 0; i < 40; ++i) d.y(i) = pois(rng);
    Eigen::VectorXd yb = d.y.unaryExpr([](double v) { return v > 3 ? 1.0 : 0.0; });

    for (int point = 0; point < 5; ++point) {
        Eigen::VectorXd b(4);
        for (int k = 0; k < 4; ++k) b(k) = z(rng);
        auto fd = [&](auto&& f) {
            Eigen::VectorXd g(4);
            for (int k = 0; k < 4; ++k) {
                const double h = 1e-5 * std::max(1.0, std::abs(b(k)));
                Eigen::VectorXd bp = b, bm = b;
                bp(k) += h;
                bm(k) -= h;
                g(k) = (f(bp) - f(bm)) / (2 * h);
            }
            return g;
        };
        const auto g_nb = negbin_score(d.x, d.y, 1.0, b);
        const auto f_nb = fd([&](const Eigen::VectorXd& v) { return negbin_loglik(d.x, d.y, 1.0, v); });
        CHECK((g_nb - f_nb).norm() / std::max(1.0, g_nb.norm()) < 1e-6);

        const auto g_lg = logistic_score(d.x, yb, b);
        const auto f_lg = fd([&](const Eigen::VectorXd& v) { return logistic_loglik(d.x, yb, v); });
        CHECK((g_lg - f_lg).norm() / std::max(1.0, g_lg.norm()) < 1e-6);

        const auto g_ol = ols_gradient(d.x, d.y, b);
        const auto f_ol = fd([&](const Eigen::VectorXd& v) { return ols_objective(d.x, d.y, v); });
        CHECK((g_ol - f_ol).norm() / std::max(1.0, g_ol.norm()) < 1e-6);

        // Hessian column against differences of the score
        const auto h = negbin_hessian(d.x, d.y, 1.0, b);
        for (int k = 0; k < 4; ++k) {
            Eigen::VectorXd bp = b, bm = b;
            bp(k) += 1e-5;
            bm(k) -= 1e-5;
            const Eigen::VectorXd col = (negbin_score(d.x, d.y, 1.0, bp) - negbin_score(d.x, d.y, 1.0, bm)) / 2e-5;
            CHECK((h.col(k) - col).norm() / std::max(1.0, col.norm()) < 1e-6);
        }
    }
}

TEST_CASE("converged fits satisfy the gradient criterion and never decrease the likelihood") {
    std::mt19937_64 rng(23);
    auto d = random_design(rng, 300, 3);
    std::gamma_distribution<double> g(1.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const double mu = std::exp(0.5 + 0.3 * d.x(i, 1) - 0.2 * d.x(i, 2));
        std::poisson_distribution<int> p(mu * g(rng));
        d.y(i) = p(rng);
    }
    auto fit = fit_negbin(d, 1.0);
    REQUIRE(fit.converged);
    const auto b = fit.beta();
    CHECK(negbin_score(d.x, d.y, 1.0, b).norm() <= 1e-8 * (1 + b.norm()));
    for (std::size_t k = 1; k < fit.loglik_trace.size(); ++k)
        CHECK(fit.loglik_trace[k] >= fit.loglik_trace[k - 1] - 1e-12 * std::abs(fit.loglik_trace[k - 1]));
    for (const auto& c : fit.coefficients) {
        CHECK(c.ci_low < c.coef);
        CHECK(c.coef < c.ci_high);
        CHECK(c.ci_high - c.coef == doctest::Approx(1.959963984540054 * c.std_err));
        CHECK(c.p_value >= 0.0);
        CHECK(c.p_value <= 1.0);
    }
    CHECK(fit.deviance >= 0.0);
    CHECK(fit.pearson_chi2 >= 0.0);
    CHECK(fit.n_obs == 300);
    CHECK(fit.df_residuals == 297);

    auto expected = fit_negbin(d, 1.0, {1e-10, 1e-8, 100, Information::Expected});
    CHECK(std::abs(expected.coefficients[1].coef - fit.coefficients[1].coef) < 1e-8);
    CHECK(expected.coefficients[1].std_err > 0.0);
}

TEST_CASE("NB approaches the Poisson MLE as alpha vanishes") {
    std::mt19937_64 rng(31);
    auto d = random_design(rng, 60, 3);
    for (int i = 0; i < 60; ++i) {
        std::poisson_distribution<int> p(std::exp(0.7 + 0.4 * d.x(i, 1)));
        d.y(i) = p(rng);
    }
    auto nb = fit_negbin(d, 1e-8);
    auto po = poisson_fit(d.x, d.y);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(nb.coefficients[static_cast<std::size_t>(k)].coef - po(k)) < 1e-4);
}

TEST_CASE("OLS matches a dense normal-equations solve") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> z(0, 1);
    for (int trial = 0; trial < 5; ++trial) {
        auto d = random_design(rng, 50, 4);
        for (int i = 0; i < 50; ++i) d.y(i) = 1.0 + 2.0 * d.x(i, 1) - d.x(i, 3) + z(rng);
        auto fit = fit_ols(d);
        Eigen::MatrixXd xtx = d.x.transpose() * d.x;
        Eigen::VectorXd xty = d.x.transpose() * d.y;
        // Gaussian elimination with partial pivoting, written out
        const int p = 4;
        Eigen::MatrixXd a(p, p + 1);
        a << xtx, xty;
        for (int c = 0; c < p; ++c) {
            int piv = c;
            for (int r = c + 1; r < p; ++r)
                if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
            a.row(c).swap(a.row(piv));
            for (int r = c + 1; r < p; ++r) a.row(r) -= a(r, c) / a(c, c) * a.row(c);
        }
        Eigen::VectorXd b(p);
        for (int r = p - 1; r >= 0; --r) {
            double s = a(r, p);
            for (int k = r + 1; k < p; ++k) s -= a(r, k) * b(k);
            b(r) = s / a(r, r);
        }
        for (int k = 0; k < p; ++k) CHECK(std::abs(fit.coefficients[static_cast<std::size_t>(k)].coef - b(k)) < 1e-8);
        const Eigen::VectorXd resid = d.y - d.x * fit.beta();
        CHECK((d.x.transpose() * resid).cwiseAbs().maxCoeff() < 1e-8);
        REQUIRE(fit.r_squared);
        REQUIRE(fit.f_statistic);
        CHECK(fit.stat_name == "t");
    }

    Design exact;
    exact.x.resize(5, 2);
    exact.x << 1, 1, 1, 2, 1, 3, 1, 4, 1, 5;
    exact.y = 2.0 * exact.x.col(1);
    exact.names = {"Intercept", "x"};
    auto fe = fit_ols(exact);
    CHECK(fe.coefficients[1].coef == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(*fe.r_squared == doctest::Approx(1.0).epsilon(1e-12));

    Design orth;
    orth.x.resize(4, 2);
    orth.x << 1, -1, 1, 1, 1, -1, 1, 1;
    orth.y = (Eigen::VectorXd(4) << 3, 3, 5, 5).finished();
    orth.names = {"Intercept", "x"};
    CHECK(std::abs(fit_ols(orth).coefficients[1].coef) < 1e-10);
}

TEST_CASE("effect sizes") {
    CHECK(effect_pct(0.0).percent == 0.0);
    CHECK(std::abs(effect_pct(0.1579).percent - 17.1) < 0.05);
    CHECK(std::abs(effect_pct(0.1692).percent - 18.4) < 0.05);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 100; ++i) {
        const double a = u(rng), b = u(rng);
        const double lhs = (1 + effect_pct(a).percent / 100) * (1 + effect_pct(b).percent / 100);
        CHECK(std::abs(lhs - (1 + effect_pct(a + b).percent / 100)) < 1e-12);
    }
}

TEST_CASE("regression table layout") {
    auto fit = fit_negbin(intercept_only({1, 2, 3, 0, 4}), 1.0);
    const auto csv = fit_to_csv(fit);
    CHECK(csv.rfind("variable,coef,std err,z,P>|z|,ci_low,ci_high\n", 0) == 0);
    CHECK(csv.find("\nn_obs,5\n") != std::string::npos);
    CHECK(csv.find("\ndispersion,1\n") != std::string::npos);
    CHECK(csv.find("\ndeviance,") != std::string::npos);
    CHECK(csv.find("\npearson_chi2,") != std::string::npos);
    const auto j = fit_to_json(fit);
    CHECK(j["coefficients"][0]["variable"] == "Intercept");
    CHECK(rel_err(j["coefficients"][0]["coef"].get<double>(), std::log(2.0)) < 1e-8);
}
