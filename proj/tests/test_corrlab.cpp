#include "spatiocorr/corrlab.hpp"
#include "spatiocorr/error.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace spatiocorr;

TEST_CASE("perfect and anti correlation") {
    auto r = fixture::gaussian_panel(3, 12, 1);
    r.returns.row(1) = r.returns.row(0);
    r.returns.row(2) = -r.returns.row(0);
    const auto c = pearson_matrix(r, full_window(r));
    CHECK(c.values(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.values(0, 2) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(c.values(1, 2) == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("pearson matrix matches the direct formula") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto r = fixture::gaussian_panel(4, 10, seed);
        const auto c = pearson_matrix(r, full_window(r));
        for (Eigen::Index i = 0; i < 4; ++i) {
            CHECK(c.values(i, i) == 1.0);
            for (Eigen::Index j = 0; j < 4; ++j)
                if (i != j) CHECK(std::abs(c.values(i, j) - oracle::pearson(oracle::row(r.returns, i), oracle::row(r.returns, j))) < 1e-12);
        }
    }
}

TEST_CASE("window selection") {
    const auto r = fixture::gaussian_panel(3, 30, 7);
    const auto w = window_ending(r, r.quarters[19], 8);
    const auto c = pearson_matrix(r, w);
    CHECK(c.window == w);
    const Eigen::MatrixXd block = r.returns.middleCols(12, 8);
    CHECK(std::abs(c.values(0, 2) - oracle::pearson(oracle::row(block, 0), oracle::row(block, 2))) < 1e-12);
}

TEST_CASE("zero-variance entity is named") {
    auto r = fixture::gaussian_panel(3, 10, 2);
    r.returns.row(1).setConstant(0.01);
    try {
        pearson_matrix(r, full_window(r));
        FAIL("expected DegenerateInput");
    } catch (const DegenerateInput& e) {
        CHECK(std::string(e.what()).find("S1") != std::string::npos);
    }
}

TEST_CASE("affine invariance of a single entity") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto r = fixture::gaussian_panel(5, 20, seed);
        const auto before = pearson_matrix(r, full_window(r));
        Rng rng(seed);
        std::uniform_real_distribution<double> u(0.1, 10.0);
        const auto i = static_cast<Eigen::Index>(seed % 5);
        r.returns.row(i) = (r.returns.row(i).array() * u(rng) + (u(rng) - 5.0)).matrix();
        const auto after = pearson_matrix(r, full_window(r));
        CHECK((after.values - before.values).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("mean correlation") {
    CHECK(mean_correlation(Eigen::MatrixXd::Identity(4, 4)).mean == 0.0);
    const auto ones = mean_correlation(Eigen::MatrixXd::Ones(5, 5));
    CHECK(ones.mean == 1.0);
    CHECK(ones.stddev == 0.0);
    Eigen::Matrix3d m;
    m << 1, 0.2, 0.4, 0.2, 1, 0.6, 0.4, 0.6, 1;
    const auto mc = mean_correlation(m);
    CHECK(mc.mean == doctest::Approx(0.4));
    CHECK(mc.stddev == doctest::Approx(std::sqrt(0.08 / 3.0)));
}

TEST_CASE("critical correlation value") {
    const double r05 = corr_critical_value(60, 0.05);
    CHECK(std::abs(r05 - oracle::critical_r(58, 0.05)) < 1e-6);
    CHECK(r05 == doctest::Approx(0.254).epsilon(0.002));
    CHECK(corr_critical_value(60, 0.01) > r05);
    CHECK(corr_critical_value(60, 0.999999) < 1e-5);
    CHECK(std::abs(corr_critical_value(60, 0.05, 1) - oracle::critical_r(57, 0.05)) < 1e-6);
    CHECK_THROWS_AS(corr_critical_value(60, 0.0), InvalidArgument);
    CHECK_THROWS_AS(corr_critical_value(2, 0.05), InvalidArgument);
}

TEST_CASE("critical value holds its size under independence") {
    Rng rng(2024);
    std::normal_distribution<double> z;
    const double crit = corr_critical_value(60, 0.05);
    int exceed = 0;
    const int trials = 100000;
    Eigen::VectorXd a(60), b(60);
    for (int k = 0; k < trials; ++k) {
        for (int t = 0; t < 60; ++t) {
            a(t) = z(rng);
            b(t) = z(rng);
        }
        if (std::abs(pearson(a, b)) > crit) ++exceed;
    }
    const double rate = static_cast<double>(exceed) / trials;
    // three binomial standard errors around 0.05
    CHECK(std::abs(rate - 0.05) < 3.0 * std::sqrt(0.05 * 0.95 / trials));
}

TEST_CASE("partial correlation equals residual correlation") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto r = fixture::gaussian_panel(5, 30, seed);
        const auto m = fixture::gaussian_panel(1, 30, seed + 1000);
        const Eigen::VectorXd market = m.returns.row(0).transpose();
        for (Eigen::Index i = 0; i < 5; ++i) r.returns.row(i) += 0.7 * market.transpose();
        const auto p = partial_correlation_matrix(r, full_window(r), fixture::series_of(r, market, "m"));
        const auto mv = oracle::row(m.returns, 0);
        for (Eigen::Index i = 0; i < 5; ++i)
            for (Eigen::Index j = 0; j < 5; ++j) {
                if (i == j) {
                    CHECK(p.values(i, j) == 1.0);
                    continue;
                }
                CHECK(p.values(i, j) == p.values(j, i));
                const double expect = oracle::partial_by_regression(oracle::row(r.returns, i), oracle::row(r.returns, j), mv);
                CHECK(std::abs(p.values(i, j) - expect) < 1e-10);
            }
    }
}

TEST_CASE("a market uncorrelated with every entity leaves C unchanged") {
    Eigen::MatrixXd c = fixture::random_symmetric(6, 3, -0.5, 0.5);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
    CHECK((partial_from_correlations(c, zero) - c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("exactly orthogonal market gives P = C on data") {
    // entities are built orthogonal to the market over the window
    auto r = fixture::gaussian_panel(4, 16, 5);
    Eigen::VectorXd market(16);
    for (int t = 0; t < 16; ++t) market(t) = (t % 2 == 0) ? 1.0 : -1.0;
    for (Eigen::Index i = 0; i < 4; ++i) {
        Eigen::VectorXd x = r.returns.row(i).transpose();
        x.array() -= x.mean();
        x -= market * (x.dot(market) / market.squaredNorm());
        r.returns.row(i) = x.transpose();
    }
    const auto c = pearson_matrix(r, full_window(r));
    const auto p = partial_correlation_matrix(r, full_window(r), fixture::series_of(r, market, "alt"));
    CHECK((p.values - c.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("an entity equal to the market is degenerate") {
    auto r = fixture::gaussian_panel(3, 20, 8);
    const Eigen::VectorXd market = r.returns.row(2).transpose();
    try {
        partial_correlation_matrix(r, full_window(r), fixture::series_of(r, market, "m"));
        FAIL("expected DegenerateInput");
    } catch (const DegenerateInput& e) {
        CHECK(std::string(e.what()).find("S2") != std::string::npos);
    }
}
