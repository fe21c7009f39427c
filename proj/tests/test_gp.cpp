#include <doctest.h>

#include <cmath>

#include "microswim/gp.hpp"

using namespace microswim;
using gp::Dataset;
using gp::GPModel;

namespace {

Dataset sine_data(int n, std::uint64_t seed) {
    Dataset d;
    d.X.resize(n, 1);
    d.y.resize(n);
    Rng r(seed);
    for (int i = 0; i < n; ++i) {
        d.X(i, 0) = (i + 0.5) / n + 0.3 * (r.uniform(0.0, 1.0) - 0.5) / n;
        d.y[i] = std::sin(2.0 * EIGEN_PI * d.X(i, 0)) + 0.3;
    }
    return d;
}

Dataset random_2d(int n, std::uint64_t seed, double xmax = 1.0) {
    Dataset d;
    d.X.resize(n, 2);
    d.y.resize(n);
    Rng r(seed);
    for (int i = 0; i < n; ++i) {
        d.X(i, 0) = r.uniform(0.0, xmax);
        d.X(i, 1) = r.uniform(0.0, 1.0);
        d.y[i] = std::cos(3 * d.X(i, 0)) * d.X(i, 1) + 0.1 * d.X(i, 1);
    }
    return d;
}

// model with pinned hyperparameters, bypassing the marginal-likelihood ascent
GPModel pinned_model(const Dataset& d, const Vec& ell, double s2) {
    GPModel h;
    h.X.resize(0, d.dim());
    h.lengthscales = ell;
    h.signal_var = s2;
    return gp::update_data(h, d);
}

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("gp dataset validation") {
    Dataset d;
    d.X.resize(3, 2);
    d.X << 0.1, 0.2, 0.5, 0.6, 0.9, 0.95;
    d.y.resize(3);
    d.y << 1.0, 2.0, 3.0;
    CHECK_NOTHROW(d.validate());

    Dataset bad = d;
    bad.X(1, 0) = -0.01;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = d;
    bad.X(2, 1) = 1.01;
    CHECK_THROWS_AS(bad.validate(), DomainError);

    Dataset dup = d;
    dup.X.row(2) = dup.X.row(0) + Eigen::RowVector2d(5e-13, -5e-13);
    CHECK_THROWS_AS(dup.validate(), DomainError);

    Dataset mism = d;
    mism.y.resize(2);
    CHECK_THROWS_AS(mism.validate(), DimensionError);

    nlohmann::json j = d;
    const auto back = j.get<Dataset>();
    CHECK((back.X - d.X).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.y - d.y).cwiseAbs().maxCoeff() == 0.0);

    Dataset single;
    single.X = Mat::Constant(1, 1, 0.5);
    single.y = Vec::Constant(1, 2.0);
    CHECK_NOTHROW(single.validate());
    CHECK_THROWS_AS(gp::fit(single), DimensionError);
}

TEST_CASE("gp fit interpolates and maximizes the evidence") {
    const Dataset d = sine_data(20, 7);
    const GPModel m = gp::fit(d);

    CHECK(m.noise_var == doctest::Approx(1e-8));
    const auto [mu, var] = m.posterior(d.X);
    CHECK((mu - d.y).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(var.minCoeff() >= 0.0);
    CHECK(var.maxCoeff() <= m.noise_var * m.y_std * m.y_std + 1e-8);

    // fitted evidence beats random hyperparameters drawn inside the bounds
    const Vec ys = m.standardized_targets();
    Vec theta(2);
    theta << std::log(m.lengthscales[0]), std::log(m.signal_var);
    const double at_fit = gp::detail::lml_with_grad(d.X, ys, theta).value;
    Rng r(42);
    for (int k = 0; k < 10; ++k) {
        Vec t(2);
        t[0] = r.uniform(gp::detail::log_ell_lo, gp::detail::log_ell_hi);
        t[1] = r.uniform(gp::detail::log_sig_lo, gp::detail::log_sig_hi);
        CHECK(at_fit >= gp::detail::lml_with_grad(d.X, ys, t).value - 1e-9);
    }

    // constant outputs collapse to a degenerate but usable model
    Dataset flat;
    flat.X.resize(5, 1);
    flat.X << 0.1, 0.3, 0.5, 0.7, 0.9;
    flat.y = Vec::Constant(5, 2.5);
    const GPModel mc = gp::fit(flat);
    CHECK(mc.prior_variance() < 1e-12);
    Mat q(3, 1);
    q << 0.0, 0.42, 1.0;
    const auto [cm, cv] = mc.posterior(q);
    CHECK((cm.array() - 2.5).abs().maxCoeff() < 1e-9);
    CHECK(cv.maxCoeff() < 1e-12);
}

TEST_CASE("gp evidence gradient matches central differences") {
    const Dataset d = random_2d(12, 3);
    const double ym = d.y.mean();
    const double sd = std::sqrt((d.y.array() - ym).square().sum() / d.size());
    const Vec ys = (d.y.array() - ym).matrix() / sd;

    Rng r(17);
    for (int k = 0; k < 5; ++k) {
        Vec t(3);
        t[0] = r.uniform(std::log(0.1), std::log(2.0));
        t[1] = r.uniform(std::log(0.1), std::log(2.0));
        t[2] = r.uniform(std::log(0.3), std::log(3.0));
        const auto ev = gp::detail::lml_with_grad(d.X, ys, t);
        REQUIRE(std::isfinite(ev.value));
        for (int j = 0; j < 3; ++j) {
            const double h = 1e-6;
            Vec tp = t, tm = t;
            tp[j] += h;
            tm[j] -= h;
            const double fd = (gp::detail::lml_with_grad(d.X, ys, tp).value -
                               gp::detail::lml_with_grad(d.X, ys, tm).value) /
                              (2 * h);
            CHECK(std::abs(ev.grad[j] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("gp posterior far from data reverts to the prior") {
    Dataset d;
    d.X.resize(6, 2);
    d.y.resize(6);
    Rng r(9);
    for (int i = 0; i < 6; ++i) {
        d.X(i, 0) = r.uniform(0.0, 0.1);
        d.X(i, 1) = r.uniform(0.0, 0.1);
        d.y[i] = r.uniform(-1.0, 1.0);
    }
    Vec ell = Vec::Constant(2, 0.02);
    const GPModel m = pinned_model(d, ell, 1.5);

    Mat far(2, 2);
    far << 0.9, 0.9, 1.0, 0.5;  // at least 40 lengthscales from every point
    const auto [fm, fv] = m.posterior(far);
    CHECK((fm.array() - m.prior_mean()).abs().maxCoeff() < 1e-10);
    CHECK((fv.array() - m.prior_variance()).abs().maxCoeff() <
          1e-10 + m.noise_var * m.y_std * m.y_std);
}

TEST_CASE("gp variance shrinks when a nearby observation arrives") {
    const Dataset d = random_2d(10, 21);
    const GPModel m = gp::fit(d);

    Mat q(1, 2);
    q << 0.62, 0.37;
    const double before = m.posterior(q).second[0];

    Dataset d2 = d;
    d2.X.conservativeResize(11, 2);
    d2.y.conservativeResize(11);
    d2.X.row(10) << 0.60, 0.40;
    d2.y[10] = 0.2;
    const GPModel m2 = gp::update_data(m, d2);
    const double after = m2.posterior(q).second[0];
    CHECK(after < before);
    CHECK(after >= 0.0);

    // update_data keeps hyperparameters and rejects mismatched dimensions
    CHECK(m2.lengthscales == m.lengthscales);
    CHECK(m2.signal_var == m.signal_var);
    Dataset wrong;
    wrong.X = Mat::Constant(3, 3, 0.5);
    wrong.X(1, 1) = 0.1;
    wrong.X(2, 2) = 0.9;
    wrong.y = Vec::LinSpaced(3, 0.0, 1.0);
    CHECK_THROWS_AS(gp::update_data(m, wrong), DimensionError);
}

TEST_CASE("gp predictions are invariant to training order") {
    const Dataset d = random_2d(15, 33);
    const GPModel m = gp::fit(d);

    Dataset perm;
    perm.X.resize(15, 2);
    perm.y.resize(15);
    const int order[15] = {14, 3, 7, 0, 11, 5, 9, 1, 13, 2, 8, 6, 12, 4, 10};
    for (int i = 0; i < 15; ++i) {
        perm.X.row(i) = d.X.row(order[i]);
        perm.y[i] = d.y[order[i]];
    }
    const GPModel mp = gp::update_data(m, perm);

    Mat q(4, 2);
    q << 0.15, 0.85, 0.5, 0.5, 0.77, 0.12, 0.33, 0.64;
    const auto [a_m, a_v] = m.posterior(q);
    const auto [b_m, b_v] = mp.posterior(q);
    CHECK((a_m - b_m).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a_v - b_v).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gp factorization succeeds on near-degenerate data via jitter escalation") {
    Dataset d;
    d.X.resize(6, 1);
    d.X << 0.2, 0.2 + 5e-12, 0.5, 0.5 + 5e-12, 0.8, 0.8 + 5e-12;
    d.y.resize(6);
    d.y << 1.0, 1.0, -0.5, -0.5, 0.7, 0.7;
    CHECK_NOTHROW(d.validate());
    const GPModel m = gp::fit(d);
    CHECK(m.noise_var >= 1e-8);
    CHECK(m.noise_var <= 1e-4);
    const auto [mu, var] = m.posterior(d.X);
    CHECK(std::isfinite(mu.sum()));
    CHECK(var.minCoeff() >= 0.0);
}

TEST_CASE("gp joint sampling is exact, deterministic, and consistent") {
    const Dataset d = sine_data(20, 7);
    const GPModel m = gp::fit(d);

    Mat q(5, 1);
    q << 0.05, 0.3, 0.55, 0.8, 0.97;
    const auto [pm, pv] = m.posterior(q);

    const int n_draws = 10000;
    const Mat draws = gp::sample_joint(m, q, n_draws, 11);
    REQUIRE(draws.rows() == n_draws);
    REQUIRE(draws.cols() == 5);
    for (int i = 0; i < 5; ++i) {
        const double emp_mean = draws.col(i).mean();
        const double se = std::sqrt(pv[i] / n_draws);
        CHECK(std::abs(emp_mean - pm[i]) <= 3.0 * se + 1e-12);
        const double emp_var = (draws.col(i).array() - emp_mean).square().sum() / (n_draws - 1);
        CHECK(emp_var <= pv[i] * 1.2 + 1e-10);
        CHECK(emp_var >= pv[i] * 0.8 - 1e-10);
    }

    const Mat again = gp::sample_joint(m, q, n_draws, 11);
    CHECK((draws - again).cwiseAbs().maxCoeff() == 0.0);
    const Mat other = gp::sample_joint(m, q, n_draws, 12);
    CHECK((draws - other).cwiseAbs().maxCoeff() > 0.0);

    // duplicated query rows receive matching values inside each realization
    Mat dupq(3, 1);
    dupq << 0.4, 0.4, 0.4;
    const Mat dups = gp::sample_joint(m, dupq, 64, 5);
    for (int k = 0; k < dups.rows(); ++k) {
        CHECK(std::abs(dups(k, 0) - dups(k, 1)) < 1e-4);
        CHECK(std::abs(dups(k, 0) - dups(k, 2)) < 1e-4);
    }

    // degenerate posterior: constant outputs give draws equal to the mean
    Dataset flat;
    flat.X.resize(4, 1);
    flat.X << 0.1, 0.4, 0.6, 0.9;
    flat.y = Vec::Constant(4, -1.25);
    const GPModel mc = gp::fit(flat);
    const Mat cd = gp::sample_joint(mc, q, 50, 3);
    CHECK((cd.array() + 1.25).abs().maxCoeff() < 1e-9);

    CHECK_THROWS_AS(gp::sample_joint(m, Mat(0, 1), 4, 1), DimensionError);
    CHECK_THROWS_AS(gp::sample_joint(m, Mat::Constant(2, 2, 0.5), 4, 1), DimensionError);
    CHECK_THROWS_AS(gp::sample_joint(m, q, 0, 1), DimensionError);
}

TEST_CASE("gp pathwise sampler tracks the posterior and hits the data") {
    const Dataset d = random_2d(14, 5, 0.4);
    const GPModel m = gp::fit(d);

    const auto ps = gp::make_pathwise_sampler(m, 4000, 512, 9);
    REQUIRE(ps.n_draws() == 4000);

    // every realization agrees with the observations at the training points
    const Mat at_train = ps.draws_at(d.X);
    double worst = 0.0;
    for (int k = 0; k < at_train.rows(); ++k)
        worst = std::max(worst, (at_train.row(k).transpose() - d.y).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-4);

    // ensemble mean matches the exact posterior mean
    Mat q(4, 2);
    q << 0.45, 0.5, 0.6, 0.5, 0.8, 0.5, 1.0, 0.5;
    const auto [pm, pv] = m.posterior(q);
    const Mat pd = ps.draws_at(q);
    for (int i = 0; i < 4; ++i) {
        const double emp_mean = pd.col(i).mean();
        const double se = std::sqrt(pv[i] / pd.rows());
        CHECK(std::abs(emp_mean - pm[i]) <= 4.0 * se + 1e-6);
    }
    // far from the data the ensemble spread approaches the exact variance
    const double far_var = (pd.col(3).array() - pd.col(3).mean()).square().sum() / (pd.rows() - 1);
    CHECK(far_var > 0.4 * pv[3]);
    CHECK(far_var < 1.6 * pv[3]);

    // deterministic per seed
    const auto ps2 = gp::make_pathwise_sampler(m, 3, 128, 77);
    const auto ps3 = gp::make_pathwise_sampler(m, 3, 128, 77);
    CHECK((ps2.draws_at(q) - ps3.draws_at(q)).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(gp::make_pathwise_sampler(m, 0, 128, 1), DimensionError);
}

TEST_CASE("gp checkpoint round-trip preserves predictions") {
    const Dataset d = random_2d(12, 13);
    const GPModel m = gp::fit(d);

    const nlohmann::json j = m;
    const GPModel back = j.get<GPModel>();
    CHECK(back.lengthscales == m.lengthscales);
    CHECK(back.signal_var == m.signal_var);
    CHECK(back.y_mean == m.y_mean);
    CHECK(back.y_std == m.y_std);

    Mat q(3, 2);
    q << 0.2, 0.8, 0.5, 0.5, 0.9, 0.1;
    const auto [am, av] = m.posterior(q);
    const auto [bm, bv] = back.posterior(q);
    CHECK((am - bm).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((av - bv).cwiseAbs().maxCoeff() < 1e-12);
}

}  // TEST_SUITE("gp")
