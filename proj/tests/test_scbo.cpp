#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "microswim/scbo.hpp"

using namespace microswim;
using scbo::EvaluationRecord;
using scbo::SCBOConfig;
using scbo::TrustRegionState;

namespace {

EvaluationRecord rec(double objective, std::initializer_list<double> cons = {}) {
    EvaluationRecord r;
    r.x = Vec::Constant(2, 0.5);
    r.objective = objective;
    r.constraints.resize(static_cast<Eigen::Index>(cons.size()));
    Eigen::Index i = 0;
    for (double c : cons) r.constraints[i++] = c;
    r.feasible = r.constraints.size() == 0 || r.constraints.maxCoeff() <= 0.0;
    return r;
}

scbo::Surrogates toy_models(int dim, std::uint64_t seed, int n_constraints = 0) {
    gp::Dataset d;
    const int n = 12;
    d.X = sobol::sample(dim, n, seed);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) d.y[i] = (d.X.row(i).array() - 0.4).square().sum();
    scbo::Surrogates m;
    m.cost = gp::fit(d, {.restarts = 0, .max_iters = 15, .seed = seed});
    for (int c = 0; c < n_constraints; ++c) {
        gp::Dataset dc = d;
        for (int i = 0; i < n; ++i) dc.y[i] = d.X(i, 0) - 0.7;
        m.constraints.push_back(gp::fit(dc, {.restarts = 0, .max_iters = 15, .seed = seed + c + 1}));
    }
    return m;
}

TrustRegionState centered_region(int dim, double L) {
    TrustRegionState tr;
    tr.center = Vec::Constant(dim, 0.5);
    tr.widths = Vec::Ones(dim);
    tr.L = L;
    return tr;
}

}  // namespace

TEST_SUITE("scbo") {

TEST_CASE("scbo config reproduces the parameter formulas exactly") {
    auto check_n = [](int N, int r, int n_init, int ts) {
        SCBOConfig c;
        c.dim = N;
        c.budget = 100;
        CHECK(c.candidates() == r);
        CHECK(c.n_init() == n_init);
        CHECK(c.tau_success() == ts);
        CHECK(c.tau_fail() == (N + c.batch - 1) / c.batch);
        CHECK(c.L_init == 1.6);
        CHECK(c.L_max == 1.6);
        CHECK(c.L_min == 0.0078125);
        CHECK(c.L_min == std::pow(0.5, 7));
    };
    check_n(10, 2000, 40, 3);
    check_n(40, 5000, 160, 4);
    check_n(80, 5000, 320, 8);
    check_n(200, 5000, 800, 20);

    SCBOConfig c;
    c.dim = 10;
    c.batch = 4;
    CHECK(c.tau_fail() == 3);
    c.batch = 1;
    CHECK(c.tau_fail() == 10);
    c.batch = 7;
    CHECK(c.tau_fail() == 2);
    c.dim = 1;
    c.batch = 4;
    CHECK(c.candidates() == 2000);
    CHECK(c.tau_success() == 3);
    CHECK(c.tau_fail() == 1);

    SCBOConfig bad;
    bad.dim = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.dim = 2;
    bad.batch = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.batch = 4;
    bad.budget = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    nlohmann::json j = SCBOConfig{.dim = 10, .batch = 4, .budget = 2000};
    CHECK(j.at("candidates") == 2000);
    CHECK(j.at("tau_fail") == 3);
    const auto back = j.get<SCBOConfig>();
    CHECK(back.dim == 10);
    CHECK(back.budget == 2000);
}

TEST_CASE("scbo initial design is space-filling and seed-deterministic") {
    const Mat d1 = scbo::init_design(10, 40, 3);
    CHECK(d1.rows() == 40);
    CHECK(d1.cols() == 10);
    CHECK(d1.minCoeff() >= 0.0);
    CHECK(d1.maxCoeff() < 1.0);
    const Mat d2 = scbo::init_design(10, 40, 3);
    CHECK((d1 - d2).cwiseAbs().maxCoeff() == 0.0);
    const Mat d3 = scbo::init_design(10, 40, 4);
    CHECK((d1 - d3).cwiseAbs().maxCoeff() > 0.0);
    CHECK_THROWS_AS(scbo::init_design(0, 4, 1), DimensionError);
}

TEST_CASE("scbo incumbent follows feasibility dominance") {
    std::vector<EvaluationRecord> all_feasible = {rec(3.0), rec(1.0), rec(2.0)};
    CHECK(scbo::incumbent(all_feasible).objective == 1.0);

    std::vector<EvaluationRecord> none = {rec(0.0, {0.5}), rec(5.0, {0.2}), rec(-1.0, {0.9})};
    CHECK(scbo::max_violation(none[1]) == 0.2);
    CHECK(scbo::incumbent(none).objective == 5.0);  // smallest max violation wins

    std::vector<EvaluationRecord> mixed = {rec(-10.0, {0.01}), rec(7.0, {-0.5})};
    CHECK(scbo::incumbent(mixed).objective == 7.0);  // feasible beats better infeasible

    std::vector<EvaluationRecord> multi = {rec(1.0, {0.5, -0.3}), rec(2.0, {0.1, 0.4})};
    CHECK(scbo::max_violation(multi[0]) == 0.5);
    CHECK(scbo::max_violation(multi[1]) == 0.4);
    CHECK(scbo::incumbent(multi).objective == 2.0);

    std::vector<EvaluationRecord> empty;
    CHECK_THROWS_AS(scbo::incumbent(empty), DimensionError);
}

TEST_CASE("scbo region update follows the counter rules") {
    SCBOConfig cfg;
    cfg.dim = 10;  // tau_success 3, tau_fail 3
    cfg.batch = 4;
    cfg.budget = 100;
    const EvaluationRecord inc = rec(1.0);
    const std::vector<EvaluationRecord> improving = {rec(2.0), rec(0.5)};
    const std::vector<EvaluationRecord> failing = {rec(2.0), rec(1.5)};

    TrustRegionState tr = centered_region(10, 0.8);
    tr = scbo::update_region(tr, inc, improving, cfg);
    CHECK(tr.successes == 1);
    CHECK(tr.failures == 0);
    CHECK(tr.L == 0.8);
    tr = scbo::update_region(tr, inc, improving, cfg);
    CHECK(tr.successes == 2);
    tr = scbo::update_region(tr, inc, improving, cfg);
    CHECK(tr.L == 1.6);  // doubled and clipped at the max
    CHECK(tr.successes == 0);
    CHECK(tr.failures == 0);

    // a success resets the failure streak and vice versa
    tr = centered_region(10, 0.8);
    tr = scbo::update_region(tr, inc, failing, cfg);
    CHECK(tr.failures == 1);
    tr = scbo::update_region(tr, inc, improving, cfg);
    CHECK(tr.successes == 1);
    CHECK(tr.failures == 0);
    tr = scbo::update_region(tr, inc, failing, cfg);
    CHECK(tr.successes == 0);
    CHECK(tr.failures == 1);
    CHECK_FALSE((tr.successes > 0 && tr.failures > 0));

    // three consecutive failures halve the region
    tr = centered_region(10, 0.1);
    for (int k = 0; k < 3; ++k) tr = scbo::update_region(tr, inc, failing, cfg);
    CHECK(tr.L == 0.05);
    CHECK(tr.failures == 0);

    // halving below the minimum signals a restart to the caller
    tr = centered_region(10, cfg.L_min);
    for (int k = 0; k < 3; ++k) tr = scbo::update_region(tr, inc, failing, cfg);
    CHECK(tr.L < cfg.L_min);

    // clipping: doubling from 1.0 saturates at 1.6
    tr = centered_region(10, 1.0);
    for (int k = 0; k < 3; ++k) tr = scbo::update_region(tr, inc, improving, cfg);
    CHECK(tr.L == 1.6);

    // feasibility dominance drives improvement: a feasible batch point beats
    // an infeasible incumbent even with a worse objective
    const EvaluationRecord infeasible_inc = rec(0.0, {0.3});
    const std::vector<EvaluationRecord> feasible_batch = {rec(100.0, {-0.1})};
    tr = centered_region(10, 0.4);
    tr = scbo::update_region(tr, infeasible_inc, feasible_batch, cfg);
    CHECK(tr.successes == 1);
}

TEST_CASE("scbo batch proposal stays inside the region and is deterministic") {
    const auto models = toy_models(2, 21);
    SCBOConfig cfg;
    cfg.dim = 2;
    cfg.budget = 100;

    TrustRegionState tr = centered_region(2, 0.4);
    const Mat batch = scbo::propose_batch(models, tr, cfg, 5, 0, 128);
    CHECK(batch.rows() == 4);
    CHECK(batch.cols() == 2);
    const auto [lo, hi] = tr.bounds();
    for (int i = 0; i < batch.rows(); ++i) {
        for (int j = 0; j < 2; ++j) {
            CHECK(batch(i, j) >= lo[j] - 1e-12);
            CHECK(batch(i, j) <= hi[j] + 1e-12);
        }
        for (int k = i + 1; k < batch.rows(); ++k)
            CHECK((batch.row(i) - batch.row(k)).cwiseAbs().maxCoeff() > 0.0);
    }

    const Mat again = scbo::propose_batch(models, tr, cfg, 5, 0, 128);
    CHECK((batch - again).cwiseAbs().maxCoeff() == 0.0);
    const Mat other = scbo::propose_batch(models, tr, cfg, 6, 0, 128);
    CHECK((batch - other).cwiseAbs().maxCoeff() > 0.0);

    // constrained proposal works through the same interface
    const auto con_models = toy_models(2, 22, 1);
    const Mat cbatch = scbo::propose_batch(con_models, tr, cfg, 7, 2, 128);
    CHECK(cbatch.rows() == 2);

    // a collapsed region cannot produce candidates
    TrustRegionState flat = centered_region(2, 0.0);
    CHECK_THROWS_AS(scbo::propose_batch(models, flat, cfg, 1, 0, 128), DomainError);

    // dimension mismatch is rejected
    TrustRegionState wrong = centered_region(3, 0.4);
    CHECK_THROWS_AS(scbo::propose_batch(models, wrong, cfg, 1, 0, 128), DimensionError);
}

TEST_CASE("scbo proposals perturb only a sparse coordinate subset in high dimension") {
    const int dim = 60;
    gp::Dataset d;
    d.X = sobol::sample(dim, 10, 31);
    d.y.resize(10);
    for (int i = 0; i < 10; ++i) d.y[i] = d.X.row(i).sum();
    scbo::Surrogates models;
    models.cost = gp::fit(d, {.restarts = 0, .max_iters = 10, .seed = 2});

    SCBOConfig cfg;
    cfg.dim = dim;
    cfg.budget = 100;
    TrustRegionState tr = centered_region(dim, 0.5);
    const Mat batch = scbo::propose_batch(models, tr, cfg, 9, 0, 64);
    for (int i = 0; i < batch.rows(); ++i) {
        int unchanged = 0;
        for (int j = 0; j < dim; ++j) unchanged += batch(i, j) == 0.5;
        // perturbation probability 20/60 leaves most coordinates at the center
        CHECK(unchanged >= dim / 3);
        CHECK(unchanged < dim);
    }
}

TEST_CASE("scbo run converges on a 1d quadratic within budget") {
    scbo::Problem quad;
    quad.n_constraints = 0;
    quad.eval = [](const Vec& x, Vec&) { return (x[0] - 0.37) * (x[0] - 0.37); };
    SCBOConfig cfg;
    cfg.dim = 1;
    cfg.budget = 60;
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto res = scbo::run(quad, cfg, seed);
        CHECK(res.history.size() == 60);
        CHECK(std::abs(res.best.x[0] - 0.37) < 1e-2);
        for (std::size_t i = 0; i < res.history.size(); ++i)
            CHECK(res.history[i].index == static_cast<int>(i));
        // the recomputed incumbent equals the reported best
        CHECK(scbo::incumbent(res.history).objective == res.best.objective);
        // feasible best-so-far trace is nonincreasing and ends at the reported best
        double best = std::numeric_limits<double>::infinity();
        for (const auto& r : res.history) {
            const double prev = best;
            if (r.feasible) best = std::min(best, r.objective);
            CHECK(best <= prev);
        }
        CHECK(best == res.best.objective);
    }
}

TEST_CASE("scbo run is deterministic and respects small budgets") {
    scbo::Problem p;
    p.n_constraints = 1;
    p.eval = [](const Vec& x, Vec& con) {
        con[0] = 0.2 - x[1];
        return (x.array() - 0.6).square().sum() + 0.1 * std::sin(20 * x[0]);
    };
    SCBOConfig cfg;
    cfg.dim = 3;
    cfg.budget = 120;
    const auto a = scbo::run(p, cfg, 99);
    const auto b = scbo::run(p, cfg, 99);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK((a.history[i].x - b.history[i].x).cwiseAbs().maxCoeff() == 0.0);
        CHECK(a.history[i].objective == b.history[i].objective);
    }
    CHECK(a.best.feasible);

    SCBOConfig tiny = cfg;
    tiny.budget = 5;  // below the 12-point initial design
    const auto t = scbo::run(p, tiny, 1);
    CHECK(t.history.size() == 5);
}

TEST_CASE("scbo run penalizes evaluation failures and continues") {
    scbo::Problem flaky;
    flaky.n_constraints = 0;
    flaky.eval = [](const Vec& x, Vec&) -> double {
        if (x[0] < 0.3) throw DomainError("synthetic failure");
        return (x[0] - 0.8) * (x[0] - 0.8);
    };
    SCBOConfig cfg;
    cfg.dim = 1;
    cfg.budget = 40;
    const auto res = scbo::run(flaky, cfg, 7);
    CHECK(res.history.size() == 40);
    int penalized = 0;
    for (const auto& r : res.history) penalized += r.objective >= 1e10;
    CHECK(penalized > 0);
    CHECK(res.best.x[0] >= 0.3);
    CHECK(std::abs(res.best.x[0] - 0.8) < 0.05);

    // non-finite objectives are also penalized rather than propagated
    scbo::Problem nan_prob;
    nan_prob.n_constraints = 0;
    nan_prob.eval = [](const Vec& x, Vec&) {
        return x[0] > 0.5 ? std::numeric_limits<double>::quiet_NaN() : x[0];
    };
    const auto nres = scbo::run(nan_prob, cfg, 3);
    for (const auto& r : nres.history) CHECK(std::isfinite(r.objective));
}

TEST_CASE("scbo checkpoint resume reproduces the uninterrupted run") {
    scbo::Problem p;
    p.n_constraints = 1;
    p.eval = [](const Vec& x, Vec& con) {
        con[0] = 0.2 - x[1];
        return (x.array() - 0.6).square().sum() + 0.1 * std::sin(20 * x[0]);
    };
    SCBOConfig full;
    full.dim = 3;
    full.budget = 120;
    const auto straight = scbo::run(p, full, 99);

    scbo::RunOptions ck;
    ck.checkpoint_path = "/tmp/microswim_scbo_ck.json";
    ck.checkpoint_every = 5;
    SCBOConfig half = full;
    half.budget = 64;
    scbo::run(p, half, 99, ck);

    auto st = scbo::load_checkpoint(ck.checkpoint_path);
    CHECK(st.records.size() < 64);
    st.config.budget = 120;
    const auto resumed = scbo::run_from_state(st, p, ck);
    REQUIRE(resumed.history.size() == straight.history.size());
    for (std::size_t i = 0; i < straight.history.size(); ++i) {
        CHECK((straight.history[i].x - resumed.history[i].x).cwiseAbs().maxCoeff() == 0.0);
        CHECK(straight.history[i].objective == resumed.history[i].objective);
    }
    std::remove(ck.checkpoint_path.c_str());
}

TEST_CASE("scbo artifacts carry the run history and configuration") {
    scbo::Problem quad;
    quad.n_constraints = 1;
    quad.eval = [](const Vec& x, Vec& con) {
        con[0] = x[0] - 0.9;
        return (x[0] - 0.37) * (x[0] - 0.37);
    };
    SCBOConfig cfg;
    cfg.dim = 1;
    cfg.budget = 20;
    const auto res = scbo::run(quad, cfg, 5);

    const std::string hist = "/tmp/microswim_scbo_hist.csv";
    const std::string rjson = "/tmp/microswim_scbo_result.json";
    scbo::write_history_csv(hist, res);
    scbo::write_result_json(rjson, res);

    std::ifstream h(hist);
    std::string header;
    std::getline(h, header);
    CHECK(header == "index,x0,objective,c0,feasible,best_so_far");
    int rows = 0;
    for (std::string line; std::getline(h, line);) ++rows;
    CHECK(rows == 20);

    std::ifstream rj(rjson);
    nlohmann::json j;
    rj >> j;
    CHECK(j.at("seed") == 5);
    CHECK(j.at("evaluations") == 20);
    CHECK(j.at("config").at("dim") == 1);
    CHECK(j.at("best").at("feasible").get<bool>() == res.best.feasible);
    std::remove(hist.c_str());
    std::remove(rjson.c_str());
}

TEST_CASE("scbo ten dimensional smoke run beats its initial design") {
    scbo::Problem sph;
    sph.n_constraints = 1;
    sph.eval = [](const Vec& x, Vec& con) {
        con[0] = (x.array() - 0.5).matrix().norm() - 0.3;
        return (x.array() - 0.5).square().sum();
    };
    SCBOConfig cfg;
    cfg.dim = 10;
    cfg.budget = 160;
    const auto res = scbo::run(sph, cfg, 17);
    CHECK(res.history.size() == 160);
    CHECK(res.best.feasible);
    const std::vector<EvaluationRecord> design(res.history.begin(), res.history.begin() + 40);
    const auto& initial_best = scbo::incumbent(design);
    CHECK(scbo::dominates(res.best, initial_best));
}

}  // TEST_SUITE("scbo")
