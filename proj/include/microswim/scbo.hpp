#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "microswim/common.hpp"
#include "microswim/gp.hpp"
#include "microswim/sobol.hpp"

namespace microswim::scbo {

// Loop parameters. The derived quantities (candidate count, initial design
// size, success and failure thresholds) follow fixed formulas of the problem
// dimension and batch size; the remaining fields are tuning constants of the
// trust-region schedule.
struct SCBOConfig {
    int dim = 1;
    int batch = 4;  // proposals per round
    int budget = 100;

    double L_init = 1.6;
    double L_min = 0.0078125;  // 0.5^7
    double L_max = 1.6;

    int candidates() const { return std::min(5000, std::max(2000, 200 * dim)); }
    int n_init() const { return 4 * dim; }
    int tau_success() const { return std::max(3, (dim + 9) / 10); }
    int tau_fail() const { return (dim + batch - 1) / batch; }

    void validate() const {
        if (dim < 1) throw ConfigError("scbo: dim must be >= 1");
        if (batch < 1) throw ConfigError("scbo: batch must be >= 1");
        if (budget < 1) throw ConfigError("scbo: budget must be >= 1");
        if (!(L_min > 0 && L_min <= L_init && L_init <= L_max))
            throw ConfigError("scbo: need 0 < L_min <= L_init <= L_max");
    }
};

inline void to_json(nlohmann::json& j, const SCBOConfig& c) {
    j = nlohmann::json{{"dim", c.dim},
                       {"batch", c.batch},
                       {"budget", c.budget},
                       {"L_init", c.L_init},
                       {"L_min", c.L_min},
                       {"L_max", c.L_max},
                       {"candidates", c.candidates()},
                       {"n_init", c.n_init()},
                       {"tau_success", c.tau_success()},
                       {"tau_fail", c.tau_fail()}};
}

inline void from_json(const nlohmann::json& j, SCBOConfig& c) {
    c.dim = j.at("dim").get<int>();
    c.batch = j.value("batch", 4);
    c.budget = j.at("budget").get<int>();
    c.L_init = j.value("L_init", 1.6);
    c.L_min = j.value("L_min", 0.0078125);
    c.L_max = j.value("L_max", 1.6);
    c.validate();
}

// Axis-aligned box around the incumbent, with per-dimension side lengths
// shaped by the surrogate's lengthscales and clipped to the unit box.
struct TrustRegionState {
    Vec center;
    double L = 1.6;
    int successes = 0;
    int failures = 0;
    Vec widths;  // normalized side scale factors, geometric mean 1

    std::pair<Vec, Vec> bounds() const {
        const Vec half = (0.5 * L) * widths;
        Vec lo = (center - half).cwiseMax(0.0).cwiseMin(1.0);
        Vec hi = (center + half).cwiseMax(0.0).cwiseMin(1.0);
        return {lo, hi};
    }
};

inline void to_json(nlohmann::json& j, const TrustRegionState& t) {
    j = nlohmann::json{{"center", std::vector<double>(t.center.begin(), t.center.end())},
                       {"L", t.L},
                       {"successes", t.successes},
                       {"failures", t.failures},
                       {"widths", std::vector<double>(t.widths.begin(), t.widths.end())}};
}

inline void from_json(const nlohmann::json& j, TrustRegionState& t) {
    const auto c = j.at("center").get<std::vector<double>>();
    const auto w = j.at("widths").get<std::vector<double>>();
    t.center = Eigen::Map<const Vec>(c.data(), static_cast<Eigen::Index>(c.size()));
    t.widths = Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
    t.L = j.at("L").get<double>();
    t.successes = j.at("successes").get<int>();
    t.failures = j.at("failures").get<int>();
}

struct EvaluationRecord {
    Vec x;
    double objective = 0.0;
    Vec constraints;  // residuals, feasible means all <= 0
    bool feasible = true;
    double wall_clock_s = 0.0;
    int index = 0;
};

inline void to_json(nlohmann::json& j, const EvaluationRecord& r) {
    j = nlohmann::json{{"index", r.index},
                       {"x", std::vector<double>(r.x.begin(), r.x.end())},
                       {"objective", r.objective},
                       {"constraints", std::vector<double>(r.constraints.begin(), r.constraints.end())},
                       {"feasible", r.feasible},
                       {"wall_clock_s", r.wall_clock_s}};
}

inline void from_json(const nlohmann::json& j, EvaluationRecord& r) {
    const auto x = j.at("x").get<std::vector<double>>();
    const auto c = j.at("constraints").get<std::vector<double>>();
    r.x = Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
    r.constraints = Eigen::Map<const Vec>(c.data(), static_cast<Eigen::Index>(c.size()));
    r.index = j.at("index").get<int>();
    r.objective = j.at("objective").get<double>();
    r.feasible = j.at("feasible").get<bool>();
    r.wall_clock_s = j.value("wall_clock_s", 0.0);
}

inline double max_violation(const EvaluationRecord& r) {
    return r.constraints.size() == 0 ? 0.0 : r.constraints.maxCoeff();
}

// Selection order: any feasible point beats any infeasible one; feasible
// points compare by objective; infeasible points by maximum violation.
inline bool dominates(const EvaluationRecord& a, const EvaluationRecord& b) {
    if (a.feasible != b.feasible) return a.feasible;
    if (a.feasible) return a.objective < b.objective;
    return max_violation(a) < max_violation(b);
}

inline const EvaluationRecord& incumbent(const std::vector<EvaluationRecord>& records) {
    if (records.empty()) throw DimensionError("incumbent: no evaluations yet");
    const EvaluationRecord* best = &records.front();
    for (const auto& r : records)
        if (dominates(r, *best)) best = &r;
    return *best;
}

namespace detail {

// distinct deterministic seed per (master seed, purpose stream, round)
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream * 0x100000001b3ull + k + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace detail

// Space-filling scrambled design on the unit box, deterministic per seed.
inline Mat init_design(int dim, int n_points, std::uint64_t seed) {
    if (dim < 1) throw DimensionError("init_design: dim must be >= 1");
    return sobol::sample(dim, n_points, seed);
}

// Surrogates for one round: a cost model plus one model per constraint.
struct Surrogates {
    gp::GPModel cost;
    std::vector<gp::GPModel> constraints;
};

// Generate candidates by sparse coordinate perturbation of the region center,
// score them under per-slot joint posterior realizations of cost and
// constraints, and return the per-realization winners.
inline Mat propose_batch(const Surrogates& models, const TrustRegionState& tr,
                         const SCBOConfig& cfg, std::uint64_t seed, int n_points = 0,
                         int path_features = 512) {
    const int q = n_points > 0 ? n_points : cfg.batch;
    const int r = cfg.candidates();
    const Eigen::Index d = tr.center.size();
    if (models.cost.dim() != d) throw DimensionError("propose_batch: model/region dimension mismatch");
    const auto [lo, hi] = tr.bounds();
    if ((hi - lo).maxCoeff() <= 0.0)
        throw DomainError("propose_batch: trust region is degenerate (all candidates coincide)");

    const Vec center = tr.center.cwiseMax(0.0).cwiseMin(1.0);
    const Mat raw = sobol::sample(static_cast<int>(d), r, detail::mix_seed(seed, 1, 0));
    Rng mask_rng(detail::mix_seed(seed, 2, 0));
    const double p = std::min(1.0, 20.0 / static_cast<double>(d));
    Mat cand = center.transpose().replicate(r, 1);
    for (int i = 0; i < r; ++i) {
        bool any = false;
        for (Eigen::Index j = 0; j < d; ++j)
            if (mask_rng.uniform(0.0, 1.0) < p) {
                cand(i, j) = lo[j] + raw(i, j) * (hi[j] - lo[j]);
                any = true;
            }
        if (!any) {
            const auto j = static_cast<Eigen::Index>(mask_rng.uniform_index(static_cast<std::uint64_t>(d)));
            cand(i, j) = lo[j] + raw(i, j) * (hi[j] - lo[j]);
        }
    }

    // one realization per slot for the cost and for every constraint
    const auto cost_path = gp::make_pathwise_sampler(models.cost, q, path_features,
                                                     detail::mix_seed(seed, 3, 0));
    const Mat cost_draws = cost_path.draws_at(cand);  // q x r
    std::vector<Mat> con_draws;
    con_draws.reserve(models.constraints.size());
    for (std::size_t i = 0; i < models.constraints.size(); ++i)
        con_draws.push_back(gp::make_pathwise_sampler(models.constraints[i], q, path_features,
                                                      detail::mix_seed(seed, 4 + i, 0))
                                .draws_at(cand));

    Mat out(q, d);
    std::vector<int> picked;
    picked.reserve(q);
    for (int k = 0; k < q; ++k) {
        int best = -1;
        bool best_feas = false;
        double best_score = std::numeric_limits<double>::infinity();
        for (int i = 0; i < r; ++i) {
            if (std::find(picked.begin(), picked.end(), i) != picked.end()) continue;
            bool skip = false;
            for (const int pi : picked)
                if ((cand.row(i) - cand.row(pi)).cwiseAbs().maxCoeff() < 1e-15) {
                    skip = true;
                    break;
                }
            if (skip) continue;
            bool feas = true;
            double viol = -std::numeric_limits<double>::infinity();
            for (const auto& cd : con_draws) {
                viol = std::max(viol, cd(k, i));
                if (cd(k, i) > 0.0) feas = false;
            }
            const double score = feas ? cost_draws(k, i) : viol;
            if (best < 0 || (feas && !best_feas) || (feas == best_feas && score < best_score)) {
                best = i;
                best_feas = feas;
                best_score = score;
            }
        }
        if (best < 0) throw DomainError("propose_batch: fewer distinct candidates than batch slots");
        picked.push_back(best);
        out.row(k) = cand.row(best);
    }
    return out;
}

// Counter and length update after one evaluated batch. The caller detects
// L < L_min and restarts (fresh design, reset state, history kept).
inline TrustRegionState update_region(TrustRegionState tr, const EvaluationRecord& incumbent_before,
                                      const std::vector<EvaluationRecord>& batch,
                                      const SCBOConfig& cfg) {
    bool improved = false;
    for (const auto& r : batch)
        if (dominates(r, incumbent_before)) {
            improved = true;
            break;
        }
    if (improved) {
        tr.successes += 1;
        tr.failures = 0;
    } else {
        tr.failures += 1;
        tr.successes = 0;
    }
    if (tr.successes >= cfg.tau_success()) {
        tr.L = std::min(2.0 * tr.L, cfg.L_max);
        tr.successes = 0;
        tr.failures = 0;
    } else if (tr.failures >= cfg.tau_fail()) {
        tr.L = 0.5 * tr.L;  // may drop below L_min: restart signal for the caller
        tr.successes = 0;
        tr.failures = 0;
    }
    return tr;
}

struct Problem {
    int n_constraints = 0;
    // fill `con` (preallocated to n_constraints) and return the objective
    std::function<double(const Vec& x, Vec& con)> eval;
};

struct RunOptions {
    int max_fit_points = 256;   // surrogate conditioning window (nearest to center)
    int refit_every = 3;        // hyperparameter refit cadence in rounds
    int path_features = 512;    // realization sampler feature count
    double failure_objective = 1e10;  // score assigned to failed evaluations
    std::string checkpoint_path;      // empty disables checkpointing
    int checkpoint_every = 0;         // rounds between checkpoints (0 disables)
};

struct OptimizationResult {
    std::vector<EvaluationRecord> history;
    EvaluationRecord best;
    SCBOConfig config;
    std::uint64_t seed = 0;
    int restarts = 0;
};

namespace detail {

struct CarriedHypers {
    bool valid = false;
    Vec lengthscales;
    double signal_var = 1.0;
};

inline void to_json(nlohmann::json& j, const CarriedHypers& h) {
    j = nlohmann::json{{"valid", h.valid},
                       {"lengthscales", std::vector<double>(h.lengthscales.begin(), h.lengthscales.end())},
                       {"signal_var", h.signal_var}};
}

inline void from_json(const nlohmann::json& j, CarriedHypers& h) {
    h.valid = j.at("valid").get<bool>();
    const auto l = j.at("lengthscales").get<std::vector<double>>();
    h.lengthscales = Eigen::Map<const Vec>(l.data(), static_cast<Eigen::Index>(l.size()));
    h.signal_var = j.at("signal_var").get<double>();
}

}  // namespace detail

// Full loop state; serializable so an interrupted run can resume and produce
// the same history as an uninterrupted one.
struct RunState {
    SCBOConfig config;
    std::uint64_t seed = 0;
    std::vector<EvaluationRecord> records;
    std::vector<int> failed;  // parallel flags: 1 = penalized evaluation
    TrustRegionState tr;
    std::size_t epoch_start = 0;
    int round = 0;
    int restarts = 0;
    int last_refit_round = -1000000;
    std::vector<detail::CarriedHypers> carried;  // cost first, then constraints
};

inline void to_json(nlohmann::json& j, const RunState& s) {
    j = nlohmann::json{{"config", s.config},      {"seed", s.seed},
                       {"records", s.records},    {"failed", s.failed},
                       {"tr", s.tr},              {"epoch_start", s.epoch_start},
                       {"round", s.round},        {"restarts", s.restarts},
                       {"last_refit_round", s.last_refit_round},
                       {"carried", s.carried}};
}

inline void from_json(const nlohmann::json& j, RunState& s) {
    s.config = j.at("config").get<SCBOConfig>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.records = j.at("records").get<std::vector<EvaluationRecord>>();
    s.failed = j.at("failed").get<std::vector<int>>();
    s.tr = j.at("tr").get<TrustRegionState>();
    s.epoch_start = j.at("epoch_start").get<std::size_t>();
    s.round = j.at("round").get<int>();
    s.restarts = j.at("restarts").get<int>();
    s.last_refit_round = j.at("last_refit_round").get<int>();
    s.carried = j.at("carried").get<std::vector<detail::CarriedHypers>>();
}

namespace detail {

inline std::pair<EvaluationRecord, bool> evaluate_point(const Problem& problem, const Vec& x,
                                                        int index, double failure_objective) {
    EvaluationRecord rec;
    rec.x = x;
    rec.index = index;
    rec.constraints = Vec::Zero(problem.n_constraints);
    const auto t0 = std::chrono::steady_clock::now();
    bool failed = false;
    try {
        rec.objective = problem.eval(x, rec.constraints);
        if (!std::isfinite(rec.objective) || !rec.constraints.allFinite()) failed = true;
    } catch (const std::exception&) {
        failed = true;
    }
    rec.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (failed) {
        rec.objective = failure_objective;
        rec.constraints.setConstant(failure_objective);
    }
    rec.feasible = rec.constraints.size() == 0 || rec.constraints.maxCoeff() <= 0.0;
    return {rec, failed};
}

// incumbent over records[start..), without copying
inline const EvaluationRecord& incumbent_from(const std::vector<EvaluationRecord>& records,
                                              std::size_t start) {
    if (start >= records.size()) throw DimensionError("incumbent: no evaluations yet");
    const EvaluationRecord* best = &records[start];
    for (std::size_t i = start; i < records.size(); ++i)
        if (dominates(records[i], *best)) best = &records[i];
    return *best;
}

// nearest non-failed, de-duplicated records around the center
inline gp::Dataset fit_window(const std::vector<EvaluationRecord>& records,
                              const std::vector<int>& failed, std::size_t epoch_start,
                              const Vec& center, int cap, int value_index) {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = epoch_start; i < records.size(); ++i)
        if (!failed[i]) order.emplace_back((records[i].x - center).norm(), i);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::size_t> keep;
    for (const auto& [dist, i] : order) {
        if (static_cast<int>(keep.size()) >= cap) break;
        bool dup = false;
        for (const std::size_t k : keep)
            if ((records[i].x - records[k].x).cwiseAbs().maxCoeff() < 1e-12) {
                dup = true;
                break;
            }
        if (!dup) keep.push_back(i);
    }
    gp::Dataset d;
    if (keep.empty()) return d;
    d.X.resize(static_cast<Eigen::Index>(keep.size()), records.front().x.size());
    d.y.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        d.X.row(static_cast<Eigen::Index>(k)) = records[keep[k]].x.transpose();
        d.y[static_cast<Eigen::Index>(k)] = value_index < 0
                                                ? records[keep[k]].objective
                                                : records[keep[k]].constraints[value_index];
    }
    return d;
}

inline gp::GPModel model_from_hypers(const CarriedHypers& h, const gp::Dataset& data) {
    gp::GPModel stub;
    stub.X.resize(0, data.dim());
    stub.lengthscales = h.lengthscales;
    stub.signal_var = h.signal_var;
    return gp::update_data(stub, data);
}

inline Vec normalized_widths(const Vec& ell) {
    const double log_geo = ell.array().log().mean();
    return (ell.array().log() - log_geo).exp().matrix();
}

}  // namespace detail

// Advance the loop until the budget is exhausted. Exposed so resumed runs and
// fresh runs share one code path.
inline OptimizationResult run_from_state(RunState& st, const Problem& problem,
                                         const RunOptions& opts = {}) {
    st.config.validate();
    const SCBOConfig& cfg = st.config;
    const int d = cfg.dim;
    if (!problem.eval) throw ConfigError("scbo run: problem has no evaluator");
    if (st.carried.empty()) st.carried.assign(1 + static_cast<std::size_t>(problem.n_constraints), {});
    if (st.tr.center.size() != d) {
        st.tr.center = Vec::Constant(d, 0.5);
        st.tr.widths = Vec::Ones(d);
        st.tr.L = cfg.L_init;
    }

    auto evaluate_rows = [&](const Mat& X) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            auto [rec, failed] = detail::evaluate_point(problem, X.row(i).transpose(),
                                                        static_cast<int>(st.records.size()),
                                                        opts.failure_objective);
            st.records.push_back(std::move(rec));
            st.failed.push_back(failed ? 1 : 0);
        }
    };

    if (st.records.empty())
        evaluate_rows(init_design(d, std::min(cfg.n_init(), cfg.budget),
                                  detail::mix_seed(st.seed, 0, 0)));

    while (static_cast<int>(st.records.size()) < cfg.budget) {
        st.round += 1;
        const int nb = std::min(cfg.batch, cfg.budget - static_cast<int>(st.records.size()));
        const EvaluationRecord inc_before = detail::incumbent_from(st.records, st.epoch_start);

        const gp::Dataset cost_data = detail::fit_window(st.records, st.failed, st.epoch_start,
                                                         inc_before.x, opts.max_fit_points, -1);
        Mat proposals;
        if (cost_data.size() < 2) {
            // not enough usable observations: fall back to random points in the region
            st.tr.center = inc_before.x;
            const auto [lo, hi] = st.tr.bounds();
            Rng rng(detail::mix_seed(st.seed, 7, static_cast<std::uint64_t>(st.round)));
            proposals.resize(nb, d);
            for (int i = 0; i < nb; ++i)
                for (int j = 0; j < d; ++j) proposals(i, j) = rng.uniform(lo[j], hi[j]);
        } else {
            const bool refit = !st.carried[0].valid ||
                               (st.round - st.last_refit_round) >= opts.refit_every;
            Surrogates models;
            auto build = [&](std::size_t slot, const gp::Dataset& data) {
                if (refit) {
                    gp::FitOptions fo;
                    fo.seed = detail::mix_seed(st.seed, 10 + slot, static_cast<std::uint64_t>(st.round));
                    fo.restarts = st.carried[slot].valid ? 0 : 2;
                    fo.max_iters = st.carried[slot].valid ? 12 : 40;
                    if (st.carried[slot].valid) {
                        Vec ws(d + 1);
                        ws.head(d) = st.carried[slot].lengthscales.array().log().matrix();
                        ws[d] = std::log(st.carried[slot].signal_var);
                        fo.warm_start = ws;
                    }
                    gp::GPModel m = gp::fit(data, fo);
                    st.carried[slot] = {true, m.lengthscales, m.signal_var};
                    return m;
                }
                return detail::model_from_hypers(st.carried[slot], data);
            };
            models.cost = build(0, cost_data);
            for (int c = 0; c < problem.n_constraints; ++c)
                models.constraints.push_back(
                    build(1 + static_cast<std::size_t>(c),
                          detail::fit_window(st.records, st.failed, st.epoch_start, inc_before.x,
                                             opts.max_fit_points, c)));
            if (refit) st.last_refit_round = st.round;

            st.tr.center = inc_before.x;
            st.tr.widths = detail::normalized_widths(models.cost.lengthscales);
            proposals = propose_batch(models, st.tr, cfg,
                                      detail::mix_seed(st.seed, 1, static_cast<std::uint64_t>(st.round)),
                                      nb, opts.path_features);
        }

        const std::size_t batch_start = st.records.size();
        evaluate_rows(proposals);
        const std::vector<EvaluationRecord> batch(st.records.begin() +
                                                      static_cast<std::ptrdiff_t>(batch_start),
                                                  st.records.end());
        st.tr = update_region(st.tr, inc_before, batch, cfg);

        if (st.tr.L < cfg.L_min) {
            st.restarts += 1;
            st.tr.L = cfg.L_init;
            st.tr.successes = 0;
            st.tr.failures = 0;
            st.tr.widths = Vec::Ones(d);
            for (auto& h : st.carried) h.valid = false;
            st.epoch_start = st.records.size();
            const int k = std::min(cfg.n_init(), cfg.budget - static_cast<int>(st.records.size()));
            if (k > 0)
                evaluate_rows(init_design(d, k, detail::mix_seed(st.seed, 2,
                                                                 static_cast<std::uint64_t>(st.restarts))));
        }

        if (opts.checkpoint_every > 0 && !opts.checkpoint_path.empty() &&
            st.round % opts.checkpoint_every == 0) {
            const nlohmann::json j = st;
            std::FILE* f = std::fopen(opts.checkpoint_path.c_str(), "w");
            if (!f) throw Error("scbo: cannot write checkpoint " + opts.checkpoint_path);
            const std::string text = j.dump(1);
            std::fwrite(text.data(), 1, text.size(), f);
            std::fclose(f);
        }
    }

    OptimizationResult res;
    res.history = st.records;
    res.best = incumbent(st.records);
    res.config = cfg;
    res.seed = st.seed;
    res.restarts = st.restarts;
    return res;
}

inline OptimizationResult run(const Problem& problem, const SCBOConfig& cfg, std::uint64_t seed,
                              const RunOptions& opts = {}) {
    RunState st;
    st.config = cfg;
    st.seed = seed;
    return run_from_state(st, problem, opts);
}

inline RunState load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw Error("scbo: cannot open checkpoint " + path);
    std::string text;
    char buf[65536];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
    std::fclose(f);
    return nlohmann::json::parse(text).get<RunState>();
}

// History export: one row per evaluation with the running incumbent objective.
inline void write_history_csv(const std::string& path, const OptimizationResult& res) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("scbo: cannot write " + path);
    const Eigen::Index d = res.history.empty() ? 0 : res.history.front().x.size();
    const Eigen::Index nc = res.history.empty() ? 0 : res.history.front().constraints.size();
    std::fprintf(f, "index");
    for (Eigen::Index j = 0; j < d; ++j) std::fprintf(f, ",x%d", static_cast<int>(j));
    std::fprintf(f, ",objective");
    for (Eigen::Index j = 0; j < nc; ++j) std::fprintf(f, ",c%d", static_cast<int>(j));
    std::fprintf(f, ",feasible,best_so_far\n");
    const EvaluationRecord* best = nullptr;
    for (const auto& r : res.history) {
        if (!best || dominates(r, *best)) best = &r;
        std::fprintf(f, "%d", r.index);
        for (Eigen::Index j = 0; j < d; ++j)
            std::fprintf(f, ",%s", format_double(r.x[j]).c_str());
        std::fprintf(f, ",%s", format_double(r.objective).c_str());
        for (Eigen::Index j = 0; j < nc; ++j)
            std::fprintf(f, ",%s", format_double(r.constraints[j]).c_str());
        std::fprintf(f, ",%d,%s\n", r.feasible ? 1 : 0, format_double(best->objective).c_str());
    }
    std::fclose(f);
}

inline void write_result_json(const std::string& path, const OptimizationResult& res) {
    nlohmann::json j{{"best", res.best},
                     {"config", res.config},
                     {"seed", res.seed},
                     {"restarts", res.restarts},
                     {"evaluations", res.history.size()}};
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("scbo: cannot write " + path);
    const std::string text = j.dump(1);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
}

}  // namespace microswim::scbo
