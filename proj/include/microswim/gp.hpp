#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "microswim/common.hpp"

namespace microswim::gp {

// Observations on the unit box. Outputs are raw (unstandardized).
struct Dataset {
    Mat X;  // n x dim, every row inside [0,1]^dim
    Vec y;  // n

    Eigen::Index size() const { return X.rows(); }
    Eigen::Index dim() const { return X.cols(); }

    void validate() const {
        if (X.rows() != y.size()) throw DimensionError("dataset: one output per input row required");
        if (X.rows() < 1) throw DimensionError("dataset: empty");
        if (X.minCoeff() < -1e-12 || X.maxCoeff() > 1 + 1e-12)
            throw DomainError("dataset: inputs must lie in the unit box");
        for (Eigen::Index a = 0; a < X.rows(); ++a)
            for (Eigen::Index b = a + 1; b < X.rows(); ++b)
                if ((X.row(a) - X.row(b)).cwiseAbs().maxCoeff() < 1e-12)
                    throw DomainError("dataset: duplicate inputs at rows " + std::to_string(a) +
                                      " and " + std::to_string(b));
    }
};

inline void to_json(nlohmann::json& j, const Dataset& d) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(d.X.rows()));
    for (Eigen::Index i = 0; i < d.X.rows(); ++i)
        rows[static_cast<std::size_t>(i)].assign(d.X.row(i).begin(), d.X.row(i).end());
    j = nlohmann::json{{"inputs", rows}, {"outputs", std::vector<double>(d.y.begin(), d.y.end())}};
}

inline void from_json(const nlohmann::json& j, Dataset& d) {
    const auto rows = j.at("inputs").get<std::vector<std::vector<double>>>();
    const auto outs = j.at("outputs").get<std::vector<double>>();
    if (rows.empty()) throw ConfigError("dataset json: empty inputs");
    d.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw ConfigError("dataset json: ragged input rows");
        for (std::size_t c = 0; c < rows[i].size(); ++c)
            d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
    d.y = Eigen::Map<const Vec>(outs.data(), static_cast<Eigen::Index>(outs.size()));
}

namespace detail {

inline constexpr double sqrt5 = 2.2360679774997896;

// pairwise anisotropically scaled distances between row sets
inline Mat scaled_distances(const Mat& A, const Mat& B, const Vec& ell) {
    const Mat As = A * ell.cwiseInverse().asDiagonal();
    const Mat Bs = B * ell.cwiseInverse().asDiagonal();
    const Vec a2 = As.rowwise().squaredNorm();
    const Vec b2 = Bs.rowwise().squaredNorm();
    Mat R2 = (-2.0) * (As * Bs.transpose());
    R2.colwise() += a2;
    R2.rowwise() += b2.transpose();
    return R2.cwiseMax(0.0).cwiseSqrt();
}

// smooth twice-differentiable correlation with heavy polynomial tail
inline Mat matern52(const Mat& R) {
    return ((1.0 + sqrt5 * R.array() + (5.0 / 3.0) * R.array().square()) *
            (-sqrt5 * R.array()).exp())
        .matrix();
}

// d k / d log(lengthscale_j) shares this radial factor across dimensions
inline Mat matern52_radial_factor(const Mat& R) {
    return ((5.0 / 3.0) * (1.0 + sqrt5 * R.array()) * (-sqrt5 * R.array()).exp()).matrix();
}

// solve (L L^T) x = b given the lower Cholesky factor
inline Mat chol_solve(const Mat& L, Mat b) {
    L.triangularView<Eigen::Lower>().solveInPlace(b);
    L.transpose().triangularView<Eigen::Upper>().solveInPlace(b);
    return b;
}

}  // namespace detail

// Fitted surrogate: constant prior mean (the output average), anisotropic
// smooth kernel on standardized outputs, cached dense factorization.
struct GPModel {
    Mat X;                    // training inputs
    Vec y;                    // raw training outputs
    Vec lengthscales;         // one per input dimension
    double signal_var = 1.0;  // standardized-output units
    double noise_var = 1e-8;  // jitter actually used by the factorization
    double y_mean = 0.0;
    double y_std = 1.0;
    Mat chol_lower;           // L with L L^T = signal_var*k(X,X) + noise_var*I
    Vec alpha;                // (L L^T)^{-1} standardized_targets

    Eigen::Index size() const { return X.rows(); }
    Eigen::Index dim() const { return X.cols(); }
    double prior_mean() const { return y_mean; }
    double prior_variance() const { return y_std * y_std * signal_var; }

    Vec standardized_targets() const { return (y.array() - y_mean).matrix() / y_std; }

    // covariance block between query rows and the training set, standardized units
    Mat cross_kernel(const Mat& Xs) const {
        return signal_var * detail::matern52(detail::scaled_distances(Xs, X, lengthscales));
    }

    // posterior mean and variance (raw output units) at query rows
    std::pair<Vec, Vec> posterior(const Mat& Xs) const {
        if (Xs.cols() != dim()) throw DimensionError("posterior: query dimension mismatch");
        const Mat Ks = cross_kernel(Xs);
        const Vec mean_s = Ks * alpha;
        const Mat V = chol_lower.triangularView<Eigen::Lower>().solve(Ks.transpose());
        Vec var_s = Vec::Constant(Xs.rows(), signal_var + noise_var) -
                    V.colwise().squaredNorm().transpose();
        var_s = var_s.cwiseMax(0.0);
        return {Vec((y_mean + (y_std * mean_s).array()).matrix()), Vec(y_std * y_std * var_s)};
    }
};

inline void to_json(nlohmann::json& j, const GPModel& m) {
    Dataset d{m.X, m.y};
    j = nlohmann::json{{"data", d},
                       {"lengthscales", std::vector<double>(m.lengthscales.begin(), m.lengthscales.end())},
                       {"signal_variance", m.signal_var},
                       {"noise_variance", m.noise_var},
                       {"output_mean", m.y_mean},
                       {"output_std", m.y_std}};
}

namespace detail {

// factor signal_var*k + noise*I, escalating jitter tenfold up to 1e-4
inline bool factorize(const Mat& K_sig, double& noise, Mat& L) {
    while (true) {
        Mat K = K_sig;
        K.diagonal().array() += noise;
        Eigen::LLT<Mat> llt(K);
        if (llt.info() == Eigen::Success) {
            L = llt.matrixL();
            return true;
        }
        if (noise >= 1e-4) return false;
        noise = std::min(noise * 10.0, 1e-4);
    }
}

}  // namespace detail

inline void from_json(const nlohmann::json& j, GPModel& m) {
    const Dataset d = j.at("data").get<Dataset>();
    m.X = d.X;
    m.y = d.y;
    const auto ls = j.at("lengthscales").get<std::vector<double>>();
    m.lengthscales = Eigen::Map<const Vec>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    m.signal_var = j.at("signal_variance").get<double>();
    m.noise_var = j.at("noise_variance").get<double>();
    m.y_mean = j.at("output_mean").get<double>();
    m.y_std = j.at("output_std").get<double>();
    const Mat K_sig =
        m.signal_var * detail::matern52(detail::scaled_distances(m.X, m.X, m.lengthscales));
    if (!detail::factorize(K_sig, m.noise_var, m.chol_lower))
        throw Error("gp checkpoint: kernel matrix is ill-conditioned beyond the jitter cap");
    m.alpha = detail::chol_solve(m.chol_lower, m.standardized_targets());
}

struct FitOptions {
    int restarts = 2;      // random starts in addition to the default (or warm) start
    int max_iters = 40;    // ascent iterations per start
    std::uint64_t seed = 0;
    Vec warm_start;        // optional [log lengthscales..., log signal_var] to seed the first start
};

namespace detail {

constexpr double log_ell_lo = -5.2983173665480363;  // log 0.005
constexpr double log_ell_hi = 1.3862943611198906;   // log 4
constexpr double log_sig_lo = -2.9957322735539909;  // log 0.05
constexpr double log_sig_hi = 2.9957322735539909;   // log 20

struct LmlEval {
    double value = -std::numeric_limits<double>::infinity();
    Vec grad;
    double noise = 1e-8;
};

// log marginal likelihood of standardized targets and its gradient in
// theta = [log ell_1..d, log signal_var], noise pinned at the jitter floor
inline LmlEval lml_with_grad(const Mat& X, const Vec& ys, const Vec& theta) {
    const Eigen::Index n = X.rows(), d = X.cols();
    LmlEval out;
    const Vec ell = theta.head(d).array().exp();
    const double s2 = std::exp(theta[d]);
    const Mat R = scaled_distances(X, X, ell);
    const Mat K_sig = s2 * matern52(R);
    double noise = 1e-8;
    Mat L;
    if (!factorize(K_sig, noise, L)) return out;  // -inf: reject this theta
    out.noise = noise;
    const Vec alpha = chol_solve(L, ys);
    out.value = -0.5 * ys.dot(alpha) - L.diagonal().array().log().sum() -
                0.5 * n * std::log(2.0 * EIGEN_PI);
    const Mat Kinv = chol_solve(L, Mat::Identity(n, n));
    const Mat A = alpha * alpha.transpose() - Kinv;
    out.grad.resize(d + 1);
    // radial factor shared by all lengthscale directions
    const Mat W = A.cwiseProduct(s2 * matern52_radial_factor(R));
    for (Eigen::Index j = 0; j < d; ++j) {
        const Vec xj = X.col(j) / ell[j];
        const Mat Dj = xj.replicate(1, n) - xj.transpose().replicate(n, 1);
        out.grad[j] = 0.5 * W.cwiseProduct(Dj.cwiseAbs2()).sum();
    }
    out.grad[d] = 0.5 * A.cwiseProduct(K_sig).sum();
    return out;
}

inline Vec clamp_theta(Vec theta) {
    const Eigen::Index d = theta.size() - 1;
    for (Eigen::Index j = 0; j < d; ++j) theta[j] = std::clamp(theta[j], log_ell_lo, log_ell_hi);
    theta[d] = std::clamp(theta[d], log_sig_lo, log_sig_hi);
    return theta;
}

// projected backtracking ascent from one start; returns the best theta found
inline std::pair<double, Vec> ascend(const Mat& X, const Vec& ys, Vec theta, int max_iters) {
    theta = clamp_theta(theta);
    LmlEval cur = lml_with_grad(X, ys, theta);
    double step = 0.5;
    for (int it = 0; it < max_iters && std::isfinite(cur.value); ++it) {
        const double gscale = std::max(1.0, cur.grad.cwiseAbs().maxCoeff());
        bool moved = false;
        while (step >= 1e-4) {
            const Vec cand = clamp_theta(theta + (step / gscale) * cur.grad);
            if ((cand - theta).cwiseAbs().maxCoeff() < 1e-12) break;
            const LmlEval next = lml_with_grad(X, ys, cand);
            if (next.value > cur.value + 1e-12) {
                theta = cand;
                cur = next;
                step = std::min(2.0 * step, 4.0);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    return {cur.value, theta};
}

}  // namespace detail

// Maximize the marginal likelihood over lengthscales and signal variance by
// multi-start projected gradient ascent; outputs are standardized internally.
inline GPModel fit(const Dataset& data, const FitOptions& opts = {}) {
    data.validate();
    if (data.size() < 2) throw DimensionError("gp fit: need at least two points");
    const Eigen::Index d = data.dim();

    GPModel m;
    m.X = data.X;
    m.y = data.y;
    m.y_mean = data.y.mean();
    const double var = (data.y.array() - m.y_mean).square().sum() / data.y.size();
    m.y_std = std::max(std::sqrt(var), 1e-12);
    const Vec ys = m.standardized_targets();

    std::vector<Vec> starts;
    if (opts.warm_start.size() == d + 1) {
        starts.push_back(opts.warm_start);
    } else {
        Vec s0(d + 1);
        s0.head(d).setConstant(std::log(0.5));
        s0[d] = 0.0;
        starts.push_back(s0);
    }
    Rng rng(opts.seed);
    for (int r = 0; r < opts.restarts; ++r) {
        Vec s(d + 1);
        for (Eigen::Index j = 0; j < d; ++j) s[j] = rng.uniform(std::log(0.05), std::log(2.0));
        s[d] = rng.uniform(std::log(0.2), std::log(5.0));
        starts.push_back(s);
    }

    double best = -std::numeric_limits<double>::infinity();
    Vec best_theta = starts.front();
    for (const Vec& s : starts) {
        const auto [value, theta] = detail::ascend(data.X, ys, s, opts.max_iters);
        if (value > best) {
            best = value;
            best_theta = theta;
        }
    }
    if (!std::isfinite(best)) throw Error("gp fit: kernel ill-conditioned at every hyperparameter start");

    m.lengthscales = best_theta.head(d).array().exp();
    m.signal_var = std::exp(best_theta[d]);
    m.noise_var = 1e-8;
    const Mat K_sig =
        m.signal_var * detail::matern52(detail::scaled_distances(m.X, m.X, m.lengthscales));
    if (!detail::factorize(K_sig, m.noise_var, m.chol_lower))
        throw Error("gp fit: kernel matrix is ill-conditioned beyond the jitter cap");
    m.alpha = detail::chol_solve(m.chol_lower, ys);
    return m;
}

// Rebuild a model around new data while keeping the fitted hyperparameters.
// One factorization instead of a full marginal-likelihood ascent; used when
// observations arrive faster than hyperparameters drift.
inline GPModel update_data(const GPModel& hyper_source, const Dataset& data) {
    data.validate();
    if (data.dim() != hyper_source.dim())
        throw DimensionError("gp update_data: input dimension mismatch");
    GPModel m;
    m.X = data.X;
    m.y = data.y;
    m.lengthscales = hyper_source.lengthscales;
    m.signal_var = hyper_source.signal_var;
    m.y_mean = data.y.mean();
    const double var = (data.y.array() - m.y_mean).square().sum() / data.y.size();
    m.y_std = std::max(std::sqrt(var), 1e-12);
    m.noise_var = 1e-8;
    const Mat K_sig =
        m.signal_var * detail::matern52(detail::scaled_distances(m.X, m.X, m.lengthscales));
    if (!detail::factorize(K_sig, m.noise_var, m.chol_lower))
        throw Error("gp update_data: kernel matrix is ill-conditioned beyond the jitter cap");
    m.alpha = detail::chol_solve(m.chol_lower, m.standardized_targets());
    return m;
}

// Exact draws from the joint posterior at the query rows (raw output units).
// Rows of the result are independent realizations. The posterior covariance
// is factorized by Cholesky, falling back to an eigendecomposition with
// negative eigenvalues clipped to zero.
inline Mat sample_joint(const GPModel& m, const Mat& Xs, int n_draws, std::uint64_t seed) {
    if (Xs.rows() < 1) throw DimensionError("sample_joint: need at least one query point");
    if (Xs.cols() != m.dim()) throw DimensionError("sample_joint: query dimension mismatch");
    if (n_draws < 1) throw DimensionError("sample_joint: need at least one draw");
    const Eigen::Index r = Xs.rows();
    const Mat Ks = m.cross_kernel(Xs);
    const Vec mean_s = Ks * m.alpha;
    const Mat Kss = m.signal_var * detail::matern52(detail::scaled_distances(Xs, Xs, m.lengthscales));
    const Mat V = m.chol_lower.triangularView<Eigen::Lower>().solve(Ks.transpose());
    Mat cov = Kss - V.transpose() * V;
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal().array() += 1e-12;

    Mat root;
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() == Eigen::Success) {
        root = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
        root = eig.eigenvectors() *
               eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    Rng rng(seed);
    Mat draws(n_draws, r);
    Vec z(root.cols());
    for (int k = 0; k < n_draws; ++k) {
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
        draws.row(k) = (m.y_mean + (m.y_std * (mean_s + root * z)).array()).matrix().transpose();
    }
    return draws;
}

// Posterior realizations as evaluable functions: a feature-space prior draw
// (random cosine features matching the kernel spectrum) corrected to agree
// with the data. Costs O(features + training points) per query instead of a
// cubic factorization in the query count, which makes screening thousands of
// candidates per realization affordable.
struct PathwiseSampler {
    Mat omega;       // features x dim
    Vec bias;        // features
    Mat weights;     // draws x features
    Mat resid_coef;  // draws x training points
    Mat Xtrain;
    Vec lengthscales;
    double signal_var = 1.0;
    double y_mean = 0.0;
    double y_std = 1.0;

    int n_draws() const { return static_cast<int>(weights.rows()); }

    // draws x queries, raw output units
    Mat draws_at(const Mat& Xs) const {
        const Mat phase = omega * Xs.transpose();  // features x queries
        const Mat F = (phase.colwise() + bias).array().cos().matrix() *
                      std::sqrt(2.0 * signal_var / static_cast<double>(omega.rows()));
        const Mat prior = weights * F;
        const Mat Ks = signal_var *
                       detail::matern52(detail::scaled_distances(Xtrain, Xs, lengthscales));
        return (y_mean + (y_std * (prior + resid_coef * Ks)).array()).matrix();
    }
};

inline PathwiseSampler make_pathwise_sampler(const GPModel& m, int n_draws, int n_features,
                                             std::uint64_t seed) {
    if (n_draws < 1 || n_features < 1)
        throw DimensionError("pathwise sampler: draws and features must be positive");
    const Eigen::Index d = m.dim();
    PathwiseSampler s;
    s.Xtrain = m.X;
    s.lengthscales = m.lengthscales;
    s.signal_var = m.signal_var;
    s.y_mean = m.y_mean;
    s.y_std = m.y_std;

    Rng rng(seed);
    s.omega.resize(n_features, d);
    s.bias.resize(n_features);
    for (int i = 0; i < n_features; ++i) {
        // spectral mixture for the smooth kernel: scale a Gaussian direction
        // by an inverse chi-square radial factor with five degrees of freedom
        double g = 0.0;
        for (int k = 0; k < 5; ++k) {
            const double zk = rng.normal();
            g += zk * zk;
        }
        const double radial = std::sqrt(5.0 / g);
        for (Eigen::Index j = 0; j < d; ++j)
            s.omega(i, j) = radial * rng.normal() / m.lengthscales[j];
        s.bias[i] = rng.uniform(0.0, 2.0 * EIGEN_PI);
    }
    s.weights.resize(n_draws, n_features);
    for (int k = 0; k < n_draws; ++k)
        for (int i = 0; i < n_features; ++i) s.weights(k, i) = rng.normal();

    // agreement with the data: correct each prior draw by the kernel
    // interpolant of its residual at the training points
    const Mat phase = s.omega * m.X.transpose();
    const Mat F = (phase.colwise() + s.bias).array().cos().matrix() *
                  std::sqrt(2.0 * m.signal_var / static_cast<double>(n_features));
    const Mat prior_at_train = s.weights * F;  // draws x n
    const Vec ys = m.standardized_targets();
    s.resid_coef.resize(n_draws, m.size());
    for (int k = 0; k < n_draws; ++k) {
        const Vec rhs = ys - prior_at_train.row(k).transpose();
        s.resid_coef.row(k) = detail::chol_solve(m.chol_lower, rhs).transpose();
    }
    return s;
}

}  // namespace microswim::gp
