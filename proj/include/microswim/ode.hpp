#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

#include "microswim/common.hpp"

namespace microswim::ode {

enum class Method {
    dopri45,  // explicit Dormand-Prince 5(4), for non-stiff problems
    sdirk2,   // L-stable diagonally implicit method with step doubling, for stiff problems
};

struct Stats {
    long steps = 0;
    long rhs_evals = 0;
    long jacobians = 0;
};

struct Options {
    double rtol = 1e-8;
    double atol = 1e-10;
    double initial_step = 0.0;  // 0 -> heuristic
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 20'000'000;
    Method method = Method::dopri45;
    int jac_refresh = 8;  // accepted implicit steps between finite-difference Jacobian rebuilds
    Stats* stats = nullptr;
};

namespace detail {

// Dormand-Prince 5(4) tableau
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// embedded 4th-order weights
inline constexpr double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640, e5 = -92097.0 / 339200,
                        e6 = 187.0 / 2100, e7 = 1.0 / 40;

inline void validate_times(const std::vector<double>& times) {
    if (times.size() < 2) throw DimensionError("integrate: need at least two sample times");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1])) throw DomainError("integrate: sample times must be strictly increasing");
}

inline double error_norm(const Vec& yerr, const Vec& y, const Vec& ynew, double rtol, double atol) {
    double err = 0.0;
    const Eigen::Index n = y.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double scale = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double r = yerr[i] / scale;
        err += r * r;
    }
    err = std::sqrt(err / static_cast<double>(n));
    return std::isfinite(err) ? err : 1e10;
}

template <typename F>
Mat integrate_dopri45(F&& f, const Vec& y0, const std::vector<double>& times, const Options& opts) {
    const double t0 = times.front(), t1 = times.back();
    const double span = t1 - t0;
    const Eigen::Index n = y0.size();

    Mat out(static_cast<Eigen::Index>(times.size()), n);
    out.row(0) = y0.transpose();

    Vec y = y0, ynew(n), yerr(n);
    Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n);

    double t = t0;
    double h = std::min(opts.initial_step > 0 ? opts.initial_step : span / 100.0, opts.max_step);
    const double hmin = span * 1e-14;
    bool k1_fresh = false;
    std::size_t next_sample = 1;
    long steps = 0, rhs_evals = 0;

    while (next_sample < times.size()) {
        if (++steps > opts.max_steps) throw Error("integrate: step limit exceeded at t=" + format_double(t));
        const double t_target = times[next_sample];
        h = std::min(h, t_target - t);
        if (h < hmin) throw Error("integrate: step size underflow at t=" + format_double(t));

        if (!k1_fresh) {
            f(t, y, k1);
            ++rhs_evals;
            k1_fresh = true;
        }
        ytmp = y + h * (a21 * k1);
        f(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        f(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        f(t + h, ytmp, k6);
        ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        f(t + h, ynew, k7);
        rhs_evals += 6;
        yerr = ynew - (y + h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));

        const double err = error_norm(yerr, y, ynew, opts.rtol, opts.atol);
        if (err <= 1.0) {
            t += h;
            y.swap(ynew);
            k1 = k7;  // first-same-as-last
            while (next_sample < times.size() && t >= times[next_sample] - hmin) {
                out.row(static_cast<Eigen::Index>(next_sample)) = y.transpose();
                ++next_sample;
            }
        }
        const double grow = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(grow, 0.2, 5.0);
        h = std::min(h, opts.max_step);
        if (next_sample < times.size()) h = std::min(h, times.back() - t);
    }
    if (opts.stats) {
        opts.stats->steps = steps;
        opts.stats->rhs_evals = rhs_evals;
    }
    return out;
}

// Two-stage singly diagonally implicit base scheme (L-stable; the last stage
// collocates at the step end, so strongly damped components pinned to a slowly
// drifting manifold keep full accuracy) advanced by step doubling: each macro step
// compares one full step against two half steps, giving a second-order error
// estimate, while the locally extrapolated third-order result is propagated
// (extrapolation keeps the damping at infinity). Stage equations are solved by a
// modified Newton iteration whose matrix uses a finite-difference Jacobian; it is
// frozen across the three sub-steps so the leading error terms cancel exactly, and
// rebuilt sparingly since its quality only affects Newton convergence speed.
// Sample values come from cubic Hermite interpolation, whose error is below the
// method error, so steps never shrink to land on sample times.
template <typename F>
Mat integrate_sdirk2(F&& f, const Vec& y0, const std::vector<double>& times, const Options& opts) {
    const double gamma = 1.0 - 1.0 / std::sqrt(2.0);
    const double t0 = times.front(), t1 = times.back();
    const double span = t1 - t0;
    const Eigen::Index n = y0.size();

    Mat out(static_cast<Eigen::Index>(times.size()), n);
    out.row(0) = y0.transpose();

    Vec y = y0, ynew(n), f0(n), f1(n), ftmp(n), ypert(n), dy(n);
    Vec y_full(n), y_half(n), f_mid(n), f_scratch(n), stage(n), c2(n), k1(n), est(n);
    Mat jac(n, n);
    Eigen::PartialPivLU<Mat> w_full(n), w_half(n);

    double t = t0;
    double h = std::min(opts.initial_step > 0 ? opts.initial_step : span / 1000.0, opts.max_step);
    const double hmin = span * 1e-14;
    std::size_t next_sample = 1;
    long steps = 0, rhs_evals = 0, jacobians = 0;
    int steps_since_jac = -1;  // -1 -> no Jacobian yet

    f(t, y, f0);
    ++rhs_evals;

    const auto rebuild_jacobian = [&](double tj, const Vec& yj, const Vec& fj) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double delta = 1.5e-8 * (std::abs(yj[j]) + 1e-2);
            ypert = yj;
            ypert[j] += delta;
            f(tj, ypert, ftmp);
            jac.col(j) = (ftmp - fj) / delta;
        }
        rhs_evals += n;
        ++jacobians;
        steps_since_jac = 0;
    };

    // Newton iteration for Y - hg f(tc, Y) = cnst, started from the preset Y
    const auto solve_stage = [&](double tc, double hg, const Vec& cnst, const Eigen::PartialPivLU<Mat>& w,
                                 Vec& Y) -> bool {
        double prev_norm = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 7; ++it) {
            f(tc, Y, ftmp);
            ++rhs_evals;
            dy = w.solve(cnst + hg * ftmp - Y);
            Y += dy;
            double nd = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double r = dy[i] / (opts.atol + opts.rtol * std::abs(y[i]));
                nd += r * r;
            }
            nd = std::sqrt(nd / static_cast<double>(n));
            if (!std::isfinite(nd) || nd > 1.3 * prev_norm) return false;  // diverging
            if (nd < 0.02) return true;
            prev_norm = nd;
        }
        return false;
    };

    // one base step of size hh from (ts, ys) with derivative fs; also returns the
    // end-point derivative recovered algebraically from the last stage equation
    const auto base_step = [&](double ts, const Vec& ys, const Vec& fs, const Eigen::PartialPivLU<Mat>& w,
                               double hh, Vec& result, Vec& f_end) -> bool {
        const double hg = gamma * hh;
        stage = ys + hg * fs;
        if (!solve_stage(ts + hg, hg, ys, w, stage)) return false;
        k1 = (stage - ys) / hg;
        c2 = ys + ((1.0 - gamma) * hh) * k1;
        result = ys + hh * k1;
        if (!solve_stage(ts + hh, hg, c2, w, result)) return false;
        f_end = (result - c2) / hg;
        return true;
    };

    while (next_sample < times.size()) {
        if (++steps > opts.max_steps) throw Error("integrate: step limit exceeded at t=" + format_double(t));
        h = std::min(h, t1 - t);
        if (h < hmin) throw Error("integrate: step size underflow at t=" + format_double(t));

        bool jac_fresh = false;
        if (steps_since_jac < 0 || steps_since_jac >= opts.jac_refresh) {
            rebuild_jacobian(t, y, f0);
            jac_fresh = true;
        }
        w_full.compute(Mat::Identity(n, n) - (gamma * h) * jac);
        w_half.compute(Mat::Identity(n, n) - (gamma * 0.5 * h) * jac);

        const bool ok = base_step(t, y, f0, w_full, h, y_full, f_scratch) &&
                        base_step(t, y, f0, w_half, 0.5 * h, y_half, f_mid) &&
                        base_step(t + 0.5 * h, y_half, f_mid, w_half, 0.5 * h, ynew, f_scratch);
        if (!ok) {  // Newton failure: try a fresh Jacobian first, then shrink the step
            if (!jac_fresh) steps_since_jac = -1;
            else h *= 0.25;
            continue;
        }
        est = (ynew - y_full) / 3.0;  // second-order error estimate for the doubled result

        const double err = error_norm(est, y, ynew, opts.rtol, opts.atol);
        if (err <= 1.0) {
            ynew += est;  // local extrapolation, third order
            f(t + h, ynew, f1);
            ++rhs_evals;
            // cubic Hermite fill of sample times inside (t, t+h]
            while (next_sample < times.size() && times[next_sample] <= t + h + hmin) {
                const double theta = std::clamp((times[next_sample] - t) / h, 0.0, 1.0);
                const double th2 = theta * theta, th3 = th2 * theta;
                out.row(static_cast<Eigen::Index>(next_sample)) =
                    ((2 * th3 - 3 * th2 + 1) * y + (th3 - 2 * th2 + theta) * h * f0 +
                     (-2 * th3 + 3 * th2) * ynew + (th3 - th2) * h * f1)
                        .transpose();
                ++next_sample;
            }
            t += h;
            y.swap(ynew);
            f0.swap(f1);
            if (steps_since_jac >= 0) ++steps_since_jac;
        } else if (err > 16.0) {
            steps_since_jac = -1;  // force a rebuild after a hard rejection
        }
        const double grow = err > 0 ? 0.9 * std::pow(err, -1.0 / 3.0) : 2.5;
        h *= std::clamp(grow, 0.2, 2.5);  // modest growth cap cuts rejection cycling
        h = std::min(h, opts.max_step);
    }
    if (opts.stats) {
        opts.stats->steps = steps;
        opts.stats->rhs_evals = rhs_evals;
        opts.stats->jacobians = jacobians;
    }
    return out;
}

}  // namespace detail

// Integrates y' = f(t, y) from times[0] to times.back(), recording the state at
// every entry of `times` (must be strictly increasing). f has signature
// f(double t, const Vec& y, Vec& dydt). Returns a (times.size() x dim) matrix.
template <typename F>
Mat integrate(F&& f, const Vec& y0, const std::vector<double>& times, const Options& opts = {}) {
    detail::validate_times(times);
    if (opts.method == Method::sdirk2) return detail::integrate_sdirk2(f, y0, times, opts);
    return detail::integrate_dopri45(f, y0, times, opts);
}

// convenience: n uniformly spaced samples on [t0, t1] including both endpoints
inline std::vector<double> linspace(double t0, double t1, int n) {
    if (n < 2) throw DimensionError("linspace: need n >= 2");
    std::vector<double> ts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ts[static_cast<std::size_t>(i)] = t0 + (t1 - t0) * i / (n - 1);
    ts.back() = t1;
    return ts;
}

}  // namespace microswim::ode
