#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "microswim/common.hpp"
#include "microswim/detail/gauss_legendre.hpp"

namespace microswim::objective {

enum class RefKind { ellipse_arc, ellipsoid_arc, point_target };

// Arc length of the planar ellipse path over parameter range [0, s].
inline double ellipse_arc_length(double a, double b, double s) {
    const int panels = std::max(8, static_cast<int>(std::ceil(4 * s)));
    return detail::gauss16([a, b](double x) { return std::hypot(a * std::sin(x), b * std::cos(x)); }, 0.0, s,
                           panels);
}

// Arc length of the ellipsoidal space curve over parameter range [0, s].
inline double ellipsoid_arc_length(double a, double b, double c, double s) {
    const int panels = std::max(8, static_cast<int>(std::ceil(4 * s)));
    return detail::gauss16(
        [a, b, c](double x) {
            const double cs = std::cos(x), sn = std::sin(x);
            const double dx = 2 * a * cs * sn;
            const double dy = b * (cs * cs - sn * sn);
            const double dz = c * cs;
            return std::sqrt(dx * dx + dy * dy + dz * dz);
        },
        0.0, s, panels);
}

namespace detail_obj {

// Bisection for the parameter s with cumulative length L; f must be increasing.
template <typename F>
double solve_arc_parameter(F&& length_of, double target, double s_max) {
    if (!(target > 0)) throw DomainError("arc length must be positive");
    const double full = length_of(s_max);
    if (!(target < full)) throw DomainError("arc length exceeds the reachable curve length");
    double lo = 0.0, hi = s_max;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (length_of(mid) < target ? lo : hi) = mid;
    }
    const double s = 0.5 * (lo + hi);
    if (std::abs(length_of(s) - target) > 1e-8 * target)
        throw DomainError("arc-length bisection failed to converge");
    return s;
}

}  // namespace detail_obj

struct ReferenceTrajectory {
    RefKind kind = RefKind::point_target;
    double a = 0, b = 0, c = 0;  // semi-axes
    double arc_length = 0;
    double s_end = 0;
    double horizon = 0;
    Vec3 target = Vec3::Zero();

    // Position at time t; components beyond the third are implicitly zero.
    Vec3 eval(double t) const {
        switch (kind) {
            case RefKind::ellipse_arc: {
                const double s = -(t / horizon) * s_end + EIGEN_PI;
                return {a + a * std::cos(s), b * std::sin(s), 0.0};
            }
            case RefKind::ellipsoid_arc: {
                const double s = (t / horizon) * s_end;
                const double cs = std::cos(s), sn = std::sin(s);
                return {a - a * cs * cs, b * cs * sn, c * sn};
            }
            case RefKind::point_target:
                return target;
        }
        throw Error("unreachable");
    }

    Vec3 final_point() const { return eval(horizon); }
};

inline ReferenceTrajectory ellipse_ref(double a, double b, double arc_length, double horizon) {
    if (!(a > 0) || !(b > 0)) throw DomainError("semi-axes must be positive");
    if (!(horizon > 0)) throw DomainError("horizon must be positive");
    ReferenceTrajectory ref;
    ref.kind = RefKind::ellipse_arc;
    ref.a = a;
    ref.b = b;
    ref.arc_length = arc_length;
    ref.horizon = horizon;
    ref.s_end = detail_obj::solve_arc_parameter(
        [a, b](double s) { return ellipse_arc_length(a, b, s); }, arc_length, 2 * EIGEN_PI);
    return ref;
}

// Full-perimeter ellipse: parameter runs a complete turn and the length follows from it.
inline ReferenceTrajectory ellipse_closed_ref(double a, double b, double horizon) {
    if (!(a > 0) || !(b > 0)) throw DomainError("semi-axes must be positive");
    if (!(horizon > 0)) throw DomainError("horizon must be positive");
    ReferenceTrajectory ref;
    ref.kind = RefKind::ellipse_arc;
    ref.a = a;
    ref.b = b;
    ref.s_end = 2 * EIGEN_PI;
    ref.arc_length = ellipse_arc_length(a, b, ref.s_end);
    ref.horizon = horizon;
    return ref;
}

inline ReferenceTrajectory ellipsoid_ref(double a, double b, double c, double arc_length, double horizon) {
    if (!(a > 0) || !(b > 0) || !(c > 0)) throw DomainError("semi-axes must be positive");
    if (!(horizon > 0)) throw DomainError("horizon must be positive");
    ReferenceTrajectory ref;
    ref.kind = RefKind::ellipsoid_arc;
    ref.a = a;
    ref.b = b;
    ref.c = c;
    ref.arc_length = arc_length;
    ref.horizon = horizon;
    ref.s_end = detail_obj::solve_arc_parameter(
        [a, b, c](double s) { return ellipsoid_arc_length(a, b, c, s); }, arc_length, 2 * EIGEN_PI);
    return ref;
}

inline ReferenceTrajectory point_target_ref(const Vec3& target, double horizon) {
    if (!(horizon > 0)) throw DomainError("horizon must be positive");
    ReferenceTrajectory ref;
    ref.kind = RefKind::point_target;
    ref.target = target;
    ref.horizon = horizon;
    return ref;
}

// Quadratic tracking cost: composite-Simpson running term plus terminal term.
// traj rows follow `times`; its leading columns align with the reference components,
// any further weighted columns are measured against zero.
inline double tracking_cost(const std::vector<double>& times, const Mat& traj, const ReferenceTrajectory& ref,
                            const Vec& q_diag, const Vec& s_diag) {
    const auto n = static_cast<Eigen::Index>(times.size());
    if (n < 3 || n % 2 == 0) throw ConfigError("tracking cost needs an odd number of samples (>= 3)");
    if (traj.rows() != n) throw DimensionError("trajectory rows do not match the time grid");
    if (q_diag.size() > traj.cols() || s_diag.size() > traj.cols())
        throw DimensionError("weight vector longer than the trajectory state");
    if ((q_diag.array() < 0).any() || (s_diag.array() < 0).any())
        throw DomainError("weights must be nonnegative");
    const double dt = (times.back() - times.front()) / static_cast<double>(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (std::abs(times[i + 1] - times[i] - dt) > 1e-9 * std::max(1.0, dt))
            throw ConfigError("tracking cost requires a uniform time grid");
    if (std::abs(times.back() - ref.horizon) > 1e-9 * std::max(1.0, ref.horizon))
        throw ConfigError("time grid does not end at the reference horizon");

    auto weighted_sq = [&](Eigen::Index i, const Vec& w) {
        const Vec3 p = ref.eval(times[static_cast<std::size_t>(i)]);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < w.size(); ++j) {
            const double r = j < 3 ? p[j] : 0.0;
            const double d = traj(i, j) - r;
            acc += w[j] * d * d;
        }
        return acc;
    };

    double integral = weighted_sq(0, q_diag) + weighted_sq(n - 1, q_diag);
    for (Eigen::Index i = 1; i < n - 1; ++i) integral += (i % 2 == 1 ? 4.0 : 2.0) * weighted_sq(i, q_diag);
    integral *= dt / 3.0;

    double terminal = 0.0;
    {
        const Vec3 pf = ref.final_point();
        for (Eigen::Index j = 0; j < s_diag.size(); ++j) {
            const double r = j < 3 ? pf[j] : 0.0;
            const double d = traj(n - 1, j) - r;
            terminal += s_diag[j] * d * d;
        }
    }
    return integral + terminal;
}

// Negated displacement along x, normalized by a body length scale.
inline double max_displacement_cost(double x_final, double x_initial, double scale) {
    if (!(scale > 0)) throw DomainError("length scale must be positive");
    return -(x_final - x_initial) / scale;
}

inline double max_displacement_cost(const Mat& traj, double scale) {
    if (traj.rows() < 2) throw DimensionError("trajectory needs at least two samples");
    return max_displacement_cost(traj(traj.rows() - 1, 0), traj(0, 0), scale);
}

// Far-target cost near a wall: columns of traj are (x, y, theta, ...). The running
// weights follow diag(1, alpha, alpha) when enabled; the terminal weights always do.
inline double wall_compensation_cost(const std::vector<double>& times, const Mat& traj, double h,
                                     double alpha, double x_far, bool running_cost = true) {
    if (!(alpha >= 0)) throw DomainError("alpha must be nonnegative");
    if (traj.cols() < 3) throw DimensionError("trajectory needs (x, y, theta) columns");
    const auto ref = point_target_ref({x_far, h, 0.0}, times.back());
    Vec s_diag(3);
    s_diag << 1.0, alpha, alpha;
    const Vec q_diag = running_cost ? s_diag : Vec(Vec::Zero(3));
    return tracking_cost(times, traj, ref, q_diag, s_diag);
}

// Uniformly sampled reference as rows (t, x, y, z).
inline Mat sample(const ReferenceTrajectory& ref, int n) {
    if (n < 2) throw DomainError("need at least two samples");
    Mat out(n, 4);
    for (int i = 0; i < n; ++i) {
        const double t = ref.horizon * i / (n - 1);
        out(i, 0) = t;
        out.row(i).tail(3) = ref.eval(t).transpose();
    }
    return out;
}

inline void write_reference_csv(const ReferenceTrajectory& ref, const std::string& path, int n = 401) {
    const Mat samples = sample(ref, n);
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot open " + path);
    std::fputs("t,x,y,z\n", f);
    for (Eigen::Index i = 0; i < samples.rows(); ++i)
        std::fprintf(f, "%s,%s,%s,%s\n", format_double(samples(i, 0)).c_str(),
                     format_double(samples(i, 1)).c_str(), format_double(samples(i, 2)).c_str(),
                     format_double(samples(i, 3)).c_str());
    std::fclose(f);
}

}  // namespace microswim::objective
