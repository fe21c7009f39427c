#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "microswim/bspline.hpp"
#include "microswim/common.hpp"
#include "microswim/ode.hpp"

namespace microswim::threesphere {

using bspline::BSplineCurve;

// Pairwise hydrodynamic coupling: point forces only, or with the finite-size
// correction for equal spheres (valid while centers stay two radii apart).
enum class Truncation { oseen, rotne_prager };

// Collinear three-sphere swimmer moving in the x-y plane. Spheres and flow are
// three dimensional; positions, forces, and velocities are restricted to their
// in-plane components. The optional no-slip wall is the plane y = 0 with fluid
// filling y > 0.
struct ThreeSphereParams {
    double R = 0.1;                              // sphere radius
    double mu = 1.0;                             // fluid viscosity
    bool wall = false;                           // no-slip wall at y = 0
    Truncation truncation = Truncation::oseen;   // pair coupling level

    double arm_min() const { return 2.0 * R + R / 4.0; }
    double arm_max() const { return 10.0 * R; }
    double rate_max() const { return 0.4; }  // cap on |du/dt| for either arm

    void validate() const {
        if (!(R > 0.0)) throw ConfigError("threesphere: R must be positive");
        if (!(mu > 0.0)) throw ConfigError("threesphere: mu must be positive");
    }
};

// Pose: X3 is the center sphere; sphere 1 trails at distance u1 along the
// axis, sphere 2 leads at distance u2.
struct ThreeSphereState {
    Vec2 X3 = Vec2::Zero();
    double theta = 0.0;
    double u1 = 0.0;
    double u2 = 0.0;

    Vec2 axis() const { return {std::cos(theta), std::sin(theta)}; }
    Vec2 X1() const { return X3 - u1 * axis(); }
    Vec2 X2() const { return X3 + u2 * axis(); }
};

namespace detail {

inline Mat3 stokeslet(const Vec3& r) {
    const double n = r.norm();
    return Mat3::Identity() / n + r * r.transpose() / (n * n * n);
}

// finite-size pair correction for equal spheres of radius R
inline Mat3 finite_size_pair(const Vec3& r, double R) {
    const double n = r.norm();
    const double n3 = n * n * n;
    return (2.0 * R * R / 3.0) *
           (Mat3::Identity() / n3 - 3.0 * r * r.transpose() / (n3 * n * n));
}

inline constexpr int wall_axis = 1;  // wall normal is the y coordinate

// Image system enforcing no-slip on the wall y = 0 for a point force at y,
// evaluated at x; returns the correction to the free-space stokeslet, in the
// same 1/(8 pi mu) units. Finite at x == y, where it gives the leading
// wall-induced self-mobility reduction.
inline Mat3 wall_image(const Vec3& x, const Vec3& y) {
    const double h = y[wall_axis];
    Vec3 ystar = y;
    ystar[wall_axis] = -h;
    const Vec3 X = x - ystar;
    const double rho = X.norm();
    const double r3 = rho * rho * rho;
    const double r5 = r3 * rho * rho;
    Mat3 img = -stokeslet(X);
    // gradient of the dipole-plus-source potential that cancels the mirror flow
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double d = h * ((i == j ? 1.0 : 0.0) / r3 - 3.0 * X[i] * X[j] / r5);
            if (i == wall_axis) d += X[j] / r3;
            if (i == j) d -= X[wall_axis] / r3;
            if (j == wall_axis) d -= X[i] / r3;
            d += 3.0 * X[i] * X[wall_axis] * X[j] / r5;
            const double sj = (j == wall_axis) ? -1.0 : 1.0;
            img(i, j) += 2.0 * h * sj * d;
        }
    }
    return img;
}

inline Vec3 embed(const Vec2& p) { return {p[0], p[1], 0.0}; }

inline std::string describe(const ThreeSphereState& s) {
    return "x3=" + format_double(s.X3[0]) + " y3=" + format_double(s.X3[1]) +
           " theta=" + format_double(s.theta) + " u1=" + format_double(s.u1) +
           " u2=" + format_double(s.u2);
}

}  // namespace detail

// Grand mobility restricted to in-plane components: 2x2 blocks ordered
// (sphere 1, sphere 2, sphere 3), mapping in-plane forces to velocities.
inline Mat mobility(const ThreeSphereState& s, const ThreeSphereParams& p) {
    p.validate();
    const Vec2 pos[3] = {s.X1(), s.X2(), s.X3};
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            if ((pos[a] - pos[b]).norm() - 2.0 * p.R <= 0.0)
                throw DomainError("threesphere mobility: sphere overlap at " + detail::describe(s));
    if (p.wall)
        for (int a = 0; a < 3; ++a)
            if (pos[a][1] <= p.R)
                throw DomainError("threesphere mobility: wall penetration at " + detail::describe(s));
    const double c_self = 1.0 / (6.0 * EIGEN_PI * p.mu * p.R);
    const double c_pair = 1.0 / (8.0 * EIGEN_PI * p.mu);
    Mat M = Mat::Zero(6, 6);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            Mat3 G = Mat3::Zero();
            if (a != b) {
                const Vec3 r = detail::embed(pos[a]) - detail::embed(pos[b]);
                G = detail::stokeslet(r);
                if (p.truncation == Truncation::rotne_prager) G += detail::finite_size_pair(r, p.R);
            }
            if (p.wall) G += detail::wall_image(detail::embed(pos[a]), detail::embed(pos[b]));
            Mat2 block = c_pair * G.topLeftCorner<2, 2>();
            if (a == b) block += c_self * Mat2::Identity();
            M.block<2, 2>(2 * a, 2 * b) = block;
        }
    }
    return M;
}

// Rigid-swimmer closure with prescribed arm rates: solves for the in-plane
// constraint forces (F1, F2, F3), the center velocity V3, and the rotation
// rate, under zero total force and zero total torque about X3. Returns
// (V3_x, V3_y, dtheta/dt); exactly linear in (u1dot, u2dot).
inline Vec3 rhs(const ThreeSphereState& s, const ThreeSphereParams& p, double u1dot, double u2dot,
                double t_report = 0.0) {
    const double margin = p.R / 100.0;
    const Vec2 pos[3] = {s.X1(), s.X2(), s.X3};
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            if ((pos[a] - pos[b]).norm() - 2.0 * p.R < margin)
                throw DomainError("threesphere rhs: near-contact gap below R/100 at " + detail::describe(s));
    const Mat M = mobility(s, p);
    const Vec2 e = s.axis();
    const Vec2 eperp(-e[1], e[0]);

    // unknowns: (F1, F2, F3, V3, omega)
    Eigen::Matrix<double, 9, 9> A = Eigen::Matrix<double, 9, 9>::Zero();
    Eigen::Matrix<double, 9, 1> b = Eigen::Matrix<double, 9, 1>::Zero();
    A.block<6, 6>(0, 0) = M;
    for (int a = 0; a < 3; ++a) A.block<2, 2>(2 * a, 6) = -Mat2::Identity();
    // sphere 1: V1 = V3 - u1dot e - u1 omega eperp
    A.block<2, 1>(0, 8) = s.u1 * eperp;
    b.segment<2>(0) = -u1dot * e;
    // sphere 2: V2 = V3 + u2dot e + u2 omega eperp
    A.block<2, 1>(2, 8) = -s.u2 * eperp;
    b.segment<2>(2) = u2dot * e;
    // sphere 3 rows already read M F - V3 = 0
    A.block<2, 2>(6, 0) = Mat2::Identity();
    A.block<2, 2>(6, 2) = Mat2::Identity();
    A.block<2, 2>(6, 4) = Mat2::Identity();
    // torque about X3: (-u1 e) x F1 + (u2 e) x F2 = 0
    A(8, 0) = s.u1 * e[1];
    A(8, 1) = -s.u1 * e[0];
    A(8, 2) = -s.u2 * e[1];
    A(8, 3) = s.u2 * e[0];

    const Eigen::Matrix<double, 9, 1> q = A.partialPivLu().solve(b);
    const double scale = A.cwiseAbs().maxCoeff() * q.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
    if (!q.allFinite() || (A * q - b).cwiseAbs().maxCoeff() > 1e-9 * scale + 1e-300)
        throw SingularSystemError("threesphere rhs: singular closure at " + detail::describe(s), t_report);
    return {q[6], q[7], q[8]};
}

// Gait: one spline per arm on a shared horizon, control points inside the
// admissible arm range, rate-capped, and periodic (equal endpoint values).
struct ArmControl {
    BSplineCurve u1, u2;

    double t_begin() const { return u1.t_begin(); }
    double t_end() const { return u1.t_end(); }

    void validate(const ThreeSphereParams& p) const {
        u1.validate();
        u2.validate();
        if (std::abs(u1.t_begin() - u2.t_begin()) > 1e-12 || std::abs(u1.t_end() - u2.t_end()) > 1e-12)
            throw ConfigError("arm control: the two channels must share one horizon");
        for (const BSplineCurve* c : {&u1, &u2}) {
            if (c->min_point() < p.arm_min() - 1e-12 || c->max_point() > p.arm_max() + 1e-12)
                throw ConfigError("arm control: control points leave the admissible arm range [" +
                                  format_double(p.arm_min()) + ", " + format_double(p.arm_max()) + "]");
            const BSplineCurve d = c->derivative();
            if (std::max(std::abs(d.min_point()), std::abs(d.max_point())) > p.rate_max() + 1e-12)
                throw ConfigError("arm control: actuation rate exceeds the cap " + format_double(p.rate_max()));
            if (std::abs(c->eval(c->t_begin()) - c->eval(c->t_end())) > 1e-9)
                throw ConfigError("arm control: gait must be periodic (equal endpoint arm lengths)");
        }
    }
};

inline void to_json(nlohmann::json& j, const ArmControl& c) {
    j = nlohmann::json{{"u1", c.u1}, {"u2", c.u2}};
}

inline void from_json(const nlohmann::json& j, ArmControl& c) {
    j.at("u1").get_to(c.u1);
    j.at("u2").get_to(c.u2);
}

// Per-stroke displacements sit near 1e-2 while wall-induced phase effects
// reach down to 1e-7, and the state is only three components, so strokes
// default to much tighter tolerances than the general-purpose integrator.
inline ode::Options default_stroke_options() {
    ode::Options o;
    o.rtol = 1e-10;
    o.atol = 1e-12;
    return o;
}

// Integrate the pose over a gait. Rows align with `times`, columns are
// (x3, y3, theta, u1, u2); arm columns are read from the control, not
// integrated, so they carry no discretization error.
inline Mat integrate_stroke(const ThreeSphereParams& params, const ArmControl& control,
                            const ThreeSphereState& start, const std::vector<double>& times,
                            const ode::Options& opts = default_stroke_options()) {
    params.validate();
    control.validate(params);
    if (times.size() < 2) throw DimensionError("integrate_stroke: need at least two sample times");
    if (times.front() < control.t_begin() - 1e-12 || times.back() > control.t_end() + 1e-12)
        throw ConfigError("integrate_stroke: sample times leave the control horizon");
    if (std::abs(control.u1.eval(times.front()) - start.u1) > 1e-9 ||
        std::abs(control.u2.eval(times.front()) - start.u2) > 1e-9)
        throw ConfigError("integrate_stroke: start arms disagree with the control at the first sample");
    const BSplineCurve du1 = control.u1.derivative();
    const BSplineCurve du2 = control.u2.derivative();
    auto f = [&](double t, const Vec& y, Vec& dy) {
        ThreeSphereState s;
        s.X3 = {y[0], y[1]};
        s.theta = y[2];
        s.u1 = control.u1.eval(t);
        s.u2 = control.u2.eval(t);
        dy = rhs(s, params, du1.eval(t), du2.eval(t), t);
    };
    Vec y0(3);
    y0 << start.X3[0], start.X3[1], start.theta;
    const Mat path = ode::integrate(f, y0, times, opts);
    Mat out(path.rows(), 5);
    for (Eigen::Index i = 0; i < path.rows(); ++i) {
        const double t = times[static_cast<std::size_t>(i)];
        out.row(i) << path(i, 0), path(i, 1), path(i, 2), control.u1.eval(t), control.u2.eval(t);
    }
    return out;
}

// Four-phase square gait from (start_arm, start_arm): arm 1 ramps by
// `amplitude`, then arm 2, then each returns, tracing a square loop in
// (u1, u2) space. A positive amplitude extends the arms, a negative one
// contracts them. The piecewise-linear profile is represented exactly as a
// quadratic spline with doubled knots at the phase corners, so arm bounds and
// the rate cap are enforced exactly, not through a sampled approximation.
inline ArmControl classical_stroke(const ThreeSphereParams& params, double start_arm,
                                   double amplitude, double T) {
    params.validate();
    if (!(T > 0.0)) throw ConfigError("classical_stroke: horizon must be positive");
    const double lo = std::min(start_arm, start_arm + amplitude);
    const double hi = std::max(start_arm, start_arm + amplitude);
    if (lo < params.arm_min() - 1e-12 || hi > params.arm_max() + 1e-12)
        throw ConfigError("classical_stroke: stroke window [" + format_double(lo) + ", " +
                          format_double(hi) + "] leaves the admissible arm range");
    if (std::abs(amplitude) / (T / 4.0) > params.rate_max() + 1e-12)
        throw ConfigError("classical_stroke: phase ramp exceeds the rate cap");

    // piecewise-linear phase profiles on tau in [0, 4]
    const auto ch1 = [&](double tau) {
        if (tau <= 1.0) return start_arm + amplitude * tau;
        if (tau <= 2.0) return start_arm + amplitude;
        if (tau <= 3.0) return start_arm + amplitude * (3.0 - tau);
        return start_arm;
    };
    const auto ch2 = [&](double tau) {
        if (tau <= 1.0) return start_arm;
        if (tau <= 2.0) return start_arm + amplitude * (tau - 1.0);
        if (tau <= 3.0) return start_arm + amplitude;
        return start_arm + amplitude * (4.0 - tau);
    };
    // doubled interior knots at the phase corners make the quadratic spline
    // reproduce the piecewise-linear profile exactly at its averaged-knot
    // abscissae
    const std::vector<double> interior = {T / 4, T / 4, T / 2, T / 2, 3 * T / 4, 3 * T / 4};
    const std::vector<double> knots = bspline::clamped_knots(0.0, T, interior, 2);
    const auto render = [&](const auto& profile) {
        std::vector<double> pts(knots.size() - 3);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double xi = 0.5 * (knots[i + 1] + knots[i + 2]);
            pts[i] = profile(4.0 * xi / T);
        }
        return BSplineCurve(2, knots, pts);
    };
    ArmControl gait{render(ch1), render(ch2)};
    gait.validate(params);
    return gait;
}

// Initial arm length regimes for wall studies, from hugging the lower arm
// bound to fully extended.
enum class WallRegime { near, middle, far };

inline double regime_arm(const ThreeSphereParams& p, WallRegime r) {
    switch (r) {
        case WallRegime::near: return 2.0 * p.R + p.R / 2.0;
        case WallRegime::middle: return 5.0 * p.R;
        default: return 10.0 * p.R;
    }
}

inline std::string regime_name(WallRegime r) {
    switch (r) {
        case WallRegime::near: return "near";
        case WallRegime::middle: return "middle";
        default: return "far";
    }
}

struct WallScanRow {
    double h = 0.0;       // initial height of the swimmer axis above the wall
    double dtheta = 0.0;  // net orientation change over one gait period
};

// One classical stroke per height, swimmer initially parallel to the wall.
// The gait starts from the regime arm length and extends upward when the arm
// bound allows it, otherwise contracts, always with the same amplitude, so
// regimes differ only in where the stroke sits inside the arm range.
inline std::vector<WallScanRow> wall_phase_scan(const ThreeSphereParams& params, WallRegime regime,
                                                const std::vector<double>& heights,
                                                double amplitude = 0.0, double T = 4.0,
                                                const ode::Options& opts = default_stroke_options()) {
    ThreeSphereParams p = params;
    p.validate();
    p.wall = true;
    const double u0 = regime_arm(p, regime);
    // default amplitude R/2: strong near-wall signal while the orientation
    // tail at fifty radii stays well below 1e-6
    double a = amplitude == 0.0 ? p.R / 2.0 : amplitude;
    if (u0 + a > p.arm_max() + 1e-12) a = -a;
    const ArmControl gait = classical_stroke(p, u0, a, T);
    std::vector<WallScanRow> rows;
    rows.reserve(heights.size());
    for (double h : heights) {
        ThreeSphereState s0;
        s0.X3 = {0.0, h};
        s0.u1 = u0;
        s0.u2 = u0;
        const Mat traj = integrate_stroke(p, gait, s0, {0.0, T}, opts);
        rows.push_back({h, traj(1, 2) - traj(0, 2)});
    }
    return rows;
}

inline void write_trajectory_csv(const std::string& path, const std::vector<double>& times,
                                 const Mat& traj) {
    if (traj.rows() != static_cast<Eigen::Index>(times.size()) || traj.cols() != 5)
        throw DimensionError("threesphere trajectory csv: expected one 5-column row per time stamp");
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot open " + path);
    std::fputs("t,x3,y3,theta,u1,u2\n", f);
    for (Eigen::Index i = 0; i < traj.rows(); ++i) {
        std::fputs(format_double(times[static_cast<std::size_t>(i)]).c_str(), f);
        for (Eigen::Index c = 0; c < 5; ++c) {
            std::fputc(',', f);
            std::fputs(format_double(traj(i, c)).c_str(), f);
        }
        std::fputc('\n', f);
    }
    std::fclose(f);
}

inline void write_scan_csv(const std::string& path, const std::vector<WallScanRow>& rows,
                           WallRegime regime) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot open " + path);
    std::fputs("h,delta_theta,regime\n", f);
    for (const WallScanRow& r : rows)
        std::fprintf(f, "%s,%s,%s\n", format_double(r.h).c_str(), format_double(r.dtheta).c_str(),
                     regime_name(regime).c_str());
    std::fclose(f);
}

}  // namespace microswim::threesphere
