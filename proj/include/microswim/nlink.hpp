#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "microswim/common.hpp"
#include "microswim/kinematics.hpp"
#include "microswim/ode.hpp"

namespace microswim::nlink {

struct NLinkParams {
    int N = 5;            // link count
    double r = 0.15;      // head radius
    double L = 1.0;       // flagellum length
    double k_par_head = 6 * EIGEN_PI;
    double k_perp_head = 6 * EIGEN_PI;
    double k_rot = 8 * EIGEN_PI;  // head rotational drag
    double k_par_link = 1.0;
    double k_perp_link = 2.0;
    double k_el = 16.0;  // joint torsion-spring constant
    double m = 40.0;     // magnetic moment magnitude

    double link_length() const { return L / N; }
    int state_dim() const { return 2 * N + 6; }

    void validate() const {
        if (N < 1) throw ConfigError("need at least one link");
        for (double v : {r, L, k_par_head, k_perp_head, k_rot, k_par_link, k_perp_link, k_el, m})
            if (!(v > 0)) throw ConfigError("all swimmer parameters must be positive");
        if (k_par_head != k_perp_head) throw ConfigError("spherical head needs equal drag coefficients");
    }
};

// State layout: position (3), head angles (3), joint angles (phi_y^i, phi_z^i per link).
struct NLinkState {
    Vec3 position = Vec3::Zero();
    Vec3 angles = Vec3::Zero();
    Vec joint_angles;

    static NLinkState from_vector(const Vec& p, int N) {
        if (p.size() != 2 * N + 6) throw DimensionError("state vector has the wrong dimension");
        NLinkState s;
        s.position = p.head<3>();
        s.angles = p.segment<3>(3);
        s.joint_angles = p.tail(2 * N);
        return s;
    }

    Vec to_vector() const {
        Vec p(6 + joint_angles.size());
        p.head<3>() = position;
        p.segment<3>(3) = angles;
        p.tail(joint_angles.size()) = joint_angles;
        return p;
    }
};

struct AssembledSystem {
    Mat A;   // (2N+6) x (6N+6)
    Mat Q;   // (6N+6) x (3N+6)
    Mat B;   // (3N+6) x (2N+6)
    Vec F0;  // elastic torques
    std::array<Vec, 3> Fk;  // magnetic torque per field component

    Mat reduced() const { return A * Q * B; }

    Vec forcing(const Vec3& u) const { return F0 + u[0] * Fk[0] + u[1] * Fk[1] + u[2] * Fk[2]; }
};

// Joint attachment points X^1..X^{N+1}; row 0 is the head-flagellum junction.
inline Mat link_points(const NLinkParams& params, const Vec& state) {
    const auto s = NLinkState::from_vector(state, params.N);
    const Mat3 Rh = kin::tait_bryan<double>(s.angles);
    const double l = params.link_length();
    Mat pts(params.N + 1, 3);
    Vec3 x = s.position - params.r * Rh.col(0);
    pts.row(0) = x.transpose();
    for (int i = 1; i <= params.N; ++i) {
        const Mat3 Ri = kin::rotation_y(s.joint_angles[2 * (i - 1)]) *
                        kin::rotation_z(s.joint_angles[2 * (i - 1) + 1]);
        x -= l * (Rh * Ri.col(0));
        pts.row(i) = x.transpose();
    }
    return pts;
}

inline AssembledSystem assemble(const NLinkParams& params, const Vec& state) {
    const int N = params.N;
    const auto s = NLinkState::from_vector(state, N);
    const double l = params.link_length();
    const double l2 = l * l, l3 = l * l * l;

    const Mat3 Rh = kin::tait_bryan<double>(s.angles);
    const Vec3 e1h = Rh.col(0);
    const Mat3 Dh = Vec3(params.k_par_head, params.k_perp_head, params.k_perp_head).asDiagonal();
    const Vec3 Dlink(params.k_par_link, params.k_perp_link, params.k_perp_link);

    std::vector<Mat3> Ri(N), W(N), C(N), RhDti(N);  // RhDti = R^h D-tilde^i
    std::vector<Vec3> E(N + 1);                     // E[0] is the head axis
    std::vector<Eigen::Matrix<double, 2, 3>> Pi(N);
    E[0] = e1h;
    for (int i = 0; i < N; ++i) {
        Ri[i] = kin::rotation_y(s.joint_angles[2 * i]) * kin::rotation_z(s.joint_angles[2 * i + 1]);
        const Mat3 RhRi = Rh * Ri[i];
        E[i + 1] = RhRi.col(0);
        RhDti[i] = RhRi * Dlink.asDiagonal() * Ri[i].transpose();  // R^h R^i D^i (R^i)^T
        W[i] = RhDti[i] * Rh.transpose();
        C[i] = kin::cross_matrix(E[i + 1]);
        Pi[i] = RhRi.bottomRows<2>();
    }

    std::vector<Vec3> X(N + 1);  // X[i] is the base point of link i+1 (X[0] = X^1)
    X[0] = s.position - params.r * e1h;
    for (int i = 1; i <= N; ++i) X[i] = X[i - 1] - l * E[i];

    const int dim = 2 * N + 6;
    AssembledSystem sys;
    sys.B = Mat::Zero(3 * N + 6, dim);
    sys.Q = Mat::Zero(6 * N + 6, 3 * N + 6);
    sys.A = Mat::Zero(dim, 6 * N + 6);

    // B: identity on translation, angular rate maps for head and joints.
    sys.B.block<3, 3>(0, 0).setIdentity();
    sys.B.block<3, 3>(3, 3) = kin::head_angular_map(s.angles[0], s.angles[1]);
    for (int i = 0; i < N; ++i)
        sys.B.block<3, 2>(6 + 3 * i, 6 + 2 * i) = kin::link_angular_map(s.joint_angles[2 * i]);

    // Q: chain rule from (head velocity, head rate, joint rates) to per-link velocities.
    sys.Q.block<3, 3>(0, 0).setIdentity();
    sys.Q.block<3, 3>(3 + 3 * N, 3).setIdentity();
    sys.Q.block(6 + 3 * N, 6, 3 * N, 3 * N).setIdentity();
    const Mat3 head_arm = params.r * kin::cross_matrix(e1h);
    for (int i = 0; i < N; ++i) {
        sys.Q.block<3, 3>(3 + 3 * i, 0).setIdentity();
        Mat3 qh = head_arm;
        for (int k = 0; k < i; ++k) qh += l * C[k];
        sys.Q.block<3, 3>(3 + 3 * i, 3) = qh;
        for (int j = 0; j < i; ++j) {
            const Mat3 Rj_e1 = kin::cross_matrix(Vec3(Ri[j].col(0)));
            sys.Q.block<3, 3>(3 + 3 * i, 6 + 3 * j) = l * Rh * Rj_e1;
        }
    }

    // A rows: total force, total torque about the head center, projected joint torques.
    const int col_head = 0, col_links = 3, col_omega_h = 3 + 3 * N, col_omega = 6 + 3 * N;
    sys.A.block<3, 3>(0, col_head) = -params.r * Rh * Dh * Rh.transpose();
    Mat3 torque_omega_h = -params.k_rot * params.r * params.r * params.r * Mat3::Identity();
    Mat3 force_omega_h = Mat3::Zero();
    for (int j = 0; j < N; ++j) {
        const Mat3 RhDtiCrossRj = RhDti[j] * kin::cross_matrix(Vec3(Ri[j].col(0)));  // R^h D-tilde^j [R^j e1]^x
        const Mat3 lever_head = kin::cross_matrix(Vec3(X[j] - s.position));

        sys.A.block<3, 3>(0, col_links + 3 * j) = -l * W[j];
        force_omega_h += -0.5 * l2 * W[j] * C[j];
        sys.A.block<3, 3>(0, col_omega + 3 * j) = -0.5 * l2 * RhDtiCrossRj;

        sys.A.block<3, 3>(3, col_links + 3 * j) = l * (0.5 * l * C[j] - lever_head) * W[j];
        torque_omega_h += l2 * (l / 3.0 * C[j] - 0.5 * lever_head) * W[j] * C[j];
        sys.A.block<3, 3>(3, col_omega + 3 * j) = l2 * (l / 3.0 * C[j] - 0.5 * lever_head) * RhDtiCrossRj;

        // joint torque balances: links j.. about X^i, projected off the link axis
        for (int i = 0; i <= j; ++i) {
            const Mat3 lever = kin::cross_matrix(Vec3(X[j] - X[i]));
            sys.A.block<2, 3>(6 + 2 * i, col_links + 3 * j) =
                Pi[i] * (l * (0.5 * l * C[j] - lever) * W[j]);
            sys.A.block<2, 3>(6 + 2 * i, col_omega_h) +=
                Pi[i] * (l2 * (l / 3.0 * C[j] - 0.5 * lever) * W[j] * C[j]);
            sys.A.block<2, 3>(6 + 2 * i, col_omega + 3 * j) =
                Pi[i] * (l2 * (l / 3.0 * C[j] - 0.5 * lever) * RhDtiCrossRj);
        }
    }
    sys.A.block<3, 3>(0, col_omega_h) = force_omega_h;
    sys.A.block<3, 3>(3, col_omega_h) = torque_omega_h;

    // Elastic restoring torques pull each link toward its predecessor.
    sys.F0 = Vec::Zero(dim);
    for (int i = 0; i < N; ++i)
        sys.F0.segment<2>(6 + 2 * i) = -params.k_el * (Pi[i] * E[i + 1].cross(E[i]));

    // Magnetic torque on the head, one column per field component.
    const Mat3 head_cross = kin::cross_matrix(e1h);
    for (int k = 0; k < 3; ++k) {
        sys.Fk[k] = Vec::Zero(dim);
        sys.Fk[k].segment<3>(3) = -params.m * head_cross.col(k);
    }
    return sys;
}

// Velocity of the generalized coordinates under field u at time t.
inline Vec rhs(const NLinkParams& params, const Vec& state, const Vec3& u, double t) {
    const auto sys = assemble(params, state);
    const Mat M = sys.reduced();
    const Vec f = sys.forcing(u);
    Eigen::PartialPivLU<Mat> lu(M);
    if (lu.rcond() < 1e-12) throw SingularSystemError("drag system is numerically singular", t);
    const Vec v = lu.solve(f);
    const double scale = std::max(f.norm(), 1e-30);
    if ((M * v - f).norm() > 1e-10 * scale)
        throw SingularSystemError("drag solve residual is too large", t);
    return v;
}

using FieldFunction = std::function<Vec3(double)>;

// Planar sinusoidal drive: steady x-component plus an oscillating y-component.
inline FieldFunction sinusoidal_field(double amplitude, double frequency) {
    return [amplitude, frequency](double t) {
        return Vec3(amplitude, amplitude * std::sin(2 * EIGEN_PI * frequency * t), 0.0);
    };
}

// Field aligned with the tangent of a path, plus an oscillating in-plane normal part.
inline FieldFunction tangent_aligned_field(const std::function<Vec3(double)>& path, double horizon,
                                           double frequency, double amplitude) {
    return [=](double t) {
        const double h = 1e-6 * std::max(horizon, 1.0);
        const double lo = std::max(0.0, t - h), hi = std::min(horizon, t + h);
        const Vec3 tangent = (path(hi) - path(lo)) / (hi - lo);
        const double norm = tangent.norm();
        if (norm < 1e-12) throw DomainError("path tangent vanishes");
        const Vec3 tau = tangent / norm;
        Vec3 normal = Vec3::UnitZ().cross(tau);
        if (normal.norm() < 1e-9) normal = Vec3::UnitX().cross(tau);
        normal.normalize();
        return Vec3(amplitude * (tau + std::sin(2 * EIGEN_PI * frequency * t) * normal));
    };
}

inline Mat integrate(const NLinkParams& params, const FieldFunction& field, const Vec& p0,
                     const std::vector<double>& times, const ode::Options& opts = {}) {
    params.validate();
    if (p0.size() != params.state_dim()) throw DimensionError("initial state has the wrong dimension");
    auto f = [&](double t, const Vec& y, Vec& dy) { dy = rhs(params, y, field(t), t); };
    return ode::integrate(f, p0, times, opts);
}

// Mean x-advance per drive period, skipping the first period as transient.
// Net x-advance per drive period, averaged over `periods` cycles after one warmup cycle.
inline double displacement_per_period(const NLinkParams& params, double frequency,
                                      const ode::Options& opts = {}, int periods = 4) {
    if (!(frequency > 0)) throw DomainError("frequency must be positive");
    if (periods < 1) throw DomainError("need at least one measured period");
    const double period = 1.0 / frequency;
    const Vec p0 = Vec::Zero(params.state_dim());
    const Mat traj = integrate(params, sinusoidal_field(0.01, frequency), p0,
                               {0.0, period, (1 + periods) * period}, opts);
    return (traj(2, 0) - traj(1, 0)) / periods;
}

inline void write_trajectory_csv(const std::string& path, const std::vector<double>& times,
                                 const Mat& states) {
    if (states.rows() != static_cast<Eigen::Index>(times.size()))
        throw DimensionError("trajectory rows do not match the time stamps");
    const auto joints = states.cols() - 6;
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw Error("cannot open " + path);
    std::fputs("t,x,y,z,theta_x,theta_y,theta_z", f);
    for (Eigen::Index i = 0; i < joints / 2; ++i)
        std::fprintf(f, ",phi_y_%lld,phi_z_%lld", static_cast<long long>(i + 1),
                     static_cast<long long>(i + 1));
    std::fputc('\n', f);
    for (Eigen::Index row = 0; row < states.rows(); ++row) {
        std::fputs(format_double(times[static_cast<std::size_t>(row)]).c_str(), f);
        for (Eigen::Index col = 0; col < states.cols(); ++col)
            std::fprintf(f, ",%s", format_double(states(row, col)).c_str());
        std::fputc('\n', f);
    }
    std::fclose(f);
}

}  // namespace microswim::nlink
