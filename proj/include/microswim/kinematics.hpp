#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace microswim::kin {

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_x(Scalar a) {
    const Scalar c = std::cos(a), s = std::sin(a);
    Eigen::Matrix<Scalar, 3, 3> r;
    r << 1, 0, 0, 0, c, -s, 0, s, c;
    return r;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_y(Scalar a) {
    const Scalar c = std::cos(a), s = std::sin(a);
    Eigen::Matrix<Scalar, 3, 3> r;
    r << c, 0, s, 0, 1, 0, -s, 0, c;
    return r;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_z(Scalar a) {
    const Scalar c = std::cos(a), s = std::sin(a);
    Eigen::Matrix<Scalar, 3, 3> r;
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    return r;
}

// body orientation from extrinsic z-y-x angles (ax, ay, az): R = Rx(ax) Ry(ay) Rz(az)
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> tait_bryan(const Eigen::Matrix<Scalar, 3, 1>& angles) {
    return rotation_x(angles[0]) * rotation_y(angles[1]) * rotation_z(angles[2]);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> cross_matrix(const Eigen::Matrix<Scalar, 3, 1>& v) {
    Eigen::Matrix<Scalar, 3, 3> m;
    m << 0, -v[2], v[1], v[2], 0, -v[0], -v[1], v[0], 0;
    return m;
}

// maps (dax, day, daz) to the angular velocity w of R = Rx Ry Rz, i.e. [w]x = dR/dt R^T
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> head_angular_map(Scalar ax, Scalar ay) {
    const Scalar cx = std::cos(ax), sx = std::sin(ax);
    const Scalar cy = std::cos(ay), sy = std::sin(ay);
    Eigen::Matrix<Scalar, 3, 3> m;
    m << 1, 0, sy, 0, cx, -cy * sx, 0, sx, cx * cy;
    return m;
}

// maps (dpitch, dyaw) of a joint frame R = Ry(pitch) Rz(yaw) to its angular velocity
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 2> link_angular_map(Scalar pitch) {
    Eigen::Matrix<Scalar, 3, 2> m;
    m << 0, std::sin(pitch), 1, 0, 0, std::cos(pitch);
    return m;
}

}  // namespace microswim::kin
