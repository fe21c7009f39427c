#pragma once

#include <optional>
#include <string>
#include <vector>

#include "microswim/bspline.hpp"
#include "microswim/common.hpp"

namespace microswim::controls {

using bspline::BSplineCurve;

struct ChannelSpec {
    std::string name;
    std::optional<double> fixed;  // set -> channel is a constant, consumes no decision coordinates
    int points = 0;
    int degree = 3;
    double lower = 0.0;
    double upper = 0.0;
    bool periodic = false;

    int decision_count() const {
        if (fixed) return 0;
        return periodic ? points - 1 : points;
    }
};

struct ControlSpec {
    std::vector<ChannelSpec> channels;
    double horizon = 0.0;

    int decision_dim() const {
        int n = 0;
        for (const auto& ch : channels) n += ch.decision_count();
        return n;
    }

    void validate() const {
        if (!(horizon > 0)) throw ConfigError("ControlSpec: horizon must be positive");
        for (const auto& ch : channels) {
            if (ch.fixed) continue;
            if (ch.degree < 1) throw ConfigError("ControlSpec: channel '" + ch.name + "' needs degree >= 1");
            if (ch.points < ch.degree + 1)
                throw ConfigError("ControlSpec: channel '" + ch.name + "' needs at least degree+1 control points");
            if (!(ch.upper >= ch.lower)) throw ConfigError("ControlSpec: channel '" + ch.name + "' has empty bounds");
            if (ch.periodic && ch.points < 2)
                throw ConfigError("ControlSpec: periodic channel '" + ch.name + "' needs at least 2 points");
        }
    }
};

// one curve per channel, fixed channels included as constants
struct ControlSet {
    std::vector<BSplineCurve> curves;

    Vec eval(double t) const {
        Vec u(static_cast<Eigen::Index>(curves.size()));
        for (std::size_t k = 0; k < curves.size(); ++k) u[static_cast<Eigen::Index>(k)] = curves[k].eval(t);
        return u;
    }
};

// Maps a decision vector in the unit cube onto bounded spline controls. Periodic
// channels pin the last control point to the first, so it consumes no coordinate.
inline ControlSet decode(const Vec& x, const ControlSpec& spec) {
    spec.validate();
    if (x.size() != spec.decision_dim())
        throw DimensionError("decode: decision vector has size " + std::to_string(x.size()) + ", spec needs " +
                             std::to_string(spec.decision_dim()));
    ControlSet set;
    set.curves.reserve(spec.channels.size());
    Eigen::Index at = 0;
    for (const auto& ch : spec.channels) {
        if (ch.fixed) {
            set.curves.push_back(bspline::constant_curve(*ch.fixed, 0.0, spec.horizon));
            continue;
        }
        std::vector<double> pts(static_cast<std::size_t>(ch.points));
        const int free_points = ch.decision_count();
        for (int i = 0; i < free_points; ++i) {
            const double xi = x[at + i];
            if (xi < 0.0 || xi > 1.0) throw DomainError("decode: coordinate outside the unit cube");
            pts[static_cast<std::size_t>(i)] = ch.lower + (ch.upper - ch.lower) * xi;
        }
        if (ch.periodic) pts.back() = pts.front();
        at += free_points;
        auto knots = bspline::clamped_uniform_knots(0.0, spec.horizon, ch.points - ch.degree, ch.degree);
        set.curves.emplace_back(ch.degree, std::move(knots), std::move(pts));
    }
    return set;
}

// inverse of decode for free channels (fixed channels contribute nothing)
inline Vec encode(const ControlSet& set, const ControlSpec& spec) {
    spec.validate();
    if (set.curves.size() != spec.channels.size()) throw DimensionError("encode: channel count mismatch");
    Vec x(spec.decision_dim());
    Eigen::Index at = 0;
    for (std::size_t k = 0; k < spec.channels.size(); ++k) {
        const auto& ch = spec.channels[k];
        const int free_points = ch.decision_count();
        if (free_points == 0) continue;
        const auto& pts = set.curves[k].points;
        if (static_cast<int>(pts.size()) != ch.points) throw DimensionError("encode: control point count mismatch");
        const double width = ch.upper - ch.lower;
        for (int i = 0; i < free_points; ++i)
            x[at + i] = width > 0 ? (pts[static_cast<std::size_t>(i)] - ch.lower) / width : 0.0;
        at += free_points;
    }
    return x;
}

// upper bound on max |du/dt| from the derivative spline's control points
inline double rate_bound(const BSplineCurve& curve) {
    if (curve.degree == 0) return 0.0;
    const auto d = curve.derivative();
    double bound = 0.0;
    for (double p : d.points) bound = std::max(bound, std::abs(p));
    return bound;
}

// amount by which the rate bound exceeds rate_max (0 when certifiably admissible)
inline double rate_violation(const BSplineCurve& curve, double rate_max) {
    return std::max(0.0, rate_bound(curve) - rate_max);
}

}  // namespace microswim::controls
