#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "microswim/common.hpp"

namespace microswim::bspline {

// clamped knot vector: degree+1 copies of each endpoint, explicit interior knots
inline std::vector<double> clamped_knots(double t0, double tn, const std::vector<double>& interior, int degree) {
    if (degree < 0) throw DomainError("clamped_knots: degree must be >= 0");
    if (!(tn > t0)) throw DomainError("clamped_knots: need tn > t0");
    double prev = t0;
    for (double t : interior) {
        if (!(t > t0 && t < tn)) throw DomainError("clamped_knots: interior knot outside (t0, tn)");
        if (t < prev) throw DomainError("clamped_knots: interior knots must be nondecreasing");
        prev = t;
    }
    std::vector<double> knots;
    knots.reserve(interior.size() + 2 * static_cast<std::size_t>(degree + 1));
    knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), t0);
    knots.insert(knots.end(), interior.begin(), interior.end());
    knots.insert(knots.end(), static_cast<std::size_t>(degree + 1), tn);
    return knots;
}

// clamped knot vector with spans-1 interior knots spaced uniformly over [t0, tn]
inline std::vector<double> clamped_uniform_knots(double t0, double tn, int spans, int degree) {
    if (spans < 1) throw DomainError("clamped_uniform_knots: need at least one span");
    std::vector<double> interior(static_cast<std::size_t>(spans - 1));
    for (int k = 1; k < spans; ++k) interior[static_cast<std::size_t>(k - 1)] = t0 + (tn - t0) * k / spans;
    return clamped_knots(t0, tn, interior, degree);
}

// Cox-de Boor recursion with the 0/0 := 0 convention; supported on [t_i, t_{i+d+1})
inline double basis_function(int i, int degree, double t, const std::vector<double>& knots) {
    if (i < 0 || static_cast<std::size_t>(i + degree + 1) >= knots.size())
        throw DimensionError("basis_function: index out of range for knot vector");
    const auto ti = [&](int k) { return knots[static_cast<std::size_t>(k)]; };
    if (degree == 0) return (ti(i) <= t && t < ti(i + 1)) ? 1.0 : 0.0;
    double value = 0.0;
    const double dl = ti(i + degree) - ti(i);
    if (dl > 0.0) value += (t - ti(i)) / dl * basis_function(i, degree - 1, t, knots);
    const double dr = ti(i + degree + 1) - ti(i + 1);
    if (dr > 0.0) value += (ti(i + degree + 1) - t) / dr * basis_function(i + 1, degree - 1, t, knots);
    return value;
}

// scalar spline; control restricted to one channel, vector controls use one curve per channel
struct BSplineCurve {
    int degree = 0;
    std::vector<double> knots;
    std::vector<double> points;

    BSplineCurve() = default;
    BSplineCurve(int d, std::vector<double> k, std::vector<double> p)
        : degree(d), knots(std::move(k)), points(std::move(p)) {
        validate();
    }

    void validate() const {
        if (degree < 0) throw DomainError("BSplineCurve: degree must be >= 0");
        if (knots.size() != points.size() + static_cast<std::size_t>(degree) + 1)
            throw DimensionError("BSplineCurve: knot count must equal point count + degree + 1");
        if (points.empty()) throw DimensionError("BSplineCurve: need at least one control point");
        for (std::size_t k = 1; k < knots.size(); ++k)
            if (knots[k] < knots[k - 1]) throw DomainError("BSplineCurve: knots must be nondecreasing");
        if (!(t_end() > t_begin())) throw DomainError("BSplineCurve: empty parameter range");
    }

    double t_begin() const { return knots[static_cast<std::size_t>(degree)]; }
    double t_end() const { return knots[knots.size() - 1 - static_cast<std::size_t>(degree)]; }

    double eval(double t) const {
        if (t < t_begin() || t > t_end()) throw DomainError("BSplineCurve::eval: t outside parameter range");
        if (t == t_end()) return points.back();  // close the final half-open span
        // index of the span containing t: largest k with knots[k] <= t
        const auto it = std::upper_bound(knots.begin(), knots.end(), t);
        int span = static_cast<int>(it - knots.begin()) - 1;
        span = std::min(span, static_cast<int>(points.size()) - 1);
        double value = 0.0;
        for (int i = std::max(0, span - degree); i <= span; ++i)
            value += points[static_cast<std::size_t>(i)] * basis_function(i, degree, t, knots);
        return value;
    }

    // derivative curve of degree-1 on the same clamped range
    BSplineCurve derivative() const {
        if (degree == 0) throw DomainError("BSplineCurve::derivative: degree-0 curve has no spline derivative");
        BSplineCurve d;
        d.degree = degree - 1;
        d.knots.assign(knots.begin() + 1, knots.end() - 1);
        d.points.resize(points.size() - 1);
        for (std::size_t i = 0; i + 1 < points.size(); ++i) {
            const double dt = knots[i + static_cast<std::size_t>(degree) + 1] - knots[i + 1];
            d.points[i] = dt > 0.0 ? degree * (points[i + 1] - points[i]) / dt : 0.0;
        }
        d.validate();
        return d;
    }

    double min_point() const { return *std::min_element(points.begin(), points.end()); }
    double max_point() const { return *std::max_element(points.begin(), points.end()); }
};

// constant curve with the same evaluation interface
inline BSplineCurve constant_curve(double value, double t0, double tn) {
    return BSplineCurve(1, {t0, t0, tn, tn}, {value, value});
}

inline void to_json(nlohmann::json& j, const BSplineCurve& c) {
    j = nlohmann::json{{"degree", c.degree}, {"knots", c.knots}, {"control_points", c.points}};
}

inline void from_json(const nlohmann::json& j, BSplineCurve& c) {
    j.at("degree").get_to(c.degree);
    j.at("knots").get_to(c.knots);
    j.at("control_points").get_to(c.points);
    c.validate();
}

}  // namespace microswim::bspline
