#pragma once

// Time-dependent system coefficients: constants or piecewise-linear tables,
// with exact suprema/infima over a horizon for the envelope constants.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace quenchlab {

class CoefficientProfile {
public:
    CoefficientProfile() = default;

    static CoefficientProfile constant(double value) {
        CoefficientProfile p;
        p.points_ = {{0.0, value}};
        return p;
    }

    /// Piecewise-linear table of (t, value) pairs; constant extrapolation
    /// outside the covered range.
    static CoefficientProfile table(std::vector<std::pair<double, double>> points) {
        if (points.empty())
            throw std::invalid_argument("coefficient table must not be empty");
        std::sort(points.begin(), points.end());
        for (std::size_t i = 1; i < points.size(); ++i)
            if (points[i].first == points[i - 1].first)
                throw std::invalid_argument("coefficient table has duplicate time breakpoints");
        CoefficientProfile p;
        p.points_ = std::move(points);
        return p;
    }

    bool is_constant() const { return points_.size() == 1; }

    double operator()(double t) const {
        if (points_.size() == 1) return points_.front().second;
        if (t <= points_.front().first) return points_.front().second;
        if (t >= points_.back().first) return points_.back().second;
        auto hi = std::upper_bound(points_.begin(), points_.end(), std::make_pair(t, 0.0),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        auto lo = hi - 1;
        const double s = (t - lo->first) / (hi->first - lo->first);
        return lo->second + s * (hi->second - lo->second);
    }

    /// Breakpoints clipped to [t0, t1] plus the interval ends.
    std::vector<double> sample_times(double t0, double t1) const {
        std::vector<double> ts = {t0, t1};
        for (const auto& [t, v] : points_)
            if (t > t0 && t < t1) ts.push_back(t);
        std::sort(ts.begin(), ts.end());
        return ts;
    }

    // piecewise-linear extrema sit at breakpoints or interval ends
    double sup(double t0, double t1) const {
        double m = -std::numeric_limits<double>::infinity();
        for (double t : sample_times(t0, t1)) m = std::max(m, (*this)(t));
        return m;
    }
    double inf(double t0, double t1) const {
        double m = std::numeric_limits<double>::infinity();
        for (double t : sample_times(t0, t1)) m = std::min(m, (*this)(t));
        return m;
    }

private:
    std::vector<std::pair<double, double>> points_ = {{0.0, 0.0}};
};

struct SystemCoefficients {
    CoefficientProfile delta1 = CoefficientProfile::constant(1.0);
    CoefficientProfile delta2 = CoefficientProfile::constant(1.0);
    CoefficientProfile h1 = CoefficientProfile::constant(0.0);
    CoefficientProfile h2 = CoefficientProfile::constant(0.0);
    CoefficientProfile k1 = CoefficientProfile::constant(1.0);
    CoefficientProfile k2 = CoefficientProfile::constant(1.0);

    /// Simulation-level checks: delta > 0, h >= 0, k >= 0 (a vanishing source
    /// is a valid degenerate run).
    void validate_run(double horizon) const {
        if (delta1.inf(0.0, horizon) <= 0.0 || delta2.inf(0.0, horizon) <= 0.0)
            throw std::invalid_argument("coefficients: delta_i must be positive on the horizon");
        if (k1.inf(0.0, horizon) < 0.0 || k2.inf(0.0, horizon) < 0.0)
            throw std::invalid_argument("coefficients: k_i must be nonnegative on the horizon");
        if (h1.inf(0.0, horizon) < 0.0 || h2.inf(0.0, horizon) < 0.0)
            throw std::invalid_argument("coefficients: h_i must be nonnegative on the horizon");
    }

    /// Bound-level checks additionally need strictly positive sources.
    void validate(double horizon) const {
        validate_run(horizon);
        if (k1.inf(0.0, horizon) <= 0.0 || k2.inf(0.0, horizon) <= 0.0)
            throw std::invalid_argument("coefficients: k_i must be positive on the horizon");
    }

    bool h_identically_zero(double horizon) const {
        return h1.sup(0.0, horizon) == 0.0 && h2.sup(0.0, horizon) == 0.0;
    }
};

namespace detail {

/// Supremum of an arbitrary time function over [t0, t1], sampled on the union
/// of profile breakpoints with dense subsamples per segment. Exact for
/// constants; a horizon-sampled envelope otherwise.
template <class F>
double sampled_sup(F&& f, double t0, double t1, const std::vector<double>& breakpoints,
                   int subsamples = 128) {
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> ts = breakpoints;
    ts.push_back(t0);
    ts.push_back(t1);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::remove_if(ts.begin(), ts.end(),
                            [&](double t) { return t < t0 || t > t1; }),
             ts.end());
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        for (int s = 0; s <= subsamples; ++s) {
            const double t = ts[i] + (ts[i + 1] - ts[i]) * s / subsamples;
            m = std::max(m, f(t));
        }
    }
    if (ts.size() == 1) m = std::max(m, f(ts.front()));
    return m;
}

}  // namespace detail

}  // namespace quenchlab
