#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <utility>

#include "epiwave/series.hpp"

namespace epiwave {

/// Regularized cumulative curve sampled on a uniform grid, with its first
/// three derivatives on the same grid. `monotone` records whether the value
/// channel is non-decreasing (raw smoothing may break monotonicity).
struct SmoothedSeries {
    double t0 = 0.0;
    double step = 1.0;
    Eigen::VectorXd value, d1, d2, d3;
    bool monotone = true;

    Eigen::Index size() const { return value.size(); }
    double time(Eigen::Index i) const { return t0 + step * static_cast<double>(i); }
    double t_end() const { return time(value.size() - 1); }
    Eigen::VectorXd grid() const;
};

/// Natural cubic spline interpolant with analytic derivatives up to order 3.
class CubicSpline {
public:
    CubicSpline() = default;
    /// Knots must be strictly increasing; needs at least 4 of them.
    CubicSpline(Eigen::VectorXd x, Eigen::VectorXd y);

    double value(double t) const;
    double deriv1(double t) const;
    double deriv2(double t) const;
    double deriv3(double t) const;

private:
    Eigen::Index segment(double t) const;
    Eigen::VectorXd x_, y_, m_;  // m_ = second derivatives at knots
};

/// Natural cubic spline through the cumulative samples; derivatives are the
/// spline's own. Grid step 1 day.
SmoothedSeries spline_smooth(const CumulativeSeries& s);

/// Centered moving mean of the daily increments with an odd window,
/// shrinking symmetrically at the boundaries, re-accumulated and splined.
SmoothedSeries rolling_mean_smooth(const CumulativeSeries& s, int window);

/// Same pipeline with a truncated discrete Gaussian kernel over the window
/// (sigma = window/5, renormalized to unit sum).
SmoothedSeries gaussian_window_smooth(const CumulativeSeries& s, int window);

/// Weights of the discrete Gaussian window (full, interior form).
Eigen::VectorXd gaussian_window_kernel(int window);

/// Convolution of a model curve with the mean-zero Gaussian of standard
/// deviation `sigma`: value and the first three derivatives obtained with
/// analytic Gaussian-derivative kernels. The integral is truncated at
/// +/- 6 sigma and evaluated by composite trapezoid with step sigma/20.
/// `domain`, when given, must pad the requested grid by at least 6 sigma
/// on each side.
SmoothedSeries convolve_gaussian(const std::function<double(double)>& model, double sigma,
                                 double t0, Eigen::Index n, double step,
                                 std::optional<std::pair<double, double>> domain = {});

} // namespace epiwave
