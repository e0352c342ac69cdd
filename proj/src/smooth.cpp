#include "epiwave/smooth.hpp"

#include <algorithm>
#include <cmath>

#include "epiwave/errors.hpp"

namespace epiwave {

Eigen::VectorXd SmoothedSeries::grid() const {
    return Eigen::VectorXd::LinSpaced(value.size(), t0, t0 + step * static_cast<double>(value.size() - 1));
}

CubicSpline::CubicSpline(Eigen::VectorXd x, Eigen::VectorXd y) : x_(std::move(x)), y_(std::move(y)) {
    const Eigen::Index n = x_.size();
    if (n < 4) throw ValidationError("cubic spline needs at least 4 knots, got " + std::to_string(n));
    if (y_.size() != n) throw ValidationError("spline knot/value size mismatch");
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (!(x_[i + 1] > x_[i])) throw ValidationError("spline knots must be strictly increasing");

    // Natural boundary: m_0 = m_{n-1} = 0; tridiagonal solve for the rest.
    m_ = Eigen::VectorXd::Zero(n);
    const Eigen::Index k = n - 2;
    Eigen::VectorXd diag(k), rhs(k), lower(k), upper(k);
    for (Eigen::Index i = 1; i <= k; ++i) {
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        lower[i - 1] = h0;
        diag[i - 1] = 2.0 * (h0 + h1);
        upper[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (Eigen::Index i = 1; i < k; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m_[k] = rhs[k - 1] / diag[k - 1];
    for (Eigen::Index i = k - 1; i >= 1; --i)
        m_[i] = (rhs[i - 1] - upper[i - 1] * m_[i + 1]) / diag[i - 1];
}

Eigen::Index CubicSpline::segment(double t) const {
    const Eigen::Index n = x_.size();
    if (t <= x_[0]) return 0;
    if (t >= x_[n - 1]) return n - 2;
    const auto* begin = x_.data();
    const auto* it = std::upper_bound(begin, begin + n, t);
    return std::max<Eigen::Index>(0, (it - begin) - 1);
}

double CubicSpline::value(double t) const {
    const Eigen::Index i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::deriv1(double t) const {
    const Eigen::Index i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           ((1.0 - 3.0 * a * a) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
}

double CubicSpline::deriv2(double t) const {
    const Eigen::Index i = segment(t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    return a * m_[i] + b * m_[i + 1];
}

double CubicSpline::deriv3(double t) const {
    const Eigen::Index i = segment(t);
    const double h = x_[i + 1] - x_[i];
    return (m_[i + 1] - m_[i]) / h;
}

namespace {

SmoothedSeries from_spline(const CubicSpline& spline, double t0, Eigen::Index n, double step) {
    SmoothedSeries out;
    out.t0 = t0;
    out.step = step;
    out.value.resize(n);
    out.d1.resize(n);
    out.d2.resize(n);
    out.d3.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = t0 + step * static_cast<double>(i);
        out.value[i] = spline.value(t);
        out.d1[i] = spline.deriv1(t);
        out.d2[i] = spline.deriv2(t);
        out.d3[i] = spline.deriv3(t);
    }
    out.monotone = true;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (out.value[i + 1] < out.value[i]) { out.monotone = false; break; }
    return out;
}

SmoothedSeries smooth_increments(const CumulativeSeries& s, int window,
                                 const std::function<double(int)>& weight) {
    s.validate();
    if (window < 1 || window % 2 == 0)
        throw ValidationError("smoothing window must be odd and >= 1, got " + std::to_string(window));
    if (window > static_cast<int>(s.values.size()))
        throw ValidationError("smoothing window longer than the series");

    const Eigen::Index m = s.values.size() - 1;
    Eigen::VectorXd inc(m);
    for (Eigen::Index i = 0; i < m; ++i) inc[i] = s.values[i + 1] - s.values[i];

    const int half = window / 2;
    Eigen::VectorXd smoothed(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const int reach = std::min<int>({half, static_cast<int>(i), static_cast<int>(m - 1 - i)});
        double num = 0.0, den = 0.0;
        for (int j = -reach; j <= reach; ++j) {
            const double w = weight(j);
            num += w * inc[i + j];
            den += w;
        }
        smoothed[i] = num / den;
    }

    Eigen::VectorXd acc(s.values.size());
    acc[0] = s.values[0];
    for (Eigen::Index i = 0; i < m; ++i) acc[i + 1] = acc[i] + smoothed[i];

    const Eigen::VectorXd days =
        Eigen::VectorXd::LinSpaced(acc.size(), s.t0, static_cast<double>(s.last_day()));
    const CubicSpline spline(days, acc);
    return from_spline(spline, static_cast<double>(s.t0), acc.size(), 1.0);
}

} // namespace

SmoothedSeries spline_smooth(const CumulativeSeries& s) {
    s.validate();
    if (s.values.size() < 4)
        throw ValidationError("spline smoothing needs at least 4 samples, got " +
                              std::to_string(s.values.size()));
    const Eigen::VectorXd days =
        Eigen::VectorXd::LinSpaced(s.values.size(), s.t0, static_cast<double>(s.last_day()));
    const CubicSpline spline(days, s.values);
    return from_spline(spline, static_cast<double>(s.t0), s.values.size(), 1.0);
}

SmoothedSeries rolling_mean_smooth(const CumulativeSeries& s, int window) {
    return smooth_increments(s, window, [](int) { return 1.0; });
}

Eigen::VectorXd gaussian_window_kernel(int window) {
    if (window < 1 || window % 2 == 0)
        throw ValidationError("Gaussian window must be odd and >= 1");
    const int half = window / 2;
    const double sigma = static_cast<double>(window) / 5.0;
    Eigen::VectorXd w(window);
    for (int j = -half; j <= half; ++j)
        w[j + half] = std::exp(-0.5 * (static_cast<double>(j) * j) / (sigma * sigma));
    w /= w.sum();
    return w;
}

SmoothedSeries gaussian_window_smooth(const CumulativeSeries& s, int window) {
    const double sigma = static_cast<double>(window) / 5.0;
    return smooth_increments(s, window, [sigma](int j) {
        return std::exp(-0.5 * (static_cast<double>(j) * j) / (sigma * sigma));
    });
}

SmoothedSeries convolve_gaussian(const std::function<double(double)>& model, double sigma,
                                 double t0, Eigen::Index n, double step,
                                 std::optional<std::pair<double, double>> domain) {
    if (!(sigma > 0.0)) throw ValidationError("convolution sigma must be positive");
    if (n < 1) throw ValidationError("empty convolution grid");
    const double t_end = t0 + step * static_cast<double>(n - 1);
    const double pad = 6.0 * sigma;
    if (domain) {
        if (t0 - pad < domain->first || t_end + pad > domain->second)
            throw ValidationError("model domain does not pad the grid by 6 sigma");
    }

    // Trapezoid nodes over [-6 sigma, 6 sigma]; the integrand decays to
    // ~1e-8 of its peak at the ends, so truncation dominates the error.
    const int half_nodes = 120;  // 6 sigma / (sigma/20)
    const double h = sigma / 20.0;
    const double s2 = sigma * sigma;
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * M_PI));

    SmoothedSeries out;
    out.t0 = t0;
    out.step = step;
    out.value.setZero(n);
    out.d1.setZero(n);
    out.d2.setZero(n);
    out.d3.setZero(n);

    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = t0 + step * static_cast<double>(i);
        double v = 0.0, g1 = 0.0, g2 = 0.0, g3 = 0.0;
        for (int k = -half_nodes; k <= half_nodes; ++k) {
            const double u = h * static_cast<double>(k);
            const double g = norm * std::exp(-0.5 * u * u / s2);
            const double fu = model(t - u);
            const double wt = (k == -half_nodes || k == half_nodes) ? 0.5 : 1.0;
            const double gw = g * wt * fu;
            v += gw;
            g1 += gw * (-u / s2);
            g2 += gw * (u * u / (s2 * s2) - 1.0 / s2);
            g3 += gw * (3.0 * u / (s2 * s2) - u * u * u / (s2 * s2 * s2));
        }
        // d^n/dt^n of G(t-s) is G^(n)(t-s); with u = t-s the kernels above
        // apply unchanged.
        out.value[i] = v * h;
        out.d1[i] = g1 * h;
        out.d2[i] = g2 * h;
        out.d3[i] = g3 * h;
    }
    out.monotone = true;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (out.value[i + 1] < out.value[i]) { out.monotone = false; break; }
    return out;
}

} // namespace epiwave
