#include "epiwave/ode.hpp"

#include <algorithm>
#include <cmath>

#include "epiwave/errors.hpp"

namespace epiwave {

void DenseSolution::append(double t, Eigen::VectorXd y, Eigen::VectorXd f) {
    t_.push_back(t);
    y_.push_back(std::move(y));
    f_.push_back(std::move(f));
}

std::size_t DenseSolution::segment(double t) const {
    if (t_.size() < 2) throw NumericalError("dense solution has no accepted steps");
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const auto idx = static_cast<std::size_t>(std::distance(t_.begin(), it));
    if (idx == 0) return 0;
    return std::min(idx - 1, t_.size() - 2);
}

Eigen::VectorXd DenseSolution::eval(double t) const {
    const std::size_t i = segment(t);
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * y_[i] + (h10 * h) * f_[i] + h01 * y_[i + 1] + (h11 * h) * f_[i + 1];
}

double DenseSolution::eval(double t, Eigen::Index component) const {
    return eval(t)[component];
}

Eigen::VectorXd DenseSolution::eval_deriv(double t) const {
    const std::size_t i = segment(t);
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    const double d00 = (6 * s * s - 6 * s) / h;
    const double d10 = 3 * s * s - 4 * s + 1;
    const double d01 = (-6 * s * s + 6 * s) / h;
    const double d11 = 3 * s * s - 2 * s;
    return d00 * y_[i] + d10 * f_[i] + d01 * y_[i + 1] + d11 * f_[i + 1];
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

void integrate_span(const OdeRhs& rhs_raw, double t0, double t1, bool interior_stop,
                    const OdeOptions& opt, Eigen::VectorXd& y, Eigen::VectorXd& f,
                    double& h, DenseSolution& sol, int& steps_used) {
    const Eigen::Index n = y.size();
    Eigen::VectorXd k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);

    // Keep stage evaluations strictly left of an interior breakpoint so a
    // right-discontinuous RHS cannot leak into this span's final stages.
    const double stage_cap =
        interior_stop ? t1 - 1e-12 * std::max(1.0, std::abs(t1)) : t1;
    const auto rhs = [&](double t, const Eigen::VectorXd& yy, Eigen::VectorXd& dy) {
        rhs_raw(std::min(t, stage_cap), yy, dy);
    };

    h = std::min(h, t1 - t0);
    double t = t0;
    const double t_eps = 1e-13 * std::max(1.0, std::abs(t1));

    while (t < t1 - t_eps) {
        if (++steps_used > opt.max_steps)
            throw NumericalError("ODE integration exceeded max step count");
        if (h < 1e-14 * std::max(1.0, std::abs(t)))
            throw NumericalError("ODE step size underflow at t = " + std::to_string(t));
        const bool final_step = h >= t1 - t - t_eps;
        if (final_step) h = t1 - t;

        ytmp = y + h * a21 * f;
        rhs(t + c2 * h, ytmp, k2);
        ytmp = y + h * (a31 * f + a32 * k2);
        rhs(t + c3 * h, ytmp, k3);
        ytmp = y + h * (a41 * f + a42 * k2 + a43 * k3);
        rhs(t + c4 * h, ytmp, k4);
        ytmp = y + h * (a51 * f + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(t + c5 * h, ytmp, k5);
        ytmp = y + h * (a61 * f + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(t + h, ytmp, k6);
        ynew = y + h * (b1 * f + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        rhs(t + h, ynew, k7);
        err = h * (e1 * f + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err_norm = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double scale = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double e = err[i] / scale;
            err_norm += e * e;
        }
        err_norm = std::sqrt(err_norm / static_cast<double>(n));

        if (err_norm <= 1.0) {
            t = final_step ? t1 : t + h;
            y = ynew;
            f = k7;  // FSAL
            sol.append(t, y, f);
        }
        const double factor =
            err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        h = std::min(h * factor, opt.h_max);
    }
}

} // namespace

DenseSolution integrate(const OdeRhs& rhs, const Eigen::VectorXd& y0, double t0, double t1,
                        const OdeOptions& opt, std::span<const double> breakpoints) {
    if (!(t1 > t0)) throw ValidationError("integration needs t1 > t0");

    std::vector<double> stops;
    for (double b : breakpoints)
        if (b > t0 && b < t1) stops.push_back(b);
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
    stops.push_back(t1);

    Eigen::VectorXd y = y0;
    Eigen::VectorXd f(y.size());
    rhs(t0, y, f);

    DenseSolution sol;
    sol.append(t0, y, f);

    int steps_used = 0;
    double t = t0;
    double h = opt.h_init > 0.0 ? opt.h_init : std::min(opt.h_max, (t1 - t0) / 10.0);
    for (std::size_t i = 0; i < stops.size(); ++i) {
        const bool interior = i + 1 < stops.size();
        integrate_span(rhs, t, stops[i], interior, opt, y, f, h, sol, steps_used);
        t = stops[i];
        if (interior) {
            // Duplicate the kink node carrying the right-sided derivative;
            // the left Hermite segment keeps the left-sided one.
            rhs(t, y, f);
            sol.append(t, y, f);
        }
    }
    return sol;
}

} // namespace epiwave
