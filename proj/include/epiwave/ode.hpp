#pragma once

#include <Eigen/Core>

#include <functional>
#include <span>
#include <vector>

namespace epiwave {

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double h_max = 0.25;
    double h_init = 0.0;     // 0 = choose automatically
    int max_steps = 2000000;
};

/// Accepted steps of an integration, densely evaluable by cubic Hermite
/// interpolation between stored (state, derivative) pairs.
class DenseSolution {
public:
    void append(double t, Eigen::VectorXd y, Eigen::VectorXd f);
    Eigen::VectorXd eval(double t) const;
    double eval(double t, Eigen::Index component) const;
    Eigen::VectorXd eval_deriv(double t) const;

    double t_begin() const { return t_.front(); }
    double t_end() const { return t_.back(); }
    std::size_t steps() const { return t_.size(); }

private:
    std::size_t segment(double t) const;
    std::vector<double> t_;
    std::vector<Eigen::VectorXd> y_, f_;
};

/// Adaptive Dormand-Prince 4(5) from t0 to t1 (t1 > t0). Integration is
/// split at any interior `breakpoints` so right-hand sides with kinks keep
/// full order. Throws NumericalError on step-size underflow.
DenseSolution integrate(const OdeRhs& rhs, const Eigen::VectorXd& y0, double t0, double t1,
                        const OdeOptions& opt = {}, std::span<const double> breakpoints = {});

} // namespace epiwave
