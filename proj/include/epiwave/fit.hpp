#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

#include "epiwave/pheno.hpp"
#include "epiwave/series.hpp"

namespace epiwave {

struct ParamCI {
    std::string name;
    double estimate = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct FitResult {
    PhenoModel model;
    double sse = 0.0;
    double mad = 0.0;
    int window_begin = 0;
    int window_end = 0;
    std::vector<ParamCI> ci95;  // filled by confidence_interval
};

/// Least-squares fit of the exponential cumulative model over day window
/// [d1, d2]. Deterministic multi-start (16 log-spaced growth rates on
/// [0.01, 1.0], scale and offset seeded by linear projection) refined by
/// damped Gauss-Newton with analytic Jacobians; ties broken by lowest SSE
/// then lexicographically smallest parameter vector.
FitResult fit_exponential(const CumulativeSeries& s, int d1, int d2,
                          Convention conv = Convention::calendar);

/// Bernoulli-Verhulst fit over [d1, d2] with CR0 pinned to the first datum
/// of the window; free parameters chi2, theta, CRinf. Multi-start over an
/// 8x6 (chi2, theta) log-grid with two CRinf seeds.
FitResult fit_bv(const CumulativeSeries& s, int d1, int d2);

enum class PhaseKind { endemic, epidemic };

/// Piecewise fit with user-supplied breakpoints and phase kinds: each
/// phase's free parameters are fitted left to right under the continuity
/// constraint, then the sigma-regularized curve is scored against the data.
FitResult fit_multiwave(const CumulativeSeries& s, const std::vector<double>& breakpoints,
                        const std::vector<PhaseKind>& kinds, double sigma);

/// Asymptotic linearized 95% intervals at the optimum:
/// estimate +/- 1.96 * sigma_hat * sqrt(diag((J^T J)^-1)) with
/// sigma_hat^2 = SSE / (n - p). Throws NumericalError when J^T J is
/// singular (non-identifiable). Returns the intervals and stores them on
/// the result.
std::vector<ParamCI> confidence_interval(FitResult& fit, const CumulativeSeries& s);

/// Mean absolute deviation between a model curve and the data over [d1, d2].
double mad(const std::function<double(double)>& curve, const CumulativeSeries& s, int d1, int d2);
double mad(const PhenoModel& model, const CumulativeSeries& s, int d1, int d2);

} // namespace epiwave
