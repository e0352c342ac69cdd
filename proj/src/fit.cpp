#include "epiwave/fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "epiwave/errors.hpp"

namespace epiwave {

namespace {

struct LsqProblem {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residuals;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
    std::function<bool(const Eigen::VectorXd&)> valid;
};

struct LocalFit {
    Eigen::VectorXd p;
    double sse = std::numeric_limits<double>::infinity();
    bool ok = false;
};

double sse_of(const Eigen::VectorXd& r) { return r.squaredNorm(); }

/// Damped Gauss-Newton with step halving; monotone in SSE from the start
/// point, so the result never exceeds the initialization's SSE.
LocalFit gauss_newton(const LsqProblem& prob, Eigen::VectorXd p, int max_iter = 200) {
    LocalFit out;
    if (!prob.valid(p)) return out;
    Eigen::VectorXd r = prob.residuals(p);
    if (!r.allFinite()) return out;
    double sse = sse_of(r);

    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::MatrixXd J = prob.jacobian(p);
        if (!J.allFinite()) break;
        Eigen::VectorXd delta = J.colPivHouseholderQr().solve(-r);
        if (!delta.allFinite()) break;

        double scale = 1.0;
        bool accepted = false;
        for (int halve = 0; halve < 30; ++halve) {
            const Eigen::VectorXd cand = p + scale * delta;
            if (prob.valid(cand)) {
                const Eigen::VectorXd rc = prob.residuals(cand);
                if (rc.allFinite()) {
                    const double sc = sse_of(rc);
                    if (sc < sse) {
                        p = cand;
                        r = rc;
                        const double gain = (sse - sc) / std::max(sse, 1e-300);
                        sse = sc;
                        accepted = true;
                        if (gain < 1e-14) iter = max_iter;  // converged
                        break;
                    }
                }
            }
            scale *= 0.5;
        }
        if (!accepted) break;  // no descent direction left: local optimum
    }
    out.p = p;
    out.sse = sse;
    out.ok = true;
    return out;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

void keep_best(std::optional<LocalFit>& best, const LocalFit& cand) {
    if (!cand.ok) return;
    if (!best || cand.sse < best->sse || (cand.sse == best->sse && lex_less(cand.p, best->p)))
        best = cand;
}

Eigen::VectorXd window_days(const CumulativeSeries& s) {
    return Eigen::VectorXd::LinSpaced(s.values.size(), s.t0, static_cast<double>(s.last_day()));
}

// ---- Bernoulli-Verhulst internals (stable for large chi2*theta*x) ----

struct BvTerms {
    double cr;       // model value
    double log_den;  // log D, D = 1 + b*(e^u - 1)
    double q;        // b e^u / D
    double inv_d;    // 1 / D
};

BvTerms bv_terms(double x, double chi2, double theta, double cr0, double crinf) {
    const double b = std::pow(cr0 / crinf, theta);
    const double u = chi2 * theta * x;
    BvTerms t{};
    if (u > 30.0) {
        const double tail = b + (1.0 - b) * std::exp(-u);
        t.log_den = u + std::log(tail);
        t.q = b / tail;
    } else {
        const double d = 1.0 + b * std::expm1(u);
        t.log_den = std::log(d);
        t.q = b * std::exp(u) / d;
    }
    t.inv_d = std::exp(-t.log_den);
    t.cr = cr0 * std::exp(chi2 * x - t.log_den / theta);
    return t;
}

// Partials of the BV value with respect to (chi2, theta, crinf, cr0).
struct BvGrad {
    double cr, d_chi2, d_theta, d_crinf, d_cr0;
};

BvGrad bv_grad(double x, double chi2, double theta, double cr0, double crinf) {
    const BvTerms t = bv_terms(x, chi2, theta, cr0, crinf);
    BvGrad g{};
    g.cr = t.cr;
    g.d_chi2 = t.cr * x * (1.0 - t.q);
    const double dlogd_dtheta =
        std::log(cr0 / crinf) * (1.0 - t.inv_d) + chi2 * x * t.q;
    g.d_theta = t.cr * (t.log_den / (theta * theta) - dlogd_dtheta / theta);
    g.d_crinf = t.cr * (1.0 - t.inv_d) / crinf;
    g.d_cr0 = t.cr * t.inv_d / cr0;
    return g;
}

} // namespace

FitResult fit_exponential(const CumulativeSeries& s, int d1, int d2, Convention conv) {
    const CumulativeSeries w = s.window(d1, d2);
    w.validate();
    if (w.values.size() < 4)
        throw ValidationError("exponential fit window needs at least 4 points");
    const Eigen::VectorXd days = window_days(w);
    const double ta = static_cast<double>(d1);

    // Internal parametrization is anchored at the window start:
    // m(t) = A (e^{k (t-ta)} - 1) + C, exactly re-expressible in either
    // convention afterwards.
    const auto model_at = [&](const Eigen::VectorXd& p, double t) {
        return p[0] * std::expm1(p[1] * (t - ta)) + p[2];
    };
    LsqProblem prob;
    prob.valid = [](const Eigen::VectorXd& p) {
        return p[0] > 0.0 && p[1] > 0.0 && p[1] < 5.0 && std::isfinite(p[2]);
    };
    prob.residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(days.size());
        for (Eigen::Index i = 0; i < days.size(); ++i) r[i] = model_at(p, days[i]) - w.values[i];
        return r;
    };
    prob.jacobian = [&](const Eigen::VectorXd& p) {
        Eigen::MatrixXd J(days.size(), 3);
        for (Eigen::Index i = 0; i < days.size(); ++i) {
            const double e = std::exp(p[1] * (days[i] - ta));
            J(i, 0) = e - 1.0;
            J(i, 1) = p[0] * (days[i] - ta) * e;
            J(i, 2) = 1.0;
        }
        return J;
    };

    std::optional<LocalFit> best;
    const int n_starts = 16;
    for (int k = 0; k < n_starts; ++k) {
        const double chi2 =
            std::pow(10.0, -2.0 + 2.0 * static_cast<double>(k) / (n_starts - 1));  // 0.01 .. 1.0
        // Linear projection for (A, C) at this growth rate.
        Eigen::MatrixXd B(days.size(), 2);
        for (Eigen::Index i = 0; i < days.size(); ++i) {
            B(i, 0) = std::expm1(chi2 * (days[i] - ta));
            B(i, 1) = 1.0;
        }
        const Eigen::Vector2d ac = B.colPivHouseholderQr().solve(w.values);
        Eigen::VectorXd p0(3);
        p0 << std::max(ac[0], 1e-8), chi2, ac[1];
        keep_best(best, gauss_newton(prob, p0));
    }
    if (!best)
        throw NumericalError("exponential fit did not converge from any of the " +
                             std::to_string(n_starts) + " starts on [" + std::to_string(d1) + "," +
                             std::to_string(d2) + "]");

    ExponentialModel anchored;
    anchored.conv = Convention::anchored;
    anchored.chi1 = best->p[0];
    anchored.chi2 = best->p[1];
    anchored.chi3 = best->p[2];
    anchored.t0 = ta;

    FitResult out;
    out.model = (conv == Convention::anchored) ? anchored : anchored.to_calendar();
    out.sse = best->sse;
    out.window_begin = d1;
    out.window_end = d2;
    out.mad = mad(out.model, s, d1, d2);
    return out;
}

FitResult fit_bv(const CumulativeSeries& s, int d1, int d2) {
    const CumulativeSeries w = s.window(d1, d2);
    if (w.values.size() < 4)
        throw ValidationError("Bernoulli-Verhulst fit window needs at least 4 points");
    const double cr0 = w.values[0];
    if (!(cr0 > 0.0))
        throw ValidationError("Bernoulli-Verhulst fit needs a positive first datum (CR0)");
    const Eigen::VectorXd days = window_days(w);
    const double ta = static_cast<double>(d1);
    const double vmax = w.values.maxCoeff();

    LsqProblem prob;  // parameters (chi2, theta, crinf)
    prob.valid = [&](const Eigen::VectorXd& p) {
        return p[0] > 0.0 && p[0] < 10.0 && p[1] > 0.0 && p[1] < 20.0 && p[2] > cr0 &&
               std::isfinite(p[2]);
    };
    prob.residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(days.size());
        for (Eigen::Index i = 0; i < days.size(); ++i)
            r[i] = bv_terms(days[i] - ta, p[0], p[1], cr0, p[2]).cr - w.values[i];
        return r;
    };
    prob.jacobian = [&](const Eigen::VectorXd& p) {
        Eigen::MatrixXd J(days.size(), 3);
        for (Eigen::Index i = 0; i < days.size(); ++i) {
            const BvGrad g = bv_grad(days[i] - ta, p[0], p[1], cr0, p[2]);
            J(i, 0) = g.d_chi2;
            J(i, 1) = g.d_theta;
            J(i, 2) = g.d_crinf;
        }
        return J;
    };

    std::optional<LocalFit> best;
    for (int a = 0; a < 8; ++a) {
        const double chi2 = std::pow(10.0, -2.0 + 2.0 * a / 7.0);  // 0.01 .. 1.0
        for (int b = 0; b < 6; ++b) {
            const double theta = std::pow(10.0, -1.301 + 1.602 * b / 5.0);  // 0.05 .. 2.0
            for (const double scale : {1.2, 5.0}) {
                Eigen::VectorXd p0(3);
                p0 << chi2, theta, std::max(scale * vmax, cr0 * 1.5);
                keep_best(best, gauss_newton(prob, p0));
            }
        }
    }
    if (!best)
        throw NumericalError("Bernoulli-Verhulst fit did not converge from any start on [" +
                             std::to_string(d1) + "," + std::to_string(d2) + "]");

    BVModel m;
    m.chi2 = best->p[0];
    m.theta = best->p[1];
    m.CR0 = cr0;
    m.CRinf = best->p[2];
    m.t0 = ta;

    FitResult out;
    out.model = m;
    out.sse = best->sse;
    out.window_begin = d1;
    out.window_end = d2;
    out.mad = mad(out.model, s, d1, d2);
    return out;
}

namespace {

/// Fit of one epidemic phase on [ta, tb] with Nbase + N0 pinned to `left`
/// (continuity), free (N0, chi, theta, Ninf). When `pin_n0` is set the
/// phase starts the global model: Nbase = 0 and N0 = left.
EpidemicPhase fit_epidemic_phase(const CumulativeSeries& w, double ta, double left, bool pin_n0) {
    const Eigen::VectorXd days = window_days(w);
    const double vmax = w.values.maxCoeff();

    if (pin_n0) {
        LsqProblem prob;  // (chi, theta, Ninf)
        prob.valid = [&](const Eigen::VectorXd& p) {
            return p[0] > 0.0 && p[0] < 10.0 && p[1] > 0.0 && p[1] < 20.0 && p[2] > left;
        };
        prob.residuals = [&](const Eigen::VectorXd& p) {
            Eigen::VectorXd r(days.size());
            for (Eigen::Index i = 0; i < days.size(); ++i)
                r[i] = bv_terms(days[i] - ta, p[0], p[1], left, p[2]).cr - w.values[i];
            return r;
        };
        prob.jacobian = [&](const Eigen::VectorXd& p) {
            Eigen::MatrixXd J(days.size(), 3);
            for (Eigen::Index i = 0; i < days.size(); ++i) {
                const BvGrad g = bv_grad(days[i] - ta, p[0], p[1], left, p[2]);
                J(i, 0) = g.d_chi2;
                J(i, 1) = g.d_theta;
                J(i, 2) = g.d_crinf;
            }
            return J;
        };
        std::optional<LocalFit> best;
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 6; ++b)
                for (const double scale : {1.2, 5.0}) {
                    Eigen::VectorXd p0(3);
                    p0 << std::pow(10.0, -2.0 + 2.0 * a / 7.0), std::pow(10.0, -1.301 + 1.602 * b / 5.0),
                        std::max(scale * vmax, left * 1.5);
                    keep_best(best, gauss_newton(prob, p0));
                }
        if (!best) throw NumericalError("epidemic phase fit did not converge");
        return EpidemicPhase{0.0, left, best->p[2], best->p[0], best->p[1]};
    }

    LsqProblem prob;  // (N0, chi, theta, Ninf); model = (left - N0) + BV
    prob.valid = [&](const Eigen::VectorXd& p) {
        return p[0] > 0.0 && p[1] > 0.0 && p[1] < 10.0 && p[2] > 0.0 && p[2] < 20.0 && p[3] > p[0];
    };
    prob.residuals = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(days.size());
        for (Eigen::Index i = 0; i < days.size(); ++i)
            r[i] = (left - p[0]) + bv_terms(days[i] - ta, p[1], p[2], p[0], p[3]).cr - w.values[i];
        return r;
    };
    prob.jacobian = [&](const Eigen::VectorXd& p) {
        Eigen::MatrixXd J(days.size(), 4);
        for (Eigen::Index i = 0; i < days.size(); ++i) {
            const BvGrad g = bv_grad(days[i] - ta, p[1], p[2], p[0], p[3]);
            J(i, 0) = g.d_cr0 - 1.0;
            J(i, 1) = g.d_chi2;
            J(i, 2) = g.d_theta;
            J(i, 3) = g.d_crinf;
        }
        return J;
    };

    const double rise = std::max(vmax - left, 1.0);
    std::optional<LocalFit> best;
    for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 6; ++b)
            for (const double n0_frac : {0.05, 0.3})
                for (const double scale : {1.2, 5.0}) {
                    Eigen::VectorXd p0(4);
                    p0 << std::max(n0_frac * rise, 1e-6), std::pow(10.0, -2.0 + 2.0 * a / 7.0),
                        std::pow(10.0, -1.301 + 1.602 * b / 5.0), std::max(scale * rise, 1.0);
                    keep_best(best, gauss_newton(prob, p0));
                }
    if (!best) throw NumericalError("epidemic phase fit did not converge");
    return EpidemicPhase{left - best->p[0], best->p[0], best->p[3], best->p[1], best->p[2]};
}

} // namespace

FitResult fit_multiwave(const CumulativeSeries& s, const std::vector<double>& breakpoints,
                        const std::vector<PhaseKind>& kinds, double sigma) {
    s.validate();
    if (kinds.empty() || breakpoints.size() != kinds.size() + 1)
        throw ValidationError("multiwave fit needs one more breakpoint than phase kinds");

    std::vector<Phase> phases;
    double left = 0.0;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const int a = static_cast<int>(std::ceil(breakpoints[i]));
        const int b = static_cast<int>(std::floor(breakpoints[i + 1]));
        const int lo = std::max(a, s.t0);
        const int hi = std::min(b, s.last_day());
        if (hi - lo + 1 < 3)
            throw ValidationError("phase " + std::to_string(i) + " covers fewer than 3 data points");
        const CumulativeSeries w = s.window(lo, hi);
        const Eigen::VectorXd days = window_days(w);
        const double ta = breakpoints[i];

        if (kinds[i] == PhaseKind::endemic) {
            if (i == 0) {
                // Ordinary least-squares line in (t - ta).
                const double n = static_cast<double>(days.size());
                const Eigen::VectorXd x = days.array() - ta;
                const double sx = x.sum(), sxx = x.squaredNorm();
                const double sy = w.values.sum(), sxy = x.dot(w.values);
                const double det = n * sxx - sx * sx;
                if (det == 0.0) throw NumericalError("degenerate endemic phase regression");
                const double slope = (n * sxy - sx * sy) / det;
                const double inter = (sy * sxx - sx * sxy) / det;
                phases.emplace_back(EndemicPhase{inter, slope});
            } else {
                // Slope through the pinned level.
                const Eigen::VectorXd x = days.array() - ta;
                const double denom = x.squaredNorm();
                if (denom == 0.0) throw NumericalError("degenerate endemic phase regression");
                const double slope = x.dot((w.values.array() - left).matrix()) / denom;
                phases.emplace_back(EndemicPhase{left, slope});
            }
        } else {
            if (i == 0) {
                phases.emplace_back(fit_epidemic_phase(w, ta, w.values[0], true));
            } else {
                phases.emplace_back(fit_epidemic_phase(w, ta, left, false));
            }
        }

        // Value at the right breakpoint feeds the next phase's continuity.
        const Phase& ph = phases.back();
        if (const auto* e = std::get_if<EndemicPhase>(&ph))
            left = e->N0 + (breakpoints[i + 1] - ta) * e->a;
        else {
            const auto& ep = std::get<EpidemicPhase>(ph);
            left = ep.Nbase + bv_terms(breakpoints[i + 1] - ta, ep.chi, ep.theta, ep.N0, ep.Ninf).cr;
        }
    }

    MultiWaveModel model(breakpoints, phases, sigma);
    const SmoothedSeries reg = model.regularized(static_cast<double>(s.t0), s.values.size(), 1.0);

    FitResult out;
    out.window_begin = s.t0;
    out.window_end = s.last_day();
    double sse = 0.0, sad = 0.0;
    for (Eigen::Index i = 0; i < s.values.size(); ++i) {
        const double r = reg.value[i] - s.values[i];
        sse += r * r;
        sad += std::abs(r);
    }
    out.sse = sse;
    out.mad = sad / static_cast<double>(s.values.size());
    out.model = std::move(model);
    return out;
}

std::vector<ParamCI> confidence_interval(FitResult& fit, const CumulativeSeries& s) {
    const CumulativeSeries w = s.window(fit.window_begin, fit.window_end);
    const Eigen::VectorXd days = window_days(w);
    const Eigen::Index n = days.size();

    Eigen::MatrixXd J;
    std::vector<std::string> names;
    std::vector<double> est;

    if (const auto* e = std::get_if<ExponentialModel>(&fit.model)) {
        J.resize(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = days[i];
            if (e->conv == Convention::calendar) {
                const double ex = std::exp(e->chi2 * t);
                J(i, 0) = ex;
                J(i, 1) = e->chi1 * t * ex;
                J(i, 2) = -1.0;
            } else {
                const double ex = std::exp(e->chi2 * (t - e->t0));
                J(i, 0) = ex - 1.0;
                J(i, 1) = e->chi1 * (t - e->t0) * ex;
                J(i, 2) = 1.0;
            }
        }
        names = {"chi1", "chi2", "chi3"};
        est = {e->chi1, e->chi2, e->chi3};
    } else if (const auto* b = std::get_if<BVModel>(&fit.model)) {
        J.resize(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            const BvGrad g = bv_grad(days[i] - b->t0, b->chi2, b->theta, b->CR0, b->CRinf);
            J(i, 0) = g.d_chi2;
            J(i, 1) = g.d_theta;
            J(i, 2) = g.d_crinf;
        }
        names = {"chi2", "theta", "crinf"};
        est = {b->chi2, b->theta, b->CRinf};
    } else {
        throw ValidationError(
            "confidence intervals are available for exponential and Bernoulli-Verhulst fits");
    }

    const Eigen::Index p = J.cols();
    if (n <= p) throw ValidationError("confidence interval needs more points than parameters");
    const Eigen::MatrixXd jtj = J.transpose() * J;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (!lu.isInvertible())
        throw NumericalError("J^T J singular: parameters non-identifiable on this window");
    const Eigen::MatrixXd cov = lu.inverse();
    const double sigma2 = fit.sse / static_cast<double>(n - p);

    std::vector<ParamCI> out;
    for (Eigen::Index k = 0; k < p; ++k) {
        const double half = 1.96 * std::sqrt(sigma2 * cov(k, k));
        out.push_back({names[static_cast<std::size_t>(k)], est[static_cast<std::size_t>(k)],
                       est[static_cast<std::size_t>(k)] - half,
                       est[static_cast<std::size_t>(k)] + half});
    }
    fit.ci95 = out;
    return out;
}

double mad(const std::function<double(double)>& curve, const CumulativeSeries& s, int d1, int d2) {
    const CumulativeSeries w = s.window(d1, d2);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < w.values.size(); ++i)
        acc += std::abs(curve(static_cast<double>(w.day(i))) - w.values[i]);
    return acc / static_cast<double>(w.values.size());
}

double mad(const PhenoModel& model, const CumulativeSeries& s, int d1, int d2) {
    return mad([&model](double t) { return pheno_value(model, t); }, s, d1, d2);
}

} // namespace epiwave
