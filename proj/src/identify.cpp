#include "epiwave/identify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "epiwave/errors.hpp"
#include "epiwave/fit.hpp"
#include "epiwave/ode.hpp"

namespace epiwave {

InitialEstimates derive_i0_tau0(const ExponentialModel& chi, double nu, double f, double S0) {
    if (!(f > 0.0)) throw ValidationError("reporting fraction f must be positive");
    if (!(nu > 0.0)) throw ValidationError("nu must be positive");
    if (!(S0 > 0.0)) throw ValidationError("S0 must be positive");
    const ExponentialModel cal = chi.to_calendar();
    if (!(cal.chi2 > 0.0)) throw ValidationError("chi2 must be positive");
    InitialEstimates out;
    out.I0 = cal.chi1 * cal.chi2 * std::exp(cal.chi2 * cal.t0) / (nu * f);
    out.tau0 = (cal.chi2 + nu) / S0;
    return out;
}

double i0_from_bv(const BVModel& m, double nu, double f) {
    m.validate();
    if (!(f > 0.0) || !(nu > 0.0)) throw ValidationError("nu and f must be positive");
    return m.chi2 * m.CR0 * (1.0 - std::pow(m.CR0 / m.CRinf, m.theta)) / (nu * f);
}

namespace {

void flag_negativity(TransmissionCurve& c) {
    for (Eigen::Index i = 0; i < c.tau.size(); ++i) {
        if (c.tau[i] < 0.0) {
            c.first_negative_day = c.time(i);
            return;
        }
    }
    c.first_negative_day.reset();
}

} // namespace

TransmissionCurve tau_exact(const SmoothedSeries& cr, const EpiParams& p) {
    p.validate(false);
    if (cr.size() < 2) throw ValidationError("smoothed series too short");

    TransmissionCurve out;
    out.t0 = cr.t0;
    out.step = cr.step;
    out.source = TransmissionCurve::Source::exact_formula;
    out.tau.resize(cr.size());

    const double nf = p.nu * p.f;
    const double flow0 = nf * p.I0;
    if (flow0 > 0.0 && std::abs(cr.d1[0] - flow0) > 0.05 * flow0)
        out.warnings.push_back("CR'(t0) = " + format_g17(cr.d1[0]) +
                               " deviates more than 5% from nu*f*I0 = " + format_g17(flow0));

    for (Eigen::Index i = 0; i < cr.size(); ++i) {
        if (!(cr.d1[i] > 0.0))
            throw ValidationError("CR' is not positive at t = " + format_g17(cr.time(i)) +
                                  "; regularize the data first");
        const double num = nf * (cr.d2[i] / cr.d1[i] + p.nu);
        const double den = nf * (p.I0 + p.S0) - cr.d1[i] - p.nu * (cr.value[i] - p.CR0);
        out.tau[i] = num / den;
    }
    flag_negativity(out);
    return out;
}

TransmissionCurve tau_bv_closed(const BVModel& m, const EpiParams& p, double t_end, double step) {
    m.validate();
    p.validate(false);
    if (!(t_end > m.t0) || !(step > 0.0)) throw ValidationError("bad grid for tau_bv_closed");

    const auto n = static_cast<Eigen::Index>(std::floor((t_end - m.t0) / step + 0.5)) + 1;
    TransmissionCurve out;
    out.t0 = m.t0;
    out.step = step;
    out.source = TransmissionCurve::Source::closed_form_bv;
    out.tau.resize(n);

    const double nf = p.nu * p.f;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = m.t0 + step * static_cast<double>(i);
        const double cr = m.value(t);
        const double ratio = std::pow(cr / m.CRinf, m.theta);
        const double num = nf * (m.chi2 * (1.0 - (1.0 + m.theta) * ratio) + p.nu);
        const double den =
            nf * (p.I0 + p.S0) + p.nu * m.CR0 - cr * (m.chi2 * (1.0 - ratio) + p.nu);
        out.tau[i] = num / den;
    }
    flag_negativity(out);
    return out;
}

PositivityDiag positivity_check(const BVModel& m, const EpiParams& p) {
    m.validate();
    PositivityDiag d;
    d.nu_min = m.chi2 * m.theta;
    d.f_min = (m.CRinf * m.chi2 + (m.CRinf - m.CR0) * p.nu) / (p.S0 + p.I0);
    // Sharp version: with nu >= chi2*theta the denominator of the closed
    // form is decreasing toward nu*(f*(S0+I0) + CR0 - CRinf), so
    // f*(S0+I0) >= CRinf - CR0 keeps the rate non-negative for all time.
    d.holds = (p.nu >= d.nu_min) && (p.f * (p.S0 + p.I0) >= m.CRinf - m.CR0);
    return d;
}

SiDayState advance_si_day(const SiDayState& st, double tau, double nu, double t,
                          double atol_scale) {
    const OdeRhs rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const double force = tau * y[0] * y[1];
        dy[0] = -force;
        dy[1] = force - nu * y[1];
        dy[2] = y[1];
    };
    Eigen::VectorXd y0(3);
    y0 << st.S, st.I, st.CI;
    OdeOptions opt;
    opt.rtol = 1e-10;
    opt.atol = 1e-13 * atol_scale;
    opt.h_max = 0.25;
    const DenseSolution sol = integrate(rhs, y0, t, t + 1.0, opt);
    const Eigen::VectorXd y = sol.eval(t + 1.0);
    return {y[0], y[1], y[2]};
}

namespace {

double default_tau_max(const Eigen::VectorXd& values, double nu, double S0) {
    // Crude upper growth-rate estimate from successive increments.
    double growth = 0.1;
    for (Eigen::Index i = 2; i < values.size(); ++i) {
        const double a = values[i - 1] - values[i - 2];
        const double b = values[i] - values[i - 1];
        if (a > 0.0 && b > 0.0) growth = std::max(growth, std::min(std::log(b / a), 3.0));
    }
    return 100.0 * (growth + nu) / S0;
}

TransmissionCurve daywise_from_values(const Eigen::VectorXd& values, double t0,
                                      const EpiParams& p, const DaywiseOptions& opt) {
    if (values.size() < 2) throw ValidationError("daywise reconstruction needs >= 2 days");
    for (Eigen::Index i = 0; i + 1 < values.size(); ++i)
        if (values[i + 1] < values[i])
            throw ValidationError("cumulative data decreases at day " +
                                  format_g17(t0 + static_cast<double>(i + 1)) +
                                  "; regularize the data first");
    p.validate(false);

    const double nf = p.nu * p.f;
    const double cr0 = values[0];
    const double tau_max = opt.tau_max > 0.0 ? opt.tau_max : default_tau_max(values, p.nu, p.S0);

    TransmissionCurve out;
    out.t0 = t0;
    out.step = 1.0;
    out.source = TransmissionCurve::Source::daywise_monotone;
    out.tau.resize(values.size() - 1);

    SiDayState st{p.S0, p.I0, 0.0};
    for (Eigen::Index k = 0; k + 1 < values.size(); ++k) {
        const double t = t0 + static_cast<double>(k);
        const double target = (values[k + 1] - cr0) / nf;

        const SiDayState at_zero = advance_si_day(st, 0.0, p.nu, t, p.S0);
        if (target <= at_zero.CI) {
            // Even a fully suppressed day overshoots the data: the flow of
            // recoveries from the carried-over I already exceeds the target.
            out.tau[k] = 0.0;
            out.warnings.push_back("day " + format_g17(t) + ": target below the tau=0 trajectory (shortfall " +
                                   format_g17(at_zero.CI - target) + ")");
            st = at_zero;
            continue;
        }
        const SiDayState at_max = advance_si_day(st, tau_max, p.nu, t, p.S0);
        if (target > at_max.CI)
            throw NumericalError("day " + format_g17(t) +
                                 ": target above the tau_max trajectory; increase tau_max (current " +
                                 format_g17(tau_max) + ")");

        double lo = 0.0, hi = tau_max;
        while (hi - lo > opt.rel_tol * hi) {
            const double mid = 0.5 * (lo + hi);
            const SiDayState cand = advance_si_day(st, mid, p.nu, t, p.S0);
            if (cand.CI < target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.tau[k] = 0.5 * (lo + hi);
        st = advance_si_day(st, out.tau[k], p.nu, t, p.S0);
    }
    flag_negativity(out);
    return out;
}

} // namespace

TransmissionCurve daywise_tau(const CumulativeSeries& s, const EpiParams& p,
                              const DaywiseOptions& opt) {
    s.validate();
    return daywise_from_values(s.values, static_cast<double>(s.t0), p, opt);
}

TransmissionCurve daywise_tau(const SmoothedSeries& s, const EpiParams& p,
                              const DaywiseOptions& opt) {
    // Sample the regularized curve at integer days; off-node days use
    // cubic Hermite through the stored value and slope channels.
    const auto days = static_cast<Eigen::Index>(std::floor(s.t_end() - s.t0)) + 1;
    Eigen::VectorXd values(days);
    for (Eigen::Index i = 0; i < days; ++i) {
        const double t = s.t0 + static_cast<double>(i);
        const double idx = (t - s.t0) / s.step;
        const auto j = static_cast<Eigen::Index>(std::llround(idx));
        if (std::abs(idx - static_cast<double>(j)) < 1e-9 && j < s.size()) {
            values[i] = s.value[j];
        } else {
            const auto j0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(idx), s.size() - 2);
            const double w = idx - static_cast<double>(j0);
            const double w2 = w * w, w3 = w2 * w;
            values[i] = (2 * w3 - 3 * w2 + 1) * s.value[j0] +
                        (w3 - 2 * w2 + w) * s.step * s.d1[j0] +
                        (-2 * w3 + 3 * w2) * s.value[j0 + 1] +
                        (w3 - w2) * s.step * s.d1[j0 + 1];
        }
    }
    return daywise_from_values(values, s.t0, p, opt);
}

ReproSeries repro_numbers(const TransmissionCurve& tau, const SmoothedSeries& cr,
                          const EpiParams& p) {
    p.validate(false);
    if (tau.size() != cr.size() || std::abs(tau.t0 - cr.t0) > 1e-9 ||
        std::abs(tau.step - cr.step) > 1e-9)
        throw ValidationError("transmission curve and cumulative curve grids differ");

    const double nf = p.nu * p.f;
    ReproSeries out;
    out.t0 = tau.t0;
    out.step = tau.step;
    out.re.resize(tau.size());
    out.re0.resize(tau.size());
    for (Eigen::Index i = 0; i < tau.size(); ++i) {
        const double I = cr.d1[i] / nf;
        const double CI = (cr.value[i] - p.CR0) / nf;
        const double S = p.I0 + p.S0 - I - p.nu * CI;
        if (!(S > 0.0))
            throw ValidationError("recovered S(t) <= 0 at t = " + format_g17(tau.time(i)) +
                                  "; inputs are inconsistent");
        out.re[i] = tau.tau[i] * S / p.nu;
        out.re0[i] = tau.tau[i] * p.S0 / p.nu;
    }
    return out;
}

SiurInit siur_init(const ExponentialModel& chi, double S0, double nu, double f, double eta) {
    const ExponentialModel cal = chi.to_calendar();
    if (!(cal.chi2 > 0.0)) throw ValidationError("chi2 must be positive");
    if (!(eta + cal.chi2 > 0.0)) throw ValidationError("eta + chi2 must be positive");
    if (!(f > 0.0) || f > 1.0) throw ValidationError("f must lie in (0, 1]");

    SiurInit out;
    out.tau0 = (cal.chi2 + nu) / S0 * (eta + cal.chi2) / (nu * (1.0 - f) + eta + cal.chi2);
    out.I0 = cal.chi1 * cal.chi2 * std::exp(cal.chi2 * cal.t0) / (nu * f);
    out.U0 = nu * (1.0 - f) / (eta + cal.chi2) * out.I0;

    // (I0, U0) must be an eigenvector of the linearized flow for chi2.
    Eigen::Matrix2d A;
    A << out.tau0 * S0 - nu, out.tau0 * S0, nu * (1.0 - f), -eta;
    const Eigen::Vector2d v(out.I0, out.U0);
    const double resid = (A * v - cal.chi2 * v).norm();
    if (resid > 1e-9 * v.norm())
        throw NumericalError("eigenvector residual " + format_g17(resid) +
                             " exceeds tolerance; inconsistent initialization");
    return out;
}

namespace {

/// Deterministic golden-section minimizer on [a, b].
std::pair<double, double> golden_min(const std::function<double(double)>& fn, double a, double b,
                                     double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = fn(x1), f2 = fn(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = fn(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = fn(x2);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, fn(x)};
}

} // namespace

SweepResult sweep_uncertainty(const CumulativeSeries& s, const SweepGrids& grids, double nu,
                              double eta, double S0, double band) {
    s.validate();
    if (grids.t1s.empty() || grids.t2s.empty() || grids.Ns.empty() || grids.fs.empty())
        throw ValidationError("sweep grids must be non-empty");
    if (band < 0.0) throw ValidationError("band must be non-negative");

    // Canonical lexicographic (t1, t2, N, f) cell order.
    SweepGrids g = grids;
    const auto canon = [](auto& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    canon(g.t1s);
    canon(g.t2s);
    canon(g.Ns);
    canon(g.fs);

    SweepResult out;
    out.band = band;

    for (int t1 : g.t1s) {
        for (int t2 : g.t2s) {
            if (t2 - t1 < 3 || !s.contains_day(t1) || !s.contains_day(t2)) continue;
            FitResult fit;
            try {
                fit = fit_exponential(s, t1, t2, Convention::calendar);
            } catch (const NumericalError&) {
                continue;  // cell unusable, no fit to score
            }
            const auto& chi = std::get<ExponentialModel>(fit.model);
            for (double N : g.Ns) {
                for (double f : g.fs) {
                    const SiurInit init = siur_init(chi, S0, nu, f, eta);
                    EpiParams p;
                    p.S0 = S0;
                    p.nu = nu;
                    p.f = f;
                    p.eta = eta;
                    p.t0 = t1;
                    p.I0 = init.I0;
                    p.U0 = init.U0;
                    p.CR0 = s.at_day(t1);

                    const double horizon = static_cast<double>(s.last_day() - t1);
                    StepControl ctl;
                    ctl.rtol = 1e-7;
                    ctl.atol_scale = 1e-10;
                    ctl.output_step = 1.0;
                    ctl.h_max = 0.5;

                    const auto score = [&](double mu) {
                        const Trajectory tr =
                            simulate_siur(p, ExpDecayTau{init.tau0, mu, N}, horizon, ctl);
                        double acc = 0.0;
                        for (Eigen::Index i = 0; i < tr.size(); ++i)
                            acc += std::abs(tr.CR[i] - s.at_day(t1 + static_cast<int>(i)));
                        return acc / static_cast<double>(tr.size());
                    };
                    const auto [mu, mad_val] = golden_min(score, 0.0, 10.0, 1e-6);

                    SweepRecord rec;
                    rec.t1 = t1;
                    rec.t2 = t2;
                    rec.N = N;
                    rec.f = f;
                    rec.mu = mu;
                    rec.tau0 = init.tau0;
                    rec.I0 = init.I0;
                    rec.U0 = init.U0;
                    rec.chi1 = chi.chi1;
                    rec.chi2 = chi.chi2;
                    rec.mad_value = mad_val;
                    out.records.push_back(rec);
                }
            }
        }
    }
    if (out.records.empty())
        throw ValidationError("sweep produced no usable cells; check the grids against the data range");

    out.mad_min = out.records.front().mad_value;
    for (const auto& r : out.records) out.mad_min = std::min(out.mad_min, r.mad_value);
    for (std::size_t i = 0; i < out.records.size(); ++i)
        if (out.records[i].mad_value <= out.mad_min + band) out.retained.push_back(i);
    return out;
}

void write_curve_csv(const std::string& path, const TransmissionCurve& c) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "t,tau\n";
    for (Eigen::Index i = 0; i < c.size(); ++i)
        out << format_g17(c.time(i)) << "," << format_g17(c.tau[i]) << "\n";
}

void write_repro_csv(const std::string& path, const ReproSeries& r) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "t,re,re0\n";
    for (Eigen::Index i = 0; i < r.re.size(); ++i)
        out << format_g17(r.t0 + r.step * static_cast<double>(i)) << "," << format_g17(r.re[i])
            << "," << format_g17(r.re0[i]) << "\n";
}

void write_sweep_csv(const std::string& path, const SweepResult& r) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "# mad_min," << format_g17(r.mad_min) << ",band," << format_g17(r.band) << "\n";
    out << "t1,t2,N,f,mu,tau0,I0,U0,chi1,chi2,mad\n";
    for (std::size_t i : r.retained) {
        const SweepRecord& c = r.records[i];
        out << c.t1 << "," << c.t2 << "," << format_g17(c.N) << "," << format_g17(c.f) << ","
            << format_g17(c.mu) << "," << format_g17(c.tau0) << "," << format_g17(c.I0) << ","
            << format_g17(c.U0) << "," << format_g17(c.chi1) << "," << format_g17(c.chi2) << ","
            << format_g17(c.mad_value) << "\n";
    }
}

} // namespace epiwave
