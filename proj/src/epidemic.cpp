#include "epiwave/epidemic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "epiwave/errors.hpp"
#include "epiwave/series.hpp"

namespace epiwave {

void EpiParams::validate(bool with_unreported) const {
    if (!(S0 > 0.0)) throw ValidationError("S0 must be positive");
    if (!(nu > 0.0)) throw ValidationError("nu must be positive");
    if (!(f > 0.0) || f > 1.0) throw ValidationError("f must lie in (0, 1]");
    if (I0 < 0.0) throw ValidationError("I0 must be non-negative");
    if (with_unreported) {
        if (!(eta > 0.0)) throw ValidationError("eta must be positive for the unreported model");
        if (U0 < 0.0) throw ValidationError("U0 must be non-negative");
    }
}

double tau_eval(const TauProfile& tau, double t) {
    if (const auto* c = std::get_if<ConstantTau>(&tau)) return c->tau0;
    if (const auto* ch = std::get_if<ChowellTau>(&tau)) {
        const double lag = std::max(t - ch->N, 0.0);
        return ch->tau0 * (ch->p * std::exp(-ch->mu * lag) + (1.0 - ch->p));
    }
    if (const auto* ed = std::get_if<ExpDecayTau>(&tau)) {
        const double lag = std::max(t - ed->N, 0.0);
        return ed->tau0 * std::exp(-ed->mu * lag);
    }
    const auto& s = std::get<SampledTau>(tau);
    const Eigen::Index n = s.grid.size();
    if (n == 0) throw ValidationError("empty sampled tau profile");
    if (t <= s.grid[0]) return s.values[0];
    if (t >= s.grid[n - 1]) return s.values[n - 1];
    const auto* begin = s.grid.data();
    const auto* it = std::upper_bound(begin, begin + n, t);
    const Eigen::Index i = (it - begin) - 1;
    const double w = (t - s.grid[i]) / (s.grid[i + 1] - s.grid[i]);
    return (1.0 - w) * s.values[i] + w * s.values[i + 1];
}

std::vector<double> tau_kinks(const TauProfile& tau) {
    if (const auto* ch = std::get_if<ChowellTau>(&tau)) return {ch->N};
    if (const auto* ed = std::get_if<ExpDecayTau>(&tau)) return {ed->N};
    if (const auto* s = std::get_if<SampledTau>(&tau))
        return {s->grid.data(), s->grid.data() + s->grid.size()};
    return {};
}

void validate_profile(const TauProfile& tau) {
    if (const auto* ch = std::get_if<ChowellTau>(&tau)) {
        if (ch->p < 0.0 || ch->p > 1.0)
            throw ValidationError("profile reduction fraction p must lie in [0, 1]");
        if (ch->mu < 0.0) throw ValidationError("profile decay rate mu must be non-negative");
    } else if (const auto* ed = std::get_if<ExpDecayTau>(&tau)) {
        if (ed->mu < 0.0) throw ValidationError("profile decay rate mu must be non-negative");
    } else if (const auto* sm = std::get_if<SampledTau>(&tau)) {
        if (sm->grid.size() != sm->values.size() || sm->grid.size() < 1)
            throw ValidationError("sampled profile needs matching non-empty grid and values");
        if (!sm->values.allFinite()) throw ValidationError("sampled profile values must be finite");
        for (Eigen::Index i = 0; i + 1 < sm->grid.size(); ++i)
            if (!(sm->grid[i + 1] > sm->grid[i]))
                throw ValidationError("sampled profile grid must be strictly increasing");
    }
}

SampledTau load_tau_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::string line;
    std::vector<double> ts, vals;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {  // header
            first = false;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ValidationError("bad tau CSV line: " + line);
        ts.push_back(std::stod(line.substr(0, comma)));
        vals.push_back(std::stod(line.substr(comma + 1)));
    }
    if (ts.size() < 2) throw ValidationError("tau CSV needs at least 2 rows");
    SampledTau out;
    out.grid = Eigen::Map<Eigen::VectorXd>(ts.data(), static_cast<Eigen::Index>(ts.size()));
    out.values = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    return out;
}

void write_tau_csv(const std::string& path, const SampledTau& tau) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "t,tau\n";
    for (Eigen::Index i = 0; i < tau.grid.size(); ++i)
        out << format_g17(tau.grid[i]) << "," << format_g17(tau.values[i]) << "\n";
}

namespace {

OdeOptions make_opts(const EpiParams& p, const StepControl& ctl) {
    OdeOptions opt;
    opt.rtol = ctl.rtol;
    opt.atol = ctl.atol_scale * p.S0;
    opt.h_max = ctl.h_max;
    return opt;
}

// Output sample times are forced to be integration nodes, so sampled
// trajectories carry the integrator's accuracy rather than the dense
// interpolant's.
std::vector<double> node_times(double t0, double horizon, double step,
                               std::span<const double> kinks) {
    std::vector<double> out(kinks.begin(), kinks.end());
    const auto n = static_cast<Eigen::Index>(std::floor(horizon / step + 0.5));
    out.reserve(out.size() + static_cast<std::size_t>(n));
    for (Eigen::Index i = 1; i <= n; ++i) out.push_back(t0 + step * static_cast<double>(i));
    return out;
}

Trajectory sample_trajectory(const DenseSolution& sol, const EpiParams& p, double horizon,
                             double step, bool with_U) {
    const auto n = static_cast<Eigen::Index>(std::floor(horizon / step + 0.5)) + 1;
    Trajectory tr;
    tr.t0 = p.t0;
    tr.step = step;
    tr.has_U = with_U;
    tr.S.resize(n);
    tr.I.resize(n);
    tr.CI.resize(n);
    tr.CR.resize(n);
    if (with_U) tr.U.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = std::min(p.t0 + step * static_cast<double>(i), sol.t_end());
        const Eigen::VectorXd y = sol.eval(t);
        tr.S[i] = y[0];
        tr.I[i] = y[1];
        if (with_U) {
            tr.U[i] = y[2];
            tr.CI[i] = y[3];
        } else {
            tr.CI[i] = y[2];
        }
        tr.CR[i] = p.CR0 + p.nu * p.f * tr.CI[i];
    }
    return tr;
}

} // namespace

Trajectory simulate_si(const EpiParams& p, const std::function<double(double)>& tau,
                       std::span<const double> kinks, double horizon, const StepControl& ctl) {
    p.validate(false);
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");

    const OdeRhs rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const double force = tau(t) * y[0] * y[1];
        dy[0] = -force;
        dy[1] = force - p.nu * y[1];
        dy[2] = y[1];
    };
    Eigen::VectorXd y0(3);
    y0 << p.S0, p.I0, 0.0;
    const auto stops = node_times(p.t0, horizon, ctl.output_step, kinks);
    const DenseSolution sol = integrate(rhs, y0, p.t0, p.t0 + horizon, make_opts(p, ctl), stops);
    return sample_trajectory(sol, p, horizon, ctl.output_step, false);
}

Trajectory simulate_si(const EpiParams& p, const TauProfile& tau, double horizon,
                       const StepControl& ctl) {
    validate_profile(tau);
    const auto kinks = tau_kinks(tau);
    return simulate_si(p, [&tau](double t) { return tau_eval(tau, t); }, kinks, horizon, ctl);
}

Trajectory simulate_siur(const EpiParams& p, const std::function<double(double)>& tau,
                         std::span<const double> kinks, double horizon, const StepControl& ctl) {
    p.validate(true);
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");

    const OdeRhs rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const double force = tau(t) * y[0] * (y[1] + y[2]);
        dy[0] = -force;
        dy[1] = force - p.nu * y[1];
        dy[2] = p.nu * (1.0 - p.f) * y[1] - p.eta * y[2];
        dy[3] = y[1];
    };
    Eigen::VectorXd y0(4);
    y0 << p.S0, p.I0, p.U0, 0.0;
    const auto stops = node_times(p.t0, horizon, ctl.output_step, kinks);
    const DenseSolution sol = integrate(rhs, y0, p.t0, p.t0 + horizon, make_opts(p, ctl), stops);
    return sample_trajectory(sol, p, horizon, ctl.output_step, true);
}

Trajectory simulate_siur(const EpiParams& p, const TauProfile& tau, double horizon,
                         const StepControl& ctl) {
    validate_profile(tau);
    const auto kinks = tau_kinks(tau);
    return simulate_siur(p, [&tau](double t) { return tau_eval(tau, t); }, kinks, horizon, ctl);
}

ScalarSeries cumulative_ode_solve(const EpiParams& p, double tau0, double horizon, double CI0,
                                  const StepControl& ctl) {
    p.validate(false);
    if (tau0 < 0.0) throw ValidationError("tau must be non-negative");
    const OdeRhs rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy[0] = p.I0 + p.S0 * (1.0 - std::exp(-tau0 * y[0])) - p.nu * y[0];
    };
    Eigen::VectorXd y0(1);
    y0 << CI0;
    const auto stops = node_times(p.t0, horizon, ctl.output_step, {});
    const DenseSolution sol = integrate(rhs, y0, p.t0, p.t0 + horizon, make_opts(p, ctl), stops);

    const auto n = static_cast<Eigen::Index>(std::floor(horizon / ctl.output_step + 0.5)) + 1;
    ScalarSeries out;
    out.t0 = p.t0;
    out.step = ctl.output_step;
    out.value.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = std::min(p.t0 + ctl.output_step * static_cast<double>(i), sol.t_end());
        out.value[i] = sol.eval(t, 0);
    }
    return out;
}

double final_size(const EpiParams& p, double tau0) {
    p.validate(false);
    if (tau0 < 0.0) throw ValidationError("tau must be non-negative");
    if (p.I0 == 0.0) return 0.0;
    if (tau0 == 0.0) return p.I0 / p.nu;

    const double upper = (p.I0 + p.S0) / p.nu;
    const auto g = [&](double ci) {
        return p.I0 + p.S0 * (1.0 - std::exp(-tau0 * ci)) - p.nu * ci;
    };
    double lo = 0.0, hi = upper;
    // g(0) = I0 > 0 and g(upper) = -S0 exp(-tau0 upper) < 0.
    const double tol = 1e-9 * upper;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ScalarSeries daily_from_cumulative(const std::function<double(double)>& flow, double D0, double t0,
                                   double t1, double step, DailyMethod method) {
    if (!(t1 > t0)) throw ValidationError("daily-case window needs t1 > t0");
    if (!(step > 0.0)) throw ValidationError("step must be positive");
    const auto n = static_cast<Eigen::Index>(std::floor((t1 - t0) / step + 0.5)) + 1;
    ScalarSeries out;
    out.t0 = t0;
    out.step = step;
    out.value.resize(n);

    if (method == DailyMethod::ode) {
        const OdeRhs rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
            dy[0] = flow(t) - y[0];
        };
        Eigen::VectorXd y0(1);
        y0 << D0;
        OdeOptions opt;
        opt.rtol = 1e-10;
        opt.atol = 1e-12 * std::max(1.0, std::abs(D0));
        const auto stops = node_times(t0, t1 - t0, step, {});
        const DenseSolution sol = integrate(rhs, y0, t0, t1, opt, stops);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double t = std::min(t0 + step * static_cast<double>(i), sol.t_end());
            out.value[i] = sol.eval(t, 0);
        }
        return out;
    }

    // Exact one-step recursion of the convolution:
    // D(t+h) = e^{-h} D(t) + int_t^{t+h} e^{-(t+h-s)} flow(s) ds,
    // with the inner integral by composite 8-point Gauss-Legendre.
    static constexpr double gl_x[8] = {-0.9602898564975363, -0.7966664774136267,
                                       -0.5255324099163290, -0.1834346424956498,
                                       0.1834346424956498,  0.5255324099163290,
                                       0.7966664774136267,  0.9602898564975363};
    static constexpr double gl_w[8] = {0.1012285362903763, 0.2223810344533745,
                                       0.3137066458778873, 0.3626837833783620,
                                       0.3626837833783620, 0.3137066458778873,
                                       0.2223810344533745, 0.1012285362903763};
    out.value[0] = D0;
    const int panels = std::max(1, static_cast<int>(std::ceil(step / 0.5)));
    double d = D0;
    for (Eigen::Index i = 1; i < n; ++i) {
        const double a = t0 + step * static_cast<double>(i - 1);
        const double end = a + step;
        double integral = 0.0;
        for (int pnl = 0; pnl < panels; ++pnl) {
            const double pa = a + step * pnl / panels;
            const double pb = a + step * (pnl + 1) / panels;
            const double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
            for (int k = 0; k < 8; ++k) {
                const double s = mid + half * gl_x[k];
                integral += half * gl_w[k] * std::exp(-(end - s)) * flow(s);
            }
        }
        d = std::exp(-step) * d + integral;
        out.value[i] = d;
    }
    return out;
}

std::pair<Trajectory, Trajectory> envelope_ci(const EpiParams& lo, double tau_lo,
                                              const EpiParams& hi, double tau_hi, double horizon,
                                              const StepControl& ctl) {
    if (lo.I0 > hi.I0 || lo.S0 > hi.S0 || tau_lo > tau_hi || lo.nu < hi.nu)
        throw ValidationError(
            "envelope bounds must be ordered: I0, S0, tau non-decreasing and nu non-increasing");
    Trajectory lower = simulate_si(lo, ConstantTau{tau_lo}, horizon, ctl);
    Trajectory upper = simulate_si(hi, ConstantTau{tau_hi}, horizon, ctl);
    return {std::move(lower), std::move(upper)};
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << "t,S,I,U,CR,CI\n";
    for (Eigen::Index i = 0; i < tr.size(); ++i) {
        out << format_g17(tr.time(i)) << "," << format_g17(tr.S[i]) << "," << format_g17(tr.I[i])
            << "," << (tr.has_U ? format_g17(tr.U[i]) : std::string{}) << ","
            << format_g17(tr.CR[i]) << "," << format_g17(tr.CI[i]) << "\n";
    }
}

} // namespace epiwave
