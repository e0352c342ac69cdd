#include "epiwave/age.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "epiwave/errors.hpp"
#include "epiwave/fit.hpp"
#include "epiwave/ode.hpp"

namespace epiwave {

void AgeModel::validate() const {
    const Eigen::Index n = N.size();
    if (n < 1) throw ValidationError("age model needs at least one group");
    if (phi.rows() != n || phi.cols() != n)
        throw ValidationError("contact matrix must be n x n");
    if ((phi.array() < 0.0).any()) throw ValidationError("contact matrix must be non-negative");
    if (S.size() != n || f.size() != n)
        throw ValidationError("S and f must have one entry per group");
    if ((N.array() <= 0.0).any()) throw ValidationError("populations must be positive");
    if ((f.array() <= 0.0).any() || (f.array() > 1.0).any())
        throw ValidationError("reporting fractions must lie in (0, 1]");
    if (!(nu > 0.0)) throw ValidationError("nu must be positive");
    if (!(eta > 0.0)) throw ValidationError("eta must be positive");
}

std::vector<ExponentialModel> age_exponential_fits(const std::vector<CumulativeSeries>& groups,
                                                   int d1, int d2) {
    std::vector<ExponentialModel> out;
    out.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        try {
            FitResult fit = fit_exponential(groups[g], d1, d2, Convention::calendar);
            out.push_back(std::get<ExponentialModel>(fit.model));
        } catch (const std::runtime_error& err) {
            throw NumericalError("group " + std::to_string(g) + " (" + groups[g].label +
                                 "): " + err.what());
        }
    }
    return out;
}

StarStates age_star_states(const AgeModel& m) {
    m.validate();
    const Eigen::Index n = m.n_groups();
    if (static_cast<Eigen::Index>(m.chi.size()) != n)
        throw ValidationError("age model needs one exponential fit per group");

    StarStates st;
    st.Istar.resize(n);
    st.Ustar.resize(n);
    st.CUstar.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const ExponentialModel cal = m.chi[static_cast<std::size_t>(j)].to_calendar();
        if (!(cal.chi2 > 0.0))
            throw ValidationError("group " + std::to_string(j) + ": chi2 must be positive");
        const double nu1 = m.nu * m.f[j];
        const double nu2 = m.nu * (1.0 - m.f[j]);
        st.Istar[j] = cal.chi1 * cal.chi2 / nu1;
        st.Ustar[j] = nu2 * st.Istar[j] / (m.eta + cal.chi2);
        st.CUstar[j] = nu2 * st.Istar[j] / cal.chi2;
    }
    return st;
}

namespace {

/// Integral of exp(a t) over [d1, d2], with the linear-in-length limit as
/// a -> 0.
double exp_integral(double a, double d1, double d2) {
    const double len = d2 - d1;
    if (std::abs(a * len) < 1e-12) return std::exp(a * d1) * len;
    return std::exp(a * d1) * std::expm1(a * len) / a;
}

} // namespace

Eigen::VectorXd age_tau_star(const AgeModel& m, double d1, double d2) {
    m.validate();
    if (!(d2 > d1)) throw ValidationError("integration window needs d2 > d1");
    const Eigen::Index n = m.n_groups();
    const StarStates st = age_star_states(m);

    Eigen::VectorXd rate(n), weight(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        rate[k] = m.chi[static_cast<std::size_t>(k)].to_calendar().chi2;
        weight[k] = (st.Istar[k] + st.Ustar[k]) / m.N[k];
    }

    Eigen::VectorXd tau(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double kj = (rate[j] + m.nu) * st.Istar[j];
        double kh = 0.0, hh = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            const double ck = m.S[j] * m.phi(j, k) * weight[k];
            kh += kj * ck * exp_integral(rate[j] + rate[k], d1, d2);
            for (Eigen::Index l = 0; l < n; ++l) {
                const double cl = m.S[j] * m.phi(j, l) * weight[l];
                hh += ck * cl * exp_integral(rate[k] + rate[l], d1, d2);
            }
        }
        if (!(hh > 0.0))
            throw ValidationError("group " + std::to_string(j) +
                                  ": zero contact forcing, tau* undefined");
        tau[j] = kh / hh;
    }
    return tau;
}

AgeTrajectory age_simulate(const AgeModel& m, const Eigen::VectorXd& I0, const Eigen::VectorXd& U0,
                           double t0, double horizon, bool frozen_s, const StepControl& ctl) {
    m.validate();
    const Eigen::Index n = m.n_groups();
    if (m.tau.size() != n) throw ValidationError("age model needs one tau per group");
    if (I0.size() != n || U0.size() != n)
        throw ValidationError("initial I and U need one entry per group");
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");

    // State layout per group: [S, I, U, CR, CU].
    const OdeRhs rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        Eigen::VectorXd force(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k < n; ++k)
                acc += m.phi(j, k) * (y[5 * k + 1] + y[5 * k + 2]) / m.N[k];
            force[j] = acc;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            const double s = frozen_s ? m.S[j] : y[5 * j + 0];
            const double inflow = m.tau[j] * s * force[j];
            dy[5 * j + 0] = frozen_s ? 0.0 : -inflow;
            dy[5 * j + 1] = inflow - m.nu * y[5 * j + 1];
            dy[5 * j + 2] = m.nu * (1.0 - m.f[j]) * y[5 * j + 1] - m.eta * y[5 * j + 2];
            dy[5 * j + 3] = m.nu * m.f[j] * y[5 * j + 1];
            dy[5 * j + 4] = m.nu * (1.0 - m.f[j]) * y[5 * j + 1];
        }
    };

    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(5 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        y0[5 * j + 0] = m.S[j];
        y0[5 * j + 1] = I0[j];
        y0[5 * j + 2] = U0[j];
    }

    OdeOptions opt;
    opt.rtol = ctl.rtol;
    opt.atol = ctl.atol_scale * m.S.maxCoeff();
    opt.h_max = ctl.h_max;
    // Sample times double as integration nodes for interpolation-free output.
    std::vector<double> stops;
    const auto n_steps = static_cast<Eigen::Index>(std::floor(horizon / ctl.output_step + 0.5));
    for (Eigen::Index i = 1; i <= n_steps; ++i)
        stops.push_back(t0 + ctl.output_step * static_cast<double>(i));
    const DenseSolution sol = integrate(rhs, y0, t0, t0 + horizon, opt, stops);

    const auto rows = static_cast<Eigen::Index>(std::floor(horizon / ctl.output_step + 0.5)) + 1;
    AgeTrajectory tr;
    tr.t0 = t0;
    tr.step = ctl.output_step;
    tr.S.resize(rows, n);
    tr.I.resize(rows, n);
    tr.U.resize(rows, n);
    tr.CR.resize(rows, n);
    tr.CU.resize(rows, n);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double t = std::min(t0 + ctl.output_step * static_cast<double>(i), sol.t_end());
        const Eigen::VectorXd y = sol.eval(t);
        for (Eigen::Index j = 0; j < n; ++j) {
            tr.S(i, j) = y[5 * j + 0];
            tr.I(i, j) = y[5 * j + 1];
            tr.U(i, j) = y[5 * j + 2];
            tr.CR(i, j) = y[5 * j + 3];
            tr.CU(i, j) = y[5 * j + 4];
        }
    }
    return tr;
}

Eigen::MatrixXd load_contact_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ValidationError("contact matrix rows have differing lengths");
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.size() != rows.front().size())
        throw ValidationError("contact matrix must be square");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return out;
}

} // namespace epiwave
