#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "epiwave/epidemic.hpp"
#include "epiwave/pheno.hpp"
#include "epiwave/series.hpp"

namespace epiwave {

/// Age-structured transmission model: n groups coupled through the contact
/// matrix phi (an exogenous input; it is not identifiable from case data),
/// with per-group reporting fractions and exponential-phase fits.
struct AgeModel {
    Eigen::MatrixXd phi;  // contact rates, row = receiving group
    Eigen::VectorXd N;    // group populations
    Eigen::VectorXd S;    // susceptibles (frozen value during the phase)
    Eigen::VectorXd f;    // reporting fractions
    double nu = 0.0;
    double eta = 0.0;
    std::vector<ExponentialModel> chi;  // calendar-convention fits per group
    Eigen::VectorXd tau;                // per-group rates (from age_tau_star or user)

    Eigen::Index n_groups() const { return N.size(); }
    void validate() const;
};

/// Calendar-convention exponential fit per group over day window [d1, d2].
std::vector<ExponentialModel> age_exponential_fits(const std::vector<CumulativeSeries>& groups,
                                                   int d1, int d2);

struct StarStates {
    Eigen::VectorXd Istar;   // chi1 chi2 / (nu f_j)
    Eigen::VectorXd Ustar;   // nu (1-f_j) Istar / (eta + chi2)
    Eigen::VectorXd CUstar;  // nu (1-f_j) Istar / chi2
};

/// Exponential-ansatz amplitudes making each group's reported flow match
/// its fitted exponential.
StarStates age_star_states(const AgeModel& m);

/// Per-group least-squares transmission rates tau*_j = <K_j, H_j> / <H_j, H_j>
/// over [d1, d2], with the exponential-ansatz error decomposition; the
/// integrals of exponential products are evaluated in closed form.
Eigen::VectorXd age_tau_star(const AgeModel& m, double d1, double d2);

/// Per-group trajectories, rows = time samples.
struct AgeTrajectory {
    double t0 = 0.0;
    double step = 0.25;
    Eigen::MatrixXd S, I, U, CR, CU;

    Eigen::Index size() const { return S.rows(); }
    double time(Eigen::Index i) const { return t0 + step * static_cast<double>(i); }
};

/// Integrates the full nonlinear system or, with `frozen_s`, the linear
/// system with S_j pinned at m.S.
AgeTrajectory age_simulate(const AgeModel& m, const Eigen::VectorXd& I0, const Eigen::VectorXd& U0,
                           double t0, double horizon, bool frozen_s, const StepControl& ctl = {});

/// n x n contact matrix CSV (plain numbers, row = receiving group).
Eigen::MatrixXd load_contact_matrix(const std::string& path);

} // namespace epiwave
