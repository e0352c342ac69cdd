#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "epiwave/ode.hpp"

namespace epiwave {

/// Constants of the SI / SIUR models. `eta` and `U0` only matter for the
/// unreported-compartment variant.
struct EpiParams {
    double S0 = 0.0;    // susceptibles at t0
    double nu = 0.0;    // 1 / infectious period (1/day)
    double f = 1.0;     // reporting fraction, (0, 1]
    double eta = 0.0;   // unreported exit rate (1/day)
    double t0 = 0.0;
    double I0 = 0.0;
    double U0 = 0.0;
    double CR0 = 0.0;   // cumulative reported at t0

    void validate(bool with_unreported = false) const;
};

struct ConstantTau {
    double tau0 = 0.0;
};

/// Piecewise profile dropping once public measures start at day N:
/// tau(t) = tau0 * (p * exp(-mu*(t-N)^+) + (1-p)).
struct ChowellTau {
    double tau0 = 0.0;
    double p = 1.0;
    double mu = 0.0;
    double N = 0.0;
};

/// tau(t) = tau0 * exp(-mu*(t-N)^+).
struct ExpDecayTau {
    double tau0 = 0.0;
    double mu = 0.0;
    double N = 0.0;
};

/// Linear interpolation between samples, constant beyond the grid ends.
struct SampledTau {
    Eigen::VectorXd grid;
    Eigen::VectorXd values;
};

using TauProfile = std::variant<ConstantTau, ChowellTau, ExpDecayTau, SampledTau>;

double tau_eval(const TauProfile& tau, double t);
/// Interior times where the profile is not smooth (integration split points).
std::vector<double> tau_kinks(const TauProfile& tau);
/// Throws ValidationError on out-of-range profile parameters.
void validate_profile(const TauProfile& tau);

SampledTau load_tau_csv(const std::string& path);
void write_tau_csv(const std::string& path, const SampledTau& tau);

struct StepControl {
    double rtol = 1e-9;
    double atol_scale = 1e-12;  // absolute tolerance = atol_scale * S0
    double output_step = 0.25;
    double h_max = 0.25;
};

/// Simulated compartments sampled on a uniform grid.
struct Trajectory {
    double t0 = 0.0;
    double step = 1.0;
    Eigen::VectorXd S, I, U, CR, CI;
    bool has_U = false;

    Eigen::Index size() const { return S.size(); }
    double time(Eigen::Index i) const { return t0 + step * static_cast<double>(i); }
};

/// Two-compartment transmission model:
///   S' = -tau(t) S I,  I' = tau(t) S I - nu I,
/// with CR' = f nu I and CI' = I accumulated alongside.
Trajectory simulate_si(const EpiParams& p, const TauProfile& tau, double horizon,
                       const StepControl& ctl = {});
Trajectory simulate_si(const EpiParams& p, const std::function<double(double)>& tau,
                       std::span<const double> kinks, double horizon, const StepControl& ctl = {});

/// Adds the unreported compartment: U' = nu (1-f) I - eta U, with the force
/// of infection tau(t) S (I + U).
Trajectory simulate_siur(const EpiParams& p, const TauProfile& tau, double horizon,
                         const StepControl& ctl = {});
Trajectory simulate_siur(const EpiParams& p, const std::function<double(double)>& tau,
                         std::span<const double> kinks, double horizon, const StepControl& ctl = {});

/// Uniform samples of a scalar curve.
struct ScalarSeries {
    double t0 = 0.0;
    double step = 1.0;
    Eigen::VectorXd value;

    Eigen::Index size() const { return value.size(); }
    double time(Eigen::Index i) const { return t0 + step * static_cast<double>(i); }
};

/// Scalar reduction of the constant-tau model: the cumulative number of
/// infectious follows CI' = I0 + S0 (1 - exp(-tau CI)) - nu CI.
ScalarSeries cumulative_ode_solve(const EpiParams& p, double tau0, double horizon, double CI0 = 0.0,
                                  const StepControl& ctl = {});

/// Positive equilibrium of the scalar cumulative equation, found by
/// bisection on [0, (I0+S0)/nu].
double final_size(const EpiParams& p, double tau0);

enum class DailyMethod { convolution, ode };

/// Daily-case compartment D' = flow(t) - D, either as the explicit
/// convolution with the one-day exponential kernel or by direct
/// integration; both routes must agree.
ScalarSeries daily_from_cumulative(const std::function<double(double)>& flow, double D0, double t0,
                                   double t1, double step, DailyMethod method);

/// Simulates both parameter corners; componentwise-ordered inputs bound
/// every intermediate cumulative curve between them.
std::pair<Trajectory, Trajectory> envelope_ci(const EpiParams& lo, double tau_lo,
                                              const EpiParams& hi, double tau_hi, double horizon,
                                              const StepControl& ctl = {});

void write_trajectory_csv(const std::string& path, const Trajectory& tr);

} // namespace epiwave
