#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "epiwave/epidemic.hpp"
#include "epiwave/pheno.hpp"
#include "epiwave/series.hpp"
#include "epiwave/smooth.hpp"

namespace epiwave {

/// Reconstructed transmission rate on a uniform grid.
struct TransmissionCurve {
    enum class Source { closed_form_bv, exact_formula, daywise_monotone };

    double t0 = 0.0;
    double step = 1.0;
    Eigen::VectorXd tau;
    Source source = Source::exact_formula;
    /// First grid time with tau < 0, when any.
    std::optional<double> first_negative_day;
    std::vector<std::string> warnings;

    Eigen::Index size() const { return tau.size(); }
    double time(Eigen::Index i) const { return t0 + step * static_cast<double>(i); }
};

struct ReproSeries {
    double t0 = 0.0;
    double step = 1.0;
    Eigen::VectorXd re;   // tau(t) S(t) / nu
    Eigen::VectorXd re0;  // tau(t) S0 / nu
};

struct InitialEstimates {
    double I0 = 0.0;
    double tau0 = 0.0;
};

/// Exponential-phase constants from a calendar-convention fit:
/// I0 = chi1 chi2 exp(chi2 t0) / (nu f), tau0 = (chi2 + nu) / S0.
InitialEstimates derive_i0_tau0(const ExponentialModel& chi, double nu, double f, double S0);

/// Initial infectious implied by a Bernoulli-Verhulst fit:
/// I0 = chi2 CR0 (1 - (CR0/CRinf)^theta) / (nu f).
double i0_from_bv(const BVModel& m, double nu, double f);

/// Exact transmission-rate reconstruction from a twice-differentiable
/// cumulative curve:
///   tau = nu f (CR''/CR' + nu) / (nu f (I0+S0) - CR' - nu (CR - CR0)).
/// Requires CR' > 0 on the whole grid; a denominator or numerator sign
/// change only flags negativity. A mismatch above 5% between CR'(t0) and
/// nu f I0 is reported as a warning.
TransmissionCurve tau_exact(const SmoothedSeries& cr, const EpiParams& p);

/// Closed-form transmission rate of the Bernoulli-Verhulst curve on
/// [m.t0, t_end] with the given step.
TransmissionCurve tau_bv_closed(const BVModel& m, const EpiParams& p, double t_end, double step);

struct PositivityDiag {
    double nu_min = 0.0;  // chi2 * theta
    double f_min = 0.0;   // (CRinf chi2 + (CRinf - CR0) nu) / (S0 + I0)
    bool holds = false;
};

/// Diagnoses whether the closed-form rate stays non-negative for all
/// t >= t0. `holds` uses the sharp denominator bound
/// f (S0 + I0) >= CRinf - CR0 (given nu >= chi2 theta), which guarantees
/// positivity; `f_min` reports the conventional headline bound.
PositivityDiag positivity_check(const BVModel& m, const EpiParams& p);

struct DaywiseOptions {
    double tau_max = 0.0;     // 0: derived from the data growth rate
    double rel_tol = 1e-12;   // bisection width relative to tau
};

/// One day of the constant-rate flow, as used by the day-by-day matcher;
/// exposed so synthetic data can be generated through the identical step.
struct SiDayState {
    double S = 0.0, I = 0.0, CI = 0.0;
};
SiDayState advance_si_day(const SiDayState& state, double tau, double nu, double t,
                          double atol_scale);

/// Day-by-day piecewise-constant rate matched to the cumulative data by
/// bisection, using the monotonicity of the cumulative curve in tau.
/// Days whose target lies below the tau = 0 trajectory get tau = 0 plus a
/// shortfall warning; targets above the tau_max trajectory are an error.
TransmissionCurve daywise_tau(const CumulativeSeries& s, const EpiParams& p,
                              const DaywiseOptions& opt = {});
TransmissionCurve daywise_tau(const SmoothedSeries& s, const EpiParams& p,
                              const DaywiseOptions& opt = {});

/// Instantaneous and quasi-instantaneous reproduction numbers from a
/// reconstructed rate and the matching cumulative curve, with
/// S(t) = I0 + S0 - I(t) - nu CI(t) recovered from the data.
ReproSeries repro_numbers(const TransmissionCurve& tau, const SmoothedSeries& cr,
                          const EpiParams& p);

struct SiurInit {
    double tau0 = 0.0;
    double I0 = 0.0;
    double U0 = 0.0;
};

/// Transmission rate and eigenvector initialization making chi2 the growth
/// rate of the unreported-compartment linear model:
///   tau = (chi2+nu)/S0 * (eta+chi2)/(nu(1-f)+eta+chi2),
///   U0  = nu(1-f)/(eta+chi2) * I0.
/// The returned pair is verified to be an eigenvector of the flow matrix.
SiurInit siur_init(const ExponentialModel& chi, double S0, double nu, double f, double eta);

struct SweepRecord {
    int t1 = 0, t2 = 0;
    double N = 0.0;
    double f = 0.0;
    double mu = 0.0;
    double tau0 = 0.0, I0 = 0.0, U0 = 0.0;
    double chi1 = 0.0, chi2 = 0.0;
    double mad_value = 0.0;
};

struct SweepGrids {
    std::vector<int> t1s, t2s;
    std::vector<double> Ns;
    std::vector<double> fs;
};

struct SweepResult {
    std::vector<SweepRecord> records;    // lexicographic (t1, t2, N, f)
    std::vector<std::size_t> retained;  // indices with MAD <= MADmin + band
    double mad_min = 0.0;
    double band = 0.0;
};

/// Uncertainty sweep over fit windows [t1, t2], intervention days N and
/// reporting fractions f: each cell gets an exponential fit, the
/// eigenvector initialization, and a golden-section optimized decay rate
/// mu for tau(t) = tau0 exp(-mu (t-N)^+), scored by MAD against the data.
SweepResult sweep_uncertainty(const CumulativeSeries& s, const SweepGrids& grids, double nu,
                              double eta, double S0, double band = 40.0);

void write_curve_csv(const std::string& path, const TransmissionCurve& c);
void write_repro_csv(const std::string& path, const ReproSeries& r);
void write_sweep_csv(const std::string& path, const SweepResult& r);

} // namespace epiwave
