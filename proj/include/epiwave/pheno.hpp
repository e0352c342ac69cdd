#pragma once

#include <Eigen/Core>

#include <string>
#include <variant>
#include <vector>

#include "epiwave/series.hpp"
#include "epiwave/smooth.hpp"

namespace epiwave {

/// Time convention of an exponential cumulative model.
///   anchored:  CR(t) = chi1*(exp(chi2*(t-t0)) - 1) + chi3
///   calendar:  CR(t) = chi1*exp(chi2*t) - chi3
/// Both appear in practice; every stored model records its convention and
/// conversions between the two are exact.
enum class Convention { anchored, calendar };

std::string to_string(Convention c);
Convention convention_from_string(const std::string& s);

struct ExponentialModel {
    double chi1 = 1.0;   // scale (counts)
    double chi2 = 0.1;   // growth rate (1/day)
    double chi3 = 0.0;   // offset (counts)
    double t0 = 0.0;     // anchor day (anchored convention only)
    Convention conv = Convention::anchored;

    double value(double t) const;
    double deriv(double t) const;

    ExponentialModel to_calendar() const;
    ExponentialModel to_anchored(double new_t0) const;
};

/// Generalized logistic growth: CR' = chi2*CR*(1-(CR/CRinf)^theta),
/// with the closed-form solution used for evaluation.
struct BVModel {
    double chi2 = 0.5;    // growth rate (1/day)
    double theta = 1.0;   // shape
    double CR0 = 1.0;     // cumulative at t0
    double CRinf = 2.0;   // final cumulative
    double t0 = 0.0;

    double value(double t) const;
    double deriv(double t) const;    // from the ODE, using value(t)
    double deriv2(double t) const;   // chi2*CR'*(1-(1+theta)*(CR/CRinf)^theta)

    void validate() const;
};

/// Flat daily-increment phase: CR(t) = N0 + a*(t - t_begin).
struct EndemicPhase {
    double N0 = 0.0;
    double a = 0.0;
};

/// Self-exciting wave riding on a base level: CR(t) = Nbase + BV(t) with
/// BV growing from N0 to Ninf.
struct EpidemicPhase {
    double Nbase = 0.0;
    double N0 = 1.0;
    double Ninf = 2.0;
    double chi = 0.5;
    double theta = 1.0;
};

using Phase = std::variant<EndemicPhase, EpidemicPhase>;

/// Piecewise phenomenological model over breakpoints t0 < t1 < ... < tn,
/// one phase per interval, joined continuously (each phase's level
/// parameter is solved left to right at construction). Outside [t0, tn]
/// the first/last phase formula extends the curve. The smooth curve fed to
/// reconstruction is the Gaussian-regularized version with bandwidth
/// `sigma`.
class MultiWaveModel {
public:
    MultiWaveModel(std::vector<double> breakpoints, std::vector<Phase> phases, double sigma);

    double value(double t) const;

    /// Gaussian-regularized curve (and derivatives) on a uniform grid.
    SmoothedSeries regularized(double t0, Eigen::Index n, double step) const;

    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<Phase>& phases() const { return phases_; }
    double sigma() const { return sigma_; }

private:
    double phase_value(std::size_t i, double t) const;
    std::vector<double> breakpoints_;
    std::vector<Phase> phases_;
    double sigma_;
};

using PhenoModel = std::variant<ExponentialModel, BVModel, MultiWaveModel>;

/// Evaluates any phenomenological model.
double pheno_value(const PhenoModel& m, double t);

/// Pointwise data-minus-model difference over the series days.
Eigen::VectorXd residual_extract(const CumulativeSeries& s, const ExponentialModel& m);

/// Key-value text serialization, decimal round-trip exact at 17
/// significant digits. Format: a `model <kind>` line, then one
/// `<key> <value>` line per parameter; multiwave adds a `breakpoints`
/// line and one `phase endemic N0 a` or
/// `phase epidemic Nbase N0 Ninf chi theta` line per interval.
std::string model_to_text(const PhenoModel& m);
PhenoModel model_from_text(const std::string& text);

} // namespace epiwave
