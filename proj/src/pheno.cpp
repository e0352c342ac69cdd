#include "epiwave/pheno.hpp"

#include <cmath>
#include <sstream>

#include "epiwave/errors.hpp"

namespace epiwave {

std::string to_string(Convention c) {
    return c == Convention::anchored ? "anchored" : "calendar";
}

Convention convention_from_string(const std::string& s) {
    if (s == "anchored") return Convention::anchored;
    if (s == "calendar") return Convention::calendar;
    throw ValidationError("unknown convention '" + s + "'");
}

double ExponentialModel::value(double t) const {
    if (conv == Convention::anchored)
        return chi1 * (std::exp(chi2 * (t - t0)) - 1.0) + chi3;
    return chi1 * std::exp(chi2 * t) - chi3;
}

double ExponentialModel::deriv(double t) const {
    if (conv == Convention::anchored) return chi1 * chi2 * std::exp(chi2 * (t - t0));
    return chi1 * chi2 * std::exp(chi2 * t);
}

ExponentialModel ExponentialModel::to_calendar() const {
    if (conv == Convention::calendar) return *this;
    ExponentialModel out;
    out.conv = Convention::calendar;
    out.chi1 = chi1 * std::exp(-chi2 * t0);
    out.chi2 = chi2;
    out.chi3 = chi1 - chi3;
    out.t0 = t0;
    return out;
}

ExponentialModel ExponentialModel::to_anchored(double new_t0) const {
    const ExponentialModel cal = to_calendar();
    ExponentialModel out;
    out.conv = Convention::anchored;
    out.t0 = new_t0;
    out.chi2 = cal.chi2;
    out.chi1 = cal.chi1 * std::exp(cal.chi2 * new_t0);
    out.chi3 = out.chi1 - cal.chi3;  // CR(new_t0)
    return out;
}

void BVModel::validate() const {
    if (!(chi2 > 0.0)) throw ValidationError("Bernoulli-Verhulst chi2 must be positive");
    if (!(theta > 0.0)) throw ValidationError("Bernoulli-Verhulst theta must be positive");
    if (!(CR0 >= 0.0) || !(CR0 < CRinf))
        throw ValidationError("Bernoulli-Verhulst needs 0 <= CR0 < CRinf");
}

double BVModel::value(double t) const {
    const double x = t - t0;
    const double b = std::pow(CR0 / CRinf, theta);
    const double u = chi2 * theta * x;
    // log(1 + b*(e^u - 1)) evaluated without overflow for large u.
    double log_den;
    if (u > 30.0) {
        log_den = u + std::log(b + (1.0 - b) * std::exp(-u));
    } else {
        log_den = std::log1p(b * std::expm1(u));
    }
    // Rounding can land an ulp past the plateau; the solution lives in
    // (0, CRinf].
    return std::min(CR0 * std::exp(chi2 * x - log_den / theta), CRinf);
}

double BVModel::deriv(double t) const {
    const double cr = value(t);
    return chi2 * cr * (1.0 - std::pow(cr / CRinf, theta));
}

double BVModel::deriv2(double t) const {
    const double cr = value(t);
    const double crp = chi2 * cr * (1.0 - std::pow(cr / CRinf, theta));
    return chi2 * crp * (1.0 - (1.0 + theta) * std::pow(cr / CRinf, theta));
}

namespace {

double endemic_value(const EndemicPhase& p, double t, double t_begin) {
    return p.N0 + (t - t_begin) * p.a;
}

double epidemic_value(const EpidemicPhase& p, double t, double t_begin) {
    BVModel core;
    core.chi2 = p.chi;
    core.theta = p.theta;
    core.CR0 = p.N0;
    core.CRinf = p.Ninf;
    core.t0 = t_begin;
    return p.Nbase + core.value(t);
}

} // namespace

MultiWaveModel::MultiWaveModel(std::vector<double> breakpoints, std::vector<Phase> phases,
                               double sigma)
    : breakpoints_(std::move(breakpoints)), phases_(std::move(phases)), sigma_(sigma) {
    if (phases_.empty()) throw ValidationError("multiwave model needs at least one phase");
    if (breakpoints_.size() != phases_.size() + 1)
        throw ValidationError("multiwave needs one more breakpoint than phases");
    for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i)
        if (!(breakpoints_[i + 1] > breakpoints_[i]))
            throw ValidationError("multiwave breakpoints must be strictly increasing");
    if (!(sigma_ > 0.0)) throw ValidationError("multiwave sigma must be positive");

    for (auto& ph : phases_) {
        if (const auto* e = std::get_if<EpidemicPhase>(&ph)) {
            if (!(e->chi > 0.0) || !(e->theta > 0.0) || !(e->N0 > 0.0) || !(e->N0 < e->Ninf))
                throw ValidationError("epidemic phase needs chi>0, theta>0, 0<N0<Ninf");
        }
    }

    // Solve each phase's level parameter left to right so the piecewise
    // curve is continuous at every breakpoint.
    for (std::size_t i = 1; i < phases_.size(); ++i) {
        const double left = phase_value(i - 1, breakpoints_[i]);
        if (auto* e = std::get_if<EndemicPhase>(&phases_[i])) {
            e->N0 = left;
        } else {
            auto& ep = std::get<EpidemicPhase>(phases_[i]);
            ep.Nbase = left - ep.N0;
        }
    }
}

double MultiWaveModel::phase_value(std::size_t i, double t) const {
    const double t_begin = breakpoints_[i];
    if (const auto* e = std::get_if<EndemicPhase>(&phases_[i])) return endemic_value(*e, t, t_begin);
    return epidemic_value(std::get<EpidemicPhase>(phases_[i]), t, t_begin);
}

double MultiWaveModel::value(double t) const {
    if (t <= breakpoints_.front()) return phase_value(0, t);
    for (std::size_t i = 0; i < phases_.size(); ++i)
        if (t <= breakpoints_[i + 1]) return phase_value(i, t);
    return phase_value(phases_.size() - 1, t);
}

SmoothedSeries MultiWaveModel::regularized(double t0, Eigen::Index n, double step) const {
    return convolve_gaussian([this](double t) { return value(t); }, sigma_, t0, n, step);
}

double pheno_value(const PhenoModel& m, double t) {
    return std::visit([t](const auto& model) { return model.value(t); }, m);
}

Eigen::VectorXd residual_extract(const CumulativeSeries& s, const ExponentialModel& m) {
    s.validate();
    Eigen::VectorXd r(s.values.size());
    for (Eigen::Index i = 0; i < s.values.size(); ++i)
        r[i] = s.values[i] - m.value(static_cast<double>(s.day(i)));
    return r;
}

namespace {

std::string kv(const std::string& key, double v) {
    return key + " " + format_g17(v) + "\n";
}

} // namespace

std::string model_to_text(const PhenoModel& m) {
    std::ostringstream out;
    if (const auto* e = std::get_if<ExponentialModel>(&m)) {
        out << "model exponential\n"
            << "convention " << to_string(e->conv) << "\n"
            << kv("chi1", e->chi1) << kv("chi2", e->chi2) << kv("chi3", e->chi3)
            << kv("t0", e->t0);
    } else if (const auto* b = std::get_if<BVModel>(&m)) {
        out << "model bernoulli_verhulst\n"
            << kv("chi2", b->chi2) << kv("theta", b->theta) << kv("cr0", b->CR0)
            << kv("crinf", b->CRinf) << kv("t0", b->t0);
    } else {
        const auto& w = std::get<MultiWaveModel>(m);
        out << "model multiwave\n" << kv("sigma", w.sigma());
        out << "breakpoints";
        for (double b : w.breakpoints()) out << " " << format_g17(b);
        out << "\n";
        for (const auto& ph : w.phases()) {
            if (const auto* e = std::get_if<EndemicPhase>(&ph)) {
                out << "phase endemic " << format_g17(e->N0) << " " << format_g17(e->a) << "\n";
            } else {
                const auto& ep = std::get<EpidemicPhase>(ph);
                out << "phase epidemic " << format_g17(ep.Nbase) << " " << format_g17(ep.N0)
                    << " " << format_g17(ep.Ninf) << " " << format_g17(ep.chi) << " "
                    << format_g17(ep.theta) << "\n";
            }
        }
    }
    return out.str();
}

PhenoModel model_from_text(const std::string& text) {
    std::istringstream in(text);
    std::string key;
    std::string kind;
    if (!(in >> key >> kind) || key != "model")
        throw ValidationError("model text must start with 'model <name>'");

    auto need = [&](const std::string& expect) {
        std::string k;
        double v = 0.0;
        if (!(in >> k >> v) || k != expect)
            throw ValidationError("model text: expected '" + expect + "'");
        return v;
    };

    if (kind == "exponential") {
        ExponentialModel m;
        std::string k, conv;
        if (!(in >> k >> conv) || k != "convention")
            throw ValidationError("model text: expected 'convention'");
        m.conv = convention_from_string(conv);
        m.chi1 = need("chi1");
        m.chi2 = need("chi2");
        m.chi3 = need("chi3");
        m.t0 = need("t0");
        return m;
    }
    if (kind == "bernoulli_verhulst") {
        BVModel m;
        m.chi2 = need("chi2");
        m.theta = need("theta");
        m.CR0 = need("cr0");
        m.CRinf = need("crinf");
        m.t0 = need("t0");
        m.validate();
        return m;
    }
    if (kind == "multiwave") {
        const double sigma = need("sigma");
        std::string k;
        if (!(in >> k) || k != "breakpoints")
            throw ValidationError("model text: expected 'breakpoints'");
        std::string rest;
        std::getline(in, rest);
        std::istringstream bk(rest);
        std::vector<double> breakpoints;
        for (double v; bk >> v;) breakpoints.push_back(v);
        std::vector<Phase> phases;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream pl(line);
            std::string tag, ptype;
            pl >> tag >> ptype;
            if (tag != "phase") throw ValidationError("model text: expected 'phase' line");
            if (ptype == "endemic") {
                EndemicPhase e;
                if (!(pl >> e.N0 >> e.a)) throw ValidationError("bad endemic phase line");
                phases.emplace_back(e);
            } else if (ptype == "epidemic") {
                EpidemicPhase e;
                if (!(pl >> e.Nbase >> e.N0 >> e.Ninf >> e.chi >> e.theta))
                    throw ValidationError("bad epidemic phase line");
                phases.emplace_back(e);
            } else {
                throw ValidationError("unknown phase kind '" + ptype + "'");
            }
        }
        return MultiWaveModel(std::move(breakpoints), std::move(phases), sigma);
    }
    throw ValidationError("unknown model kind '" + kind + "'");
}

} // namespace epiwave
