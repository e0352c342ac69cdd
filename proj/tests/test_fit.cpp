#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <cstdlib>
#include <random>

#include "epiwave/fit.hpp"

using namespace epiwave;

namespace {

std::string data_dir() {
    const char* env = std::getenv("EPIWAVE_DATA_DIR");
    REQUIRE(env != nullptr);
    return env;
}

CumulativeSeries from_model(const ExponentialModel& m, int d1, int d2) {
    CumulativeSeries s;
    s.t0 = d1;
    s.values.resize(d2 - d1 + 1);
    for (Eigen::Index i = 0; i < s.values.size(); ++i)
        s.values[i] = m.value(static_cast<double>(d1 + i));
    return s;
}

CumulativeSeries from_model(const BVModel& m, int d1, int d2) {
    CumulativeSeries s;
    s.t0 = d1;
    s.values.resize(d2 - d1 + 1);
    for (Eigen::Index i = 0; i < s.values.size(); ++i)
        s.values[i] = m.value(static_cast<double>(d1 + i));
    return s;
}

CumulativeSeries china() {
    ColumnSpec spec;
    spec.epoch = "2020-01-31";
    return load_series(data_dir() + "/china_cumulative.csv", spec);
}

/// Exhaustive variable-projection oracle for the exponential fit: for each
/// candidate growth rate the optimal scale and offset are a linear solve,
/// so a refined 1-D scan over the rate is a global search.
double exp_grid_oracle_sse(const CumulativeSeries& s, int d1, int d2) {
    const CumulativeSeries w = s.window(d1, d2);
    const Eigen::VectorXd days =
        Eigen::VectorXd::LinSpaced(w.values.size(), d1, static_cast<double>(d2));
    double lo = 0.01, hi = 1.2;
    double best_sse = 1e300;
    for (int refine = 0; refine < 4; ++refine) {
        double best_rate = lo;
        for (int k = 0; k <= 400; ++k) {
            const double rate = lo + (hi - lo) * k / 400.0;
            Eigen::MatrixXd B(days.size(), 2);
            for (Eigen::Index i = 0; i < days.size(); ++i) {
                B(i, 0) = std::expm1(rate * (days[i] - d1));
                B(i, 1) = 1.0;
            }
            const Eigen::Vector2d ac = B.colPivHouseholderQr().solve(w.values);
            const double sse = (B * ac - w.values).squaredNorm();
            if (sse < best_sse) {
                best_sse = sse;
                best_rate = rate;
            }
        }
        const double span = (hi - lo) / 40.0;
        lo = std::max(1e-4, best_rate - span);
        hi = best_rate + span;
    }
    return best_sse;
}

} // namespace

TEST_CASE("exponential fit recovers exact synthetic parameters") {
    ExponentialModel truth;
    truth.chi1 = 2.0;
    truth.chi2 = 0.3;
    truth.chi3 = 50.0;
    truth.t0 = 0.0;
    truth.conv = Convention::anchored;
    const CumulativeSeries s = from_model(truth, 0, 14);

    const FitResult fit = fit_exponential(s, 0, 14, Convention::anchored);
    const auto& m = std::get<ExponentialModel>(fit.model);
    CHECK(m.chi1 == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(m.chi2 == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(m.chi3 == doctest::Approx(50.0).epsilon(1e-6));
    CHECK(fit.sse < 1e-12);
    CHECK(fit.mad < 1e-7);
}

TEST_CASE("exponential fit in calendar form matches the anchored optimum") {
    ExponentialModel truth;
    truth.chi1 = 10.0;
    truth.chi2 = 0.25;
    truth.chi3 = 80.0;
    truth.conv = Convention::calendar;
    const CumulativeSeries s = from_model(truth, 10, 25);

    const FitResult fit = fit_exponential(s, 10, 25, Convention::calendar);
    const auto& m = std::get<ExponentialModel>(fit.model);
    CHECK(m.conv == Convention::calendar);
    CHECK(m.chi1 == doctest::Approx(truth.chi1).epsilon(1e-6));
    CHECK(m.chi2 == doctest::Approx(truth.chi2).epsilon(1e-6));
    CHECK(m.chi3 == doctest::Approx(truth.chi3).epsilon(1e-6));
}

TEST_CASE("exponential fit SSE matches the grid-refinement oracle on noisy data") {
    ExponentialModel truth;
    truth.chi1 = 3.0;
    truth.chi2 = 0.28;
    truth.chi3 = 120.0;
    truth.t0 = 0.0;
    truth.conv = Convention::anchored;
    CumulativeSeries s = from_model(truth, 0, 13);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values[i] *= 1.0 + noise(rng);

    const FitResult fit = fit_exponential(s, 0, 13, Convention::anchored);
    const double oracle = exp_grid_oracle_sse(s, 0, 13);
    CHECK(fit.sse <= oracle * 1.001);
    CHECK(oracle <= fit.sse * 1.001);
}

TEST_CASE("exponential fit rejects too-short windows") {
    ExponentialModel truth;
    truth.conv = Convention::anchored;
    truth.chi1 = 1.0;
    truth.chi2 = 0.2;
    const CumulativeSeries s = from_model(truth, 0, 8);
    CHECK_THROWS_AS(fit_exponential(s, 0, 2, Convention::anchored), ValidationError);
}

TEST_CASE("fitting is deterministic") {
    const CumulativeSeries s = china();
    const FitResult a = fit_exponential(s, 20, 30, Convention::calendar);
    const FitResult b = fit_exponential(s, 20, 30, Convention::calendar);
    const auto& ma = std::get<ExponentialModel>(a.model);
    const auto& mb = std::get<ExponentialModel>(b.model);
    CHECK(ma.chi1 == mb.chi1);
    CHECK(ma.chi2 == mb.chi2);
    CHECK(ma.chi3 == mb.chi3);
    CHECK(a.sse == b.sse);
}

TEST_CASE("growth-curve fitting is deterministic") {
    const CumulativeSeries s = china();
    const FitResult a = fit_bv(s, 19, 58);
    const FitResult b = fit_bv(s, 19, 58);
    CHECK(std::get<BVModel>(a.model).chi2 == std::get<BVModel>(b.model).chi2);
    CHECK(std::get<BVModel>(a.model).theta == std::get<BVModel>(b.model).theta);
    CHECK(std::get<BVModel>(a.model).CRinf == std::get<BVModel>(b.model).CRinf);
    CHECK(a.sse == b.sse);
}

TEST_CASE("refitting model-generated data reproduces the parameters") {
    const CumulativeSeries s = china();
    const FitResult fit = fit_exponential(s, 20, 30, Convention::calendar);
    const auto& m = std::get<ExponentialModel>(fit.model);

    const CumulativeSeries regen = from_model(m, 20, 30);
    const FitResult refit = fit_exponential(regen, 20, 30, Convention::calendar);
    const auto& m2 = std::get<ExponentialModel>(refit.model);
    CHECK(m2.chi1 == doctest::Approx(m.chi1).epsilon(1e-8));
    CHECK(m2.chi2 == doctest::Approx(m.chi2).epsilon(1e-8));
    CHECK(m2.chi3 == doctest::Approx(m.chi3).epsilon(1e-8));
}

TEST_CASE("China exponential window reproduces the published parameters") {
    const CumulativeSeries s = china();
    const FitResult fit = fit_exponential(s, 20, 30, Convention::calendar);
    const auto& m = std::get<ExponentialModel>(fit.model);
    CHECK(std::abs(m.chi1 - 3.7366) / 3.7366 < 0.02);
    CHECK(std::abs(m.chi2 - 0.2650) / 0.2650 < 0.02);
    CHECK(std::abs(m.chi3 - 615.41) / 615.41 < 0.02);
}

TEST_CASE("Bernoulli-Verhulst fit recovers exact synthetic parameters") {
    BVModel truth;
    truth.chi2 = 0.5;
    truth.theta = 0.4;
    truth.CR0 = 30.0;
    truth.CRinf = 8000.0;
    truth.t0 = 0.0;
    const CumulativeSeries s = from_model(truth, 0, 40);

    const FitResult fit = fit_bv(s, 0, 40);
    const auto& m = std::get<BVModel>(fit.model);
    CHECK(m.chi2 == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(m.theta == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(m.CRinf == doctest::Approx(8000.0).epsilon(1e-6));
    CHECK(m.CR0 == 30.0);
}

TEST_CASE("China Bernoulli-Verhulst fits reproduce the published parameters") {
    const CumulativeSeries s = china();

    SUBCASE("whole series") {
        const FitResult fit = fit_bv(s, 19, 58);
        const auto& m = std::get<BVModel>(fit.model);
        CHECK(std::abs(m.chi2 - 0.66) / 0.66 < 0.05);
        CHECK(std::abs(m.theta - 0.22) / 0.22 < 0.05);
    }
    SUBCASE("wave body") {
        const FitResult fit = fit_bv(s, 31, 58);
        const auto& m = std::get<BVModel>(fit.model);
        CHECK(std::abs(m.chi2 - 0.66) / 0.66 < 0.005);
        CHECK(std::abs(m.theta - 0.22) / 0.22 < 0.005);
        CHECK(std::abs(m.CRinf - 67102.0) / 67102.0 < 0.005);
    }
}

TEST_CASE("Bernoulli-Verhulst fit SSE matches a grid-refinement oracle") {
    BVModel truth;
    truth.chi2 = 0.45;
    truth.theta = 0.5;
    truth.CR0 = 50.0;
    truth.CRinf = 10000.0;
    truth.t0 = 0.0;
    CumulativeSeries s = from_model(truth, 0, 35);
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values[i] *= 1.0 + noise(rng);

    const FitResult fit = fit_bv(s, 0, 35);

    // 3-D refined grid over (chi2, theta, CRinf) with CR0 pinned.
    const double cr0 = s.values[0];
    const Eigen::VectorXd days = Eigen::VectorXd::LinSpaced(36, 0.0, 35.0);
    const auto sse_at = [&](double c, double th, double ci) {
        BVModel m;
        m.chi2 = c;
        m.theta = th;
        m.CR0 = cr0;
        m.CRinf = ci;
        m.t0 = 0.0;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < days.size(); ++i) {
            const double r = m.value(days[i]) - s.values[i];
            acc += r * r;
        }
        return acc;
    };
    double c_lo = 0.1, c_hi = 1.0, t_lo = 0.1, t_hi = 1.5, i_lo = 6000.0, i_hi = 20000.0;
    double best = 1e300, bc = 0, bt = 0, bi = 0;
    for (int refine = 0; refine < 3; ++refine) {
        for (int a = 0; a <= 24; ++a)
            for (int b = 0; b <= 24; ++b)
                for (int c = 0; c <= 24; ++c) {
                    const double cv = c_lo + (c_hi - c_lo) * a / 24.0;
                    const double tv = t_lo + (t_hi - t_lo) * b / 24.0;
                    const double iv = i_lo + (i_hi - i_lo) * c / 24.0;
                    const double sse = sse_at(cv, tv, iv);
                    if (sse < best) {
                        best = sse;
                        bc = cv;
                        bt = tv;
                        bi = iv;
                    }
                }
        const double cs = (c_hi - c_lo) / 12.0, ts = (t_hi - t_lo) / 12.0,
                     is = (i_hi - i_lo) / 12.0;
        c_lo = bc - cs;
        c_hi = bc + cs;
        t_lo = bt - ts;
        t_hi = bt + ts;
        i_lo = bi - is;
        i_hi = bi + is;
    }
    CHECK(fit.sse <= best * 1.001);
}

TEST_CASE("multiwave fit with one epidemic phase reduces to the plain fit") {
    BVModel truth;
    truth.chi2 = 0.4;
    truth.theta = 0.6;
    truth.CR0 = 40.0;
    truth.CRinf = 6000.0;
    truth.t0 = 0.0;
    const CumulativeSeries s = from_model(truth, 0, 45);

    const FitResult direct = fit_bv(s, 0, 45);
    const FitResult multi = fit_multiwave(s, {0.0, 45.0}, {PhaseKind::epidemic}, 7.0);
    const auto& bm = std::get<BVModel>(direct.model);
    const auto& wm = std::get<MultiWaveModel>(multi.model);
    const auto& phase = std::get<EpidemicPhase>(wm.phases()[0]);
    CHECK(phase.chi == doctest::Approx(bm.chi2).epsilon(1e-9));
    CHECK(phase.theta == doctest::Approx(bm.theta).epsilon(1e-9));
    CHECK(phase.Ninf == doctest::Approx(bm.CRinf).epsilon(1e-9));
    CHECK(phase.N0 == bm.CR0);
    CHECK(phase.Nbase == 0.0);
}

TEST_CASE("multiwave endemic phase recovers a constant daily increment exactly") {
    CumulativeSeries s;
    s.t0 = 0;
    s.values.resize(21);
    for (Eigen::Index i = 0; i <= 20; ++i) s.values[i] = 300.0 + 12.5 * static_cast<double>(i);
    const FitResult fit = fit_multiwave(s, {0.0, 20.0}, {PhaseKind::endemic}, 7.0);
    const auto& m = std::get<MultiWaveModel>(fit.model);
    const auto& ph = std::get<EndemicPhase>(m.phases()[0]);
    CHECK(ph.a == doctest::Approx(12.5).epsilon(1e-12));
    CHECK(ph.N0 == doctest::Approx(300.0).epsilon(1e-12));
}

TEST_CASE("two-phase synthetic round-trips through the multiwave fit") {
    EpidemicPhase wave;
    wave.Nbase = 0.0;  // solved by continuity in the generator
    wave.N0 = 25.0;
    wave.Ninf = 9000.0;
    wave.chi = 0.35;
    wave.theta = 0.5;
    const MultiWaveModel truth({0.0, 25.0, 75.0},
                               {Phase{EndemicPhase{400.0, 6.0}}, Phase{wave}}, 7.0);

    CumulativeSeries s;
    s.t0 = 0;
    s.values.resize(76);
    for (Eigen::Index i = 0; i <= 75; ++i) s.values[i] = truth.value(static_cast<double>(i));

    const FitResult fit = fit_multiwave(s, {0.0, 25.0, 75.0},
                                        {PhaseKind::endemic, PhaseKind::epidemic}, 7.0);
    const auto& m = std::get<MultiWaveModel>(fit.model);
    const auto& endemic = std::get<EndemicPhase>(m.phases()[0]);
    const auto& epidemic = std::get<EpidemicPhase>(m.phases()[1]);
    const auto& truth_ep = std::get<EpidemicPhase>(truth.phases()[1]);

    CHECK(std::abs(endemic.N0 - 400.0) / 400.0 < 0.01);
    CHECK(std::abs(endemic.a - 6.0) / 6.0 < 0.01);
    CHECK(std::abs(epidemic.N0 - truth_ep.N0) / truth_ep.N0 < 0.01);
    CHECK(std::abs(epidemic.chi - truth_ep.chi) / truth_ep.chi < 0.01);
    CHECK(std::abs(epidemic.theta - truth_ep.theta) / truth_ep.theta < 0.01);
    CHECK(std::abs(epidemic.Ninf - truth_ep.Ninf) / truth_ep.Ninf < 0.01);
}

TEST_CASE("multiwave fit rejects phases with too few points") {
    CumulativeSeries s;
    s.t0 = 0;
    s.values = Eigen::VectorXd::LinSpaced(10, 0.0, 9.0);
    CHECK_THROWS_AS(
        fit_multiwave(s, {0.0, 1.0, 9.0}, {PhaseKind::endemic, PhaseKind::endemic}, 7.0),
        ValidationError);
}

TEST_CASE("confidence intervals are tight on zero-noise data") {
    ExponentialModel truth;
    truth.chi1 = 2.0;
    truth.chi2 = 0.3;
    truth.chi3 = 50.0;
    truth.conv = Convention::anchored;
    const CumulativeSeries s = from_model(truth, 0, 14);
    FitResult fit = fit_exponential(s, 0, 14, Convention::anchored);
    const auto ci = confidence_interval(fit, s);
    REQUIRE(ci.size() == 3);
    for (const auto& c : ci) {
        CHECK(c.upper - c.lower < 1e-6);
        CHECK(c.lower <= c.estimate);
        CHECK(c.estimate <= c.upper);
    }
    CHECK(fit.ci95.size() == 3);
}

TEST_CASE("confidence intervals cover the truth about 95% of the time") {
    ExponentialModel truth;
    truth.chi1 = 2.0;
    truth.chi2 = 0.3;
    truth.chi3 = 50.0;
    truth.t0 = 0.0;
    truth.conv = Convention::anchored;
    const CumulativeSeries base = from_model(truth, 0, 13);

    std::mt19937 rng(1234);
    std::normal_distribution<double> noise(0.0, 3.0);
    const int replicates = 500;
    int covered1 = 0, covered2 = 0, covered3 = 0;
    for (int r = 0; r < replicates; ++r) {
        CumulativeSeries s = base;
        for (Eigen::Index i = 0; i < s.values.size(); ++i)
            s.values[i] = std::max(0.0, s.values[i] + noise(rng));
        FitResult fit;
        try {
            fit = fit_exponential(s, 0, 13, Convention::anchored);
        } catch (const NumericalError&) {
            continue;
        }
        const auto ci = confidence_interval(fit, s);
        if (ci[0].lower <= truth.chi1 && truth.chi1 <= ci[0].upper) ++covered1;
        if (ci[1].lower <= truth.chi2 && truth.chi2 <= ci[1].upper) ++covered2;
        if (ci[2].lower <= truth.chi3 && truth.chi3 <= ci[2].upper) ++covered3;
    }
    // Linearized intervals: allow a Monte-Carlo band around the nominal 95%.
    for (int covered : {covered1, covered2, covered3}) {
        const double rate = static_cast<double>(covered) / replicates;
        CHECK(rate > 0.88);
        CHECK(rate <= 1.0);
    }
}

TEST_CASE("confidence interval reports non-identifiable fits") {
    // Constant data: the growth direction is degenerate.
    CumulativeSeries s;
    s.t0 = 0;
    s.values = Eigen::VectorXd::Constant(8, 100.0);
    FitResult fake;
    ExponentialModel m;
    m.chi1 = 1e-14;
    m.chi2 = 1e-8;
    m.chi3 = 100.0;
    m.conv = Convention::anchored;
    fake.model = m;
    fake.sse = 1.0;
    fake.window_begin = 0;
    fake.window_end = 7;
    CHECK_THROWS_AS(confidence_interval(fake, s), NumericalError);
}

TEST_CASE("mean absolute deviation examples") {
    CumulativeSeries s;
    s.t0 = 0;
    s.values = Eigen::VectorXd::LinSpaced(11, 0.0, 10.0);

    SUBCASE("model identical to data gives zero") {
        CHECK(mad([](double t) { return t; }, s, 0, 10) == 0.0);
    }
    SUBCASE("constant offset c gives c") {
        CHECK(mad([](double t) { return t + 7.5; }, s, 0, 10) == doctest::Approx(7.5));
    }
    SUBCASE("random case matches direct summation") {
        std::mt19937 rng(9);
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        Eigen::VectorXd curve(11);
        for (Eigen::Index i = 0; i < 11; ++i) curve[i] = s.values[i] + u(rng);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < 11; ++i) acc += std::abs(curve[i] - s.values[i]);
        const auto curve_fn = [&](double t) { return curve[static_cast<Eigen::Index>(t)]; };
        CHECK(mad(curve_fn, s, 0, 10) == doctest::Approx(acc / 11.0).epsilon(1e-14));
    }
}

TEST_CASE("fitted residuals sum to zero when the offset is free") {
    // The offset column of the Jacobian is constant, so the normal
    // equations force the residual sum to vanish at the optimum.
    CumulativeSeries s = china().window(20, 30);
    const FitResult fit = fit_exponential(s, 20, 30, Convention::calendar);
    const auto& m = std::get<ExponentialModel>(fit.model);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < s.values.size(); ++i)
        sum += s.values[i] - m.value(static_cast<double>(s.day(i)));
    CHECK(std::abs(sum) < 1e-6 * s.values.sum());
}
