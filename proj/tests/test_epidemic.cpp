#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "epiwave/epidemic.hpp"
#include "epiwave/errors.hpp"

using namespace epiwave;

namespace {

EpiParams remark_params() {
    EpiParams p;
    p.S0 = 1.4e9;
    p.nu = 0.2;
    p.f = 0.5;
    p.t0 = 19.0;
    p.I0 = 1521.0;
    p.CR0 = 198.0;
    return p;
}

} // namespace

TEST_CASE("integrator reproduces a known linear solution") {
    const OdeRhs rhs = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = y; };
    Eigen::VectorXd y0(1);
    y0 << 1.0;
    const DenseSolution sol = integrate(rhs, y0, 0.0, 5.0);
    // Interior queries go through the cubic Hermite interpolant.
    for (double t = 0.0; t <= 5.0; t += 0.3)
        CHECK(sol.eval(t, 0) == doctest::Approx(std::exp(t)).epsilon(2e-7));

    // Node-forced queries carry the full integration accuracy.
    std::vector<double> nodes;
    for (double t = 0.5; t < 5.0; t += 0.5) nodes.push_back(t);
    const DenseSolution sol2 = integrate(rhs, y0, 0.0, 5.0, {}, nodes);
    for (double t : nodes)
        CHECK(sol2.eval(t, 0) == doctest::Approx(std::exp(t)).epsilon(1e-9));
}

TEST_CASE("integrator splits at breakpoints and keeps order through kinks") {
    // y' = 1 before the kink, y' = -1 after: exact piecewise linear.
    const OdeRhs rhs = [](double t, const Eigen::VectorXd&, Eigen::VectorXd& dy) {
        dy[0] = t < 2.0 ? 1.0 : -1.0;
    };
    Eigen::VectorXd y0(1);
    y0 << 0.0;
    const double kink = 2.0;
    const DenseSolution sol = integrate(rhs, y0, 0.0, 4.0, {}, std::span(&kink, 1));
    CHECK(sol.eval(2.0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sol.eval(3.0, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sol.eval(1.5, 0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("tau profiles evaluate their closed forms") {
    CHECK(tau_eval(ConstantTau{2.5e-10}, 100.0) == 2.5e-10);

    const ChowellTau ch{1e-9, 0.6, 0.2, 30.0};
    CHECK(tau_eval(ch, 10.0) == doctest::Approx(1e-9).epsilon(1e-14));
    CHECK(tau_eval(ch, 30.0) == doctest::Approx(1e-9).epsilon(1e-14));
    CHECK(tau_eval(ch, 40.0) ==
          doctest::Approx(1e-9 * (0.6 * std::exp(-2.0) + 0.4)).epsilon(1e-12));

    const ExpDecayTau ed{1e-9, 0.5, 10.0};
    CHECK(tau_eval(ed, 5.0) == doctest::Approx(1e-9).epsilon(1e-14));
    CHECK(tau_eval(ed, 12.0) == doctest::Approx(1e-9 * std::exp(-1.0)).epsilon(1e-12));

    SampledTau sm;
    sm.grid = Eigen::Vector3d(0.0, 1.0, 2.0);
    sm.values = Eigen::Vector3d(1.0, 3.0, 2.0);
    CHECK(tau_eval(sm, 0.5) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(tau_eval(sm, -1.0) == 1.0);
    CHECK(tau_eval(sm, 9.0) == 2.0);
}

TEST_CASE("zero transmission decouples the SI system") {
    EpiParams p;
    p.S0 = 1e6;
    p.nu = 0.25;
    p.f = 0.6;
    p.t0 = 0.0;
    p.I0 = 500.0;
    p.CR0 = 40.0;
    const Trajectory tr = simulate_si(p, ConstantTau{0.0}, 30.0);
    for (Eigen::Index i = 0; i < tr.size(); ++i) {
        const double t = tr.time(i);
        CHECK(tr.S[i] == doctest::Approx(1e6).epsilon(1e-10));
        CHECK(tr.I[i] == doctest::Approx(500.0 * std::exp(-0.25 * t)).epsilon(1e-8));
        const double cr = 40.0 + 0.6 * 500.0 * (1.0 - std::exp(-0.25 * t));
        CHECK(tr.CR[i] == doctest::Approx(cr).epsilon(1e-8));
    }
}

TEST_CASE("early dynamics follow the frozen-S exponential") {
    const EpiParams p = remark_params();
    const double tau0 = 3.3214e-10;
    const Trajectory tr = simulate_si(p, ConstantTau{tau0}, 5.0);
    const double chi2 = tau0 * p.S0 - p.nu;
    for (Eigen::Index i = 0; i < tr.size(); ++i) {
        const double expected = p.I0 * std::exp(chi2 * (tr.time(i) - p.t0));
        CHECK(std::abs(tr.I[i] - expected) / expected < 0.005);
    }
}

TEST_CASE("S + I + nu*CI is a first integral of the SI flow") {
    const EpiParams p = remark_params();
    const Trajectory tr = simulate_si(p, ConstantTau{3.3214e-10}, 60.0);
    const double c0 = tr.S[0] + tr.I[0];
    for (Eigen::Index i = 0; i < tr.size(); ++i) {
        const double c = tr.S[i] + tr.I[i] + p.nu * tr.CI[i];
        CHECK(std::abs(c - c0) / c0 < 1e-8);
    }
}

TEST_CASE("reported flow integrates to CR - CR0 = nu f CI") {
    const EpiParams p = remark_params();
    const Trajectory tr = simulate_si(p, ConstantTau{3.3214e-10}, 40.0);
    for (Eigen::Index i = 0; i < tr.size(); ++i)
        CHECK(tr.CR[i] - p.CR0 == doctest::Approx(p.nu * p.f * tr.CI[i]).epsilon(1e-12));
}

TEST_CASE("full reporting empties the unreported compartment") {
    EpiParams p;
    p.S0 = 1e7;
    p.nu = 0.2;
    p.f = 1.0;
    p.eta = 0.15;
    p.t0 = 0.0;
    p.I0 = 100.0;
    p.U0 = 80.0;
    const Trajectory tr = simulate_siur(p, ConstantTau{2e-8}, 20.0);
    for (Eigen::Index i = 0; i < tr.size(); ++i) {
        const double expected = 80.0 * std::exp(-0.15 * tr.time(i));
        CHECK(tr.U[i] == doctest::Approx(expected).epsilon(1e-6));
    }

    p.U0 = 0.0;
    const Trajectory a = simulate_siur(p, ConstantTau{2e-8}, 20.0);
    const Trajectory b = simulate_si(p, ConstantTau{2e-8}, 20.0);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        CHECK(a.I[i] == doctest::Approx(b.I[i]).epsilon(1e-8));
}

TEST_CASE("compartments stay non-negative over random valid parameters") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        EpiParams p;
        p.S0 = std::pow(10.0, 4.0 + 3.0 * u(rng));
        p.nu = 0.05 + 0.4 * u(rng);
        p.f = 0.1 + 0.9 * u(rng);
        p.eta = 0.05 + 0.3 * u(rng);
        p.I0 = 1.0 + 50.0 * u(rng);
        p.U0 = 50.0 * u(rng);
        const double tau0 = (0.2 + 1.3 * u(rng)) * p.nu / p.S0;
        const Trajectory tr = simulate_siur(p, ConstantTau{tau0}, 80.0);
        for (Eigen::Index i = 0; i < tr.size(); ++i) {
            CHECK(tr.S[i] >= 0.0);
            CHECK(tr.I[i] >= -1e-9 * p.I0);
            CHECK(tr.U[i] >= -1e-9 * std::max(p.U0, 1.0));
        }
    }
}

TEST_CASE("scalar cumulative equation matches the full system") {
    const EpiParams p = remark_params();
    const double tau0 = 3.3214e-10;
    const Trajectory tr = simulate_si(p, ConstantTau{tau0}, 50.0);
    const ScalarSeries ci = cumulative_ode_solve(p, tau0, 50.0);
    REQUIRE(ci.size() == tr.size());
    for (Eigen::Index i = 1; i < ci.size(); ++i)
        CHECK(std::abs(ci.value[i] - tr.CI[i]) / std::max(tr.CI[i], 1.0) < 1e-7);
}

TEST_CASE("scalar cumulative equation has the linear closed form at tau = 0") {
    EpiParams p;
    p.S0 = 1e6;
    p.nu = 0.3;
    p.f = 0.5;
    p.t0 = 2.0;
    p.I0 = 120.0;
    const double ci0 = 7.0;
    const ScalarSeries ci = cumulative_ode_solve(p, 0.0, 30.0, ci0);
    for (Eigen::Index i = 0; i < ci.size(); ++i) {
        const double t = ci.time(i) - p.t0;
        const double expected = p.I0 / p.nu + (ci0 - p.I0 / p.nu) * std::exp(-p.nu * t);
        CHECK(std::abs(ci.value[i] - expected) < 1e-9 * std::max(expected, 1.0));
    }
    for (Eigen::Index i = 1; i < ci.size(); ++i) CHECK(ci.value[i] >= ci.value[i - 1]);
}

TEST_CASE("final size solves the equilibrium equation") {
    EpiParams p;
    p.S0 = 1e6;
    p.nu = 0.2;
    p.f = 0.5;
    p.I0 = 50.0;

    SUBCASE("tau = 0 gives I0 / nu exactly") {
        CHECK(final_size(p, 0.0) == 50.0 / 0.2);
    }
    SUBCASE("no infections, no epidemic") {
        p.I0 = 0.0;
        CHECK(final_size(p, 3e-7) == 0.0);
    }
    SUBCASE("root satisfies the equation") {
        const double tau0 = 2.4 * p.nu / p.S0;
        const double ci = final_size(p, tau0);
        const double g = p.I0 + p.S0 * (1.0 - std::exp(-tau0 * ci)) - p.nu * ci;
        CHECK(std::abs(g) < 1e-5 * p.nu * ci);
    }
    SUBCASE("agrees with the long-horizon cumulative solve") {
        EpiParams q = remark_params();
        const double tau0 = 3.3214e-10;
        const double ci_inf = final_size(q, tau0);
        StepControl ctl;
        ctl.output_step = 10.0;
        ctl.h_max = 2.0;
        const ScalarSeries ci = cumulative_ode_solve(q, tau0, 2000.0, 0.0, ctl);
        CHECK(std::abs(ci.value[ci.size() - 1] - ci_inf) / ci_inf < 1e-3);
    }
}

TEST_CASE("daily compartment relaxes to a constant flow") {
    const auto flow = [](double) { return 12.0; };
    const ScalarSeries d =
        daily_from_cumulative(flow, 0.0, 0.0, 25.0, 1.0, DailyMethod::convolution);
    const double at20 = d.value[20];
    CHECK(std::abs(at20 - 12.0) < 12.0 * std::exp(-20.0) + 1e-9);
}

TEST_CASE("daily compartment stays at zero without input") {
    const auto flow = [](double) { return 0.0; };
    for (const auto method : {DailyMethod::convolution, DailyMethod::ode}) {
        const ScalarSeries d = daily_from_cumulative(flow, 0.0, 0.0, 10.0, 0.5, method);
        for (Eigen::Index i = 0; i < d.size(); ++i) CHECK(std::abs(d.value[i]) < 1e-12);
    }
}

TEST_CASE("convolution and ODE forms of the daily compartment agree") {
    const auto flow = [](double t) { return 3.0 * std::exp(0.21 * t); };
    const ScalarSeries a =
        daily_from_cumulative(flow, 5.0, 0.0, 15.0, 0.5, DailyMethod::convolution);
    const ScalarSeries b = daily_from_cumulative(flow, 5.0, 0.0, 15.0, 0.5, DailyMethod::ode);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        CHECK(std::abs(a.value[i] - b.value[i]) / std::max(b.value[i], 1.0) < 1e-7);
}

TEST_CASE("envelope bounds collapse to zero width at equal corners") {
    const EpiParams p = remark_params();
    const auto [lo, hi] = envelope_ci(p, 3.3214e-10, p, 3.3214e-10, 30.0);
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        CHECK(lo.CR[i] == doctest::Approx(hi.CR[i]).epsilon(1e-12));
}

TEST_CASE("envelope rejects unordered corners") {
    EpiParams lo = remark_params();
    EpiParams hi = remark_params();
    hi.I0 = lo.I0 - 1.0;
    CHECK_THROWS_AS(envelope_ci(lo, 1e-10, hi, 2e-10, 10.0), ValidationError);
}

TEST_CASE("documented confidence corners bound the best estimate") {
    // Corner initializations from the documented 95% parameter bounds.
    const double nu = 0.2, f = 0.5, S0 = 1.4e9, t0 = 19.0;
    const double c1lo = 1.57, c1hi = 5.89, c2lo = 0.24, c2hi = 0.28;

    EpiParams lo;
    lo.S0 = S0;
    lo.nu = nu;
    lo.f = f;
    lo.t0 = t0;
    lo.I0 = c1lo * c2lo * std::exp(c2lo * t0) / (nu * f);
    EpiParams hi = lo;
    hi.I0 = c1hi * c2hi * std::exp(c2hi * t0) / (nu * f);
    EpiParams best = lo;
    best.I0 = 1521.0;

    const double tau_lo = (c2lo + nu) / S0;
    const double tau_hi = (c2hi + nu) / S0;
    const double tau_best = 3.3214e-10;
    REQUIRE(lo.I0 < best.I0);
    REQUIRE(best.I0 < hi.I0);

    const auto [bl, bh] = envelope_ci(lo, tau_lo, hi, tau_hi, 45.0);
    const Trajectory mid = simulate_si(best, ConstantTau{tau_best}, 45.0);
    for (Eigen::Index i = 0; i < mid.size(); ++i) {
        CHECK(bl.CR[i] <= mid.CR[i] * (1.0 + 1e-9));
        CHECK(mid.CR[i] <= bh.CR[i] * (1.0 + 1e-9));
    }
}

TEST_CASE("random intermediate parameters stay inside the envelope") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    EpiParams lo;
    lo.S0 = 5e5;
    lo.nu = 0.25;  // upper nu means lower 1/nu
    lo.f = 0.5;
    lo.I0 = 20.0;
    EpiParams hi = lo;
    hi.S0 = 7e5;
    hi.nu = 0.2;
    hi.I0 = 35.0;
    const double tau_lo = 0.3e-6, tau_hi = 0.5e-6;

    const auto [bl, bh] = envelope_ci(lo, tau_lo, hi, tau_hi, 50.0);

    for (int k = 0; k < 8; ++k) {
        EpiParams mid = lo;
        mid.S0 = lo.S0 + (hi.S0 - lo.S0) * u(rng);
        mid.nu = hi.nu + (lo.nu - hi.nu) * u(rng);
        mid.I0 = lo.I0 + (hi.I0 - lo.I0) * u(rng);
        const double tau_mid = tau_lo + (tau_hi - tau_lo) * u(rng);
        const Trajectory tr = simulate_si(mid, ConstantTau{tau_mid}, 50.0);
        for (Eigen::Index i = 0; i < tr.size(); i += 4) {
            CHECK(bl.CI[i] <= tr.CI[i] * (1.0 + 1e-9) + 1e-9);
            CHECK(tr.CI[i] <= bh.CI[i] * (1.0 + 1e-9) + 1e-9);
        }
    }
}

TEST_CASE("cumulative curve grows with each model parameter") {
    std::mt19937 rng(5150);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 25; ++k) {
        EpiParams p;
        p.S0 = std::pow(10.0, 4.5 + 2.0 * u(rng));
        p.nu = 0.1 + 0.3 * u(rng);
        p.f = 1.0;
        p.I0 = 5.0 + 80.0 * u(rng);
        const double tau0 = (0.5 + 1.2 * u(rng)) * p.nu / p.S0;
        const double horizon = 6.0 + 20.0 * u(rng);

        const auto ci_end = [&](const EpiParams& q, double tau) {
            StepControl ctl;
            ctl.output_step = horizon;
            const Trajectory tr = simulate_si(q, ConstantTau{tau}, horizon, ctl);
            return tr.CI[tr.size() - 1];
        };
        const double base = ci_end(p, tau0);

        EpiParams bump = p;
        bump.I0 *= 1.05;
        CHECK(ci_end(bump, tau0) > base);
        bump = p;
        bump.S0 *= 1.05;
        CHECK(ci_end(bump, tau0) > base);
        bump = p;
        bump.nu /= 1.05;  // longer infectious period
        CHECK(ci_end(bump, tau0) > base);
        CHECK(ci_end(p, tau0 * 1.05) > base);
    }
}

TEST_CASE("halving the tolerance moves trajectories less than the coarse tolerance") {
    const EpiParams p = remark_params();
    StepControl coarse;
    coarse.rtol = 1e-7;
    StepControl fine;
    fine.rtol = 5e-8;
    const Trajectory a = simulate_si(p, ConstantTau{3.3214e-10}, 40.0, coarse);
    const Trajectory b = simulate_si(p, ConstantTau{3.3214e-10}, 40.0, fine);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        CHECK(std::abs(a.CI[i] - b.CI[i]) <= 1e-7 * std::max(1.0, b.CI[i]));
}

TEST_CASE("trajectory CSV export includes all columns") {
    const EpiParams p = remark_params();
    StepControl ctl;
    ctl.output_step = 10.0;
    const Trajectory tr = simulate_si(p, ConstantTau{3.3214e-10}, 20.0, ctl);
    const std::string path = "/tmp/epiwave_traj_test.csv";
    write_trajectory_csv(path, tr);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,S,I,U,CR,CI");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == tr.size());
}

TEST_CASE("profile parameter validation") {
    EpiParams p;
    p.S0 = 1e6;
    p.nu = 0.2;
    p.f = 0.5;
    p.I0 = 10.0;
    CHECK_THROWS_AS(simulate_si(p, ChowellTau{1e-7, 1.5, 0.1, 5.0}, 10.0), ValidationError);
    CHECK_THROWS_AS(simulate_si(p, ExpDecayTau{1e-7, -0.1, 5.0}, 10.0), ValidationError);
    SampledTau bad;
    bad.grid = Eigen::Vector2d(0.0, 1.0);
    bad.values = Eigen::Vector2d(1.0, std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(simulate_si(p, bad, 10.0), ValidationError);
}

TEST_CASE("sampled tau CSV round-trips") {
    SampledTau tau;
    tau.grid = Eigen::Vector4d(0.0, 1.0, 2.0, 3.0);
    tau.values = Eigen::Vector4d(1e-9, 2e-9, 1.5e-9, 1.2e-9);
    const std::string path = "/tmp/epiwave_tau_test.csv";
    write_tau_csv(path, tau);
    const SampledTau back = load_tau_csv(path);
    CHECK(back.grid == tau.grid);
    CHECK(back.values == tau.values);
}
