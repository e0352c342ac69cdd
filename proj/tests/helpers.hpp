#pragma once

#include <cstdlib>
#include <functional>
#include <string>

#include "epiwave/epidemic.hpp"
#include "epiwave/pheno.hpp"
#include "epiwave/smooth.hpp"

namespace epiwave::testing {

inline std::string data_dir() {
    const char* env = std::getenv("EPIWAVE_DATA_DIR");
    return env ? env : "data";
}

/// Smoothed view of a simulated trajectory with exact analytic derivative
/// channels: CR' = nu f I and CR'' = nu f (tau S I - nu I). Used to test
/// reconstruction formulas independently of any data smoother.
inline SmoothedSeries smoothed_from_sim(const Trajectory& tr, const EpiParams& p,
                                        const std::function<double(double)>& tau) {
    SmoothedSeries out;
    out.t0 = tr.t0;
    out.step = tr.step;
    const Eigen::Index n = tr.size();
    out.value.resize(n);
    out.d1.resize(n);
    out.d2.resize(n);
    out.d3.setZero(n);
    const double nf = p.nu * p.f;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = tr.time(i);
        out.value[i] = tr.CR[i];
        out.d1[i] = nf * tr.I[i];
        out.d2[i] = nf * (tau(t) * tr.S[i] * tr.I[i] - p.nu * tr.I[i]);
    }
    out.monotone = true;
    return out;
}

/// Smoothed view of a growth-curve model via its analytic derivatives.
inline SmoothedSeries smoothed_from_bv(const BVModel& m, double t0, Eigen::Index n, double step) {
    SmoothedSeries out;
    out.t0 = t0;
    out.step = step;
    out.value.resize(n);
    out.d1.resize(n);
    out.d2.resize(n);
    out.d3.setZero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = t0 + step * static_cast<double>(i);
        out.value[i] = m.value(t);
        out.d1[i] = m.deriv(t);
        out.d2[i] = m.deriv2(t);
    }
    out.monotone = true;
    return out;
}

} // namespace epiwave::testing
