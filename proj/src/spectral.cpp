#include "epiwave/spectral.hpp"

#include <cmath>
#include <vector>

#include "epiwave/ode.hpp"

namespace epiwave {

CooperativeMatrix::CooperativeMatrix(Eigen::MatrixXd entries) : a_(std::move(entries)) {
    if (a_.rows() != a_.cols() || a_.rows() < 1)
        throw ValidationError("cooperative matrix must be square and non-empty");
    for (Eigen::Index i = 0; i < a_.rows(); ++i)
        for (Eigen::Index j = 0; j < a_.cols(); ++j)
            if (i != j && a_(i, j) < 0.0)
                throw ValidationError("off-diagonal entry (" + std::to_string(i) + "," +
                                      std::to_string(j) + ") is negative");
}

namespace {

// Reachability from node 0 along edges i -> j present when M(i,j) > 0.
std::vector<bool> reachable(const Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const Eigen::Index i = stack.back();
        stack.pop_back();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j && m(i, j) > 0.0 && !seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = true;
                stack.push_back(j);
            }
        }
    }
    return seen;
}

bool all(const std::vector<bool>& v) {
    for (bool b : v)
        if (!b) return false;
    return true;
}

} // namespace

bool is_irreducible(const CooperativeMatrix& a) {
    if (a.n() == 1) return true;
    return all(reachable(a.matrix())) && all(reachable(a.matrix().transpose()));
}

namespace {

Eigen::VectorXd power_iterate(const Eigen::MatrixXd& b) {
    const Eigen::Index n = b.rows();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / static_cast<double>(n);
    for (int it = 0; it < 100000; ++it) {
        Eigen::VectorXd w = b * v;
        const double norm = w.template lpNorm<1>();
        if (!(norm > 0.0)) throw NumericalError("power iteration collapsed to zero");
        w /= norm;
        const double diff = (w - v).template lpNorm<Eigen::Infinity>();
        v = std::move(w);
        if (diff < 1e-12) return v;
    }
    throw NumericalError("power iteration did not converge within 1e5 iterations "
                         "(subdominant eigenvalue too close in modulus)");
}

} // namespace

DominantMode dominant_mode(const CooperativeMatrix& a) {
    if (!is_irreducible(a)) throw ValidationError("dominant mode requires an irreducible matrix");
    const Eigen::MatrixXd& A = a.matrix();
    const double delta = 1.0 + A.diagonal().cwiseAbs().maxCoeff();
    const Eigen::MatrixXd B =
        A + delta * Eigen::MatrixXd::Identity(A.rows(), A.cols());

    DominantMode out;
    out.vR = power_iterate(B);
    out.vL = power_iterate(B.transpose());
    out.s = out.vR.dot(A * out.vR) / out.vR.squaredNorm();
    out.projector = (out.vR * out.vL.transpose()) / out.vL.dot(out.vR);
    return out;
}

ExponentialVerdict check_single_exponential(const CooperativeMatrix& a, const Eigen::VectorXd& y0,
                                            const Eigen::VectorXd& x0, double horizon) {
    if (y0.size() != a.n() || x0.size() != a.n())
        throw ValidationError("vector dimensions do not match the matrix");
    if ((y0.array() <= 0.0).any() || (x0.array() <= 0.0).any())
        throw ValidationError("weight and initial vectors must be componentwise positive");
    if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");

    const DominantMode mode = dominant_mode(a);
    const Eigen::MatrixXd& A = a.matrix();

    const OdeRhs rhs = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = A * y; };
    OdeOptions opt;
    opt.rtol = 1e-11;
    opt.atol = 1e-13 * x0.template lpNorm<Eigen::Infinity>();
    opt.h_max = std::min(0.25, horizon / 16.0);
    const DenseSolution sol = integrate(rhs, x0, 0.0, horizon, opt);

    const int samples = 65;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum_t = 0.0, sum_l = 0.0, sum_tt = 0.0, sum_tl = 0.0;
    for (int k = 0; k < samples; ++k) {
        const double t = horizon * static_cast<double>(k) / (samples - 1);
        const double g = y0.dot(sol.eval(t));
        if (!(g > 0.0)) throw NumericalError("output functional became non-positive");
        const double discounted = g * std::exp(-mode.s * t);
        lo = std::min(lo, discounted);
        hi = std::max(hi, discounted);
        const double l = std::log(g);
        sum_t += t;
        sum_l += l;
        sum_tt += t * t;
        sum_tl += t * l;
    }
    ExponentialVerdict v;
    v.is_single_exp = (hi - lo) <= 1e-6 * std::max(std::abs(hi), std::abs(lo));
    const double n = samples;
    v.chi2_est = (n * sum_tl - sum_t * sum_l) / (n * sum_tt - sum_t * sum_t);
    v.chi1_est = y0.dot(mode.projector * x0);
    return v;
}

Eigen::MatrixXd siur_matrix(double tau, double S0, double nu, double f, double eta) {
    Eigen::MatrixXd A(2, 2);
    A << tau * S0 - nu, tau * S0, nu * (1.0 - f), -eta;
    return A;
}

} // namespace epiwave
