#pragma once

#include <Eigen/Core>

#include "epiwave/errors.hpp"

namespace epiwave {

/// Square matrix with non-negative off-diagonal entries (the linearized
/// flow matrices of multi-compartment epidemic models are of this kind).
class CooperativeMatrix {
public:
    explicit CooperativeMatrix(Eigen::MatrixXd entries);

    const Eigen::MatrixXd& matrix() const { return a_; }
    Eigen::Index n() const { return a_.rows(); }

private:
    Eigen::MatrixXd a_;
};

/// Strong connectivity of the directed graph on the nonzero off-diagonal
/// pattern (two graph traversals).
bool is_irreducible(const CooperativeMatrix& a);

/// Dominant eigen-data of an irreducible cooperative matrix.
struct DominantMode {
    double s = 0.0;            // spectral bound s(A)
    Eigen::VectorXd vR, vL;    // right/left eigenvectors, componentwise > 0
    Eigen::MatrixXd projector; // vR vL^T / <vL, vR>
};

/// Power iteration on A + delta I (delta = 1 + max |diagonal|), which is
/// primitive, so the iteration converges to the Perron direction; the
/// spectral bound is the shifted Rayleigh quotient.
DominantMode dominant_mode(const CooperativeMatrix& a);

struct ExponentialVerdict {
    bool is_single_exp = false;
    double chi2_est = 0.0;  // regression slope of log <y0, x(t)>
    double chi1_est = 0.0;  // <y0, Pi x0>
};

/// Integrates x' = A x and tests whether the observed output
/// <y0, x(t)> e^{-s(A) t} is constant (relative variation < 1e-6 over the
/// horizon): the signature of a trajectory already on the dominant mode.
ExponentialVerdict check_single_exponential(const CooperativeMatrix& a, const Eigen::VectorXd& y0,
                                            const Eigen::VectorXd& x0, double horizon);

/// Linearized flow matrix of the unreported-compartment model:
/// [[tau S0 - nu, tau S0], [nu (1-f), -eta]].
Eigen::MatrixXd siur_matrix(double tau, double S0, double nu, double f, double eta);

} // namespace epiwave
