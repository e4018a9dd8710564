#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace pcp {

/// Eigenvalues of a symmetric matrix, ascending.
inline Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("symmetric_eigenvalues: eigensolver did not converge");
    return solver.eigenvalues();
}

/// Numerical-rank threshold: largest eigenvalue times sqrt(2^-52).
inline double rank_threshold(const Eigen::VectorXd& eigenvalues) {
    const double lmax = eigenvalues.size() ? eigenvalues.maxCoeff() : 0.0;
    return lmax * std::exp2(-26);
}

inline int count_above(const Eigen::VectorXd& eigenvalues, double threshold) {
    int n = 0;
    for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
        if (eigenvalues[i] > threshold) ++n;
    return n;
}

/// Count of eigenvalues above lambda_max * 2^-26.
inline int numerical_rank_of(const Eigen::MatrixXd& s) {
    const Eigen::VectorXd ev = symmetric_eigenvalues(s);
    return count_above(ev, rank_threshold(ev));
}

} // namespace pcp
