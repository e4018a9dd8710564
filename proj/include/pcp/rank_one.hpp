#pragma once

#include "pcp/eig.hpp"
#include "pcp/kruskal.hpp"
#include "pcp/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcp {

/// Rank-one model: one positive factor vector per mode. lambda_p is the sum
/// of a_p and lambda the product of the lambda_p.
class RankOneModel {
  public:
    explicit RankOneModel(std::vector<Vector> factors)
        : factors_(std::move(factors)) {
        if (factors_.empty())
            throw std::invalid_argument("RankOneModel: no factors");
        for (const Vector& a : factors_)
            if (a.size() < 1 || !(a.array() > 0.0).all())
                throw std::invalid_argument("RankOneModel: factors must be positive");
    }

    int order() const { return static_cast<int>(factors_.size()); }
    std::vector<int> dims() const {
        std::vector<int> d(factors_.size());
        for (std::size_t p = 0; p < factors_.size(); ++p)
            d[p] = static_cast<int>(factors_[p].size());
        return d;
    }
    const Vector& factor(int p) const { return factors_.at(static_cast<std::size_t>(p)); }

    double lambda_p(int p) const { return factor(p).sum(); }
    double lambda() const {
        double l = 1.0;
        for (const Vector& a : factors_) l *= a.sum();
        return l;
    }

    Eigen::Index theta_size() const {
        Eigen::Index n = 0;
        for (const Vector& a : factors_) n += a.size();
        return n;
    }

    Vector theta() const {
        Vector t(theta_size());
        Eigen::Index off = 0;
        for (const Vector& a : factors_) {
            t.segment(off, a.size()) = a;
            off += a.size();
        }
        return t;
    }

    KruskalModel as_kruskal() const {
        std::vector<Matrix> f;
        for (const Vector& a : factors_) f.push_back(a);
        return KruskalModel(std::move(f));
    }

  private:
    std::vector<Vector> factors_;
};

/// Mode-p marginal x_p = X_(p) 1.
inline Vector mode_marginal(const DenseTensor& x, int p) {
    return matricize(x, p).rowwise().sum();
}

struct RankOneMle {
    RankOneModel model;  // simplex form: all weight on a_1, other modes sum to 1
    DenseTensor mean;    // the unique rank-one MLE tensor
};

/// Closed-form rank-one MLE. Requires every mode marginal strictly positive.
/// Returns the simplex-parameterized estimate a_1 = x_1, a_p = x_p / sum(x)
/// and the mean tensor sum(x)^{-(P-1)} x_1 o ... o x_P.
inline RankOneMle mle_rank1(const DenseTensor& x) {
    const int order = x.order();
    std::vector<Vector> marginals;
    for (int p = 0; p < order; ++p) {
        Vector m = mode_marginal(x, p);
        for (Eigen::Index i = 0; i < m.size(); ++i)
            if (m[i] <= 0.0)
                throw std::domain_error("mle_rank1: zero marginal at mode " +
                                        std::to_string(p) + ", index " + std::to_string(i));
        marginals.push_back(std::move(m));
    }
    const double total = x.sum();

    std::vector<Vector> factors;
    factors.push_back(marginals[0]);
    for (int p = 1; p < order; ++p) factors.push_back(marginals[static_cast<std::size_t>(p)] / total);
    RankOneModel model(std::move(factors));

    // mean = total^{-(P-1)} x_1 o ... o x_P, assembled in natural order
    DenseTensor mean(x.dims());
    IndexOdometer odo(x.dims());
    std::size_t n = 0;
    const double scale = std::pow(total, -static_cast<double>(order - 1));
    do {
        const auto& idx = odo.idx();
        double v = scale;
        for (int p = 0; p < order; ++p)
            v *= marginals[static_cast<std::size_t>(p)][idx[static_cast<std::size_t>(p)]];
        mean[n++] = v;
    } while (odo.advance());
    return {std::move(model), std::move(mean)};
}

/// Rank-one loglikelihood sum_p x_p^T log a_p - lambda - sum_i log(x_i!).
inline double rank1_loglik(const DenseTensor& x, const RankOneModel& m) {
    if (x.dims() != m.dims())
        throw std::invalid_argument("rank1_loglik: shape mismatch");
    double ll = -m.lambda();
    for (int p = 0; p < m.order(); ++p)
        ll += mode_marginal(x, p).dot(m.factor(p).array().log().matrix());
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] != 0.0) ll -= std::lgamma(x[i] + 1.0);
    return ll;
}

/// Gradient blocks x_p ./ a_p - (prod_{q != p} lambda_q) 1.
inline Vector rank1_gradient(const DenseTensor& x, const RankOneModel& m) {
    if (x.dims() != m.dims())
        throw std::invalid_argument("rank1_gradient: shape mismatch");
    Vector g(m.theta_size());
    Eigen::Index off = 0;
    const double lambda = m.lambda();
    for (int p = 0; p < m.order(); ++p) {
        const Vector xp = mode_marginal(x, p);
        const double w = lambda / m.lambda_p(p);
        g.segment(off, xp.size()) =
            xp.cwiseQuotient(m.factor(p)).array() - w;
        off += xp.size();
    }
    return g;
}

/// Loglikelihood Hessian: diagonal blocks -diag(x_p ./ a_p^2), off-diagonal
/// blocks -lambda / (lambda_p lambda_q) * ones.
inline Matrix rank1_hessian(const DenseTensor& x, const RankOneModel& m) {
    if (x.dims() != m.dims())
        throw std::invalid_argument("rank1_hessian: shape mismatch");
    const Eigen::Index n = m.theta_size();
    Matrix h = Matrix::Zero(n, n);
    const double lambda = m.lambda();
    std::vector<Eigen::Index> offs(static_cast<std::size_t>(m.order()) + 1, 0);
    for (int p = 0; p < m.order(); ++p)
        offs[static_cast<std::size_t>(p) + 1] = offs[static_cast<std::size_t>(p)] + m.factor(p).size();
    for (int p = 0; p < m.order(); ++p) {
        const Vector xp = mode_marginal(x, p);
        h.block(offs[static_cast<std::size_t>(p)], offs[static_cast<std::size_t>(p)],
                xp.size(), xp.size()) =
            (-xp.cwiseQuotient(m.factor(p).cwiseAbs2())).asDiagonal();
        for (int q = 0; q < m.order(); ++q) {
            if (q == p) continue;
            h.block(offs[static_cast<std::size_t>(p)], offs[static_cast<std::size_t>(q)],
                    m.factor(p).size(), m.factor(q).size())
                .setConstant(-lambda / (m.lambda_p(p) * m.lambda_p(q)));
        }
    }
    return h;
}

/// Observed rank-one Fisher information (negative Hessian at the data).
inline Matrix rank1_fim_observed(const RankOneModel& m, const DenseTensor& x) {
    return -rank1_hessian(x, m);
}

/// Expected rank-one Fisher information: diagonal blocks
/// (lambda / lambda_p) diag(a_p)^{-1}, off-diagonal lambda/(lambda_p lambda_q) ones.
inline Matrix rank1_fim_expected(const RankOneModel& m) {
    const Eigen::Index n = m.theta_size();
    Matrix f = Matrix::Zero(n, n);
    const double lambda = m.lambda();
    std::vector<Eigen::Index> offs(static_cast<std::size_t>(m.order()) + 1, 0);
    for (int p = 0; p < m.order(); ++p)
        offs[static_cast<std::size_t>(p) + 1] = offs[static_cast<std::size_t>(p)] + m.factor(p).size();
    for (int p = 0; p < m.order(); ++p) {
        f.block(offs[static_cast<std::size_t>(p)], offs[static_cast<std::size_t>(p)],
                m.factor(p).size(), m.factor(p).size()) =
            (lambda / m.lambda_p(p) * m.factor(p).cwiseInverse()).asDiagonal();
        for (int q = 0; q < m.order(); ++q) {
            if (q == p) continue;
            f.block(offs[static_cast<std::size_t>(p)], offs[static_cast<std::size_t>(q)],
                    m.factor(p).size(), m.factor(q).size())
                .setConstant(lambda / (m.lambda_p(p) * m.lambda_p(q)));
        }
    }
    return f;
}

/// Congruence transform of a Fisher matrix under a positive diagonal
/// reparameterization: Gamma F Gamma^T. Rank is preserved.
inline Matrix rescale_fim(const Matrix& fim, const Vector& gamma_diag) {
    if (gamma_diag.size() != fim.rows() || fim.rows() != fim.cols())
        throw std::invalid_argument("rescale_fim: size mismatch");
    if (!(gamma_diag.array() > 0.0).all())
        throw std::invalid_argument("rescale_fim: Gamma must be positive");
    return gamma_diag.asDiagonal() * fim * gamma_diag.asDiagonal();
}

/// The block-diagonal scaling with p-th block lambda^{1/P} / lambda_p * I that
/// maps theta to its equal-weight parameterization.
inline Vector equal_split_gamma(const RankOneModel& m) {
    Vector g(m.theta_size());
    const double root = std::pow(m.lambda(), 1.0 / static_cast<double>(m.order()));
    Eigen::Index off = 0;
    for (int p = 0; p < m.order(); ++p) {
        g.segment(off, m.factor(p).size()).setConstant(root / m.lambda_p(p));
        off += m.factor(p).size();
    }
    return g;
}

/// Identifiability diagnostics for the rank-one expected Fisher matrix:
/// the reduced nonsingular block I_F, the nullspace basis H, the orthogonal
/// projector onto the range, and the spectral rank check.
struct IdentifiabilityReport {
    int r = 0;                       // sum(N_p) - P + 1
    int numerical_rank = 0;          // of the full expected FIM
    Matrix fim;                      // full expected FIM, original ordering
    Matrix i_f;                      // r x r reduced information
    Matrix nullspace_basis;          // (r + P - 1) x (P - 1), original ordering
    Matrix projector;                // onto the range of the FIM
    double schur_residual = 0.0;     // ||I_N - I_FN I_F^{-1} I_FN^T||_F / ||I_N||_F
    double nullspace_residual = 0.0; // max_j ||FIM h_j|| / ||FIM||_F
};

/// Builds the Thm-5 partition by removing one entry of each factor except the
/// kept mode (defaults: keep mode 0, drop entry 0 of the others), verifies the
/// Schur complement vanishes, and assembles H and the projector.
inline IdentifiabilityReport identifiability(const RankOneModel& m,
                                             int keep_mode = 0, int drop_entry = 0) {
    const int order = m.order();
    if (keep_mode < 0 || keep_mode >= order)
        throw std::invalid_argument("identifiability: keep_mode out of range");
    for (int p = 0; p < order; ++p)
        if (p != keep_mode && (drop_entry < 0 || drop_entry >= m.factor(p).size()))
            throw std::invalid_argument("identifiability: drop_entry out of range");

    IdentifiabilityReport rep;
    rep.fim = rank1_fim_expected(m);
    const Eigen::Index n = rep.fim.rows();
    rep.r = static_cast<int>(n) - (order - 1);

    // permutation: kept coordinates first, dropped coordinates last
    std::vector<Eigen::Index> kept, dropped;
    Eigen::Index off = 0;
    for (int p = 0; p < order; ++p) {
        for (Eigen::Index i = 0; i < m.factor(p).size(); ++i) {
            if (p != keep_mode && i == drop_entry) dropped.push_back(off + i);
            else kept.push_back(off + i);
        }
        off += m.factor(p).size();
    }
    std::vector<Eigen::Index> perm = kept;
    perm.insert(perm.end(), dropped.begin(), dropped.end());

    Matrix pf(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) pf(i, j) = rep.fim(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);

    const Eigen::Index r = rep.r;
    const Eigen::Index d = n - r;
    rep.i_f = pf.topLeftCorner(r, r);
    const Matrix i_fn = pf.bottomLeftCorner(d, r);
    const Matrix i_n = pf.bottomRightCorner(d, d);

    Eigen::LLT<Matrix> llt(rep.i_f);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("identifiability: I_F is not positive definite");
    const Matrix schur = i_n - i_fn * llt.solve(i_fn.transpose());
    rep.schur_residual = schur.norm() / i_n.norm();

    // H = [-I_F^{-1} I_FN^T ; I_{P-1}] in permuted coordinates, rows restored
    // to the original theta ordering
    Matrix h_perm(n, d);
    h_perm.topRows(r) = -llt.solve(i_fn.transpose());
    h_perm.bottomRows(d) = Matrix::Identity(d, d);
    rep.nullspace_basis =
        Matrix::Zero(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        rep.nullspace_basis.row(perm[static_cast<std::size_t>(i)]) = h_perm.row(i);

    const Matrix& h = rep.nullspace_basis;
    rep.nullspace_residual =
        (rep.fim * h).colwise().norm().maxCoeff() / rep.fim.norm();

    Eigen::LLT<Matrix> hth(Matrix(h.transpose() * h));
    if (hth.info() != Eigen::Success)
        throw std::runtime_error("identifiability: H^T H is not positive definite");
    rep.projector = Matrix::Identity(n, n) - h * hth.solve(h.transpose());

    rep.numerical_rank = numerical_rank_of(rep.fim);
    return rep;
}

} // namespace pcp
