#pragma once

#include "pcp/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcp {

/// Floor applied wherever an update could drive a factor entry to zero;
/// Poisson rates must stay strictly positive.
inline constexpr double kPositivityFloor = 1e-10;

/// Kruskal (CP) model: P factor matrices A_p of shape N_p x R with strictly
/// positive entries. The represented tensor has entries
/// m_i = sum_r prod_p A_p(i_p, r).
class KruskalModel {
  public:
    explicit KruskalModel(std::vector<Matrix> factors)
        : factors_(std::move(factors)) {
        if (factors_.empty())
            throw std::invalid_argument("KruskalModel: no factors");
        const Eigen::Index r = factors_.front().cols();
        if (r < 1) throw std::invalid_argument("KruskalModel: rank must be >= 1");
        for (std::size_t p = 0; p < factors_.size(); ++p) {
            const Matrix& a = factors_[p];
            if (a.cols() != r)
                throw std::invalid_argument("KruskalModel: factor " + std::to_string(p) +
                                            " rank mismatch");
            if (a.rows() < 1)
                throw std::invalid_argument("KruskalModel: factor " + std::to_string(p) +
                                            " has no rows");
            if (!(a.array() > 0.0).all())
                throw std::invalid_argument("KruskalModel: factor " + std::to_string(p) +
                                            " has a non-positive entry");
        }
    }

    int order() const { return static_cast<int>(factors_.size()); }
    int rank() const { return static_cast<int>(factors_.front().cols()); }

    std::vector<int> dims() const {
        std::vector<int> d(factors_.size());
        for (std::size_t p = 0; p < factors_.size(); ++p)
            d[p] = static_cast<int>(factors_[p].rows());
        return d;
    }

    const Matrix& factor(int p) const { return factors_.at(static_cast<std::size_t>(p)); }
    const std::vector<Matrix>& factors() const { return factors_; }

    /// Replaces one factor matrix (validated).
    void set_factor(int p, Matrix a) {
        const Matrix& old = factor(p);
        if (a.rows() != old.rows() || a.cols() != old.cols())
            throw std::invalid_argument("KruskalModel::set_factor: shape mismatch");
        if (!(a.array() > 0.0).all())
            throw std::invalid_argument("KruskalModel::set_factor: non-positive entry");
        factors_[static_cast<std::size_t>(p)] = std::move(a);
    }

    /// Number of free parameters R * sum_p N_p.
    Eigen::Index theta_size() const {
        Eigen::Index n = 0;
        for (const Matrix& a : factors_) n += a.size();
        return n;
    }

  private:
    std::vector<Matrix> factors_;
};

/// Evaluates the full tensor m_i = sum_r prod_p A_p(i_p, r).
inline DenseTensor full_tensor(const KruskalModel& m) {
    const Matrix kr = khatri_rao(m.factors());
    const Vector v = kr.rowwise().sum();
    DenseTensor t(m.dims());
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = v[static_cast<Eigen::Index>(i)];
    return t;
}

/// theta = [vec(A_1); ...; vec(A_P)] with each vec column-major.
inline Vector pack(const KruskalModel& m) {
    Vector theta(m.theta_size());
    Eigen::Index off = 0;
    for (const Matrix& a : m.factors()) {
        theta.segment(off, a.size()) = Eigen::Map<const Vector>(a.data(), a.size());
        off += a.size();
    }
    return theta;
}

inline KruskalModel unpack(const Vector& theta, const std::vector<int>& dims, int rank) {
    Eigen::Index need = 0;
    for (int n : dims) need += static_cast<Eigen::Index>(n) * rank;
    if (theta.size() != need)
        throw std::invalid_argument("unpack: theta length " + std::to_string(theta.size()) +
                                    " does not equal R * sum(dims) = " + std::to_string(need));
    std::vector<Matrix> factors;
    Eigen::Index off = 0;
    for (int n : dims) {
        factors.emplace_back(Eigen::Map<const Matrix>(theta.data() + off, n, rank));
        off += static_cast<Eigen::Index>(n) * rank;
    }
    return KruskalModel(std::move(factors)); // constructor enforces positivity
}

/// Column weights lambda_p = A_p^T 1.
inline Vector column_weights(const KruskalModel& m, int p) {
    return m.factor(p).colwise().sum().transpose();
}

/// Element-wise product of the column weights over all modes except p.
inline Vector weight_product_except(const KruskalModel& m, int p) {
    Vector w = Vector::Ones(m.rank());
    for (int q = 0; q < m.order(); ++q)
        if (q != p) w = w.cwiseProduct(column_weights(m, q));
    return w;
}

/// Rescales columns so every mode except p has unit column sums, pushing all
/// the component weight into A_p. The represented tensor is unchanged.
inline KruskalModel normalize_absorb_into(const KruskalModel& m, int p) {
    if (p < 0 || p >= m.order())
        throw std::invalid_argument("normalize_absorb_into: mode out of range");
    std::vector<Matrix> factors = m.factors();
    Vector absorbed = Vector::Ones(m.rank());
    for (int q = 0; q < m.order(); ++q) {
        if (q == p) continue;
        const Vector w = column_weights(m, q);
        factors[static_cast<std::size_t>(q)] *= w.cwiseInverse().asDiagonal();
        absorbed = absorbed.cwiseProduct(w);
    }
    factors[static_cast<std::size_t>(p)] *= absorbed.asDiagonal();
    return KruskalModel(std::move(factors));
}

/// Rescales so every mode carries the same column weight w_r^{1/P}, where w_r
/// is the total weight of component r. The represented tensor is unchanged.
inline KruskalModel normalize_equal_split(const KruskalModel& m) {
    Vector total = Vector::Ones(m.rank());
    for (int q = 0; q < m.order(); ++q)
        total = total.cwiseProduct(column_weights(m, q));
    const Vector target =
        total.array().pow(1.0 / static_cast<double>(m.order())).matrix();
    std::vector<Matrix> factors = m.factors();
    for (int q = 0; q < m.order(); ++q) {
        const Vector w = column_weights(m, q);
        factors[static_cast<std::size_t>(q)] *=
            target.cwiseQuotient(w).asDiagonal();
    }
    return KruskalModel(std::move(factors));
}

} // namespace pcp
