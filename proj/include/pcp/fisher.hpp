#pragma once

#include "pcp/eig.hpp"
#include "pcp/kruskal.hpp"
#include "pcp/tensor.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcp {

enum class FimKind { observed, expected };

/// Dense symmetric Fisher information matrix of order R * sum_q N_q, stored
/// with mode-major blocks: the (k,l) block is itself R x R in sub-blocks of
/// size N_k x N_l, matching the theta ordering [vec(A_1); ...; vec(A_P)].
struct FisherMatrix {
    Matrix m;
    FimKind kind = FimKind::expected;
    std::vector<int> dims;
    int rank = 0;

    Eigen::Index mode_offset(int k) const {
        Eigen::Index off = 0;
        for (int q = 0; q < k; ++q) off += static_cast<Eigen::Index>(rank) * dims[static_cast<std::size_t>(q)];
        return off;
    }

    /// View of the (k,l,r,s) sub-block of size N_k x N_l.
    Eigen::Block<const Matrix> block(int k, int l, int r, int s) const {
        const Eigen::Index nk = dims[static_cast<std::size_t>(k)];
        const Eigen::Index nl = dims[static_cast<std::size_t>(l)];
        return m.block(mode_offset(k) + r * nk, mode_offset(l) + s * nl, nk, nl);
    }
};

class FimOrderError : public std::runtime_error {
  public:
    FimOrderError(Eigen::Index order, Eigen::Index cap)
        : std::runtime_error("fim: order " + std::to_string(order) + " exceeds cap " +
                             std::to_string(cap) + " (dense storage would need about " +
                             std::to_string(order * order * 8 / (1 << 20)) + " MiB)"),
          required_bytes(static_cast<std::uint64_t>(order) * static_cast<std::uint64_t>(order) * 8) {}
    std::uint64_t required_bytes;
};

inline constexpr Eigen::Index kDefaultFimOrderCap = 4000;

namespace detail {

inline std::vector<Vector> paired_columns(const KruskalModel& m, int r, int s) {
    std::vector<Vector> v;
    v.reserve(static_cast<std::size_t>(m.order()));
    for (int q = 0; q < m.order(); ++q)
        v.push_back(m.factor(q).col(r).cwiseProduct(m.factor(q).col(s)));
    return v;
}

} // namespace detail

/// D_{k,l}^{r,s}(Y) block: diagonal of the all-but-k contraction when k = l,
/// and the rank-one-masked all-but-(k,l) contraction when k != l. For k > l
/// the transpose rule D_{k,l} = D_{l,k}^T applies at the full-block level,
/// which maps the (r,s) sub-block to the transposed (s,r) one.
inline Matrix d_block(const DenseTensor& y, const KruskalModel& m,
                      int k, int l, int r, int s) {
    const int order = m.order();
    if (k < 0 || k >= order || l < 0 || l >= order || r < 0 || r >= m.rank() ||
        s < 0 || s >= m.rank())
        throw std::invalid_argument("d_block: index out of range");
    if (k == l) {
        const Vector d = contract_all_but_one(y, detail::paired_columns(m, r, s), k);
        return Matrix(d.asDiagonal());
    }
    if (k > l) return d_block(y, m, l, k, s, r).transpose();
    const Matrix envelope = m.factor(k).col(s) * m.factor(l).col(r).transpose();
    if (order == 2) return envelope.cwiseProduct(matricize(y, k));
    return envelope.cwiseProduct(
        contract_all_but_two(y, detail::paired_columns(m, r, s), k, l));
}

/// F_{k,l}^{r,s} block of the observed information: zero when k = l or
/// r != s; otherwise the expectation-centered residual term.
inline Matrix f_block(const DenseTensor& x, const KruskalModel& m,
                      int k, int l, int r, int s) {
    const int order = m.order();
    if (k < 0 || k >= order || l < 0 || l >= order || r < 0 || r >= m.rank() ||
        s < 0 || s >= m.rank())
        throw std::invalid_argument("f_block: index out of range");
    const Eigen::Index nk = m.factor(k).rows();
    const Eigen::Index nl = m.factor(l).rows();
    if (k == l || r != s) return Matrix::Zero(nk, nl);
    if (k > l) return f_block(x, m, l, k, s, r).transpose();

    const DenseTensor ratio = hadamard_quotient(x, full_tensor(m));
    if (order == 2)
        return Matrix::Ones(nk, nl) - matricize(ratio, k);
    std::vector<Vector> cols;
    cols.reserve(static_cast<std::size_t>(order));
    double lam = 1.0;
    for (int q = 0; q < order; ++q) {
        cols.push_back(m.factor(q).col(r));
        if (q != k && q != l) lam *= m.factor(q).col(r).sum();
    }
    return lam * Matrix::Ones(nk, nl) - contract_all_but_two(ratio, cols, k, l);
}

namespace detail {

/// Assembles {{D(Y) (+F)}} into a dense symmetric matrix. The diagonal (k,k)
/// blocks use the batched form Y_(k) C, whose column (r,s) pairs the
/// Khatri-Rao columns; off-diagonal blocks use the per-block formulas.
inline Matrix assemble_fim(const KruskalModel& m, const DenseTensor& y,
                           const DenseTensor* x_over_m) {
    const int order = m.order();
    const int rank = m.rank();
    const std::vector<int> dims = m.dims();
    const Eigen::Index n = static_cast<Eigen::Index>(rank) *
                           std::accumulate(dims.begin(), dims.end(), Eigen::Index(0));
    Matrix out = Matrix::Zero(n, n);
    std::vector<Eigen::Index> offs(static_cast<std::size_t>(order) + 1, 0);
    for (int q = 0; q < order; ++q)
        offs[static_cast<std::size_t>(q) + 1] =
            offs[static_cast<std::size_t>(q)] + static_cast<Eigen::Index>(rank) * dims[static_cast<std::size_t>(q)];

    for (int k = 0; k < order; ++k) {
        // batched diagonal: column (r,s) of C is B(:,r) * B(:,s)
        const Matrix b = khatri_rao(m.factors(), k);
        Matrix c(b.rows(), static_cast<Eigen::Index>(rank) * rank);
        for (int r = 0; r < rank; ++r)
            for (int s = 0; s < rank; ++s)
                c.col(static_cast<Eigen::Index>(r) * rank + s) =
                    b.col(r).cwiseProduct(b.col(s));
        const Matrix diags = matricize(y, k) * c; // N_k x R^2
        const Eigen::Index nk = dims[static_cast<std::size_t>(k)];
        for (int r = 0; r < rank; ++r)
            for (int s = 0; s < rank; ++s)
                out.block(offs[static_cast<std::size_t>(k)] + r * nk,
                          offs[static_cast<std::size_t>(k)] + s * nk, nk, nk) =
                    Matrix(diags.col(static_cast<Eigen::Index>(r) * rank + s).asDiagonal());

        for (int l = k + 1; l < order; ++l) {
            const Eigen::Index nl = dims[static_cast<std::size_t>(l)];
            for (int r = 0; r < rank; ++r) {
                for (int s = 0; s < rank; ++s) {
                    Matrix blk = d_block(y, m, k, l, r, s);
                    if (x_over_m != nullptr && r == s) {
                        if (order == 2) {
                            blk += Matrix::Ones(nk, nl) - matricize(*x_over_m, k);
                        } else {
                            std::vector<Vector> cols;
                            double lam = 1.0;
                            for (int q = 0; q < order; ++q) {
                                cols.push_back(m.factor(q).col(r));
                                if (q != k && q != l) lam *= m.factor(q).col(r).sum();
                            }
                            blk += lam * Matrix::Ones(nk, nl) -
                                   contract_all_but_two(*x_over_m, cols, k, l);
                        }
                    }
                    out.block(offs[static_cast<std::size_t>(k)] + r * nk,
                              offs[static_cast<std::size_t>(l)] + s * nl, nk, nl) = blk;
                    out.block(offs[static_cast<std::size_t>(l)] + s * nl,
                              offs[static_cast<std::size_t>(k)] + r * nk, nl, nk) =
                        blk.transpose();
                }
            }
        }
    }
    // kill round-off asymmetry
    out = 0.5 * (out + out.transpose()).eval();
    return out;
}

} // namespace detail

/// Expected Fisher information {{D(M^{*-1})}}.
inline FisherMatrix fim(const KruskalModel& m,
                        Eigen::Index order_cap = kDefaultFimOrderCap) {
    const std::vector<int> dims = m.dims();
    const Eigen::Index n = static_cast<Eigen::Index>(m.rank()) *
                           std::accumulate(dims.begin(), dims.end(), Eigen::Index(0));
    if (n > order_cap) throw FimOrderError(n, order_cap);
    const DenseTensor y = hadamard_power(full_tensor(m), -1.0);
    return {detail::assemble_fim(m, y, nullptr), FimKind::expected, dims, m.rank()};
}

/// Observed Fisher information {{D(X ./ M^{*2}) + F}}.
inline FisherMatrix fim(const KruskalModel& m, const DenseTensor& x,
                        Eigen::Index order_cap = kDefaultFimOrderCap) {
    if (x.dims() != m.dims())
        throw std::invalid_argument("fim: data/model shape mismatch");
    const std::vector<int> dims = m.dims();
    const Eigen::Index n = static_cast<Eigen::Index>(m.rank()) *
                           std::accumulate(dims.begin(), dims.end(), Eigen::Index(0));
    if (n > order_cap) throw FimOrderError(n, order_cap);
    const DenseTensor mean = full_tensor(m);
    const DenseTensor y = hadamard_quotient(x, hadamard_product(mean, mean));
    const DenseTensor ratio = hadamard_quotient(x, mean);
    return {detail::assemble_fim(m, y, &ratio), FimKind::observed, dims, m.rank()};
}

/// Numerical rank (eigenvalues above lambda_max * 2^-26) against the
/// conjectured rank min(R sum(N_q) - L, prod(N_q)), where L is (min{R,N1,N2})^2
/// for matrices and R(P-1) for higher orders.
struct RankVerdict {
    Eigen::Index order = 0;
    int numerical_rank = 0;
    long long conjectured_rank = 0;
    long long l_value = 0;
    double lambda_max = 0.0;
    double threshold = 0.0;
    Vector eigenvalues; // ascending
};

inline long long conjecture_l_value(const std::vector<int>& dims, int rank) {
    if (dims.size() == 2) {
        const long long mn = std::min<long long>(rank, std::min(dims[0], dims[1]));
        return mn * mn;
    }
    return static_cast<long long>(rank) * (static_cast<long long>(dims.size()) - 1);
}

inline long long conjectured_rank(const std::vector<int>& dims, int rank) {
    long long sum = 0, prod = 1;
    for (int d : dims) {
        sum += d;
        prod *= d;
    }
    return std::min(static_cast<long long>(rank) * sum - conjecture_l_value(dims, rank), prod);
}

inline RankVerdict numerical_rank(const FisherMatrix& f) {
    RankVerdict v;
    v.order = f.m.rows();
    v.eigenvalues = symmetric_eigenvalues(f.m);
    v.lambda_max = v.eigenvalues.size() ? v.eigenvalues.maxCoeff() : 0.0;
    v.threshold = rank_threshold(v.eigenvalues);
    v.numerical_rank = count_above(v.eigenvalues, v.threshold);
    v.l_value = conjecture_l_value(f.dims, f.rank);
    v.conjectured_rank = conjectured_rank(f.dims, f.rank);
    return v;
}

} // namespace pcp
