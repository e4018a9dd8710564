#pragma once

#include "pcp/kruskal.hpp"
#include "pcp/tensor.hpp"

#include "oracles.hpp"

#include <random>
#include <vector>

namespace testutil {

inline pcp::Matrix random_matrix(int rows, int cols, std::mt19937_64& gen,
                                 double lo = 0.3, double hi = 1.5) {
    std::uniform_real_distribution<double> unif(lo, hi);
    pcp::Matrix a(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) a(i, j) = unif(gen);
    return a;
}

inline pcp::KruskalModel random_model(const std::vector<int>& dims, int rank,
                                      std::mt19937_64& gen, double lo = 0.3,
                                      double hi = 1.5) {
    std::vector<pcp::Matrix> factors;
    for (int n : dims) factors.push_back(random_matrix(n, rank, gen, lo, hi));
    return pcp::KruskalModel(std::move(factors));
}

inline pcp::DenseTensor random_tensor(const std::vector<int>& dims, std::mt19937_64& gen,
                                      double lo = 0.1, double hi = 2.0) {
    pcp::DenseTensor t(dims);
    std::uniform_real_distribution<double> unif(lo, hi);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = unif(gen);
    return t;
}

/// Count tensor with strictly positive integer entries.
inline pcp::DenseTensor random_counts(const std::vector<int>& dims, std::mt19937_64& gen,
                                      int lo = 1, int hi = 9) {
    pcp::DenseTensor t(dims);
    std::uniform_int_distribution<int> unif(lo, hi);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(unif(gen));
    return t;
}

inline oracle::Factors to_oracle(const pcp::KruskalModel& m) {
    oracle::Factors f;
    f.dims = m.dims();
    f.rank = m.rank();
    for (const pcp::Matrix& a : m.factors())
        f.a.emplace_back(a.data(), a.data() + a.size());
    return f;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1e-300, std::abs(want));
}

inline double max_abs_diff(const pcp::Matrix& a, const std::vector<double>& col_major) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            m = std::max(m, std::abs(a(i, j) -
                                     col_major[static_cast<std::size_t>(j * a.rows() + i)]));
    return m;
}

} // namespace testutil
