#pragma once

#include "pcp/fisher.hpp"
#include "pcp/kruskal.hpp"
#include "pcp/likelihood.hpp"
#include "pcp/rng.hpp"
#include "pcp/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pcp {

/// Synthetic-model specification: cubical N x ... x N (P modes), rank R,
/// mean entry exactly S.
struct GenSpec {
    int n = 10;
    int p = 3;
    int r = 2;
    double s = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 1 || p < 2 || r < 1) throw std::invalid_argument("GenSpec: N, P, R must be positive (P >= 2)");
        if (!(s > 0.0)) throw std::invalid_argument("GenSpec: S must be > 0");
    }
};

namespace detail {

/// Uniform draw from the unit simplex with minimum entry `floor`:
/// v = floor + (1 - n*floor) u, u ~ Dirichlet(1,...,1). Exact floor
/// satisfaction without rejection.
inline Vector simplex_with_floor(int n, double floor, CounterRng& rng) {
    Vector e(n);
    for (int i = 0; i < n; ++i) e[i] = -std::log(rng.uniform());
    e /= e.sum();
    return (Vector::Constant(n, floor) + (1.0 - n * floor) * e).eval();
}

} // namespace detail

/// Generates factor matrices per the simplex protocol: each column drawn
/// uniformly from the simplex with minimum entry 1/(100N), then reweighted by
/// lambda_r = (S N^P / sum_r r) * r spread as lambda_r^{1/P} per mode, so the
/// tensor's mean entry is exactly S and component r carries weight
/// proportional to r.
inline KruskalModel generate_model(const GenSpec& spec) {
    spec.validate();
    const double floor = 1.0 / (100.0 * spec.n);
    CounterRng rng(derive_seed(spec.seed, 0x6d6f64656cULL));
    std::vector<Matrix> factors(static_cast<std::size_t>(spec.p));
    for (int p = 0; p < spec.p; ++p) {
        Matrix a(spec.n, spec.r);
        for (int r = 0; r < spec.r; ++r)
            a.col(r) = detail::simplex_with_floor(spec.n, floor, rng);
        factors[static_cast<std::size_t>(p)] = std::move(a);
    }
    const double total_r = static_cast<double>(spec.r) * (spec.r + 1) / 2.0;
    const double base = spec.s * std::pow(static_cast<double>(spec.n), spec.p) / total_r;
    for (int p = 0; p < spec.p; ++p)
        for (int r = 0; r < spec.r; ++r)
            factors[static_cast<std::size_t>(p)].col(r) *=
                std::pow(base * (r + 1), 1.0 / spec.p);
    return KruskalModel(std::move(factors));
}

/// Independent Poisson draws per cell. Each cell uses its own substream
/// derived from (seed, flat index), so draws are deterministic and
/// order-independent.
inline DenseTensor sample_poisson(const DenseTensor& mean, std::uint64_t seed) {
    DenseTensor x(mean.dims());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        CounterRng rng(derive_seed(seed, i));
        x[i] = static_cast<double>(poisson_draw(mean[i], rng));
    }
    return x;
}

/// Monte Carlo estimate of the Fisher information from the empirical score
/// covariance over K draws, with the relative Frobenius error against the
/// analytic expected information.
struct McFimEstimate {
    int k = 0;
    Vector mu;      // mean score
    Matrix i_hat;   // centered second moment of the scores
    double rel_error = 0.0;
};

inline McFimEstimate mc_fim(const KruskalModel& model, int k, std::uint64_t seed,
                            Eigen::Index order_cap = kDefaultFimOrderCap) {
    if (k < 2) throw std::invalid_argument("mc_fim: K must be >= 2");
    const DenseTensor mean = full_tensor(model);
    const Eigen::Index n = model.theta_size();
    Matrix scores(n, k);
    for (int j = 0; j < k; ++j) {
        const DenseTensor x = sample_poisson(mean, derive_seed(seed, static_cast<std::uint64_t>(j)));
        scores.col(j) = score(x, model);
    }
    McFimEstimate est;
    est.k = k;
    est.mu = scores.rowwise().mean();
    const Matrix centered = scores.colwise() - est.mu;
    est.i_hat = centered * centered.transpose() / static_cast<double>(k);
    const Matrix analytic = fim(model, order_cap).m;
    est.rel_error = (analytic - est.i_hat).norm() / analytic.norm();
    return est;
}

} // namespace pcp
