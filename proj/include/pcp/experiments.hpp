#pragma once

#include "pcp/fisher.hpp"
#include "pcp/montecarlo.hpp"
#include "pcp/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace pcp {

/// Long-format experiment record: one metric value per row.
struct ExperimentRow {
    std::string experiment;
    int p = 0;
    int n = 0;
    int r = 0;
    double s = 0.0;
    int k = 0; // Monte Carlo sample count; 0 where not applicable
    int rep = 0;
    std::string metric;
    double value = 0.0;
    double seconds = 0.0;
};

/// Grid for the Monte Carlo FIM validation: all (N, S, R, K) combinations at
/// fixed P, `reps` repetitions each.
struct McGrid {
    std::vector<int> n_values{10};
    std::vector<double> s_values{1.0};
    std::vector<int> r_values{1, 2};
    std::vector<int> k_values{4, 16, 64, 256, 1024};
    int p = 3;

    bool empty() const {
        return n_values.empty() || s_values.empty() || r_values.empty() || k_values.empty();
    }
};

/// Grid for the rank experiments: all (P, N, R) combinations at fixed S.
struct RankGrid {
    std::vector<int> p_values{2, 3};
    std::vector<int> n_values{10, 25};
    std::vector<int> r_values{1, 2, 3, 4};
    double s = 4.0;

    bool empty() const {
        return p_values.empty() || n_values.empty() || r_values.empty();
    }
};

/// Monte Carlo validation of the expected Fisher information: relative
/// Frobenius error of the empirical score covariance, one row per
/// (cell, repetition). Repetitions run in parallel; rows are deterministic
/// under the derived per-repetition seeds.
inline std::vector<ExperimentRow> run_experiment_mc_fim(const McGrid& grid, int reps,
                                                        std::uint64_t seed,
                                                        Eigen::Index order_cap = kDefaultFimOrderCap) {
    if (grid.empty() || reps < 1)
        throw std::invalid_argument("run_experiment_mc_fim: empty grid");
    std::vector<ExperimentRow> rows;
    std::uint64_t cell_id = 0;
    for (int n : grid.n_values) {
        for (double s : grid.s_values) {
            for (int r : grid.r_values) {
                GenSpec spec{n, grid.p, r, s, derive_seed(seed, 0x9e1000 + cell_id)};
                const KruskalModel model = generate_model(spec);
                const Matrix analytic = fim(model, order_cap).m;
                const double analytic_norm = analytic.norm();
                const DenseTensor mean = full_tensor(model);
                for (int k : grid.k_values) {
                    std::vector<ExperimentRow> batch(static_cast<std::size_t>(reps));
                    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t rep) {
                        const auto t0 = std::chrono::steady_clock::now();
                        const std::uint64_t rep_seed =
                            derive_seed(spec.seed, 0xabc000 + static_cast<std::uint64_t>(k) * 1000 + rep);
                        const Eigen::Index dim = model.theta_size();
                        Matrix scores(dim, k);
                        for (int j = 0; j < k; ++j) {
                            const DenseTensor x =
                                sample_poisson(mean, derive_seed(rep_seed, static_cast<std::uint64_t>(j)));
                            scores.col(j) = score(x, model);
                        }
                        const Vector mu = scores.rowwise().mean();
                        const Matrix centered = scores.colwise() - mu;
                        const Matrix ihat = centered * centered.transpose() / static_cast<double>(k);
                        const double err = (analytic - ihat).norm() / analytic_norm;
                        const double secs = std::chrono::duration<double>(
                                                std::chrono::steady_clock::now() - t0)
                                                .count();
                        batch[rep] = {"mc_fim", grid.p, n, r, s, k,
                                      static_cast<int>(rep), "rel_error", err, secs};
                    });
                    rows.insert(rows.end(), batch.begin(), batch.end());
                }
                ++cell_id;
            }
        }
    }
    return rows;
}

/// Rank-conjecture experiment: numerical versus conjectured FIM rank, one
/// repetition per generated model. Emits numerical_rank, conjectured_rank and
/// their ratio per (cell, repetition).
inline std::vector<ExperimentRow> run_experiment_rank(const RankGrid& grid, int reps,
                                                      std::uint64_t seed,
                                                      Eigen::Index order_cap = kDefaultFimOrderCap) {
    if (grid.empty() || reps < 1)
        throw std::invalid_argument("run_experiment_rank: empty grid");
    struct Cell {
        int p, n, r, rep;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    std::uint64_t cell_id = 0;
    for (int p : grid.p_values)
        for (int n : grid.n_values)
            for (int r : grid.r_values) {
                for (int rep = 0; rep < reps; ++rep)
                    cells.push_back({p, n, r, rep,
                                     derive_seed(seed, 0x52000 + cell_id * 1009 +
                                                           static_cast<std::uint64_t>(rep))});
                ++cell_id;
            }
    // fail fast on oversized cells before spawning work
    for (const Cell& c : cells) {
        const Eigen::Index order = static_cast<Eigen::Index>(c.r) * c.p * c.n;
        if (order > order_cap) throw FimOrderError(order, order_cap);
    }

    std::vector<std::vector<ExperimentRow>> out(cells.size());
    parallel_for(cells.size(), [&](std::size_t i) {
        const Cell& c = cells[i];
        const auto t0 = std::chrono::steady_clock::now();
        const KruskalModel model = generate_model(GenSpec{c.n, c.p, c.r, grid.s, c.seed});
        const RankVerdict v = numerical_rank(fim(model, order_cap));
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double ratio = static_cast<double>(v.numerical_rank) /
                             static_cast<double>(v.conjectured_rank);
        out[i] = {
            {"rank", c.p, c.n, c.r, grid.s, 0, c.rep, "numerical_rank",
             static_cast<double>(v.numerical_rank), secs},
            {"rank", c.p, c.n, c.r, grid.s, 0, c.rep, "conjectured_rank",
             static_cast<double>(v.conjectured_rank), 0.0},
            {"rank", c.p, c.n, c.r, grid.s, 0, c.rep, "rank_ratio", ratio, 0.0},
        };
    });

    std::vector<ExperimentRow> rows;
    for (const auto& triple : out) rows.insert(rows.end(), triple.begin(), triple.end());
    return rows;
}

/// Median of a copy of the values (empty input is invalid).
inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

} // namespace pcp
