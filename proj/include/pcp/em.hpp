#pragma once

#include "pcp/kruskal.hpp"
#include "pcp/likelihood.hpp"
#include "pcp/tensor.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcp {

enum class Schedule { ecm, mcecm };

struct FitConfig {
    Schedule schedule = Schedule::mcecm;
    int inner_iters = 10;   // CM repeats per cycle (mcecm only)
    int max_outer = 500;
    double tol = 1e-8;      // relative loglikelihood change
    std::uint64_t seed = 0; // used by random initialization helpers
    double eps_pos = kPositivityFloor;

    void validate() const {
        if (inner_iters < 1) throw std::invalid_argument("FitConfig: inner_iters must be >= 1");
        if (max_outer < 1) throw std::invalid_argument("FitConfig: max_outer must be >= 1");
        if (!(tol > 0.0)) throw std::invalid_argument("FitConfig: tol must be > 0");
        if (!(eps_pos > 0.0)) throw std::invalid_argument("FitConfig: eps_pos must be > 0");
    }
};

struct FitTrace {
    struct Row {
        int iteration;
        double loglik;
        double max_rel_change; // max relative change across theta entries
        double seconds;        // cumulative wall time
    };
    std::vector<Row> rows;
    bool converged = false;
    bool zero_marginal_warning = false;
    std::string abort_reason; // non-empty if the run stopped on an error
};

namespace detail {

inline Matrix clamp_positive(Matrix a, double eps) {
    return a.cwiseMax(eps);
}

inline double max_rel_change(const Vector& now, const Vector& before) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < now.size(); ++i)
        m = std::max(m, std::abs(now[i] - before[i]) /
                            (1.0 + std::abs(before[i])));
    return m;
}

} // namespace detail

/// Exact maximizer of the mode-p conditional subproblem:
/// A_p = Zbar_p diag(weight product of the other modes)^{-1}, where Zbar_p is
/// evaluated at theta_bar and the weights come from `model`'s current other
/// factors. Entries are clamped at eps_pos.
inline Matrix cm_step(const DenseTensor& x, const KruskalModel& model, int p,
                      const KruskalModel& theta_bar, double eps_pos = kPositivityFloor) {
    const Matrix zb = cond_expectation_mode(x, theta_bar, p);
    const Vector w = weight_product_except(model, p);
    return detail::clamp_positive(zb * w.cwiseInverse().asDiagonal(), eps_pos);
}

/// One multiplicative pass of the multi-cycle CM update for mode p, with the
/// Khatri-Rao mix B and the weight product held frozen:
/// A_p <- [A_p * ((X_(p) ./ (A_p B^T)) B)] diag(w)^{-1}, clamped at eps_pos.
inline Matrix mcecm_pass(const Matrix& a_p, const Matrix& x_p, const Matrix& b,
                         const Vector& w, double eps_pos) {
    const Matrix ratio = x_p.cwiseQuotient(a_p * b.transpose());
    return detail::clamp_positive(
        a_p.cwiseProduct(ratio * b) * w.cwiseInverse().asDiagonal(), eps_pos);
}

/// Mode-p cycle of the multi-cycle schedule: refreshes the E-step at the
/// current mixed state, then applies `inner_iters` multiplicative passes
/// sharing the frozen Khatri-Rao mix of the other factors.
inline Matrix mcecm_update(const DenseTensor& x, const KruskalModel& model, int p,
                           int inner_iters, double eps_pos = kPositivityFloor) {
    const Matrix b = khatri_rao(model.factors(), p);
    const Vector w = weight_product_except(model, p);
    const Matrix x_p = matricize(x, p);
    Matrix a = model.factor(p);
    for (int i = 0; i < inner_iters; ++i) a = mcecm_pass(a, x_p, b, w, eps_pos);
    return a;
}

/// Random initialization: entries uniform(0.1, 1.1), rescaled so the model's
/// total mass matches the data total (the paper does not pin a scheme).
inline KruskalModel random_init(const std::vector<int>& dims, int rank,
                                double data_total, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.1, 1.1);
    std::vector<Matrix> factors;
    for (int n : dims) {
        Matrix a(n, rank);
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = unif(gen);
        factors.push_back(std::move(a));
    }
    KruskalModel m(std::move(factors));
    const double mass = full_tensor(m).sum();
    if (data_total > 0.0 && mass > 0.0) {
        const double c = std::pow(data_total / mass, 1.0 / static_cast<double>(m.order()));
        std::vector<Matrix> scaled = m.factors();
        for (Matrix& a : scaled) a *= c;
        return KruskalModel(std::move(scaled));
    }
    return m;
}

/// Runs the configured schedule until the relative loglikelihood change drops
/// below tol or max_outer is reached. Returns the final model normalized by
/// absorbing all component weight into mode 0, plus the per-iteration trace.
inline std::pair<KruskalModel, FitTrace> fit(const DenseTensor& x,
                                             const KruskalModel& init,
                                             const FitConfig& cfg) {
    cfg.validate();
    detail::check_data_model(x, init, "fit");
    FitTrace trace;
    for (int p = 0; p < init.order(); ++p) {
        const Vector marg = matricize(x, p).rowwise().sum();
        if ((marg.array() == 0.0).any()) trace.zero_marginal_warning = true;
    }

    KruskalModel model = init;
    double ll = loglik(x, model);
    if (!std::isfinite(ll)) {
        trace.abort_reason = "non-finite loglikelihood at initialization";
        throw std::runtime_error("fit: " + trace.abort_reason);
    }
    const auto t0 = std::chrono::steady_clock::now();
    Vector theta_prev = pack(model);

    for (int t = 1; t <= cfg.max_outer; ++t) {
        if (cfg.schedule == Schedule::ecm) {
            // one E-step per iteration: all Zbar_p at the pre-iteration state,
            // weights always taken from the most recent factors
            const KruskalModel snapshot = model;
            for (int p = 0; p < model.order(); ++p)
                model.set_factor(p, cm_step(x, model, p, snapshot, cfg.eps_pos));
        } else {
            for (int p = 0; p < model.order(); ++p)
                model.set_factor(p, mcecm_update(x, model, p, cfg.inner_iters, cfg.eps_pos));
        }

        const double ll_new = loglik(x, model);
        const Vector theta_now = pack(model);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        trace.rows.push_back({t, ll_new, detail::max_rel_change(theta_now, theta_prev), seconds});
        theta_prev = theta_now;

        if (!std::isfinite(ll_new)) {
            trace.abort_reason = "non-finite loglikelihood at iteration " + std::to_string(t);
            return {normalize_absorb_into(model, 0), std::move(trace)};
        }
        if (std::abs(ll_new - ll) / (1.0 + std::abs(ll_new)) < cfg.tol) {
            trace.converged = true;
            ll = ll_new;
            break;
        }
        ll = ll_new;
    }
    return {normalize_absorb_into(model, 0), std::move(trace)};
}

} // namespace pcp
