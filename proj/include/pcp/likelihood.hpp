#pragma once

#include "pcp/kruskal.hpp"
#include "pcp/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace pcp {

namespace detail {

inline void check_data_model(const DenseTensor& x, const KruskalModel& m, const char* who) {
    if (x.dims() != m.dims())
        throw std::invalid_argument(std::string(who) + ": data/model shape mismatch");
}

} // namespace detail

/// Poisson loglikelihood sum_i [x_i log m_i - m_i - log(x_i!)], with the
/// log-factorial evaluated through lgamma so absolute values are comparable
/// across tools. Entries with x_i = 0 contribute -m_i.
inline double loglik(const DenseTensor& x, const KruskalModel& m) {
    detail::check_data_model(x, m, "loglik");
    const DenseTensor mean = full_tensor(m);
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ll -= mean[i];
        if (x[i] != 0.0)
            ll += x[i] * std::log(mean[i]) - std::lgamma(x[i] + 1.0);
    }
    return ll;
}

/// Score function: block p is vec((X_(p) ./ M_(p) - 1) B_p) with
/// B_p the Khatri-Rao product of the other factors in decreasing mode order.
inline Vector score(const DenseTensor& x, const KruskalModel& m) {
    detail::check_data_model(x, m, "score");
    Vector s(m.theta_size());
    Eigen::Index off = 0;
    const DenseTensor mean = full_tensor(m);
    for (int p = 0; p < m.order(); ++p) {
        const Matrix b = khatri_rao(m.factors(), p);
        const Matrix ratio =
            matricize(x, p).cwiseQuotient(matricize(mean, p)).array() - 1.0;
        const Matrix g = ratio * b;
        s.segment(off, g.size()) = Eigen::Map<const Vector>(g.data(), g.size());
        off += g.size();
    }
    return s;
}

/// Conditional expectations of the latent component tensor, summarized per
/// mode: Zbar_p(i_p, r) sums E[z_{r,i} | x, theta_bar] over the other indices.
struct CondExpectation {
    std::vector<Matrix> z; // one N_p x R matrix per mode
};

/// Single mode of the conditional expectation,
/// Zbar_p = Abar_p * ([X_(p) ./ (Abar_p B^T)] B). Cells with x_i = 0
/// contribute zero regardless of their rates.
inline Matrix cond_expectation_mode(const DenseTensor& x, const KruskalModel& m_bar, int p) {
    detail::check_data_model(x, m_bar, "cond_expectation");
    const Matrix b = khatri_rao(m_bar.factors(), p);
    const Matrix& a = m_bar.factor(p);
    const Matrix ratio = matricize(x, p).cwiseQuotient(a * b.transpose());
    return a.cwiseProduct(ratio * b);
}

inline CondExpectation cond_expectation(const DenseTensor& x, const KruskalModel& m_bar) {
    CondExpectation out;
    out.z.reserve(static_cast<std::size_t>(m_bar.order()));
    for (int p = 0; p < m_bar.order(); ++p)
        out.z.push_back(cond_expectation_mode(x, m_bar, p));
    return out;
}

/// Expected complete loglikelihood Q(theta, theta_bar), up to the additive
/// constant that does not depend on theta:
///   sum_p 1^T (Zbar_p * log A_p) 1 - sum_i m_i(theta),
/// the all-modes assembly of the per-mode matrix form.
inline double q_value(const KruskalModel& theta, const KruskalModel& theta_bar,
                      const DenseTensor& x) {
    detail::check_data_model(x, theta, "q_value");
    detail::check_data_model(x, theta_bar, "q_value");
    double q = 0.0;
    for (int p = 0; p < theta.order(); ++p) {
        const Matrix zb = cond_expectation_mode(x, theta_bar, p);
        q += zb.cwiseProduct(theta.factor(p).array().log().matrix()).sum();
    }
    // total mass sum_i m_i = lambda_1^T (prod of the other columns' weights)
    q -= column_weights(theta, 0).dot(weight_product_except(theta, 0));
    return q;
}

/// Gradient of Q with respect to theta at fixed theta_bar: block p is
/// vec(Zbar_p ./ A_p) - (weight product of other modes) kron 1_{N_p}.
inline Vector q_gradient(const KruskalModel& theta, const KruskalModel& theta_bar,
                         const DenseTensor& x) {
    detail::check_data_model(x, theta, "q_gradient");
    detail::check_data_model(x, theta_bar, "q_gradient");
    Vector g(theta.theta_size());
    Eigen::Index off = 0;
    for (int p = 0; p < theta.order(); ++p) {
        const Matrix zb = cond_expectation_mode(x, theta_bar, p);
        const Vector w = weight_product_except(theta, p);
        Matrix blk = zb.cwiseQuotient(theta.factor(p));
        blk.rowwise() -= w.transpose();
        g.segment(off, blk.size()) = Eigen::Map<const Vector>(blk.data(), blk.size());
        off += blk.size();
    }
    return g;
}

} // namespace pcp
