// Brute-force reference implementations used as test oracles. Everything here
// works by explicit summation over multi-indices and stays independent of the
// library kernels it checks.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// flat index -> multi-index, first index fastest
inline std::vector<int> decode(std::size_t flat, const std::vector<int>& dims) {
    std::vector<int> idx(dims.size());
    for (std::size_t p = 0; p < dims.size(); ++p) {
        idx[p] = static_cast<int>(flat % static_cast<std::size_t>(dims[p]));
        flat /= static_cast<std::size_t>(dims[p]);
    }
    return idx;
}

inline std::size_t num_entries(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
}

// factors[p] is column-major N_p x R
struct Factors {
    std::vector<std::vector<double>> a;
    std::vector<int> dims;
    int rank;

    double at(int p, int i, int r) const {
        return a[static_cast<std::size_t>(p)]
                [static_cast<std::size_t>(r) * static_cast<std::size_t>(dims[static_cast<std::size_t>(p)]) +
                 static_cast<std::size_t>(i)];
    }
};

inline std::vector<double> full_tensor(const Factors& f) {
    const std::size_t n = num_entries(f.dims);
    std::vector<double> m(n, 0.0);
    for (std::size_t flat = 0; flat < n; ++flat) {
        const auto idx = decode(flat, f.dims);
        for (int r = 0; r < f.rank; ++r) {
            double prod = 1.0;
            for (std::size_t p = 0; p < f.dims.size(); ++p)
                prod *= f.at(static_cast<int>(p), idx[p], r);
            m[flat] += prod;
        }
    }
    return m;
}

inline double loglik(const std::vector<double>& x, const std::vector<double>& m) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        ll -= m[i];
        if (x[i] != 0.0) ll += x[i] * std::log(m[i]) - std::lgamma(x[i] + 1.0);
    }
    return ll;
}

// conditional mean of the latent component tensor, z_{r,i}
inline double zbar_entry(const std::vector<double>& x, const Factors& f,
                         const std::vector<int>& idx, std::size_t flat, int r) {
    double num = 1.0, den = 0.0;
    for (std::size_t p = 0; p < f.dims.size(); ++p)
        num *= f.at(static_cast<int>(p), idx[p], r);
    for (int rr = 0; rr < f.rank; ++rr) {
        double prod = 1.0;
        for (std::size_t p = 0; p < f.dims.size(); ++p)
            prod *= f.at(static_cast<int>(p), idx[p], rr);
        den += prod;
    }
    return num * x[flat] / den;
}

// mode-p summary of zbar: N_p x R, column-major
inline std::vector<double> zbar_mode(const std::vector<double>& x, const Factors& f, int p) {
    const int np = f.dims[static_cast<std::size_t>(p)];
    std::vector<double> z(static_cast<std::size_t>(np) * static_cast<std::size_t>(f.rank), 0.0);
    for (std::size_t flat = 0; flat < x.size(); ++flat) {
        const auto idx = decode(flat, f.dims);
        for (int r = 0; r < f.rank; ++r)
            z[static_cast<std::size_t>(r) * static_cast<std::size_t>(np) +
              static_cast<std::size_t>(idx[static_cast<std::size_t>(p)])] +=
                zbar_entry(x, f, idx, flat, r);
    }
    return z;
}

// Q(theta, theta_bar) up to the theta-free constant, by element-wise summation
inline double q_value(const Factors& theta, const Factors& theta_bar,
                      const std::vector<double>& x) {
    double q = 0.0;
    for (std::size_t flat = 0; flat < x.size(); ++flat) {
        const auto idx = decode(flat, theta.dims);
        for (int r = 0; r < theta.rank; ++r) {
            double prod = 1.0;
            for (std::size_t p = 0; p < theta.dims.size(); ++p)
                prod *= theta.at(static_cast<int>(p), idx[p], r);
            q += zbar_entry(x, theta_bar, idx, flat, r) * std::log(prod) - prod;
        }
    }
    return q;
}

// contraction of all modes but k: out[i_k] = sum t_i prod_{q != k} v_q[i_q]
inline std::vector<double> contract_all_but_one(const std::vector<double>& t,
                                                const std::vector<int>& dims,
                                                const std::vector<std::vector<double>>& v,
                                                int k) {
    std::vector<double> out(static_cast<std::size_t>(dims[static_cast<std::size_t>(k)]), 0.0);
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        const auto idx = decode(flat, dims);
        double w = t[flat];
        for (std::size_t q = 0; q < dims.size(); ++q)
            if (static_cast<int>(q) != k) w *= v[q][static_cast<std::size_t>(idx[q])];
        out[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] += w;
    }
    return out;
}

// contraction of all modes but (k, l): out(i_k, i_l), column-major N_k x N_l
inline std::vector<double> contract_all_but_two(const std::vector<double>& t,
                                                const std::vector<int>& dims,
                                                const std::vector<std::vector<double>>& v,
                                                int k, int l) {
    const std::size_t nk = static_cast<std::size_t>(dims[static_cast<std::size_t>(k)]);
    const std::size_t nl = static_cast<std::size_t>(dims[static_cast<std::size_t>(l)]);
    std::vector<double> out(nk * nl, 0.0);
    for (std::size_t flat = 0; flat < t.size(); ++flat) {
        const auto idx = decode(flat, dims);
        double w = t[flat];
        for (std::size_t q = 0; q < dims.size(); ++q)
            if (static_cast<int>(q) != k && static_cast<int>(q) != l)
                w *= v[q][static_cast<std::size_t>(idx[q])];
        out[static_cast<std::size_t>(idx[static_cast<std::size_t>(l)]) * nk +
            static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] += w;
    }
    return out;
}

// D block, column-major N_k x N_l (k <= l per the theorem's stated cases)
inline std::vector<double> d_block(const std::vector<double>& y, const Factors& f,
                                   int k, int l, int r, int s) {
    const std::size_t nk = static_cast<std::size_t>(f.dims[static_cast<std::size_t>(k)]);
    const std::size_t nl = static_cast<std::size_t>(f.dims[static_cast<std::size_t>(l)]);
    std::vector<double> out(nk * nl, 0.0);
    for (std::size_t flat = 0; flat < y.size(); ++flat) {
        const auto idx = decode(flat, f.dims);
        if (k == l) {
            double w = y[flat];
            for (std::size_t q = 0; q < f.dims.size(); ++q)
                if (static_cast<int>(q) != k)
                    w *= f.at(static_cast<int>(q), idx[q], r) * f.at(static_cast<int>(q), idx[q], s);
            const std::size_t i = static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]);
            out[i * nk + i] += w;
        } else {
            double w = y[flat];
            for (std::size_t q = 0; q < f.dims.size(); ++q)
                if (static_cast<int>(q) != k && static_cast<int>(q) != l)
                    w *= f.at(static_cast<int>(q), idx[q], r) * f.at(static_cast<int>(q), idx[q], s);
            const int ik = idx[static_cast<std::size_t>(k)];
            const int il = idx[static_cast<std::size_t>(l)];
            out[static_cast<std::size_t>(il) * nk + static_cast<std::size_t>(ik)] +=
                f.at(k, ik, s) * f.at(l, il, r) * w;
        }
    }
    return out;
}

// F block for the observed information (zero unless k != l and r == s)
inline std::vector<double> f_block(const std::vector<double>& x, const Factors& f,
                                   int k, int l, int r, int s) {
    const std::size_t nk = static_cast<std::size_t>(f.dims[static_cast<std::size_t>(k)]);
    const std::size_t nl = static_cast<std::size_t>(f.dims[static_cast<std::size_t>(l)]);
    std::vector<double> out(nk * nl, 0.0);
    if (k == l || r != s) return out;
    const std::vector<double> m = full_tensor(f);
    double lam = 1.0;
    for (std::size_t q = 0; q < f.dims.size(); ++q) {
        if (static_cast<int>(q) == k || static_cast<int>(q) == l) continue;
        double colsum = 0.0;
        for (int i = 0; i < f.dims[q]; ++i) colsum += f.at(static_cast<int>(q), i, r);
        lam *= colsum;
    }
    for (double& o : out) o = lam;
    for (std::size_t flat = 0; flat < x.size(); ++flat) {
        const auto idx = decode(flat, f.dims);
        double w = x[flat] / m[flat];
        for (std::size_t q = 0; q < f.dims.size(); ++q)
            if (static_cast<int>(q) != k && static_cast<int>(q) != l)
                w *= f.at(static_cast<int>(q), idx[q], r);
        out[static_cast<std::size_t>(idx[static_cast<std::size_t>(l)]) * nk +
            static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] -= w;
    }
    return out;
}

} // namespace oracle
