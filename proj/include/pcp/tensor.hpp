#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense P-way tensor in natural ordering: the first index varies fastest,
/// so vec() is the column-major generalization. All modes are 0-based.
class DenseTensor {
  public:
    DenseTensor() = default;

    explicit DenseTensor(std::vector<int> dims)
        : dims_(std::move(dims)), data_(checked_size(dims_), 0.0) {}

    DenseTensor(std::vector<int> dims, std::vector<double> data)
        : dims_(std::move(dims)), data_(std::move(data)) {
        if (data_.size() != checked_size(dims_))
            throw std::invalid_argument(
                "DenseTensor: data length " + std::to_string(data_.size()) +
                " does not match shape product " +
                std::to_string(checked_size(dims_)));
    }

    static DenseTensor constant(std::vector<int> dims, double value) {
        DenseTensor t(std::move(dims));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    int order() const { return static_cast<int>(dims_.size()); }
    const std::vector<int>& dims() const { return dims_; }
    int dim(int p) const { return dims_.at(static_cast<std::size_t>(p)); }
    std::size_t size() const { return data_.size(); }

    double operator[](std::size_t flat) const { return data_[flat]; }
    double& operator[](std::size_t flat) { return data_[flat]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    /// Flat offset of a multi-index (first index fastest).
    std::size_t offset(const std::vector<int>& idx) const {
        std::size_t flat = 0, stride = 1;
        for (int p = 0; p < order(); ++p) {
            flat += stride * static_cast<std::size_t>(idx[static_cast<std::size_t>(p)]);
            stride *= static_cast<std::size_t>(dims_[static_cast<std::size_t>(p)]);
        }
        return flat;
    }

    double sum() const {
        return std::accumulate(data_.begin(), data_.end(), 0.0);
    }

    bool same_shape(const DenseTensor& other) const {
        return dims_ == other.dims_;
    }

    /// Entry-wise map into a new tensor of the same shape.
    template <typename F> DenseTensor map(F&& f) const {
        DenseTensor out(dims_);
        for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] = f(data_[i]);
        return out;
    }

  private:
    static std::size_t checked_size(const std::vector<int>& dims) {
        if (dims.empty())
            throw std::invalid_argument("DenseTensor: empty shape");
        std::size_t n = 1;
        for (int d : dims) {
            if (d <= 0)
                throw std::invalid_argument("DenseTensor: non-positive dimension");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::vector<int> dims_;
    std::vector<double> data_;
};

/// Steps a multi-index through a tensor's entries in natural order.
class IndexOdometer {
  public:
    explicit IndexOdometer(const std::vector<int>& dims)
        : dims_(dims), idx_(dims.size(), 0) {}

    const std::vector<int>& idx() const { return idx_; }

    bool advance() {
        for (std::size_t p = 0; p < dims_.size(); ++p) {
            if (++idx_[p] < dims_[p]) return true;
            idx_[p] = 0;
        }
        return false;
    }

  private:
    const std::vector<int>& dims_;
    std::vector<int> idx_;
};

namespace detail {

inline void check_mode(const DenseTensor& t, int mode, const char* who) {
    if (mode < 0 || mode >= t.order())
        throw std::invalid_argument(std::string(who) + ": mode " +
                                    std::to_string(mode) + " out of range for order " +
                                    std::to_string(t.order()));
}

inline std::size_t stride_before(const std::vector<int>& dims, int mode) {
    std::size_t s = 1;
    for (int p = 0; p < mode; ++p) s *= static_cast<std::size_t>(dims[static_cast<std::size_t>(p)]);
    return s;
}

} // namespace detail

/// Mode-p matricization X_(p): rows run over i_p, columns over the remaining
/// indices in natural order. With this layout M_(p) = A_p (kr product of the
/// other factors, decreasing mode order)^T holds exactly for Kruskal tensors.
inline Matrix matricize(const DenseTensor& t, int mode) {
    detail::check_mode(t, mode, "matricize");
    const auto& dims = t.dims();
    const std::size_t np = static_cast<std::size_t>(dims[static_cast<std::size_t>(mode)]);
    const std::size_t rest = t.size() / np;
    const std::size_t lo = detail::stride_before(dims, mode);
    const std::size_t mid = lo * np;
    Matrix out(np, rest);
    for (std::size_t n = 0; n < t.size(); ++n) {
        const std::size_t row = (n / lo) % np;
        const std::size_t col = (n % lo) + (n / mid) * lo;
        out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = t[n];
    }
    return out;
}

/// Inverse of matricize: rebuilds the tensor with the given shape.
inline DenseTensor tensor_from_matricization(const Matrix& m,
                                             const std::vector<int>& dims,
                                             int mode) {
    DenseTensor t(dims);
    detail::check_mode(t, mode, "tensor_from_matricization");
    const std::size_t np = static_cast<std::size_t>(dims[static_cast<std::size_t>(mode)]);
    if (static_cast<std::size_t>(m.rows()) != np ||
        static_cast<std::size_t>(m.cols()) != t.size() / np)
        throw std::invalid_argument("tensor_from_matricization: shape mismatch");
    const std::size_t lo = detail::stride_before(dims, mode);
    const std::size_t mid = lo * np;
    for (std::size_t n = 0; n < t.size(); ++n) {
        const std::size_t row = (n / lo) % np;
        const std::size_t col = (n % lo) + (n / mid) * lo;
        t[n] = m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }
    return t;
}

/// Two-mode matricization Y_(k,l): rows run over (i_k, i_l) with i_k fastest,
/// columns over the remaining indices in natural order. Requires k < l, P > 2.
inline Matrix matricize_pair(const DenseTensor& t, int k, int l) {
    if (t.order() <= 2)
        throw std::invalid_argument("matricize_pair: requires order > 2");
    if (!(0 <= k && k < l && l < t.order()))
        throw std::invalid_argument("matricize_pair: need 0 <= k < l < order");
    const auto& dims = t.dims();
    const std::size_t nk = static_cast<std::size_t>(dims[static_cast<std::size_t>(k)]);
    const std::size_t nl = static_cast<std::size_t>(dims[static_cast<std::size_t>(l)]);
    Matrix out(nk * nl, t.size() / (nk * nl));
    IndexOdometer odo(dims);
    std::size_t n = 0;
    do {
        const auto& idx = odo.idx();
        const std::size_t row = static_cast<std::size_t>(idx[static_cast<std::size_t>(k)]) +
                                nk * static_cast<std::size_t>(idx[static_cast<std::size_t>(l)]);
        std::size_t col = 0, stride = 1;
        for (int q = 0; q < t.order(); ++q) {
            if (q == k || q == l) continue;
            col += stride * static_cast<std::size_t>(idx[static_cast<std::size_t>(q)]);
            stride *= static_cast<std::size_t>(dims[static_cast<std::size_t>(q)]);
        }
        out(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = t[n++];
    } while (odo.advance());
    return out;
}

/// Khatri-Rao product of the given matrices with indices in DECREASING order
/// (A_P kr ... kr A_1), optionally skipping one mode. Column r of the result is
/// the Kronecker product of the r-th columns, so the row index runs over the
/// non-skipped multi-index with the lowest mode fastest.
inline Matrix khatri_rao(const std::vector<Matrix>& mats, int skip = -1) {
    std::vector<const Matrix*> used;
    for (int p = 0; p < static_cast<int>(mats.size()); ++p)
        if (p != skip) used.push_back(&mats[static_cast<std::size_t>(p)]);
    if (used.empty())
        throw std::invalid_argument("khatri_rao: no matrices left after skip");
    const Eigen::Index R = used.front()->cols();
    for (const Matrix* m : used)
        if (m->cols() != R)
            throw std::invalid_argument("khatri_rao: column count mismatch");
    Matrix out = Matrix::Ones(1, R);
    for (const Matrix* m : used) {
        // out <- m kr out, with out's (lower-mode) index kept fastest
        Matrix next(m->rows() * out.rows(), R);
        for (Eigen::Index r = 0; r < R; ++r)
            for (Eigen::Index i = 0; i < m->rows(); ++i)
                next.block(i * out.rows(), r, out.rows(), 1) =
                    (*m)(i, r) * out.col(r);
        out = std::move(next);
    }
    return out;
}

/// Contraction of all modes except k with one vector per mode:
/// result[i_k] = sum over the other indices of t[i] * prod_{q != k} v_q[i_q].
/// vecs must hold one vector per mode; vecs[k] is ignored.
inline Vector contract_all_but_one(const DenseTensor& t,
                                   const std::vector<Vector>& vecs, int k) {
    detail::check_mode(t, k, "contract_all_but_one");
    if (static_cast<int>(vecs.size()) != t.order())
        throw std::invalid_argument("contract_all_but_one: need one vector per mode");
    for (int q = 0; q < t.order(); ++q)
        if (q != k && vecs[static_cast<std::size_t>(q)].size() != t.dim(q))
            throw std::invalid_argument("contract_all_but_one: vector length mismatch at mode " +
                                        std::to_string(q));
    Vector out = Vector::Zero(t.dim(k));
    IndexOdometer odo(t.dims());
    std::size_t n = 0;
    do {
        const auto& idx = odo.idx();
        double w = t[n++];
        for (int q = 0; q < t.order(); ++q)
            if (q != k) w *= vecs[static_cast<std::size_t>(q)][idx[static_cast<std::size_t>(q)]];
        out[idx[static_cast<std::size_t>(k)]] += w;
    } while (odo.advance());
    return out;
}

/// Contraction of all modes except k and l (k < l, P > 2):
/// result(i_k, i_l) = sum over remaining indices of t[i] * prod v_q[i_q].
inline Matrix contract_all_but_two(const DenseTensor& t,
                                   const std::vector<Vector>& vecs, int k, int l) {
    if (t.order() <= 2)
        throw std::invalid_argument("contract_all_but_two: requires order > 2");
    if (!(0 <= k && k < l && l < t.order()))
        throw std::invalid_argument("contract_all_but_two: need 0 <= k < l < order");
    if (static_cast<int>(vecs.size()) != t.order())
        throw std::invalid_argument("contract_all_but_two: need one vector per mode");
    for (int q = 0; q < t.order(); ++q)
        if (q != k && q != l && vecs[static_cast<std::size_t>(q)].size() != t.dim(q))
            throw std::invalid_argument("contract_all_but_two: vector length mismatch at mode " +
                                        std::to_string(q));
    Matrix out = Matrix::Zero(t.dim(k), t.dim(l));
    IndexOdometer odo(t.dims());
    std::size_t n = 0;
    do {
        const auto& idx = odo.idx();
        double w = t[n++];
        for (int q = 0; q < t.order(); ++q)
            if (q != k && q != l) w *= vecs[static_cast<std::size_t>(q)][idx[static_cast<std::size_t>(q)]];
        out(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(l)]) += w;
    } while (odo.advance());
    return out;
}

namespace detail {
inline void check_same_shape(const DenseTensor& a, const DenseTensor& b, const char* who) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(who) + ": shape mismatch");
}
} // namespace detail

inline DenseTensor hadamard_product(const DenseTensor& a, const DenseTensor& b) {
    detail::check_same_shape(a, b, "hadamard_product");
    DenseTensor out(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

/// Element-wise division; a zero denominator is reported with its flat index.
inline DenseTensor hadamard_quotient(const DenseTensor& a, const DenseTensor& b) {
    detail::check_same_shape(a, b, "hadamard_quotient");
    DenseTensor out(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (b[i] == 0.0)
            throw std::domain_error("hadamard_quotient: zero denominator at flat index " +
                                    std::to_string(i));
        out[i] = a[i] / b[i];
    }
    return out;
}

/// Element-wise power t^{*k} (k may be negative; entries must be nonzero then).
inline DenseTensor hadamard_power(const DenseTensor& t, double k) {
    DenseTensor out(t.dims());
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (k < 0.0 && t[i] == 0.0)
            throw std::domain_error("hadamard_power: zero entry at flat index " +
                                    std::to_string(i));
        out[i] = std::pow(t[i], k);
    }
    return out;
}

} // namespace pcp
