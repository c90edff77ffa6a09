#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ellipmoment/common.hpp"

namespace ellipmoment {

/// Symmetric matrix; only the lower triangle is settable, the upper mirror
/// is maintained so symmetry is exact by construction.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t n) : n_(n), e_(n * n, 0.0) {}

    static SymMatrix identity(std::size_t n) {
        SymMatrix s(n);
        for (std::size_t i = 0; i < n; ++i) s.set(i, i, 1.0);
        return s;
    }

    std::size_t dim() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return e_[i * n_ + j]; }
    void set(std::size_t i, std::size_t j, double v) {
        if (j > i) std::swap(i, j);
        e_[i * n_ + j] = v;
        e_[j * n_ + i] = v;
    }
    double max_diag() const {
        double m = 0.0;
        for (std::size_t i = 0; i < n_; ++i) m = std::max(m, std::abs((*this)(i, i)));
        return m;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> e_;
};

/// Lower-triangular factor A with A A^T equal to the source matrix.
struct LowerFactor {
    std::size_t n = 0;
    std::vector<double> entries;  // row-major, upper part zero when triangular
    std::size_t rank = 0;
    bool triangular = true;  // false for eigendecomposition-based factors

    double operator()(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return entries[i * n + j]; }

    SymMatrix reconstruct() const {
        SymMatrix s(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    acc += (*this)(i, k) * (*this)(j, k);
                s.set(i, j, acc);
            }
        return s;
    }

    /// A * y for a full vector y.
    Vector apply(const Vector& y) const {
        Vector x(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += (*this)(i, j) * y[j];
            x[i] = acc;
        }
        return x;
    }
};

class not_positive_definite : public std::runtime_error {
public:
    not_positive_definite(std::size_t pivot, const std::string& what)
        : std::runtime_error(what), pivot_index(pivot) {}
    std::size_t pivot_index;
};

/// Unique lower-triangular Cholesky factor of a positive definite matrix,
/// by the classical column recurrences. Fails when a pivot drops below
/// tol * max |diagonal|.
inline LowerFactor cholesky(const SymMatrix& S, double tol = 1e-12) {
    const std::size_t n = S.dim();
    LowerFactor A{n, std::vector<double>(n * n, 0.0), n};
    const double thresh = tol * std::max(S.max_diag(), 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        double d = S(k, k);
        for (std::size_t i = 0; i < k; ++i) d -= sqr(A(k, i));
        if (d <= thresh)
            throw not_positive_definite(
                k, "cholesky: pivot " + std::to_string(k) + " not positive");
        double akk = std::sqrt(d);
        A.at(k, k) = akk;
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = S(i, k);
            for (std::size_t j = 0; j < k; ++j) v -= A(i, j) * A(k, j);
            A.at(i, k) = v / akk;
        }
    }
    return A;
}

namespace detail {

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// On return, eigenvalues in `w` and eigenvectors in the columns of `V`.
inline void jacobi_eigen(const SymMatrix& S, Vector& w, std::vector<double>& V) {
    const std::size_t n = S.dim();
    std::vector<double> a(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = S(i, j);
    V.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) V[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += sqr(a[i * n + j]);
        if (off < 1e-30 * std::max(1.0, sqr(S.max_diag()))) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = V[k * n + p], vkq = V[k * n + q];
                    V[k * n + p] = c * vkp - s * vkq;
                    V[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    w.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) w[i] = a[i * n + i];
}

}  // namespace detail

class indefinite_matrix : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Factor of a positive semidefinite matrix via symmetric eigendecomposition:
/// A = V sqrt(D) rearranged lower-ish (columns ordered by eigenvalue).
/// Eigenvalues in [-tol*max_diag, 0] are clamped to zero; anything lower
/// raises indefinite_matrix. The returned factor is generally dense, not
/// triangular, which is all the downstream quadratic forms need.
inline LowerFactor psd_factor(const SymMatrix& S, double tol = 1e-12) {
    const std::size_t n = S.dim();
    Vector w;
    std::vector<double> V;
    detail::jacobi_eigen(S, w, V);
    const double thresh = tol * std::max(S.max_diag(), 1e-300);
    LowerFactor A{n, std::vector<double>(n * n, 0.0), 0, false};
    // order eigenvalues descending so the leading columns carry the range
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a_, std::size_t b_) { return w[a_] > w[b_]; });
    std::size_t rank = 0;
    for (std::size_t c = 0; c < n; ++c) {
        double lam = w[idx[c]];
        if (lam < -thresh)
            throw indefinite_matrix("psd_factor: eigenvalue below -tol*max_diag");
        if (lam <= thresh) continue;
        double root = std::sqrt(lam);
        for (std::size_t i = 0; i < n; ++i) A.at(i, rank) = V[i * n + idx[c]] * root;
        ++rank;
    }
    A.rank = rank;
    return A;
}

class singular_factor : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Forward substitution solving A z = r for lower-triangular full-rank A.
inline Vector forward_solve(const LowerFactor& A, const Vector& r) {
    if (A.rank != A.n || !A.triangular)
        throw singular_factor("forward_solve: needs a full-rank triangular factor");
    const std::size_t n = A.n;
    Vector z(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double v = r[i];
        for (std::size_t j = 0; j < i; ++j) v -= A(i, j) * z[j];
        if (A(i, i) == 0.0)
            throw singular_factor("forward_solve: zero diagonal entry");
        z[i] = v / A(i, i);
    }
    return z;
}

/// Half Mahalanobis form (1/2)(x-mu)^T Sigma^{-1} (x-mu) through the
/// triangular factor; never forms an explicit inverse.
inline double mahalanobis_half(const LowerFactor& A, const Vector& x,
                               const Vector& mu) {
    Vector r(A.n);
    for (std::size_t i = 0; i < A.n; ++i) r[i] = x[i] - mu[i];
    Vector z = forward_solve(A, r);
    KahanSum acc;
    for (double v : z) acc.add(v * v);
    return 0.5 * acc.value();
}

}  // namespace ellipmoment
