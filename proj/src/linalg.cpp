#include "pme/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pme {

double norm2(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return std::sqrt(s);
}

double norm_inf(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) {
        s = std::max(s, std::abs(v));
    }
    return s;
}

double dot(std::span<const double> x, std::span<const double> y)
{
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * y[i];
    }
    return s;
}

// ---------------------------------------------------------------------------
// TriDiagMatrix

double TriDiagMatrix::at(std::size_t i, std::size_t j) const
{
    if (i == j) {
        return diag[i];
    }
    if (j + 1 == i) {
        return sub[j];
    }
    if (i + 1 == j) {
        return super[i];
    }
    return 0.0;
}

Vector TriDiagMatrix::multiply(std::span<const double> x) const
{
    const std::size_t n = size();
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = diag[i] * x[i];
        if (i > 0) {
            s += sub[i - 1] * x[i - 1];
        }
        if (i + 1 < n) {
            s += super[i] * x[i + 1];
        }
        y[i] = s;
    }
    return y;
}

Vector solve_tridiag_spd(const TriDiagMatrix& a, std::span<const double> b)
{
    const std::size_t n = a.size();
    if (b.size() != n) {
        throw std::invalid_argument("solve_tridiag_spd: size mismatch");
    }
    if (n == 0) {
        return {};
    }
    // A = L D L^T with unit lower bidiagonal L.
    Vector d(n);
    Vector l(n > 0 ? n - 1 : 0);
    double scale = 0.0;
    for (double v : a.diag) {
        scale = std::max(scale, std::abs(v));
    }
    const double pivot_floor = std::numeric_limits<double>::epsilon() * scale * static_cast<double>(n);
    d[0] = a.diag[0];
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            l[i - 1] = a.sub[i - 1] / d[i - 1];
            d[i] = a.diag[i] - l[i - 1] * a.super[i - 1];
        }
        if (!(d[i] > pivot_floor)) {
            throw PivotError("solve_tridiag_spd: non-positive pivot at index " + std::to_string(i), i);
        }
    }
    Vector x(b.begin(), b.end());
    for (std::size_t i = 1; i < n; ++i) {
        x[i] -= l[i - 1] * x[i - 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
        x[i] /= d[i];
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] -= l[i] * x[i + 1];
    }
    return x;
}

// ---------------------------------------------------------------------------
// BandedRect

BandedRect::BandedRect(std::size_t rows, std::size_t cols, long shift)
    : rows_(rows), cols_(cols), shift_(shift), data_(rows * (2 * half_bandwidth + 1), 0.0)
{
}

bool BandedRect::in_band(std::size_t r, std::size_t c) const
{
    const long offset = static_cast<long>(c) - static_cast<long>(r) - shift_;
    return r < rows_ && c < cols_ && offset >= -half_bandwidth && offset <= half_bandwidth;
}

std::size_t BandedRect::slot(std::size_t r, std::size_t c) const
{
    const long offset = static_cast<long>(c) - static_cast<long>(r) - shift_;
    return r * (2 * half_bandwidth + 1) + static_cast<std::size_t>(offset + half_bandwidth);
}

double BandedRect::at(std::size_t r, std::size_t c) const
{
    return in_band(r, c) ? data_[slot(r, c)] : 0.0;
}

void BandedRect::add(std::size_t r, std::size_t c, double v)
{
    if (!in_band(r, c)) {
        throw std::out_of_range("BandedRect::add: entry outside band");
    }
    data_[slot(r, c)] += v;
}

Vector BandedRect::multiply(std::span<const double> x) const
{
    Vector y(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (long o = -half_bandwidth; o <= half_bandwidth; ++o) {
            const long c = static_cast<long>(r) + shift_ + o;
            if (c >= 0 && c < static_cast<long>(cols_)) {
                s += data_[slot(r, static_cast<std::size_t>(c))] * x[static_cast<std::size_t>(c)];
            }
        }
        y[r] = s;
    }
    return y;
}

Vector BandedRect::multiply_transposed(std::span<const double> y) const
{
    Vector x(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (long o = -half_bandwidth; o <= half_bandwidth; ++o) {
            const long c = static_cast<long>(r) + shift_ + o;
            if (c >= 0 && c < static_cast<long>(cols_)) {
                x[static_cast<std::size_t>(c)] += data_[slot(r, static_cast<std::size_t>(c))] * y[r];
            }
        }
    }
    return x;
}

BandedRect BandedRect::operator-(const BandedRect& other) const
{
    if (rows_ != other.rows_ || cols_ != other.cols_ || shift_ != other.shift_) {
        throw std::invalid_argument("BandedRect: incompatible operands");
    }
    BandedRect out = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) {
        out.data_[i] -= other.data_[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dense

Vector DenseMatrix::multiply(std::span<const double> x) const
{
    Vector y(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols_; ++c) {
            s += (*this)(r, c) * x[c];
        }
        y[r] = s;
    }
    return y;
}

DenseMatrix to_dense(const TriDiagMatrix& a)
{
    DenseMatrix d(a.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = (i > 0 ? i - 1 : 0); j < std::min(a.size(), i + 2); ++j) {
            d(i, j) = a.at(i, j);
        }
    }
    return d;
}

DenseMatrix to_dense(const BandedRect& a)
{
    DenseMatrix d(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            d(r, c) = a.at(r, c);
        }
    }
    return d;
}

namespace {

DenseSolveResult minimum_norm_solve(const DenseMatrix& a, std::span<const double> b)
{
    Eigen::MatrixXd m(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = a(r, c);
        }
    }
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < b.size(); ++i) {
        rhs(static_cast<Eigen::Index>(i)) = b[i];
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
    const Eigen::VectorXd sol = cod.solve(rhs);
    DenseSolveResult out;
    out.x.assign(sol.data(), sol.data() + sol.size());
    out.rank = static_cast<std::size_t>(cod.rank());
    out.rank_deficient = true;
    return out;
}

} // namespace

DenseLU::DenseLU(DenseMatrix a) : a_(std::move(a)), lu_(a_), perm_(a_.rows())
{
    const std::size_t n = a_.rows();
    if (a_.cols() != n) {
        throw std::invalid_argument("DenseLU: matrix must be square");
    }
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    double amax = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            amax = std::max(amax, std::abs(a_(r, c)));
        }
    }
    const double tiny = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max<std::size_t>(n, 1)) * amax;
    singular_ = (amax == 0.0 && n > 0);
    for (std::size_t k = 0; k < n && !singular_; ++k) {
        std::size_t p = k;
        for (std::size_t r = k + 1; r < n; ++r) {
            if (std::abs(lu_(r, k)) > std::abs(lu_(p, k))) {
                p = r;
            }
        }
        if (!(std::abs(lu_(p, k)) > tiny)) {
            singular_ = true;
            break;
        }
        if (p != k) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(lu_(k, c), lu_(p, c));
            }
            std::swap(perm_[k], perm_[p]);
        }
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = lu_(r, k) / lu_(k, k);
            lu_(r, k) = f;
            if (f == 0.0) {
                continue;
            }
            for (std::size_t c = k + 1; c < n; ++c) {
                lu_(r, c) -= f * lu_(k, c);
            }
        }
    }
}

DenseSolveResult DenseLU::solve(std::span<const double> b) const
{
    const std::size_t n = a_.rows();
    if (b.size() != n) {
        throw std::invalid_argument("DenseLU::solve: rhs size mismatch");
    }
    DenseSolveResult out;
    if (singular_) {
        out = minimum_norm_solve(a_, b);
    } else {
        Vector x(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = b[perm_[i]];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double s = x[i];
            for (std::size_t c = 0; c < i; ++c) {
                s -= lu_(i, c) * x[c];
            }
            x[i] = s;
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = x[i];
            for (std::size_t c = i + 1; c < n; ++c) {
                s -= lu_(i, c) * x[c];
            }
            x[i] = s / lu_(i, i);
        }
        out.x = std::move(x);
        out.rank = n;
    }
    Vector r = a_.multiply(out.x);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] -= b[i];
    }
    const double bn = norm2(b);
    out.relative_residual = norm2(r) / (bn > 0.0 ? bn : 1.0);
    return out;
}

DenseSolveResult solve_dense_lu(const DenseMatrix& a, std::span<const double> b)
{
    if (a.cols() != a.rows() || b.size() != a.rows()) {
        throw std::invalid_argument("solve_dense_lu: matrix must be square and match rhs");
    }
    return DenseLU(a).solve(b);
}

// ---------------------------------------------------------------------------
// Sparse

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, const std::vector<std::vector<std::size_t>>& pattern)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0)
{
    if (pattern.size() != rows) {
        throw std::invalid_argument("SparseMatrix: pattern row count mismatch");
    }
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<std::size_t> cols_r = pattern[r];
        std::sort(cols_r.begin(), cols_r.end());
        cols_r.erase(std::unique(cols_r.begin(), cols_r.end()), cols_r.end());
        for (std::size_t c : cols_r) {
            if (c >= cols) {
                throw std::out_of_range("SparseMatrix: column index out of range");
            }
            col_idx_.push_back(c);
        }
        row_ptr_[r + 1] = col_idx_.size();
    }
    values_.assign(col_idx_.size(), 0.0);
}

void SparseMatrix::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

std::size_t SparseMatrix::find(std::size_t r, std::size_t c) const
{
    const auto begin = col_idx_.begin() + static_cast<long>(row_ptr_[r]);
    const auto end = col_idx_.begin() + static_cast<long>(row_ptr_[r + 1]);
    const auto it = std::lower_bound(begin, end, c);
    if (it == end || *it != c) {
        return values_.size();
    }
    return static_cast<std::size_t>(it - col_idx_.begin());
}

void SparseMatrix::add(std::size_t r, std::size_t c, double v)
{
    const std::size_t k = find(r, c);
    if (k == values_.size()) {
        throw std::out_of_range("SparseMatrix::add: entry not in pattern");
    }
    values_[k] += v;
}

double SparseMatrix::at(std::size_t r, std::size_t c) const
{
    const std::size_t k = find(r, c);
    return k == values_.size() ? 0.0 : values_[k];
}

Vector SparseMatrix::multiply(std::span<const double> x) const
{
    Vector y(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        double s = 0.0;
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            s += values_[k] * x[col_idx_[k]];
        }
        y[r] = s;
    }
    return y;
}

Vector SparseMatrix::multiply_transposed(std::span<const double> y) const
{
    Vector x(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            x[col_idx_[k]] += values_[k] * y[r];
        }
    }
    return x;
}

SparseSym::SparseSym(std::size_t n, const std::vector<std::vector<std::size_t>>& neighbours)
{
    std::vector<std::vector<std::size_t>> upper(n);
    for (std::size_t i = 0; i < n; ++i) {
        upper[i].push_back(i);
        for (std::size_t j : neighbours[i]) {
            if (j > i) {
                upper[i].push_back(j);
            } else if (j < i) {
                upper[j].push_back(i);
            }
        }
    }
    upper_ = SparseMatrix(n, n, upper);
}

void SparseSym::add(std::size_t i, std::size_t j, double v)
{
    if (i <= j) {
        upper_.add(i, j, v);
    } else {
        upper_.add(j, i, v);
    }
}

double SparseSym::at(std::size_t i, std::size_t j) const
{
    return i <= j ? upper_.at(i, j) : upper_.at(j, i);
}

Vector SparseSym::multiply(std::span<const double> x) const
{
    const auto rp = upper_.row_ptr();
    const auto ci = upper_.col_idx();
    const auto va = upper_.values();
    Vector y(size(), 0.0);
    for (std::size_t r = 0; r < size(); ++r) {
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
            const std::size_t c = ci[k];
            y[r] += va[k] * x[c];
            if (c != r) {
                y[c] += va[k] * x[r];
            }
        }
    }
    return y;
}

DenseMatrix to_dense(const SparseSym& a)
{
    DenseMatrix d(a.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            d(i, j) = a.at(i, j);
        }
    }
    return d;
}

DenseMatrix to_dense(const SparseMatrix& a)
{
    DenseMatrix d(a.rows(), a.cols());
    const auto rp = a.row_ptr();
    const auto ci = a.col_idx();
    const auto va = a.values();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
            d(r, ci[k]) = va[k];
        }
    }
    return d;
}

CgResult solve_cg(const SparseSym& a, std::span<const double> b, double tol, int max_iter)
{
    const std::size_t n = a.size();
    if (b.size() != n) {
        throw std::invalid_argument("solve_cg: size mismatch");
    }
    if (max_iter <= 0) {
        max_iter = static_cast<int>(std::max<std::size_t>(10 * n, 100));
    }
    CgResult out;
    out.x.assign(n, 0.0);
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        return out;
    }
    Vector inv_diag(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a.diagonal(i);
        inv_diag[i] = d > 0.0 ? 1.0 / d : 1.0;
    }
    Vector r(b.begin(), b.end());
    Vector z(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = inv_diag[i] * r[i];
    }
    Vector p = z;
    double rz = dot(r, z);
    double rnorm = bnorm;
    int it = 0;
    while (rnorm > tol * bnorm) {
        if (it >= max_iter) {
            throw CgError("solve_cg: no convergence after " + std::to_string(max_iter) +
                              " iterations, relative residual " + std::to_string(rnorm / bnorm),
                          rnorm / bnorm);
        }
        const Vector ap = a.multiply(p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            throw CgError("solve_cg: breakdown (p^T A p <= 0)", rnorm / bnorm);
        }
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            out.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        // recompute the true residual periodically to avoid drift below the tolerance
        if ((it + 1) % 50 == 0) {
            const Vector ax = a.multiply(out.x);
            for (std::size_t i = 0; i < n; ++i) {
                r[i] = b[i] - ax[i];
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = inv_diag[i] * r[i];
        }
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = z[i] + beta * p[i];
        }
        rnorm = norm2(r);
        ++it;
    }
    out.iterations = it;
    out.relative_residual = rnorm / bnorm;
    return out;
}

} // namespace pme
