#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pme {

using Vector = std::vector<double>;

/// Symmetric-or-not tridiagonal matrix; sub[i] = A(i+1, i), super[i] = A(i, i+1).
struct TriDiagMatrix {
    explicit TriDiagMatrix(std::size_t n = 0) : sub(n ? n - 1 : 0), diag(n), super(n ? n - 1 : 0) {}

    std::size_t size() const { return diag.size(); }
    double at(std::size_t i, std::size_t j) const;
    Vector multiply(std::span<const double> x) const;

    std::vector<double> sub;
    std::vector<double> diag;
    std::vector<double> super;
};

/// Rectangular matrix whose row r is nonzero only in columns r + shift - 2 .. r + shift + 2.
class BandedRect {
public:
    static constexpr int half_bandwidth = 2;

    BandedRect(std::size_t rows, std::size_t cols, long shift);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    long shift() const { return shift_; }

    double at(std::size_t r, std::size_t c) const;
    /// Throws std::out_of_range when (r, c) falls outside the band.
    void add(std::size_t r, std::size_t c, double v);

    Vector multiply(std::span<const double> x) const;
    Vector multiply_transposed(std::span<const double> y) const;
    BandedRect operator-(const BandedRect& other) const;

private:
    bool in_band(std::size_t r, std::size_t c) const;
    std::size_t slot(std::size_t r, std::size_t c) const;

    std::size_t rows_;
    std::size_t cols_;
    long shift_;
    std::vector<double> data_;
};

/// Row-major dense matrix.
class DenseMatrix {
public:
    DenseMatrix(std::size_t rows = 0, std::size_t cols = 0) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    Vector multiply(std::span<const double> x) const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

DenseMatrix to_dense(const TriDiagMatrix& a);
DenseMatrix to_dense(const BandedRect& a);

/// Raised when an SPD factorization meets a non-positive pivot.
class PivotError : public std::runtime_error {
public:
    PivotError(const std::string& what, std::size_t index) : std::runtime_error(what), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// LDL^T solve of a symmetric positive definite tridiagonal system.
Vector solve_tridiag_spd(const TriDiagMatrix& a, std::span<const double> b);

struct DenseSolveResult {
    Vector x;
    bool rank_deficient = false;
    std::size_t rank = 0;
    /// ||Ax - b||_2 / max(||b||_2, tiny)
    double relative_residual = 0.0;
};

/// Gaussian elimination with partial pivoting. Rank-deficient systems fall back to the
/// minimum-norm least-squares solution and are flagged.
DenseSolveResult solve_dense_lu(const DenseMatrix& a, std::span<const double> b);

/// LU factorization with partial pivoting, reusable across right-hand sides. A numerically
/// singular matrix is kept as is and every solve returns the minimum-norm solution.
class DenseLU {
public:
    explicit DenseLU(DenseMatrix a);

    bool singular() const { return singular_; }
    DenseSolveResult solve(std::span<const double> b) const;

private:
    DenseMatrix a_;
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
    bool singular_ = false;
};

/// Compressed sparse row matrix with a fixed pattern; values are accumulated with add().
class SparseMatrix {
public:
    SparseMatrix() = default;
    /// pattern[r] lists the column indices of row r (any order, duplicates allowed).
    SparseMatrix(std::size_t rows, std::size_t cols, const std::vector<std::vector<std::size_t>>& pattern);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nonzeros() const { return values_.size(); }

    void set_zero();
    void add(std::size_t r, std::size_t c, double v);
    double at(std::size_t r, std::size_t c) const;

    Vector multiply(std::span<const double> x) const;
    Vector multiply_transposed(std::span<const double> y) const;

    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::size_t> col_idx() const { return col_idx_; }
    std::span<const double> values() const { return values_; }
    std::span<double> mutable_values() { return values_; }

private:
    std::size_t find(std::size_t r, std::size_t c) const;

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// Symmetric sparse matrix storing only the upper triangle (including the diagonal).
class SparseSym {
public:
    SparseSym() = default;
    /// neighbours[i] lists the indices coupled to i; only j >= i entries are kept.
    SparseSym(std::size_t n, const std::vector<std::vector<std::size_t>>& neighbours);

    std::size_t size() const { return upper_.rows(); }
    void set_zero() { upper_.set_zero(); }
    /// Adds v to A(i, j) (and therefore A(j, i)).
    void add(std::size_t i, std::size_t j, double v);
    double at(std::size_t i, std::size_t j) const;
    double diagonal(std::size_t i) const { return upper_.at(i, i); }

    Vector multiply(std::span<const double> x) const;

private:
    SparseMatrix upper_;
};

DenseMatrix to_dense(const SparseSym& a);
DenseMatrix to_dense(const SparseMatrix& a);

struct CgResult {
    Vector x;
    int iterations = 0;
    double relative_residual = 0.0;
};

class CgError : public std::runtime_error {
public:
    CgError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Jacobi-preconditioned conjugate gradients for symmetric positive (semi)definite systems.
/// Zero diagonal entries get a unit preconditioner. Throws CgError if max_iter is exceeded.
CgResult solve_cg(const SparseSym& a, std::span<const double> b, double tol = 1e-12, int max_iter = 0);

double norm2(std::span<const double> x);
double norm_inf(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);

} // namespace pme
