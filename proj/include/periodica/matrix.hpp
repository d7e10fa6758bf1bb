#ifndef PERIODICA_MATRIX_HPP
#define PERIODICA_MATRIX_HPP

#include <cstddef>
#include <vector>

namespace periodica {

/**
 * Dense real matrix, row-major, 64-bit.
 *
 * Deliberately minimal: only what the model graph needs. Values are
 * treated as immutable once a matrix has been handed to the tape.
 */
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool all_finite() const;
    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

// Plain (non-differentiable) kernels, used by the tape internals and by
// test oracles alike.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
double max_abs(const Matrix& a);
double frobenius_norm(const Matrix& a);
Matrix identity(std::size_t n);

/// Endpoint-aligned linear interpolation as a matrix: for a row vector x of
/// length src_len, x * A is x resampled to dst_len. Columns sum to 1.
Matrix interp_matrix(std::size_t src_len, std::size_t dst_len);

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// rtol * sigma_max are treated as zero.
Matrix pinv(const Matrix& a, double rtol = 1e-12);

} // namespace periodica

#endif
