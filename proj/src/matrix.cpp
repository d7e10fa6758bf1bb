#include "periodica/matrix.hpp"
#include "periodica/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <utility>

namespace periodica {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ * cols_ != data_.size()) {
        throw InvalidDimension("Matrix: data length does not match rows*cols");
    }
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InvalidDimension("matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) {
                c(i, j) += aik * b(k, j);
            }
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw InvalidDimension("matmul_nt: inner dimensions differ");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
            c(i, j) = s;
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw InvalidDimension("matmul_tn: inner dimensions differ");
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = a(k, i);
            if (aki == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) {
                c(i, j) += aki * b(k, j);
            }
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw InvalidDimension("add: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] += b.raw()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw InvalidDimension("sub: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.raw()[i] -= b.raw()[i];
    return c;
}

Matrix scale(const Matrix& a, double s) {
    Matrix c = a;
    for (double& v : c.raw()) v *= s;
    return c;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.raw()) m = std::max(m, std::fabs(v));
    return m;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.raw()) s += v * v;
    return std::sqrt(s);
}

Matrix identity(std::size_t n) {
    Matrix i(n, n);
    for (std::size_t k = 0; k < n; ++k) i(k, k) = 1.0;
    return i;
}

Matrix interp_matrix(std::size_t src_len, std::size_t dst_len) {
    if (src_len == 0 || dst_len == 0) {
        throw InvalidDimension("interp_matrix: lengths must be >= 1");
    }
    Matrix a(src_len, dst_len);
    if (src_len == 1) {
        // single input value is broadcast
        for (std::size_t j = 0; j < dst_len; ++j) a(0, j) = 1.0;
        return a;
    }
    for (std::size_t j = 0; j < dst_len; ++j) {
        // output index j maps to input coordinate j*(P-1)/(P'-1)
        double pos = (dst_len == 1)
                         ? 0.0
                         : static_cast<double>(j) * static_cast<double>(src_len - 1) /
                               static_cast<double>(dst_len - 1);
        auto lo = static_cast<std::size_t>(pos);
        if (lo >= src_len - 1) {
            a(src_len - 1, j) = 1.0;
            continue;
        }
        double frac = pos - static_cast<double>(lo);
        a(lo, j) = 1.0 - frac;
        a(lo + 1, j) = frac;
    }
    return a;
}

Matrix pinv(const Matrix& a, double rtol) {
    if (!a.all_finite()) throw InvalidValue("pinv: non-finite input");
    using Emat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Emat> m(a.data(), static_cast<Eigen::Index>(a.rows()),
                             static_cast<Eigen::Index>(a.cols()));
    Eigen::JacobiSVD<Emat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double cutoff = sv.size() > 0 ? rtol * sv(0) : 0.0;
    Eigen::VectorXd inv_sv(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        inv_sv(i) = sv(i) > cutoff ? 1.0 / sv(i) : 0.0;
    }
    Emat p = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j)
            out(i, j) = p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return out;
}

} // namespace periodica
