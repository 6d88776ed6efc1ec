#include "trajopt/block_tri.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajopt {

BlockTriMatrix::BlockTriMatrix(int num_block_rows, int block_dim)
    : num_rows_(num_block_rows), block_dim_(block_dim) {
  if (num_block_rows < 1 || block_dim < 1) {
    throw std::invalid_argument("BlockTriMatrix: need at least one block row and block_dim >= 1");
  }
  data_.assign(static_cast<std::size_t>(num_rows_) * 3 * block_dim_ * block_dim_, 0.0);
}

Eigen::Map<const BlockRM> BlockTriMatrix::block(int row, int slot) const {
  const std::size_t bsz = static_cast<std::size_t>(block_dim_) * block_dim_;
  return Eigen::Map<const BlockRM>(data_.data() + (static_cast<std::size_t>(row) * 3 + slot) * bsz,
                                   block_dim_, block_dim_);
}

Eigen::Map<BlockRM> BlockTriMatrix::block_mut(int row, int slot) {
  const std::size_t bsz = static_cast<std::size_t>(block_dim_) * block_dim_;
  return Eigen::Map<BlockRM>(data_.data() + (static_cast<std::size_t>(row) * 3 + slot) * bsz,
                             block_dim_, block_dim_);
}

void BlockTriMatrix::check_row(int row) const {
  if (row < 0 || row >= num_rows_) {
    throw std::invalid_argument("BlockTriMatrix: block row " + std::to_string(row) +
                                " out of range [0, " + std::to_string(num_rows_) + ")");
  }
}

void BlockTriMatrix::check_block_shape(const Eigen::Ref<const Matrix>& b) const {
  if (b.rows() != block_dim_ || b.cols() != block_dim_) {
    throw std::invalid_argument("BlockTriMatrix: expected " + std::to_string(block_dim_) + "x" +
                                std::to_string(block_dim_) + " block, got " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

void BlockTriMatrix::set_left(int row, const Eigen::Ref<const Matrix>& b) {
  check_row(row);
  check_block_shape(b);
  if (row == 0) {
    throw std::invalid_argument("BlockTriMatrix: row 0 has no left block (boundary padding)");
  }
  block_mut(row, 0) = b;
}

void BlockTriMatrix::set_diag(int row, const Eigen::Ref<const Matrix>& b) {
  check_row(row);
  check_block_shape(b);
  block_mut(row, 1) = b;
}

void BlockTriMatrix::set_right(int row, const Eigen::Ref<const Matrix>& b) {
  check_row(row);
  check_block_shape(b);
  if (row == num_rows_ - 1) {
    throw std::invalid_argument("BlockTriMatrix: last row has no right block (boundary padding)");
  }
  block_mut(row, 2) = b;
}

Vector BlockTriMatrix::matvec(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument("BlockTriMatrix matvec: expected vector of length " +
                                std::to_string(dim()) + ", got " + std::to_string(x.size()));
  }
  Vector y(dim());
  for (int row = 0; row < num_rows_; ++row) {
    matvec_block(row, x, y.segment(static_cast<Eigen::Index>(row) * block_dim_, block_dim_));
  }
  return y;
}

void BlockTriMatrix::matvec_block(int row, const Eigen::Ref<const Vector>& x,
                                  Eigen::Ref<Vector> y_block) const {
  const int nb = block_dim_;
  y_block.noalias() = diag(row) * x.segment(static_cast<Eigen::Index>(row) * nb, nb);
  if (row > 0) {
    y_block.noalias() += left(row) * x.segment(static_cast<Eigen::Index>(row - 1) * nb, nb);
  }
  if (row + 1 < num_rows_) {
    y_block.noalias() += right(row) * x.segment(static_cast<Eigen::Index>(row + 1) * nb, nb);
  }
}

Matrix BlockTriMatrix::to_dense() const {
  Matrix dense = Matrix::Zero(dim(), dim());
  const int nb = block_dim_;
  for (int row = 0; row < num_rows_; ++row) {
    if (row > 0) dense.block(row * nb, (row - 1) * nb, nb, nb) = left(row);
    dense.block(row * nb, row * nb, nb, nb) = diag(row);
    if (row + 1 < num_rows_) dense.block(row * nb, (row + 1) * nb, nb, nb) = right(row);
  }
  return dense;
}

BlockTriMatrix BlockTriMatrix::from_dense(const Eigen::Ref<const Matrix>& dense, int block_dim) {
  if (dense.rows() != dense.cols() || dense.rows() % block_dim != 0) {
    throw std::invalid_argument("BlockTriMatrix::from_dense: matrix size " +
                                std::to_string(dense.rows()) + "x" + std::to_string(dense.cols()) +
                                " is not square with block_dim " + std::to_string(block_dim));
  }
  const int rows = static_cast<int>(dense.rows()) / block_dim;
  BlockTriMatrix out(rows, block_dim);
  for (int row = 0; row < rows; ++row) {
    if (row > 0) out.set_left(row, dense.block(row * block_dim, (row - 1) * block_dim, block_dim, block_dim));
    out.set_diag(row, dense.block(row * block_dim, row * block_dim, block_dim, block_dim));
    if (row + 1 < rows) out.set_right(row, dense.block(row * block_dim, (row + 1) * block_dim, block_dim, block_dim));
  }
  return out;
}

Vector BlockTriMatrix::cholesky_solve(const Eigen::Ref<const Vector>& rhs) const {
  if (rhs.size() != dim()) {
    throw std::invalid_argument("BlockTriMatrix cholesky_solve: expected vector of length " +
                                std::to_string(dim()) + ", got " + std::to_string(rhs.size()));
  }
  const int nb = block_dim_;
  // Forward block elimination: Dhat_i = D_i - L_i Dhat_{i-1}^{-1} L_i',
  // y_i = rhs_i - L_i Dhat_{i-1}^{-1} y_{i-1}.
  std::vector<Eigen::LLT<Matrix>> factors;
  factors.reserve(num_rows_);
  Vector y = rhs;
  Matrix dhat = diag(0);
  factors.emplace_back(dhat);
  if (factors.back().info() != Eigen::Success) {
    throw std::runtime_error("BlockTriMatrix cholesky_solve: block 0 is not positive definite");
  }
  for (int i = 1; i < num_rows_; ++i) {
    const Matrix li = left(i);
    const Matrix solved = factors[i - 1].solve(li.transpose());  // Dhat_{i-1}^{-1} L_i'
    dhat = diag(i) - li * solved;
    factors.emplace_back(dhat);
    if (factors.back().info() != Eigen::Success) {
      throw std::runtime_error("BlockTriMatrix cholesky_solve: block " + std::to_string(i) +
                               " is not positive definite");
    }
    y.segment(static_cast<Eigen::Index>(i) * nb, nb) -=
        li * factors[i - 1].solve(Vector(y.segment(static_cast<Eigen::Index>(i - 1) * nb, nb)));
  }
  // Back substitution: x_i = Dhat_i^{-1} (y_i - R_i x_{i+1}).
  Vector x(dim());
  x.segment(static_cast<Eigen::Index>(num_rows_ - 1) * nb, nb) =
      factors.back().solve(Vector(y.segment(static_cast<Eigen::Index>(num_rows_ - 1) * nb, nb)));
  for (int i = num_rows_ - 2; i >= 0; --i) {
    const Vector adjusted = y.segment(static_cast<Eigen::Index>(i) * nb, nb) -
                            right(i) * x.segment(static_cast<Eigen::Index>(i + 1) * nb, nb);
    x.segment(static_cast<Eigen::Index>(i) * nb, nb) = factors[i].solve(adjusted);
  }
  return x;
}

double BlockTriMatrix::max_abs() const {
  double worst = 0.0;
  for (double v : data_) worst = std::max(worst, std::abs(v));
  return worst;
}

double BlockTriMatrix::max_asymmetry() const {
  double worst = 0.0;
  for (int row = 0; row < num_rows_; ++row) {
    worst = std::max(worst, (diag(row) - diag(row).transpose()).cwiseAbs().maxCoeff());
    if (row + 1 < num_rows_) {
      worst = std::max(worst,
                       (right(row) - left(row + 1).transpose()).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace trajopt
