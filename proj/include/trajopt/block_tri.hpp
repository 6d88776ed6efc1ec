#pragma once

#include <Eigen/Dense>
#include <vector>

namespace trajopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Blocks are row-major so a stored block is one contiguous slice of the row.
using BlockRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Symmetric-structured block-tridiagonal matrix in a compressed dense row
/// format: each of the N block-rows holds three nb x nb blocks
/// [left | diag | right] contiguously. The left block of row 0 and the right
/// block of row N-1 are fixed zero padding, which keeps the per-row matvec
/// free of structural special cases.
class BlockTriMatrix {
 public:
  BlockTriMatrix() = default;
  BlockTriMatrix(int num_block_rows, int block_dim);

  int block_rows() const { return num_rows_; }
  int block_dim() const { return block_dim_; }
  int dim() const { return num_rows_ * block_dim_; }
  bool empty() const { return num_rows_ == 0; }

  Eigen::Map<const BlockRM> left(int row) const { return block(row, 0); }
  Eigen::Map<const BlockRM> diag(int row) const { return block(row, 1); }
  Eigen::Map<const BlockRM> right(int row) const { return block(row, 2); }

  // Boundary padding blocks (row 0 left, row N-1 right) cannot be assigned.
  void set_left(int row, const Eigen::Ref<const Matrix>& b);
  void set_diag(int row, const Eigen::Ref<const Matrix>& b);
  void set_right(int row, const Eigen::Ref<const Matrix>& b);

  /// y = M x with out-of-range neighbor blocks treated as zero.
  Vector matvec(const Eigen::Ref<const Vector>& x) const;

  /// Block-row product: y_row = left*x_{row-1} + diag*x_row + right*x_{row+1}.
  /// x is the full vector; only the one-block halo around `row` is read.
  void matvec_block(int row, const Eigen::Ref<const Vector>& x,
                    Eigen::Ref<Vector> y_block) const;

  Matrix to_dense() const;

  /// Extracts the tridiagonal blocks of a dense matrix (test oracle bridge).
  static BlockTriMatrix from_dense(const Eigen::Ref<const Matrix>& dense,
                                   int block_dim);

  /// Max over rows of ||right_i - left_{i+1}^T||_inf and ||diag_i - diag_i^T||_inf,
  /// combined as one scalar. Zero for an exactly symmetric-structured matrix.
  double max_asymmetry() const;

  /// Largest absolute entry over all stored blocks.
  double max_abs() const;

  /// Direct solve of M x = rhs for symmetric positive definite M via a block
  /// Thomas factorization (block Cholesky), O(N nb^3). The direct-solver
  /// baseline for the iterative path.
  Vector cholesky_solve(const Eigen::Ref<const Vector>& rhs) const;

  /// Marker set by builders whose output satisfies right_i == left_{i+1}^T.
  bool structurally_symmetric = false;

 private:
  Eigen::Map<const BlockRM> block(int row, int slot) const;
  Eigen::Map<BlockRM> block_mut(int row, int slot);
  void check_row(int row) const;
  void check_block_shape(const Eigen::Ref<const Matrix>& b) const;

  int num_rows_ = 0;
  int block_dim_ = 0;
  std::vector<double> data_;  // num_rows_ * 3 * block_dim_^2
};

}  // namespace trajopt
