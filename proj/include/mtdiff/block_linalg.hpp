#pragma once

// Block vectorization and block Kronecker products over uniformly partitioned
// dense matrices.
//
// Conventions shared by the whole library:
//   kron(X, Y) places X(i,j) * Y(k,l) at row i*rows(Y)+k, column j*cols(Y)+l.
//   bvec(X) walks the block grid column by column (block column outer, block
//   row inner) and vectorizes each block column-major.
//   block_kron(A, B) puts kron(A_ij, B_kl) at block row i*gridrows(B)+k and
//   block column j*gridcols(B)+l.
// With these choices bvec(x y^T) == block_kron(y, x) holds exactly.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "mtdiff/error.hpp"
#include "mtdiff/network.hpp"

namespace mtdiff {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A dense matrix viewed as a grid of equally sized blocks.
class BlockMatrix {
 public:
  BlockMatrix(MatrixXd data, Index block_rows, Index block_cols)
      : data_(std::move(data)), block_rows_(block_rows), block_cols_(block_cols) {
    if (block_rows_ < 1 || block_cols_ < 1 || data_.rows() % block_rows_ != 0 || data_.cols() % block_cols_ != 0)
      throw Error(ErrorCode::DimensionMismatch,
                  "matrix " + std::to_string(data_.rows()) + "x" + std::to_string(data_.cols()) +
                      " is not divisible into " + std::to_string(block_rows_) + "x" + std::to_string(block_cols_) +
                      " blocks");
  }
  BlockMatrix(MatrixXd data, Index block) : BlockMatrix(std::move(data), block, block) {}

  const MatrixXd& matrix() const noexcept { return data_; }
  Index block_rows() const noexcept { return block_rows_; }
  Index block_cols() const noexcept { return block_cols_; }
  Index grid_rows() const noexcept { return data_.rows() / block_rows_; }
  Index grid_cols() const noexcept { return data_.cols() / block_cols_; }

  auto block(Index i, Index j) const {
    return data_.block(i * block_rows_, j * block_cols_, block_rows_, block_cols_);
  }

 private:
  MatrixXd data_;
  Index block_rows_;
  Index block_cols_;
};

inline MatrixXd kron(const MatrixXd& x, const MatrixXd& y) {
  MatrixXd out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j)
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
  return out;
}

inline BlockMatrix block_kron(const BlockMatrix& a, const BlockMatrix& b) {
  const Index gr = a.grid_rows() * b.grid_rows();
  const Index gc = a.grid_cols() * b.grid_cols();
  const Index br = a.block_rows() * b.block_rows();
  const Index bc = a.block_cols() * b.block_cols();
  MatrixXd out(gr * br, gc * bc);
  for (Index i = 0; i < a.grid_rows(); ++i)
    for (Index j = 0; j < a.grid_cols(); ++j) {
      const MatrixXd aij = a.block(i, j);
      for (Index k = 0; k < b.grid_rows(); ++k)
        for (Index l = 0; l < b.grid_cols(); ++l) {
          const Index row = (i * b.grid_rows() + k) * br;
          const Index col = (j * b.grid_cols() + l) * bc;
          out.block(row, col, br, bc) = kron(aij, b.block(k, l));
        }
    }
  return BlockMatrix(std::move(out), br, bc);
}

inline VectorXd bvec(const BlockMatrix& x) {
  VectorXd out(x.matrix().size());
  const Index p = x.block_rows(), q = x.block_cols();
  Index pos = 0;
  for (Index l = 0; l < x.grid_cols(); ++l)
    for (Index k = 0; k < x.grid_rows(); ++k)
      for (Index c = 0; c < q; ++c)
        for (Index r = 0; r < p; ++r) out(pos++) = x.matrix()(k * p + r, l * q + c);
  return out;
}

/// Inverse of bvec for a grid_rows x grid_cols grid of p x q blocks.
inline BlockMatrix unbvec(const VectorXd& v, Index grid_rows, Index grid_cols, Index p, Index q) {
  if (v.size() != grid_rows * grid_cols * p * q)
    throw Error(ErrorCode::DimensionMismatch, "bvec length does not match the requested block layout");
  MatrixXd out(grid_rows * p, grid_cols * q);
  Index pos = 0;
  for (Index l = 0; l < grid_cols; ++l)
    for (Index k = 0; k < grid_rows; ++k)
      for (Index c = 0; c < q; ++c)
        for (Index r = 0; r < p; ++r) out(k * p + r, l * q + c) = v(pos++);
  return BlockMatrix(std::move(out), p, q);
}

/// Square N x N block layout with L x L blocks, the layout of every weight Σ.
inline BlockMatrix unbvec_square(const VectorXd& sigma, Index block) {
  const auto side = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(sigma.size()))));
  if (side * side != sigma.size() || side % block != 0)
    throw Error(ErrorCode::DimensionMismatch, "weight vector is not the bvec of a square block matrix");
  return unbvec(sigma, side / block, side / block, block, block);
}

/// bvec(v v^T) for a block vector with blocks of size block x 1.
inline VectorXd bvec_outer(const VectorXd& v, Index block) {
  return bvec(BlockMatrix(v * v.transpose(), block));
}

/// v^T Σ v evaluated as bvec(v v^T)^T σ. Σ is rebuilt from σ and must be symmetric.
inline double weighted_sq_norm(const VectorXd& v, const VectorXd& sigma, Index block, double sym_tol = 1e-12) {
  if (sigma.size() != v.size() * v.size())
    throw Error(ErrorCode::DimensionMismatch, "weight length must be (NL)^2");
  const MatrixXd s = unbvec_square(sigma, block).matrix();
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale)
    throw Error(ErrorCode::NonSymmetricWeight, "weight matrix rebuilt from sigma is not symmetric");
  return bvec_outer(v, block).dot(sigma);
}

/// (X ⊗ I_k) * Y without forming the Kronecker product; zero entries of X are skipped.
inline MatrixXd kron_identity_times(const MatrixXd& x, Index k, const MatrixXd& y) {
  if (x.cols() * k != y.rows()) throw Error(ErrorCode::DimensionMismatch, "kron_identity_times: shape mismatch");
  MatrixXd out = MatrixXd::Zero(x.rows() * k, y.cols());
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) {
      const double c = x(i, j);
      if (c != 0.0) out.middleRows(i * k, k).noalias() += c * y.middleRows(j * k, k);
    }
  return out;
}

/// (X ⊗ I_k) * v for a vector.
inline VectorXd kron_identity_times(const MatrixXd& x, Index k, const VectorXd& v) {
  return kron_identity_times(x, k, MatrixXd(v)).col(0);
}

}  // namespace mtdiff
