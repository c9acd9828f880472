#pragma once

// Standard-form SDP over a product cone:
//
//   primal   max <C, X>   s.t.  A(X) = b,  X in K
//   dual     min b^T y    s.t.  S = A^*(y) - C in K^*
//
// Rows of A are stored per block in svec coordinates.

#include "rdmsdp/symcore.hpp"

#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace rdmsdp {

/// One coefficient entry: the (i, j) = (j, i) entry of A_{block, row}.
/// For vector blocks i == j is the component index.
struct MatrixEntry {
  int row = 0;
  int block = 0;
  int i = 0;
  int j = 0;
  double value = 0.0;

  friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
};

/// Sorts entries by (row, block, i, j) with i <= j, sums duplicates and drops
/// exact zeros.
std::vector<MatrixEntry> canonical_entries(std::vector<MatrixEntry> entries);

class ConstraintOperator {
 public:
  ConstraintOperator() = default;
  ConstraintOperator(const ConeSpec& cone, int rows, std::vector<MatrixEntry> entries);

  int rows() const { return rows_; }
  const ConeSpec& cone() const { return cone_; }
  /// Canonical entry list (see canonical_entries).
  const std::vector<MatrixEntry>& entries() const { return entries_; }
  /// rows x svec_dim(block j) coefficient matrix.
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& block_matrix(std::size_t j) const { return mats_[j]; }

  Eigen::VectorXd apply(const BlockVec& x) const;
  BlockVec adjoint(const Eigen::VectorXd& y) const;
  /// Dense A A^*.
  Eigen::MatrixXd gram() const;

 private:
  ConeSpec cone_;
  int rows_ = 0;
  std::vector<MatrixEntry> entries_;
  std::vector<Eigen::SparseMatrix<double, Eigen::RowMajor>> mats_;
};

struct SdpProblem {
  ConeSpec cone;
  ConstraintOperator op;
  Eigen::VectorXd b;
  BlockVec c;
  std::vector<std::string> labels;          // optional, one per block
  std::vector<BlockPartition> structure;    // optional, one per block

  int rows() const { return op.rows(); }
  /// Throws ShapeError when cone, operator, b and c disagree.
  void validate() const;
};

/// Problem whose kept rows are whitened so that A' A'^* = I:
///   A' = L^{-1} P A restricted to the kept rows, b' = L^{-1} P b.
struct NormalizedProblem {
  SdpProblem original;
  std::vector<int> kept;       // original row of each normalized row
  std::vector<int> dropped;    // rows found linearly dependent
  Eigen::MatrixXd factor;      // L, lower triangular, kept x kept
  Eigen::VectorXd b;           // b'

  const ConeSpec& cone() const { return original.cone; }
  const BlockVec& c() const { return original.c; }
  int rows() const { return static_cast<int>(kept.size()); }

  Eigen::VectorXd apply(const BlockVec& x) const;
  BlockVec adjoint(const Eigen::VectorXd& y) const;
  /// y in original coordinates with A^* y = A'^* y'.
  Eigen::VectorXd to_original(const Eigen::VectorXd& y) const;
};

NormalizedProblem normalize(const SdpProblem& problem, double drop_tol = 1e-10);

struct ResidualReport {
  double eta_p = 0.0;
  double eta_d = 0.0;
  double eta_g = 0.0;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
};

/// Infeasibilities and gap of (X, y, S) for the original problem:
///   eta_p = |A X - b| / max(1, |b|)
///   eta_d = |A^* y - C - S|_F / max(1, |C|_F)
///   eta_g = |b^T y - <C, X>| / max(1, |<C, X>|)
ResidualReport residuals(const BlockVec& x, const Eigen::VectorXd& y, const BlockVec& s,
                         const SdpProblem& problem);

/// Replaces every box01 block X (0 <= X <= I) by PSD blocks X and W with the
/// extra rows X + W = I. Problems without box01 blocks are returned unchanged.
SdpProblem split_box_blocks(const SdpProblem& problem);

/// Splits every matrix block with a known multi-block structure into its
/// diagonal sub-blocks. Exact when the structure covers the coefficient and
/// cost sparsity.
SdpProblem split_detected_blocks(const SdpProblem& problem);

/// Union sparsity of the coefficient matrices and cost of block j, fed to
/// detect_blocks.
BlockPartition block_structure(const SdpProblem& problem, std::size_t j);

}  // namespace rdmsdp
