#pragma once

// Dense symmetric-matrix kernel: svec/smat, spectral decomposition, cone
// projections and sparsity-based block detection.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace rdmsdp {

enum class BlockKind { Psd, Box01, Nonneg, Free };

std::string to_string(BlockKind kind);

struct ConeBlock {
  BlockKind kind = BlockKind::Psd;
  int size = 0;

  bool is_matrix() const { return kind == BlockKind::Psd || kind == BlockKind::Box01; }
  /// Number of svec coordinates of this block.
  std::size_t svec_dim() const {
    const auto n = static_cast<std::size_t>(size);
    return is_matrix() ? n * (n + 1) / 2 : n;
  }
};

/// Ordered product of psd(n), box01(n), nonneg(n) and free(n) blocks.
class ConeSpec {
 public:
  ConeSpec() = default;
  explicit ConeSpec(std::vector<ConeBlock> blocks) : blocks_(std::move(blocks)) {}

  ConeSpec& add(BlockKind kind, int size);

  std::size_t size() const { return blocks_.size(); }
  const ConeBlock& operator[](std::size_t j) const { return blocks_[j]; }
  const std::vector<ConeBlock>& blocks() const { return blocks_; }
  std::size_t svec_dim() const;
  bool has(BlockKind kind) const;

  friend bool operator==(const ConeSpec& a, const ConeSpec& b);

 private:
  std::vector<ConeBlock> blocks_;
};

/// An element of a product of symmetric-matrix blocks and vector blocks.
/// Vector blocks are stored as n x 1 columns so the Frobenius inner product
/// is uniform across block kinds.
class BlockVec {
 public:
  BlockVec() = default;
  explicit BlockVec(const ConeSpec& cone);

  std::size_t size() const { return blocks_.size(); }
  Eigen::MatrixXd& operator[](std::size_t j) { return blocks_[j]; }
  const Eigen::MatrixXd& operator[](std::size_t j) const { return blocks_[j]; }
  std::vector<Eigen::MatrixXd>& blocks() { return blocks_; }
  const std::vector<Eigen::MatrixXd>& blocks() const { return blocks_; }

  BlockVec& operator+=(const BlockVec& o);
  BlockVec& operator-=(const BlockVec& o);
  BlockVec& operator*=(double s);
  /// this += s * o
  BlockVec& axpy(double s, const BlockVec& o);

  double dot(const BlockVec& o) const;
  double norm() const;
  double max_abs() const;
  void set_zero();
  bool same_shape(const BlockVec& o) const;

 private:
  std::vector<Eigen::MatrixXd> blocks_;
};

BlockVec operator+(BlockVec a, const BlockVec& b);
BlockVec operator-(BlockVec a, const BlockVec& b);
BlockVec operator*(double s, BlockVec a);

/// Throws ShapeError when x does not have the layout described by cone.
void check_shape(const BlockVec& x, const ConeSpec& cone);

// ---------------------------------------------------------------------------
// svec / smat

/// Position of (i, j), i <= j, in the column-by-column upper-triangle ordering.
inline std::size_t svec_index(std::size_t i, std::size_t j) { return j * (j + 1) / 2 + i; }

Eigen::VectorXd svec(const Eigen::MatrixXd& u);
Eigen::MatrixXd smat(const Eigen::VectorXd& v);

/// Concatenated svec coordinates of every block (vector blocks copied as is).
Eigen::VectorXd svec(const BlockVec& x, const ConeSpec& cone);
BlockVec smat(const Eigen::VectorXd& v, const ConeSpec& cone);

/// (A + A^T) / 2
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a);

// ---------------------------------------------------------------------------
// Spectral decomposition

struct SpectralDecomp {
  Eigen::MatrixXd q;          // orthogonal, columns are eigenvectors
  Eigen::VectorXd lambda;     // descending
  int n_alpha = 0;            // lambda[0 .. n_alpha) >= 0, the rest < 0

  int dim() const { return static_cast<int>(lambda.size()); }
  std::vector<int> alpha() const;
  std::vector<int> alphabar() const;
};

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order. Throws NumericalFault tagged with block_index when the
/// tridiagonal QR iteration does not converge.
SpectralDecomp spectral_decompose(const Eigen::MatrixXd& z, int block_index = -1);

Eigen::MatrixXd project_psd(const SpectralDecomp& eig);
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& z);
Eigen::MatrixXd project_box01(const SpectralDecomp& eig);

/// Euclidean projection onto the cone (box01 blocks onto {0 <= X <= I}).
/// When spectra is non-null it receives the decomposition of every matrix
/// block (empty entries for vector blocks).
BlockVec project_cone(const BlockVec& z, const ConeSpec& cone,
                      std::vector<SpectralDecomp>* spectra = nullptr);

// ---------------------------------------------------------------------------
// Block structure

struct BlockPartition {
  std::vector<int> permutation;  // permutation[k] = original index placed at position k
  std::vector<int> sizes;        // descending

  int dim() const { return static_cast<int>(permutation.size()); }
  int count() const { return static_cast<int>(sizes.size()); }
  /// Original indices of the b-th block, ascending.
  std::vector<int> block_indices(int b) const;
};

/// Connected components of the symmetric sparsity graph on n vertices.
/// Blocks are ordered by descending size, ties by smallest member; indices
/// inside a block keep ascending original order.
BlockPartition detect_blocks(int n, const std::vector<std::pair<int, int>>& pattern);

// ---------------------------------------------------------------------------
// Block-level parallelism

/// Worker cap from RDMSDP_THREADS (default: hardware concurrency).
int thread_cap();

/// Runs fn(j) for j in [0, count). Each call must only touch data owned by j.
void for_each_block(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace rdmsdp
