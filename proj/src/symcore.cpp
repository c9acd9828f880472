#include "rdmsdp/symcore.hpp"

#include "rdmsdp/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rdmsdp {

namespace {

// Copies the lower triangle onto the upper one so (i,j) and (j,i) agree bitwise.
void mirror_lower(Eigen::MatrixXd& a) {
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
}

}  // namespace

std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Psd: return "psd";
    case BlockKind::Box01: return "box01";
    case BlockKind::Nonneg: return "nonneg";
    case BlockKind::Free: return "free";
  }
  return "?";
}

ConeSpec& ConeSpec::add(BlockKind kind, int size) {
  if (size <= 0) throw ShapeError("cone block size must be positive");
  blocks_.push_back({kind, size});
  return *this;
}

std::size_t ConeSpec::svec_dim() const {
  std::size_t total = 0;
  for (const auto& b : blocks_) total += b.svec_dim();
  return total;
}

bool ConeSpec::has(BlockKind kind) const {
  return std::any_of(blocks_.begin(), blocks_.end(), [&](const ConeBlock& b) { return b.kind == kind; });
}

bool operator==(const ConeSpec& a, const ConeSpec& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (a[j].kind != b[j].kind || a[j].size != b[j].size) return false;
  return true;
}

// ---------------------------------------------------------------------------

BlockVec::BlockVec(const ConeSpec& cone) {
  blocks_.reserve(cone.size());
  for (const auto& b : cone.blocks())
    blocks_.push_back(Eigen::MatrixXd::Zero(b.size, b.is_matrix() ? b.size : 1));
}

bool BlockVec::same_shape(const BlockVec& o) const {
  if (blocks_.size() != o.blocks_.size()) return false;
  for (std::size_t j = 0; j < blocks_.size(); ++j)
    if (blocks_[j].rows() != o.blocks_[j].rows() || blocks_[j].cols() != o.blocks_[j].cols())
      return false;
  return true;
}

BlockVec& BlockVec::operator+=(const BlockVec& o) {
  if (!same_shape(o)) throw ShapeError("BlockVec shape mismatch in +=");
  for (std::size_t j = 0; j < blocks_.size(); ++j) blocks_[j] += o.blocks_[j];
  return *this;
}

BlockVec& BlockVec::operator-=(const BlockVec& o) {
  if (!same_shape(o)) throw ShapeError("BlockVec shape mismatch in -=");
  for (std::size_t j = 0; j < blocks_.size(); ++j) blocks_[j] -= o.blocks_[j];
  return *this;
}

BlockVec& BlockVec::operator*=(double s) {
  for (auto& b : blocks_) b *= s;
  return *this;
}

BlockVec& BlockVec::axpy(double s, const BlockVec& o) {
  if (!same_shape(o)) throw ShapeError("BlockVec shape mismatch in axpy");
  for (std::size_t j = 0; j < blocks_.size(); ++j) blocks_[j] += s * o.blocks_[j];
  return *this;
}

double BlockVec::dot(const BlockVec& o) const {
  if (!same_shape(o)) throw ShapeError("BlockVec shape mismatch in dot");
  double acc = 0.0;
  for (std::size_t j = 0; j < blocks_.size(); ++j) acc += blocks_[j].cwiseProduct(o.blocks_[j]).sum();
  return acc;
}

double BlockVec::norm() const {
  double acc = 0.0;
  for (const auto& b : blocks_) acc += b.squaredNorm();
  return std::sqrt(acc);
}

double BlockVec::max_abs() const {
  double m = 0.0;
  for (const auto& b : blocks_)
    if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  return m;
}

void BlockVec::set_zero() {
  for (auto& b : blocks_) b.setZero();
}

BlockVec operator+(BlockVec a, const BlockVec& b) { return a += b; }
BlockVec operator-(BlockVec a, const BlockVec& b) { return a -= b; }
BlockVec operator*(double s, BlockVec a) { return a *= s; }

void check_shape(const BlockVec& x, const ConeSpec& cone) {
  if (x.size() != cone.size()) throw ShapeError("block count does not match cone");
  for (std::size_t j = 0; j < cone.size(); ++j) {
    const auto& b = cone[j];
    const auto cols = b.is_matrix() ? b.size : 1;
    if (x[j].rows() != b.size || x[j].cols() != cols)
      throw ShapeError("block " + std::to_string(j) + " does not match cone dimensions");
  }
}

// ---------------------------------------------------------------------------

Eigen::VectorXd svec(const Eigen::MatrixXd& u) {
  if (u.rows() != u.cols()) throw ShapeError("svec expects a square matrix");
  const auto n = static_cast<std::size_t>(u.rows());
  Eigen::VectorXd v(n * (n + 1) / 2);
  const double r2 = std::sqrt(2.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) v[svec_index(i, j)] = r2 * u(j, i);
    v[svec_index(j, j)] = u(j, j);
  }
  return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v) {
  const auto len = static_cast<std::size_t>(v.size());
  const auto n = static_cast<std::size_t>((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0 + 0.5);
  if (n * (n + 1) / 2 != len) throw ShapeError("smat: length " + std::to_string(len) + " is not triangular");
  Eigen::MatrixXd u(n, n);
  const double r2 = std::sqrt(2.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const double x = v[svec_index(i, j)] / r2;
      u(i, j) = x;
      u(j, i) = x;
    }
    u(j, j) = v[svec_index(j, j)];
  }
  return u;
}

Eigen::VectorXd svec(const BlockVec& x, const ConeSpec& cone) {
  check_shape(x, cone);
  Eigen::VectorXd out(cone.svec_dim());
  Eigen::Index off = 0;
  for (std::size_t j = 0; j < cone.size(); ++j) {
    if (cone[j].is_matrix()) {
      auto v = svec(x[j]);
      out.segment(off, v.size()) = v;
      off += v.size();
    } else {
      out.segment(off, cone[j].size) = x[j].col(0);
      off += cone[j].size;
    }
  }
  return out;
}

BlockVec smat(const Eigen::VectorXd& v, const ConeSpec& cone) {
  if (static_cast<std::size_t>(v.size()) != cone.svec_dim()) throw ShapeError("smat: length does not match cone");
  BlockVec x(cone);
  Eigen::Index off = 0;
  for (std::size_t j = 0; j < cone.size(); ++j) {
    const auto len = static_cast<Eigen::Index>(cone[j].svec_dim());
    if (cone[j].is_matrix())
      x[j] = smat(Eigen::VectorXd(v.segment(off, len)));
    else
      x[j].col(0) = v.segment(off, len);
    off += len;
  }
  return x;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

// ---------------------------------------------------------------------------

std::vector<int> SpectralDecomp::alpha() const {
  std::vector<int> idx(static_cast<std::size_t>(n_alpha));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::vector<int> SpectralDecomp::alphabar() const {
  std::vector<int> idx(static_cast<std::size_t>(dim() - n_alpha));
  std::iota(idx.begin(), idx.end(), n_alpha);
  return idx;
}

SpectralDecomp spectral_decompose(const Eigen::MatrixXd& z, int block_index) {
  if (z.rows() != z.cols()) throw ShapeError("spectral_decompose expects a square matrix");
  const Eigen::Index n = z.rows();
  SpectralDecomp out;
  if (n == 0) return out;
  // Householder tridiagonalization followed by implicit symmetric QR; reads
  // the lower triangle only.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(z, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw NumericalFault("symmetric eigensolver did not converge", block_index);
  // Ascending -> descending.
  out.lambda = solver.eigenvalues().reverse();
  out.q = solver.eigenvectors().rowwise().reverse();
  int k = 0;
  while (k < n && out.lambda[k] >= 0.0) ++k;
  out.n_alpha = k;
  return out;
}

Eigen::MatrixXd project_psd(const SpectralDecomp& eig) {
  const Eigen::Index n = eig.dim();
  const Eigen::Index k = eig.n_alpha;
  if (k == 0) return Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd b = eig.q.leftCols(k) * eig.lambda.head(k).cwiseSqrt().asDiagonal();
  Eigen::MatrixXd out(n, n);
  out.triangularView<Eigen::Lower>() = b * b.transpose();
  mirror_lower(out);
  return out;
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& z) { return project_psd(spectral_decompose(z)); }

Eigen::MatrixXd project_box01(const SpectralDecomp& eig) {
  const Eigen::VectorXd clipped = eig.lambda.cwiseMax(0.0).cwiseMin(1.0);
  Eigen::MatrixXd out(eig.dim(), eig.dim());
  out.triangularView<Eigen::Lower>() = eig.q * clipped.asDiagonal() * eig.q.transpose();
  mirror_lower(out);
  return out;
}

BlockVec project_cone(const BlockVec& z, const ConeSpec& cone, std::vector<SpectralDecomp>* spectra) {
  check_shape(z, cone);
  BlockVec out(cone);
  if (spectra) {
    spectra->clear();
    spectra->resize(cone.size());
  }
  for_each_block(cone.size(), [&](std::size_t j) {
    const auto& blk = cone[j];
    switch (blk.kind) {
      case BlockKind::Psd:
      case BlockKind::Box01: {
        auto eig = spectral_decompose(z[j], static_cast<int>(j));
        out[j] = blk.kind == BlockKind::Psd ? project_psd(eig) : project_box01(eig);
        if (spectra) (*spectra)[j] = std::move(eig);
        break;
      }
      case BlockKind::Nonneg:
        out[j] = z[j].cwiseMax(0.0);
        break;
      case BlockKind::Free:
        out[j] = z[j];
        break;
    }
  });
  return out;
}

// ---------------------------------------------------------------------------

std::vector<int> BlockPartition::block_indices(int b) const {
  int off = 0;
  for (int k = 0; k < b; ++k) off += sizes[static_cast<std::size_t>(k)];
  std::vector<int> idx(permutation.begin() + off, permutation.begin() + off + sizes[static_cast<std::size_t>(b)]);
  return idx;
}

BlockPartition detect_blocks(int n, const std::vector<std::pair<int, int>>& pattern) {
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  for (const auto& [i, j] : pattern) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw ShapeError("detect_blocks: pattern index out of range");
    const int a = find(i), b = find(j);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  // Roots are the smallest member of their component.
  std::vector<std::vector<int>> comps;
  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < n; ++v) {
    const int r = find(v);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[static_cast<std::size_t>(slot[r])].push_back(v);
  }
  std::stable_sort(comps.begin(), comps.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  BlockPartition out;
  out.permutation.reserve(static_cast<std::size_t>(n));
  for (const auto& c : comps) {
    out.sizes.push_back(static_cast<int>(c.size()));
    out.permutation.insert(out.permutation.end(), c.begin(), c.end());
  }
  return out;
}

}  // namespace rdmsdp
