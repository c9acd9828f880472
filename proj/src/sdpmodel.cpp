#include "rdmsdp/sdpmodel.hpp"

#include "rdmsdp/error.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace rdmsdp {

std::vector<MatrixEntry> canonical_entries(std::vector<MatrixEntry> entries) {
  for (auto& e : entries)
    if (e.i > e.j) std::swap(e.i, e.j);
  auto key = [](const MatrixEntry& e) { return std::tie(e.row, e.block, e.j, e.i); };
  std::stable_sort(entries.begin(), entries.end(),
                   [&](const MatrixEntry& a, const MatrixEntry& b) { return std::make_tuple(a.row, a.block, a.i, a.j) < std::make_tuple(b.row, b.block, b.i, b.j); });
  std::vector<MatrixEntry> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (!out.empty() && key(out.back()) == key(e))
      out.back().value += e.value;
    else
      out.push_back(e);
  }
  std::erase_if(out, [](const MatrixEntry& e) { return e.value == 0.0; });
  return out;
}

ConstraintOperator::ConstraintOperator(const ConeSpec& cone, int rows, std::vector<MatrixEntry> entries)
    : cone_(cone), rows_(rows), entries_(canonical_entries(std::move(entries))) {
  if (rows <= 0) throw ShapeError("constraint operator needs at least one row");
  std::vector<std::vector<Eigen::Triplet<double>>> trips(cone.size());
  const double r2 = std::sqrt(2.0);
  for (const auto& e : entries_) {
    if (e.row < 0 || e.row >= rows) throw ShapeError("entry row " + std::to_string(e.row) + " out of range");
    if (e.block < 0 || static_cast<std::size_t>(e.block) >= cone.size())
      throw ShapeError("entry block " + std::to_string(e.block) + " out of range");
    const auto& blk = cone[static_cast<std::size_t>(e.block)];
    if (e.i < 0 || e.j >= blk.size) throw ShapeError("entry index out of range in block " + std::to_string(e.block));
    auto& t = trips[static_cast<std::size_t>(e.block)];
    if (blk.is_matrix()) {
      const auto col = static_cast<int>(svec_index(static_cast<std::size_t>(e.i), static_cast<std::size_t>(e.j)));
      t.emplace_back(e.row, col, e.i == e.j ? e.value : r2 * e.value);
    } else {
      if (e.i != e.j) throw ShapeError("off-diagonal entry in vector block " + std::to_string(e.block));
      t.emplace_back(e.row, e.i, e.value);
    }
  }
  mats_.resize(cone.size());
  for (std::size_t j = 0; j < cone.size(); ++j) {
    mats_[j].resize(rows, static_cast<Eigen::Index>(cone[j].svec_dim()));
    mats_[j].setFromTriplets(trips[j].begin(), trips[j].end());
  }
}

namespace {

Eigen::VectorXd block_coords(const Eigen::MatrixXd& x, const ConeBlock& blk) {
  return blk.is_matrix() ? svec(x) : Eigen::VectorXd(x.col(0));
}

}  // namespace

Eigen::VectorXd ConstraintOperator::apply(const BlockVec& x) const {
  check_shape(x, cone_);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(rows_);
  for (std::size_t j = 0; j < cone_.size(); ++j) {
    if (mats_[j].nonZeros() == 0) continue;
    out += mats_[j] * block_coords(x[j], cone_[j]);
  }
  return out;
}

BlockVec ConstraintOperator::adjoint(const Eigen::VectorXd& y) const {
  if (y.size() != rows_) throw ShapeError("adjoint: vector length does not match row count");
  BlockVec out(cone_);
  for (std::size_t j = 0; j < cone_.size(); ++j) {
    if (mats_[j].nonZeros() == 0) continue;
    Eigen::VectorXd v = mats_[j].transpose() * y;
    if (cone_[j].is_matrix())
      out[j] = smat(v);
    else
      out[j].col(0) = v;
  }
  return out;
}

Eigen::MatrixXd ConstraintOperator::gram() const {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(rows_, rows_);
  for (const auto& a : mats_) {
    if (a.nonZeros() == 0) continue;
    Eigen::SparseMatrix<double> prod = a * a.transpose();
    g += Eigen::MatrixXd(prod);
  }
  return g;
}

void SdpProblem::validate() const {
  if (!(op.cone() == cone)) throw ShapeError("operator cone does not match problem cone");
  if (b.size() != op.rows()) throw ShapeError("right-hand side length does not match row count");
  check_shape(c, cone);
  if (!labels.empty() && labels.size() != cone.size()) throw ShapeError("label count does not match block count");
  if (!structure.empty() && structure.size() != cone.size())
    throw ShapeError("structure count does not match block count");
}

// ---------------------------------------------------------------------------

Eigen::VectorXd NormalizedProblem::apply(const BlockVec& x) const {
  const Eigen::VectorXd full = original.op.apply(x);
  Eigen::VectorXd v(rows());
  for (int k = 0; k < rows(); ++k) v[k] = full[kept[static_cast<std::size_t>(k)]];
  factor.triangularView<Eigen::Lower>().solveInPlace(v);
  return v;
}

Eigen::VectorXd NormalizedProblem::to_original(const Eigen::VectorXd& y) const {
  if (y.size() != rows()) throw ShapeError("normalized multiplier length mismatch");
  Eigen::VectorXd w = y;
  factor.transpose().triangularView<Eigen::Upper>().solveInPlace(w);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(original.rows());
  for (int k = 0; k < rows(); ++k) full[kept[static_cast<std::size_t>(k)]] = w[k];
  return full;
}

BlockVec NormalizedProblem::adjoint(const Eigen::VectorXd& y) const {
  return original.op.adjoint(to_original(y));
}

NormalizedProblem normalize(const SdpProblem& problem, double drop_tol) {
  problem.validate();
  Eigen::MatrixXd g = problem.op.gram();
  const int m = static_cast<int>(g.rows());
  std::vector<int> perm(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) perm[static_cast<std::size_t>(k)] = k;

  // Diagonal-pivoted Cholesky, in place on the permuted Gram matrix.
  double max_pivot = 0.0;
  int rank = 0;
  for (int k = 0; k < m; ++k) {
    int piv = k;
    for (int i = k + 1; i < m; ++i)
      if (g(i, i) > g(piv, piv)) piv = i;
    if (k == 0) max_pivot = g(piv, piv);
    if (max_pivot <= 0.0) throw Error("normalize: constraint operator is zero");
    if (g(piv, piv) < drop_tol * max_pivot) break;
    if (piv != k) {
      g.row(k).swap(g.row(piv));
      g.col(k).swap(g.col(piv));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(piv)]);
    }
    const double d = std::sqrt(g(k, k));
    g(k, k) = d;
    g.col(k).tail(m - k - 1) /= d;
    // Full symmetric trailing update so later symmetric swaps stay valid.
    const Eigen::VectorXd l = g.col(k).tail(m - k - 1);
    g.bottomRightCorner(m - k - 1, m - k - 1).noalias() -= l * l.transpose();
    rank = k + 1;
  }

  NormalizedProblem out;
  out.original = problem;
  out.kept.assign(perm.begin(), perm.begin() + rank);
  out.dropped.assign(perm.begin() + rank, perm.end());
  std::sort(out.dropped.begin(), out.dropped.end());
  out.factor = g.topLeftCorner(rank, rank).triangularView<Eigen::Lower>();
  Eigen::VectorXd bk(rank);
  for (int k = 0; k < rank; ++k) bk[k] = problem.b[out.kept[static_cast<std::size_t>(k)]];
  out.factor.triangularView<Eigen::Lower>().solveInPlace(bk);
  out.b = bk;
  return out;
}

// ---------------------------------------------------------------------------

ResidualReport residuals(const BlockVec& x, const Eigen::VectorXd& y, const BlockVec& s,
                         const SdpProblem& problem) {
  ResidualReport r;
  const Eigen::VectorXd ax = problem.op.apply(x);
  r.eta_p = (ax - problem.b).norm() / std::max(1.0, problem.b.norm());
  BlockVec dual = problem.op.adjoint(y);
  dual -= problem.c;
  dual -= s;
  r.eta_d = dual.norm() / std::max(1.0, problem.c.norm());
  r.primal_obj = problem.c.dot(x);
  r.dual_obj = problem.b.dot(y);
  r.eta_g = std::abs(r.dual_obj - r.primal_obj) / std::max(1.0, std::abs(r.primal_obj));
  return r;
}

// ---------------------------------------------------------------------------

SdpProblem split_box_blocks(const SdpProblem& problem) {
  if (!problem.cone.has(BlockKind::Box01)) return problem;
  problem.validate();
  ConeSpec cone;
  for (const auto& blk : problem.cone.blocks())
    cone.add(blk.kind == BlockKind::Box01 ? BlockKind::Psd : blk.kind, blk.size);

  std::vector<MatrixEntry> entries = problem.op.entries();
  std::vector<double> rhs(problem.b.data(), problem.b.data() + problem.b.size());
  std::vector<std::string> labels = problem.labels;
  std::vector<BlockPartition> structure = problem.structure;
  int row = problem.rows();
  for (std::size_t j = 0; j < problem.cone.size(); ++j) {
    const auto& blk = problem.cone[j];
    if (blk.kind != BlockKind::Box01) continue;
    const int w = static_cast<int>(cone.size());
    cone.add(BlockKind::Psd, blk.size);
    if (!labels.empty()) labels.push_back(labels[j] + ".slack");
    if (!structure.empty()) structure.push_back(structure[j]);
    // X_ab + W_ab = delta_ab; off-diagonal rows carry 1/2 on both (a,b) and (b,a).
    for (int bcol = 0; bcol < blk.size; ++bcol) {
      for (int a = 0; a <= bcol; ++a) {
        const double v = a == bcol ? 1.0 : 0.5;
        entries.push_back({row, static_cast<int>(j), a, bcol, v});
        entries.push_back({row, w, a, bcol, v});
        rhs.push_back(a == bcol ? 1.0 : 0.0);
        ++row;
      }
    }
  }
  SdpProblem out;
  out.cone = cone;
  out.op = ConstraintOperator(cone, row, std::move(entries));
  out.b = Eigen::Map<Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  out.c = BlockVec(cone);
  for (std::size_t j = 0; j < problem.cone.size(); ++j) out.c[j] = problem.c[j];
  out.labels = std::move(labels);
  out.structure = std::move(structure);
  return out;
}

BlockPartition block_structure(const SdpProblem& problem, std::size_t j) {
  const auto& blk = problem.cone[j];
  std::vector<std::pair<int, int>> pattern;
  if (blk.is_matrix()) {
    for (const auto& e : problem.op.entries())
      if (static_cast<std::size_t>(e.block) == j && e.i != e.j) pattern.emplace_back(e.i, e.j);
    const auto& c = problem.c[j];
    for (int b = 0; b < blk.size; ++b)
      for (int a = 0; a < b; ++a)
        if (c(b, a) != 0.0) pattern.emplace_back(a, b);
  }
  return detect_blocks(blk.size, pattern);
}

SdpProblem split_detected_blocks(const SdpProblem& problem) {
  problem.validate();
  struct Placement {
    int block = 0;
    int pos = 0;
  };
  ConeSpec cone;
  std::vector<std::string> labels;
  std::vector<std::vector<Placement>> where(problem.cone.size());
  std::vector<int> first_new(problem.cone.size());
  for (std::size_t j = 0; j < problem.cone.size(); ++j) {
    const auto& blk = problem.cone[j];
    first_new[j] = static_cast<int>(cone.size());
    const std::string base = problem.labels.empty() ? "block" + std::to_string(j) : problem.labels[j];
    where[j].resize(static_cast<std::size_t>(blk.size));
    if (!blk.is_matrix()) {
      cone.add(blk.kind, blk.size);
      labels.push_back(base);
      for (int i = 0; i < blk.size; ++i) where[j][static_cast<std::size_t>(i)] = {first_new[j], i};
      continue;
    }
    const BlockPartition part = problem.structure.empty() ? block_structure(problem, j) : problem.structure[j];
    if (part.dim() != blk.size) throw ShapeError("structure dimension does not match block " + std::to_string(j));
    for (int b = 0; b < part.count(); ++b) {
      const int nb = static_cast<int>(cone.size());
      const auto idx = part.block_indices(b);
      cone.add(blk.kind, static_cast<int>(idx.size()));
      labels.push_back(part.count() == 1 ? base : base + "[" + std::to_string(b) + "]");
      for (std::size_t k = 0; k < idx.size(); ++k)
        where[j][static_cast<std::size_t>(idx[k])] = {nb, static_cast<int>(k)};
    }
  }

  std::vector<MatrixEntry> entries;
  entries.reserve(problem.op.entries().size());
  for (const auto& e : problem.op.entries()) {
    const auto& pi = where[static_cast<std::size_t>(e.block)][static_cast<std::size_t>(e.i)];
    const auto& pj = where[static_cast<std::size_t>(e.block)][static_cast<std::size_t>(e.j)];
    if (pi.block != pj.block) throw Error("split_detected_blocks: coefficient couples two detected blocks");
    entries.push_back({e.row, pi.block, pi.pos, pj.pos, e.value});
  }

  SdpProblem out;
  out.cone = cone;
  out.op = ConstraintOperator(cone, problem.rows(), std::move(entries));
  out.b = problem.b;
  out.c = BlockVec(cone);
  for (std::size_t j = 0; j < problem.cone.size(); ++j) {
    const auto& blk = problem.cone[j];
    const auto& c = problem.c[j];
    for (int b = 0; b < blk.size; ++b) {
      const int a_end = blk.is_matrix() ? blk.size : b + 1;
      for (int a = blk.is_matrix() ? 0 : b; a < a_end; ++a) {
        const double v = blk.is_matrix() ? c(a, b) : c(b, 0);
        if (v == 0.0) continue;
        const auto& pa = where[j][static_cast<std::size_t>(a)];
        const auto& pb = where[j][static_cast<std::size_t>(b)];
        if (pa.block != pb.block) throw Error("split_detected_blocks: cost couples two detected blocks");
        if (blk.is_matrix())
          out.c[static_cast<std::size_t>(pa.block)](pa.pos, pb.pos) = v;
        else
          out.c[static_cast<std::size_t>(pa.block)](pa.pos, 0) = v;
      }
    }
  }
  out.labels = std::move(labels);
  return out;
}

}  // namespace rdmsdp
