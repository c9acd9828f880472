#include "rdmsdp/error.hpp"
#include "rdmsdp/sdpmodel.hpp"
#include "support/instances.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rdmsdp;

namespace {

SdpProblem trace_problem(int n) {
  ConeSpec cone;
  cone.add(BlockKind::Psd, n);
  std::vector<MatrixEntry> entries;
  for (int i = 0; i < n; ++i) entries.push_back({0, 0, i, i, 1.0});
  SdpProblem p;
  p.cone = cone;
  p.op = ConstraintOperator(cone, 1, entries);
  p.b = Eigen::VectorXd::Ones(1);
  p.c = BlockVec(cone);
  p.c[0] = -Eigen::MatrixXd::Identity(n, n);
  return p;
}

// Mixed-cone operator with sparse random rows.
SdpProblem mixed_problem(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  ConeSpec cone;
  cone.add(BlockKind::Psd, 4).add(BlockKind::Nonneg, 3).add(BlockKind::Psd, 3).add(BlockKind::Free, 2);
  std::vector<MatrixEntry> entries;
  for (int p = 0; p < m; ++p)
    for (std::size_t b = 0; b < cone.size(); ++b)
      for (int j = 0; j < cone[b].size; ++j)
        for (int i = cone[b].is_matrix() ? 0 : j; i <= j; ++i)
          if (ud(rng) < 0.4) entries.push_back({p, static_cast<int>(b), i, j, nd(rng)});
  SdpProblem prob;
  prob.cone = cone;
  prob.op = ConstraintOperator(cone, m, entries);
  prob.b = Eigen::VectorXd::Zero(m);
  prob.c = BlockVec(cone);
  return prob;
}

BlockVec random_element(const ConeSpec& cone, std::mt19937_64& rng) {
  BlockVec x(cone);
  std::normal_distribution<double> nd;
  for (std::size_t b = 0; b < cone.size(); ++b) {
    if (cone[b].is_matrix())
      x[b] = testsupport::random_symmetric(cone[b].size, rng);
    else
      for (int i = 0; i < cone[b].size; ++i) x[b](i, 0) = nd(rng);
  }
  return x;
}

// Dense matrix of the operator with one column per svec coordinate.
Eigen::MatrixXd dense_rows(const SdpProblem& p) {
  const auto len = static_cast<int>(p.cone.svec_dim());
  Eigen::MatrixXd a(p.rows(), len);
  for (int k = 0; k < len; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(len);
    e[k] = 1.0;
    a.col(k) = p.op.apply(smat(e, p.cone));
  }
  return a;
}

}  // namespace

TEST_CASE("apply and adjoint on the trace row") {
  const auto p = trace_problem(2);
  BlockVec x(p.cone);
  x[0] = Eigen::Vector2d(1, 2).asDiagonal();
  CHECK(p.op.apply(x)[0] == doctest::Approx(3.0));
  x.set_zero();
  CHECK(p.op.apply(x)[0] == 0.0);

  const BlockVec a = p.op.adjoint(Eigen::VectorXd::Ones(1));
  CHECK(a[0] == Eigen::MatrixXd::Identity(2, 2));
  CHECK(p.op.adjoint(Eigen::VectorXd::Zero(1)).norm() == 0.0);
  CHECK_THROWS_AS(p.op.adjoint(Eigen::VectorXd::Zero(2)), ShapeError);
}

TEST_CASE("adjoint identity on random pairs") {
  const auto p = mixed_problem(7, 17);
  std::mt19937_64 rng(23);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    const BlockVec x = random_element(p.cone, rng);
    Eigen::VectorXd y(7);
    for (int i = 0; i < 7; ++i) y[i] = nd(rng);
    const double lhs = p.op.apply(x).dot(y);
    const double rhs = x.dot(p.op.adjoint(y));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
  // Row p of A^* e_p reproduces the stored coefficient matrices.
  Eigen::VectorXd e = Eigen::VectorXd::Zero(7);
  e[2] = 1.0;
  const BlockVec a2 = p.op.adjoint(e);
  for (const auto& en : p.op.entries()) {
    if (en.row != 2) continue;
    const auto& blk = a2[static_cast<std::size_t>(en.block)];
    CHECK(blk(en.i, p.cone[en.block].is_matrix() ? en.j : 0) == doctest::Approx(en.value).epsilon(1e-15));
  }
}

TEST_CASE("gram matches the dense operator") {
  const auto p = mixed_problem(6, 3);
  const Eigen::MatrixXd a = dense_rows(p);
  CHECK((p.op.gram() - a * a.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("normalization") {
  SUBCASE("orthonormal rows are kept") {
    ConeSpec cone;
    cone.add(BlockKind::Nonneg, 3);
    SdpProblem p;
    p.cone = cone;
    p.op = ConstraintOperator(cone, 3, {{0, 0, 0, 0, 1.0}, {1, 0, 1, 1, 1.0}, {2, 0, 2, 2, 1.0}});
    p.b = Eigen::Vector3d(1, 2, 3);
    p.c = BlockVec(cone);
    const auto np = normalize(p);
    CHECK(np.rows() == 3);
    CHECK(np.dropped.empty());
    CHECK((np.factor - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
  }
  SUBCASE("duplicated row is dropped once") {
    auto p = testsupport::random_problem(4, 5, 2);
    std::vector<MatrixEntry> entries = p.op.entries();
    for (const auto& e : p.op.entries())
      if (e.row == 1) entries.push_back({5, e.block, e.i, e.j, e.value});
    p.op = ConstraintOperator(p.cone, 6, entries);
    Eigen::VectorXd b(6);
    b << p.b, p.b[1];
    p.b = b;
    const auto np = normalize(p);
    CHECK(np.rows() == 5);
    CHECK(np.dropped.size() == 1);
  }
  SUBCASE("random operator is whitened") {
    const auto p = testsupport::random_problem(6, 10, 4);
    const auto np = normalize(p);
    const int m = np.rows();
    Eigen::MatrixXd g(m, m);
    for (int k = 0; k < m; ++k) g.col(k) = np.apply(np.adjoint(Eigen::VectorXd::Unit(m, k)));
    CHECK((g - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-10);
    // Same feasible set: a point with A X = b satisfies A' X = b'.
    std::mt19937_64 rng(8);
    BlockVec x(p.cone);
    const auto gm = testsupport::random_symmetric(6, rng);
    x[0] = gm * gm.transpose();
    SdpProblem q = p;
    q.b = p.op.apply(x);
    const auto nq = normalize(q);
    CHECK((nq.apply(x) - nq.b).norm() <= 1e-10 * nq.b.norm());
    // Adjoint correspondence A'^* y' = A^* y.
    Eigen::VectorXd yp = Eigen::VectorXd::LinSpaced(m, -1, 1);
    CHECK((nq.adjoint(yp) - p.op.adjoint(nq.to_original(yp))).norm() <= 1e-12);
  }
  SUBCASE("zero operator") {
    ConeSpec cone;
    cone.add(BlockKind::Psd, 2);
    SdpProblem p;
    p.cone = cone;
    p.op = ConstraintOperator(cone, 1, {});
    p.b = Eigen::VectorXd::Ones(1);
    p.c = BlockVec(cone);
    CHECK_THROWS_AS(normalize(p), Error);
  }
}

TEST_CASE("residual report") {
  const auto inst = testsupport::constructed_instance(10, 15, 2, 31);
  auto r = residuals(inst.x_star, inst.y_star, inst.s_star, inst.problem);
  CHECK(r.eta_p <= 1e-10);
  CHECK(r.eta_d <= 1e-10);
  CHECK(r.eta_g <= 1e-10);

  std::mt19937_64 rng(2);
  Eigen::VectorXd y = Eigen::VectorXd::Random(15);
  r = residuals(inst.x_star, y, inst.s_star, inst.problem);
  CHECK(r.eta_p <= 1e-12);
  CHECK(r.eta_d > 0.0);

  const auto p = trace_problem(3);
  BlockVec zero(p.cone);
  SdpProblem q = p;
  q.b[0] = 4.0;
  r = residuals(zero, Eigen::VectorXd::Zero(1), zero, q);
  CHECK(r.eta_p == doctest::Approx(1.0));
  q.b[0] = 0.5;
  r = residuals(zero, Eigen::VectorXd::Zero(1), zero, q);
  CHECK(r.eta_p == doctest::Approx(0.5));
}

TEST_CASE("entries are canonicalized") {
  const auto e = canonical_entries({{0, 0, 2, 1, 1.0}, {0, 0, 1, 2, 2.0}, {0, 0, 0, 0, 0.0}, {0, 0, 0, 1, 1.0}});
  REQUIRE(e.size() == 2);
  CHECK(e[0] == MatrixEntry{0, 0, 0, 1, 1.0});
  CHECK(e[1] == MatrixEntry{0, 0, 1, 2, 3.0});
}

TEST_CASE("box blocks split into two PSD blocks") {
  ConeSpec cone;
  cone.add(BlockKind::Box01, 2);
  SdpProblem p;
  p.cone = cone;
  p.op = ConstraintOperator(cone, 1, {{0, 0, 0, 0, 1.0}, {0, 0, 1, 1, 1.0}});
  p.b = Eigen::VectorXd::Ones(1);
  p.c = BlockVec(cone);
  const auto s = split_box_blocks(p);
  CHECK(s.cone.size() == 2);
  CHECK(s.rows() == 4);
  BlockVec x(s.cone);
  x[0] = Eigen::Vector2d(0.25, 0.75).asDiagonal();
  x[1] = Eigen::MatrixXd::Identity(2, 2) - x[0];
  CHECK((s.op.apply(x) - s.b).norm() <= 1e-15);
}

TEST_CASE("detected blocks split exactly") {
  ConeSpec cone;
  cone.add(BlockKind::Psd, 4);
  SdpProblem p;
  p.cone = cone;
  p.op = ConstraintOperator(cone, 2, {{0, 0, 0, 2, 1.0}, {0, 0, 1, 1, 1.0}, {1, 0, 1, 3, 0.5}, {1, 0, 0, 0, 2.0}});
  p.b = Eigen::Vector2d(1, 1);
  p.c = BlockVec(cone);
  p.c[0](2, 2) = -1.0;
  const auto part = block_structure(p, 0);
  CHECK(part.sizes == std::vector<int>{2, 2});
  const auto s = split_detected_blocks(p);
  REQUIRE(s.cone.size() == 2);
  // The same point evaluated in both layouts.
  std::mt19937_64 rng(4);
  BlockVec x(cone);
  x[0] = testsupport::random_symmetric(4, rng);
  x[0](0, 1) = x[0](1, 0) = x[0](0, 3) = x[0](3, 0) = x[0](1, 2) = x[0](2, 1) = x[0](2, 3) = x[0](3, 2) = 0.0;
  BlockVec xs(s.cone);
  const std::vector<int> a{0, 2}, b{1, 3};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      xs[0](i, j) = x[0](a[i], a[j]);
      xs[1](i, j) = x[0](b[i], b[j]);
    }
  CHECK((s.op.apply(xs) - p.op.apply(x)).norm() <= 1e-15);
  CHECK(s.c.dot(xs) == doctest::Approx(p.c.dot(x)));
}
