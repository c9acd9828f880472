#include "rdmsdp/error.hpp"
#include "rdmsdp/symcore.hpp"
#include "support/instances.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace rdmsdp;

namespace {

double frobenius_loop(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double acc = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) acc += a(i, j) * b(i, j);
  return acc;
}

}  // namespace

TEST_CASE("svec of small matrices") {
  const Eigen::VectorXd v = svec(Eigen::MatrixXd::Identity(2, 2));
  CHECK(v.size() == 3);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 0.0);
  CHECK(v[2] == 1.0);

  Eigen::MatrixXd u(2, 2);
  u << 1, 2, 2, 3;
  const Eigen::VectorXd w = svec(u);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(w[2] == 3.0);
}

TEST_CASE("svec preserves the Frobenius inner product") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = testsupport::random_symmetric(3, rng);
    const auto v = testsupport::random_symmetric(3, rng);
    const double ref = frobenius_loop(u, v);
    CHECK(std::abs(svec(u).dot(svec(v)) - ref) <= 1e-13 * std::max(1.0, std::abs(ref)));
    CHECK(std::abs(svec(u).norm() - u.norm()) <= 1e-13 * u.norm());
  }
}

TEST_CASE("smat inverts svec") {
  Eigen::VectorXd e(3);
  e << 1, 0, 1;
  CHECK(smat(e) == Eigen::MatrixXd::Identity(2, 2));
  CHECK(smat(Eigen::VectorXd::Zero(6)) == Eigen::MatrixXd::Zero(3, 3));

  std::mt19937_64 rng(11);
  const auto u = testsupport::random_symmetric(5, rng);
  CHECK((smat(svec(u)) - u).cwiseAbs().maxCoeff() <= 1e-15);
  const Eigen::VectorXd v = svec(u);
  CHECK(svec(smat(v)) == v);

  CHECK_THROWS_AS(smat(Eigen::VectorXd::Zero(4)), ShapeError);
}

TEST_CASE("spectral decomposition") {
  Eigen::MatrixXd z = Eigen::Vector2d(3, -1).asDiagonal();
  auto eig = spectral_decompose(z);
  CHECK(eig.lambda[0] == doctest::Approx(3.0));
  CHECK(eig.lambda[1] == doctest::Approx(-1.0));
  CHECK(eig.n_alpha == 1);
  CHECK(eig.alpha() == std::vector<int>{0});
  CHECK(eig.alphabar() == std::vector<int>{1});

  std::mt19937_64 rng(3);
  const auto r = testsupport::random_symmetric(20, rng);
  eig = spectral_decompose(r);
  const Eigen::MatrixXd rec = eig.q * eig.lambda.asDiagonal() * eig.q.transpose();
  CHECK((rec - r).norm() <= 1e-10 * std::max(1.0, r.norm()));
  CHECK((eig.q.transpose() * eig.q - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff() <= 1e-12);
  for (int i = 1; i < 20; ++i) CHECK(eig.lambda[i - 1] >= eig.lambda[i]);

  const Eigen::MatrixXd psd = r * r.transpose();
  CHECK(spectral_decompose(psd).n_alpha == 20);

  // Exact zeros belong to alpha.
  Eigen::MatrixXd zero_eig = Eigen::Vector3d(2, 0, -1).asDiagonal();
  CHECK(spectral_decompose(zero_eig).n_alpha == 2);
}

TEST_CASE("cone projections") {
  ConeSpec cone;
  cone.add(BlockKind::Psd, 2).add(BlockKind::Box01, 3).add(BlockKind::Nonneg, 3).add(BlockKind::Free, 2);
  BlockVec z(cone);
  z[0] = Eigen::Vector2d(2, -3).asDiagonal();
  z[1] = Eigen::Vector3d(2, 0.5, -1).asDiagonal();
  z[2].col(0) = Eigen::Vector3d(-1, 0, 4);
  z[3].col(0) = Eigen::Vector2d(-5, 5);
  const BlockVec p = project_cone(z, cone);
  CHECK((p[0] - Eigen::MatrixXd(Eigen::Vector2d(2, 0).asDiagonal())).norm() <= 1e-14);
  CHECK((p[1] - Eigen::MatrixXd(Eigen::Vector3d(1, 0.5, 0).asDiagonal())).norm() <= 1e-14);
  CHECK(p[2].col(0) == Eigen::Vector3d(0, 0, 4));
  CHECK(p[3] == z[3]);

  ConeSpec wrong;
  wrong.add(BlockKind::Psd, 3);
  CHECK_THROWS_AS(project_cone(z, wrong), ShapeError);
}

TEST_CASE("projection properties on random matrices") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto z = testsupport::random_symmetric(8, rng);
    const auto z2 = testsupport::random_symmetric(8, rng);
    const Eigen::MatrixXd p = project_psd(z);
    const Eigen::MatrixXd pm = project_psd(Eigen::MatrixXd(-z));
    CHECK((z - (p - pm)).cwiseAbs().maxCoeff() <= 1e-12);                 // Moreau
    CHECK((project_psd(p) - p).cwiseAbs().maxCoeff() <= 1e-12);            // idempotent
    CHECK(std::abs(frobenius_loop(z - p, p)) <= 1e-10 * z.squaredNorm());  // complementarity
    CHECK((project_psd(z2) - p).norm() <= (z2 - z).norm() * (1 + 1e-12));  // nonexpansive
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) CHECK(p(i, j) == p(j, i));
  }
}

TEST_CASE("block detection") {
  auto part = detect_blocks(4, {{0, 2}, {1, 3}});
  CHECK(part.sizes == std::vector<int>{2, 2});
  CHECK(part.block_indices(0) == std::vector<int>{0, 2});
  CHECK(part.block_indices(1) == std::vector<int>{1, 3});

  std::vector<std::pair<int, int>> dense;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) dense.emplace_back(i, j);
  CHECK(detect_blocks(6, dense).sizes == std::vector<int>{6});

  // Randomly permuted block-diagonal pattern with sizes (2, 5, 3).
  std::mt19937_64 rng(9);
  std::vector<int> perm(10);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::pair<int, int>> pattern;
  const std::vector<int> sizes{2, 5, 3};
  int off = 0;
  for (int s : sizes) {
    for (int a = off; a < off + s; ++a)
      for (int b = a + 1; b < off + s; ++b) pattern.emplace_back(perm[a], perm[b]);
    off += s;
  }
  part = detect_blocks(10, pattern);
  CHECK(part.sizes == std::vector<int>{5, 3, 2});
  std::set<int> seen(part.permutation.begin(), part.permutation.end());
  CHECK(seen.size() == 10);
  // Permuted pattern is block diagonal.
  std::vector<int> pos(10), owner(10);
  for (int k = 0; k < 10; ++k) pos[part.permutation[k]] = k;
  int start = 0;
  for (int b = 0; b < part.count(); ++b) {
    for (int k = start; k < start + part.sizes[b]; ++k) owner[k] = b;
    start += part.sizes[b];
  }
  for (const auto& [i, j] : pattern) CHECK(owner[pos[i]] == owner[pos[j]]);
}

TEST_CASE("block parallelism does not change results") {
  ConeSpec cone;
  for (int j = 0; j < 6; ++j) cone.add(BlockKind::Psd, 5 + j);
  std::mt19937_64 rng(1);
  BlockVec z(cone);
  for (int j = 0; j < 6; ++j) z[j] = testsupport::random_symmetric(5 + j, rng);
  setenv("RDMSDP_THREADS", "1", 1);
  const BlockVec serial = project_cone(z, cone);
  setenv("RDMSDP_THREADS", "4", 1);
  const BlockVec threaded = project_cone(z, cone);
  unsetenv("RDMSDP_THREADS");
  for (int j = 0; j < 6; ++j) CHECK(serial[j] == threaded[j]);
}
