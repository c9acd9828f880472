#include "rdmsdp/rdm.hpp"

#include "rdmsdp/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

namespace rdmsdp::rdm {

namespace {

using Det = std::uint64_t;

// Fermionic sign convention: a_p^+ |..> picks up (-1)^(occupied orbitals below p).
bool annihilate(Det& det, int p, double& sign) {
  const Det bit = Det{1} << p;
  if (!(det & bit)) return false;
  if (std::popcount(det & (bit - 1)) % 2) sign = -sign;
  det &= ~bit;
  return true;
}

bool create(Det& det, int p, double& sign) {
  const Det bit = Det{1} << p;
  if (det & bit) return false;
  if (std::popcount(det & (bit - 1)) % 2) sign = -sign;
  det |= bit;
  return true;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

class Basis {
 public:
  Basis(int d, int n) {
    // Gosper's hack enumerates n-subsets in increasing order.
    Det v = (Det{1} << n) - 1;
    const Det limit = Det{1} << d;
    while (v < limit) {
      dets_.push_back(v);
      const Det c = v & (~v + 1);
      const Det r = v + c;
      v = (((r ^ v) >> 2) / c) | r;
    }
  }
  long size() const { return static_cast<long>(dets_.size()); }
  Det operator[](long k) const { return dets_[static_cast<std::size_t>(k)]; }
  long find(Det det) const {
    const auto it = std::lower_bound(dets_.begin(), dets_.end(), det);
    return it != dets_.end() && *it == det ? it - dets_.begin() : -1;
  }

 private:
  std::vector<Det> dets_;
};

std::vector<int> occupied(Det det, int d) {
  std::vector<int> out;
  for (int p = 0; p < d; ++p)
    if (det & (Det{1} << p)) out.push_back(p);
  return out;
}

Eigen::SparseMatrix<double> hamiltonian(const IntegralData& h, const Basis& basis) {
  const int d = h.d;
  std::vector<Eigen::Triplet<double>> trip;
  for (long col = 0; col < basis.size(); ++col) {
    const Det det = basis[col];
    const auto occ = occupied(det, d);
    for (int b : occ)
      for (int a = 0; a < d; ++a) {
        if (h.t(a, b) == 0.0) continue;
        Det x = det;
        double s = 1.0;
        annihilate(x, b, s);
        if (!create(x, a, s)) continue;
        trip.emplace_back(basis.find(x), col, s * h.t(a, b));
      }
    // a_i^+ a_j^+ a_l a_k
    for (int k : occ)
      for (int l : occ) {
        if (k == l) continue;
        Det x0 = det;
        double s0 = 1.0;
        annihilate(x0, k, s0);
        annihilate(x0, l, s0);
        for (int j = 0; j < d; ++j) {
          Det x1 = x0;
          double s1 = s0;
          if (!create(x1, j, s1)) continue;
          for (int i = 0; i < d; ++i) {
            const double v = h.v(i, j, k, l);
            if (v == 0.0) continue;
            Det x2 = x1;
            double s2 = s1;
            if (!create(x2, i, s2)) continue;
            trip.emplace_back(basis.find(x2), col, s2 * v);
          }
        }
      }
  }
  Eigen::SparseMatrix<double> m(basis.size(), basis.size());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

// Lowest eigenpair by restarted Lanczos with full reorthogonalization.
std::pair<double, Eigen::VectorXd> lanczos(const Eigen::SparseMatrix<double>& h) {
  const Eigen::Index n = h.rows();
  const int steps = static_cast<int>(std::min<Eigen::Index>(n, 120));
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  Eigen::VectorXd start(n);
  for (Eigen::Index i = 0; i < n; ++i) start[i] = nd(rng);
  start.normalize();

  double theta = 0.0;
  for (int restart = 0; restart < 100; ++restart) {
    Eigen::MatrixXd v(n, steps);
    Eigen::VectorXd alpha(steps), beta(steps);
    v.col(0) = start;
    int m = steps;
    for (int k = 0; k < steps; ++k) {
      Eigen::VectorXd w = h * v.col(k);
      alpha[k] = v.col(k).dot(w);
      for (int pass = 0; pass < 2; ++pass) w -= v.leftCols(k + 1) * (v.leftCols(k + 1).transpose() * w);
      beta[k] = w.norm();
      if (k + 1 == steps || beta[k] < 1e-12) {
        m = k + 1;
        break;
      }
      v.col(k + 1) = w / beta[k];
    }
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k) {
      tri(k, k) = alpha[k];
      if (k + 1 < m) tri(k, k + 1) = tri(k + 1, k) = beta[k];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    theta = es.eigenvalues()[0];
    Eigen::VectorXd ritz = v.leftCols(m) * es.eigenvectors().col(0);
    ritz.normalize();
    const double resid = (h * ritz - theta * ritz).norm();
    start = ritz;
    if (resid <= 1e-10 * std::max(1.0, std::abs(theta))) return {theta, ritz};
  }
  throw NumericalFault("Lanczos iteration did not converge", -1);
}

}  // namespace

FciResult fci_oracle(const IntegralData& integrals, long max_dimension) {
  integrals.validate();
  const int d = integrals.d;
  const int n = integrals.n;
  if (d > 62) throw Error("exact diagonalization supports at most 62 spin orbitals");
  if (binomial(d, n) > static_cast<double>(max_dimension))
    throw Error("N-electron sector too large for exact diagonalization");

  const Basis basis(d, n);
  const Eigen::SparseMatrix<double> h = hamiltonian(integrals, basis);

  FciResult out;
  out.dimension = basis.size();
  Eigen::VectorXd psi;
  if (basis.size() <= 2000) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(h)};
    if (es.info() != Eigen::Success) throw NumericalFault("Hamiltonian eigensolver failed", -1);
    out.energy = es.eigenvalues()[0];
    psi = es.eigenvectors().col(0);
  } else {
    std::tie(out.energy, psi) = lanczos(h);
  }

  out.rdm.gamma = Eigen::MatrixXd::Zero(d, d);
  out.rdm.big_gamma = Tensor4(d);
  for (long col = 0; col < basis.size(); ++col) {
    const double c = psi[col];
    if (c == 0.0) continue;
    const Det det = basis[col];
    const auto occ = occupied(det, d);
    for (int b : occ)
      for (int a = 0; a < d; ++a) {
        Det x = det;
        double s = 1.0;
        annihilate(x, b, s);
        if (!create(x, a, s)) continue;
        out.rdm.gamma(a, b) += s * c * psi[basis.find(x)];
      }
    for (int k : occ)
      for (int l : occ) {
        if (k == l) continue;
        Det x0 = det;
        double s0 = 1.0;
        annihilate(x0, k, s0);
        annihilate(x0, l, s0);
        for (int j = 0; j < d; ++j) {
          Det x1 = x0;
          double s1 = s0;
          if (!create(x1, j, s1)) continue;
          for (int i = 0; i < d; ++i) {
            Det x2 = x1;
            double s2 = s1;
            if (!create(x2, i, s2)) continue;
            out.rdm.big_gamma(i, j, k, l) += s2 * c * psi[basis.find(x2)];
          }
        }
      }
  }
  return out;
}

}  // namespace rdmsdp::rdm
