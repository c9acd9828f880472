#pragma once

// Dense dual ADMM on a single-PSD-block problem, written directly from the
// augmented Lagrangian
//   L(y, S; X) = b^T y + <X, S - A^*y + C> + mu/2 |S - A^*y + C|^2
// without any of the library's splitting code.

#include "rdmsdp/sdpmodel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <vector>

namespace testsupport {

class DenseAdmm {
 public:
  DenseAdmm(const rdmsdp::SdpProblem& prob, double mu) : n_(prob.cone[0].size), mu_(mu) {
    const int m = prob.rows();
    const int len = n_ * (n_ + 1) / 2;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, len);
    for (const auto& e : prob.op.entries()) {
      const int col = e.j * (e.j + 1) / 2 + e.i;
      a(e.row, col) += e.i == e.j ? e.value : std::sqrt(2.0) * e.value;
    }
    // Orthonormal rows spanning the same space: A^T = Q R, A' = Q^T, b' = R^{-T} b.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a.transpose());
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(len, m);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    a_ = q.transpose();
    b_ = r.transpose().triangularView<Eigen::Lower>().solve(prob.b);
    c_ = to_vec(prob.c[0]);
    x_ = Eigen::VectorXd::Zero(len);
    s_ = Eigen::VectorXd::Zero(len);
  }

  void step() {
    // y = argmin_y L  <=>  A A^* y = A(S + C) + (A X - b)/mu
    y_ = a_ * (s_ + c_) + (a_ * x_ - b_) / mu_;
    const Eigen::VectorXd aty = a_.transpose() * y_;
    // S = argmin_{S psd} L  =  P(A^*y - C - X/mu)
    s_ = psd(aty - c_ - x_ / mu_);
    x_ = x_ + mu_ * (s_ - aty + c_);
  }

  Eigen::MatrixXd x() const { return to_mat(x_); }
  Eigen::MatrixXd s() const { return to_mat(s_); }

 private:
  Eigen::VectorXd to_vec(const Eigen::MatrixXd& u) const {
    Eigen::VectorXd v(n_ * (n_ + 1) / 2);
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i <= j; ++i) v[j * (j + 1) / 2 + i] = i == j ? u(i, i) : std::sqrt(2.0) * u(i, j);
    return v;
  }
  Eigen::MatrixXd to_mat(const Eigen::VectorXd& v) const {
    Eigen::MatrixXd u(n_, n_);
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i <= j; ++i) u(i, j) = u(j, i) = i == j ? v[j * (j + 1) / 2 + i] : v[j * (j + 1) / 2 + i] / std::sqrt(2.0);
    return u;
  }
  Eigen::VectorXd psd(const Eigen::VectorXd& v) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_mat(v));
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
    return to_vec(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
  }

  int n_;
  double mu_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd b_, c_, x_, s_, y_;
};

}  // namespace testsupport
