#pragma once

// Variational two-electron reduced density matrix problem.
//
//   E = sum_ij T_ij gamma_ij + sum_ijkl V_ij,kl Gamma_ij,kl
//   gamma_ij = <a_i^+ a_j>,  Gamma_ij,kl = <a_i^+ a_j^+ a_l a_k>
//
// The dual variable y collects svec(gamma) and svec(Gamma~), where Gamma~ is
// Gamma restricted to i < j, k < l. Positivity conditions become blocks
// S_j = A_j^* y - C_j >= 0 and the trace / contraction identities become
// equality rows B^T y = c.

#include "rdmsdp/sdpmodel.hpp"

#include <string>
#include <utility>
#include <vector>

namespace rdmsdp::rdm {

/// Two-electron tensor stored densely, index ((i*d + j)*d + k)*d + l.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int d) : d_(d), data_(static_cast<std::size_t>(d) * d * d * d, 0.0) {}

  int dim() const { return d_; }
  double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * d_ + j) * d_ + k) * d_ + l;
  }
  int d_ = 0;
  std::vector<double> data_;
};

struct IntegralData {
  int d = 0;  // spin orbitals; 0 .. d/2-1 are alpha, d/2 .. d-1 beta
  int n = 0;  // electrons
  Eigen::MatrixXd t;
  Tensor4 v;

  static IntegralData zeros(int d, int n);
  /// Throws Error on odd d, N outside [1, d], asymmetric T or V_ij,kl != V_kl,ij.
  void validate(double tol = 1e-12) const;
  /// Every nonzero term preserves the number of alpha electrons.
  bool spin_conserving() const;
};

int spin_of(int orbital, int d);  // 0 alpha, 1 beta

struct ConditionSet {
  bool t1 = false;
  bool t2 = false;

  /// "pqg", "pqgt1" or "pqgt1t2"; throws Error otherwise.
  static ConditionSet parse(const std::string& name);
  std::string name() const;
};

/// p(i, j) = j - i + (2d - i)(i - 1)/2 for 1 <= i < j <= d.
int pair_index(int i, int j, int d);

/// Which svec coordinates of gamma and Gamma~ are kept as variables.
class VariableLayout {
 public:
  static VariableLayout full(int d);
  /// Only entries that conserve the number of alpha electrons.
  static VariableLayout spin(int d);

  int d() const { return d_; }
  int pairs() const { return d_ * (d_ - 1) / 2; }
  int size() const { return static_cast<int>(coords_.size()); }
  bool is_spin() const { return spin_; }
  /// Variable index of svec(gamma) coordinate (a <= b), or -1.
  int gamma_var(int a, int b) const;
  /// Variable index of svec(Gamma~) coordinate (p <= q, 0-based pairs), or -1.
  int pair_var(int p, int q) const;

  struct Coord {
    bool two_body = false;
    int r = 0;  // a or p
    int c = 0;  // b or q, r <= c
  };
  const std::vector<Coord>& coords() const { return coords_; }

 private:
  VariableLayout(int d, bool spin);
  int d_ = 0;
  bool spin_ = false;
  std::vector<Coord> coords_;
  std::vector<int> gamma_map_;  // d x d
  std::vector<int> pair_map_;   // D x D
};

/// Affine function of y: constant + sum coef_k y_k.
struct LinearForm {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;  // sorted by variable, no zeros

  double eval(const Eigen::VectorXd& y) const;
};

struct ConditionBlock {
  std::string label;
  int size = 0;
  std::vector<MatrixEntry> entries;  // row = variable, block unused, i <= j
  Eigen::MatrixXd constant;          // value of the block at y = 0
};

/// Positivity blocks gamma, I - gamma, P, Q, G and optionally T1, T2.
std::vector<ConditionBlock> assemble_conditions(const VariableLayout& layout, const ConditionSet& conditions);

struct Equalities {
  std::vector<LinearForm> rows;  // rows[r](y) = 0 encodes the r-th identity
  std::vector<std::string> labels;
};

/// tr(gamma) = N, tr(Gamma~) = N(N-1)/2, sum_k Gamma_ik,jk = (N-1) gamma_ij.
/// Rows that vanish identically under the layout are skipped.
Equalities assemble_equalities(const VariableLayout& layout, int n);

/// Objective vector b with b^T y = E for every point.
Eigen::VectorXd energy_vector(const IntegralData& integrals, const VariableLayout& layout);

struct BuildOptions {
  bool spin_layout = true;      // used when the integrals conserve spin
  bool detect_structure = true;
};

/// The 2-RDM SDP in the solver's standard form. Dual objective b^T y is the
/// energy bound; the equality rows act on a trailing free block.
SdpProblem build_sdp(const IntegralData& integrals, const ConditionSet& conditions,
                     const BuildOptions& options = {});
VariableLayout layout_for(const IntegralData& integrals, const BuildOptions& options = {});

/// One- and two-body density matrices of a state.
struct Rdm {
  Eigen::MatrixXd gamma;
  Tensor4 big_gamma;
};

Eigen::VectorXd point_to_y(const Rdm& rdm, const VariableLayout& layout);
/// Inverse of point_to_y: symmetric gamma and a Gamma with full antisymmetry and
/// Gamma_ij,kl = Gamma_kl,ij. Coordinates outside the layout are zero.
Rdm point_from_y(const Eigen::VectorXd& y, const VariableLayout& layout);
double energy(const IntegralData& integrals, const Rdm& rdm);

struct FciResult {
  double energy = 0.0;
  Rdm rdm;
  long dimension = 0;
};

/// Ground state of the N-electron sector by exact diagonalization.
/// Throws Error when binomial(d, N) exceeds max_dimension.
FciResult fci_oracle(const IntegralData& integrals, long max_dimension = 100000);

struct RepresentabilityReport {
  std::vector<std::string> labels;
  std::vector<double> lambda_min;
  std::vector<std::string> equality_labels;
  std::vector<double> equality_residuals;

  double min_eigenvalue() const;
  double max_equality_residual() const;
};

/// Evaluates every assembled block and equality row at the given point.
RepresentabilityReport verify_representable(const Rdm& rdm, int d, int n, const ConditionSet& conditions);

}  // namespace rdmsdp::rdm
