#pragma once

// Adaptive semi-smooth Newton method on the DRS fixed-point residual F(Z).
// Newton systems (J + mu I) S = -F with J = M + D(I - 2M), D = I - A^*A,
// are reduced to an m x m symmetric positive definite system solved by CG.

#include "rdmsdp/firstorder.hpp"

#include <functional>
#include <optional>

namespace rdmsdp {

struct NewtonParams {
  double tau = 0.1;
  double nu = 0.9;
  double eta1 = 0.2;
  double eta2 = 0.8;
  double gamma1 = 2.0;
  double gamma2 = 10.0;
  double lambda_floor = 1e-6;
  double lambda0 = 1.0;
  int cg_max = 0;  // 0: min(m, 300)
  int direct_max_rows = 1000;  // dense solve of the reduced system when CG falls short
  int stall_limit = 20;          // steps without an accepted Newton step before a DRS block; 0 disables
  int fallback_drs_iters = 200;  // length of that block; lambda restarts at lambda0 afterwards
  int warmup_iters = 300;
  int max_iter = 2000;
  double eta_p_tol = 3e-6;
  double eta_d_tol = 3e-7;
  double tol_residual = 0.0;  // also require |F|_F <= tol_residual when > 0
  bool adapt_penalty_newton = false;
  FirstOrderParams first_order;  // warmup settings; tolerances are overridden

  void validate() const;

  /// Low-accuracy profile: eta_p < 3e-6, eta_d < 3e-7.
  static NewtonParams ssn_l();
  /// High-accuracy dual profile: eta_p < 1e-4, eta_d < 1e-9, penalty range x10.
  static NewtonParams ssn_h();
};

/// Directional-derivative data of P_K at Z for one block.
struct BlockJacobian {
  BlockKind kind = BlockKind::Psd;
  SpectralDecomp eig;       // matrix blocks
  Eigen::MatrixXd k;        // |alpha| x |alphabar|: lambda_i / (lambda_i - lambda_j)
  Eigen::MatrixXd l;        // mu k / (mu + 1 - k)
  Eigen::VectorXd mask;     // vector blocks: derivative of the projection per entry
};

struct JacobianInfo {
  double mu = 0.0;
  std::vector<BlockJacobian> blocks;
};

/// Requires the spectra of an evaluation at Z (matrix blocks) and Z itself
/// (vector blocks). Box01 blocks are not supported.
JacobianInfo jacobian_info(const BlockVec& z, const std::vector<SpectralDecomp>& spectra,
                           const ConeSpec& cone, double mu);

enum class TPath { Auto, SmallAlpha, LargeAlpha };

BlockVec apply_M(const JacobianInfo& info, const BlockVec& s);
BlockVec apply_T(const JacobianInfo& info, const BlockVec& s, TPath path = TPath::Auto);
/// J[S] = M[S] + D(S - 2 M[S]) with D = I - A^*A.
BlockVec apply_J(const JacobianInfo& info, const BlockVec& s, const NormalizedProblem& problem);

struct NewtonDirection {
  BlockVec s;
  double r_norm = 0.0;  // |(J + mu I) S + F|_F evaluated directly
  int cg_iters = 0;
  bool satisfied = false;  // inexactness rule met
};

NewtonDirection newton_direction(const JacobianInfo& info, const BlockVec& f, double lambda, double norm_f,
                                 const NormalizedProblem& problem, const NewtonParams& params);

/// V = Z - (<FU, Z - U> / |FU|^2) FU. Throws Error when FU = 0.
BlockVec hyperplane_project(const BlockVec& z, const BlockVec& u, const BlockVec& fu);

enum class StepKind { Newton, Projection, DrsFallback, Unsuccessful };
std::string to_string(StepKind kind);

struct AssnState {
  BlockVec z;
  double t = 1.0;
  double xi = 0.0;
  double lambda = 1.0;
  FixedPointEval fz;  // F at z
  long f_evals = 0;
  int iter = 0;
  StepKind last = StepKind::Newton;
  double last_mu = 0.0;
  int last_cg = 0;
  int stalled = 0;  // consecutive iterations without an accepted Newton step
};

AssnState make_assn_state(const BlockVec& z, double t, const NormalizedProblem& problem, const NewtonParams& params);

/// Replaces the Newton direction; used by tests to exercise branch logic.
using DirectionOverride = std::function<BlockVec(const AssnState&)>;

void assn_iterate(AssnState& state, const NewtonParams& params, const NormalizedProblem& problem,
                  const DirectionOverride& force = {});

SolveResult run_assn(const NormalizedProblem& problem, const NewtonParams& params,
                     const std::optional<BlockVec>& z0 = std::nullopt);

}  // namespace rdmsdp
