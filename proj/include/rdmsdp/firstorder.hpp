#pragma once

// Douglas-Rachford splitting on the primal (equivalently ADMM on the dual):
//
//   X  = P_K(Z)
//   U  = prox_tf(2X - Z),  prox_tf(Y) = Y + tC - A^*(A(Y + tC) - b)
//   Z' = Z + U - X
//
// All routines expect a NormalizedProblem (A A^* = I).

#include "rdmsdp/sdpmodel.hpp"

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rdmsdp {

struct FirstOrderParams {
  double t0 = 1.0;
  double delta = 1.2;
  double gamma = 0.9;
  int window = 8;
  double t_min = 1e-4;
  double t_max = 1e4;
  bool adapt_penalty = true;

  int max_iter = 5000;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  double tol_residual = 0.0;  // also require |F|_F <= tol_residual when > 0

  bool record_trace = true;
  bool random_start = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// F(Z) together with the intermediate points of its evaluation.
struct FixedPointEval {
  BlockVec f;                              // X - U
  BlockVec x;                              // P_K(Z)
  BlockVec u;                              // prox_tf(2X - Z)
  std::vector<SpectralDecomp> spectra;     // of the matrix blocks of Z
  Eigen::VectorXd w;                       // A(2X - Z + tC) - b
  double norm = 0.0;                       // |F|_F
};

BlockVec prox_affine(const BlockVec& y, double t, const NormalizedProblem& problem);
FixedPointEval fixed_point_residual(const BlockVec& z, double t, const NormalizedProblem& problem);

/// Primal-dual triple in the coordinates of the original problem.
struct Iterates {
  BlockVec x;
  BlockVec s;
  Eigen::VectorXd y;
};

/// Iterates attached to an evaluation of F at z:
///   X = P_K(z),  S = (X - z)/t,  y = w/t  (normalized, then mapped back).
/// With these, A^* y - C - S = F/t and A X - b = A F.
Iterates recover_at(const FixedPointEval& eval, const BlockVec& z, double t, const NormalizedProblem& problem);

struct DrsState {
  BlockVec z;
  double t = 1.0;
  int iter = 0;
  long f_evals = 0;

  // Evaluation behind the last step and the point / penalty it used.
  std::optional<FixedPointEval> last;
  BlockVec z_eval;
  double t_eval = 0.0;

  std::deque<double> ratios;  // eta_p / eta_d, most recent last
};

DrsState make_drs_state(const BlockVec& z0, double t);

void drs_iterate(DrsState& state, const NormalizedProblem& problem);

/// One step after the penalty changed from t1 to t2:
///   X = P_K(Z),  Z~ = X + (t2/t1)(Z - X),  then a plain step from Z~ with t2.
/// With t1 == t2 this is drs_iterate.
void drs_iterate_rescaled(DrsState& state, double t1, double t2, const NormalizedProblem& problem);

/// Throws Error when no step has been taken yet.
Iterates recover_iterates(const DrsState& state, const NormalizedProblem& problem);

/// Multiplicative penalty rule on the mean of the ratio window.
double update_penalty(const std::deque<double>& ratios, double t, const FirstOrderParams& params);

/// Z0 that reproduces the ADMM start X = S = 0:  t (I - A^*A) C + A^* b.
BlockVec admm_start(const NormalizedProblem& problem, double t);

/// Number of eigenvalues >= 1e-8 of P_K(Z) per block (vector blocks: positive entries).
std::vector<int> block_ranks(const FixedPointEval& eval, const ConeSpec& cone);

struct TraceRow {
  int iter = 0;
  std::string stage;
  double eta_p = 0.0;
  double eta_d = 0.0;
  double eta_g = 0.0;
  double norm_f = 0.0;
  double penalty = 0.0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double mu = std::numeric_limits<double>::quiet_NaN();
  int cg_iters = 0;
  double wall_seconds = 0.0;
  std::vector<int> ranks;
};

struct SolveResult {
  Iterates iterates;
  ResidualReport report;
  std::vector<TraceRow> trace;
  bool converged = false;
  int iterations = 0;
  long f_evals = 0;
  double wall_seconds = 0.0;
  double norm_f = 0.0;
  double t = 0.0;
  BlockVec z;
  std::vector<int> ranks;
  int max_unsuccessful_run = 0;
};

/// Runs DRS from z0 (zero, random per params, or the given point).
SolveResult run_first_order(const NormalizedProblem& problem, const FirstOrderParams& params,
                            const std::optional<BlockVec>& z0 = std::nullopt);

/// True when the report meets the tolerances.
bool meets(const ResidualReport& r, double tol_primal, double tol_dual);

}  // namespace rdmsdp
