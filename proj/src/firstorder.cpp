#include "rdmsdp/firstorder.hpp"

#include "rdmsdp/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace rdmsdp {

void FirstOrderParams::validate() const {
  if (!(t0 > 0.0) || !(t_min > 0.0) || !(t_max >= t_min)) throw Error("penalty bounds must satisfy 0 < t_min <= t_max, t0 > 0");
  if (!(delta > 1.0)) throw Error("penalty balance threshold delta must exceed 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error("penalty factor gamma must lie in (0,1)");
  if (window < 1) throw Error("penalty window must be positive");
  if (max_iter < 0) throw Error("max_iter must be nonnegative");
}

BlockVec prox_affine(const BlockVec& y, double t, const NormalizedProblem& problem) {
  BlockVec v = y;
  v.axpy(t, problem.c());
  const Eigen::VectorXd w = problem.apply(v) - problem.b;
  v -= problem.adjoint(w);
  return v;
}

FixedPointEval fixed_point_residual(const BlockVec& z, double t, const NormalizedProblem& problem) {
  FixedPointEval e;
  e.x = project_cone(z, problem.cone(), &e.spectra);
  BlockVec v = 2.0 * e.x;
  v -= z;
  v.axpy(t, problem.c());
  e.w = problem.apply(v) - problem.b;
  v -= problem.adjoint(e.w);
  e.u = std::move(v);
  e.f = e.x - e.u;
  e.norm = e.f.norm();
  return e;
}

Iterates recover_at(const FixedPointEval& eval, const BlockVec& z, double t, const NormalizedProblem& problem) {
  Iterates it;
  it.x = eval.x;
  it.s = eval.x - z;
  it.s *= 1.0 / t;
  it.y = problem.to_original(eval.w / t);
  return it;
}

DrsState make_drs_state(const BlockVec& z0, double t) {
  if (!(t > 0.0)) throw Error("penalty must be positive");
  DrsState s;
  s.z = z0;
  s.t = t;
  return s;
}

namespace {

void finish_step(DrsState& state, FixedPointEval&& eval, BlockVec&& z_eval, double t) {
  state.z = z_eval - eval.f;
  state.z_eval = std::move(z_eval);
  state.t_eval = t;
  state.last = std::move(eval);
  ++state.iter;
  ++state.f_evals;
}

}  // namespace

void drs_iterate(DrsState& state, const NormalizedProblem& problem) {
  auto eval = fixed_point_residual(state.z, state.t, problem);
  BlockVec z = state.z;
  finish_step(state, std::move(eval), std::move(z), state.t);
}

void drs_iterate_rescaled(DrsState& state, double t1, double t2, const NormalizedProblem& problem) {
  if (!(t1 > 0.0) || !(t2 > 0.0)) throw Error("penalty must be positive");
  if (t1 == t2) {
    state.t = t2;
    drs_iterate(state, problem);
    return;
  }
  // P_K(X + s(Z - X)) = X for s > 0, so the projection is shared.
  const BlockVec x = project_cone(state.z, problem.cone());
  BlockVec zr = state.z - x;
  zr *= t2 / t1;
  zr += x;
  state.t = t2;
  auto eval = fixed_point_residual(zr, t2, problem);
  finish_step(state, std::move(eval), std::move(zr), t2);
}

Iterates recover_iterates(const DrsState& state, const NormalizedProblem& problem) {
  if (!state.last) throw Error("recover_iterates: no iteration has been taken");
  return recover_at(*state.last, state.z_eval, state.t_eval, problem);
}

double update_penalty(const std::deque<double>& ratios, double t, const FirstOrderParams& params) {
  if (ratios.empty()) throw Error("update_penalty: empty history");
  const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size());
  double out = t;
  if (mean > params.delta)
    out = t * params.gamma;
  else if (mean < 1.0 / params.delta)
    out = t / params.gamma;
  return std::clamp(out, params.t_min, params.t_max);
}

BlockVec admm_start(const NormalizedProblem& problem, double t) {
  BlockVec tc = t * problem.c();
  BlockVec z = tc;
  z -= problem.adjoint(problem.apply(tc));
  z += problem.adjoint(problem.b);
  return z;
}

std::vector<int> block_ranks(const FixedPointEval& eval, const ConeSpec& cone) {
  std::vector<int> ranks(cone.size(), 0);
  for (std::size_t j = 0; j < cone.size(); ++j) {
    if (cone[j].is_matrix() && j < eval.spectra.size() && eval.spectra[j].dim() > 0) {
      const auto& lam = eval.spectra[j].lambda;
      ranks[j] = static_cast<int>((lam.array() >= 1e-8).count());
    } else {
      ranks[j] = static_cast<int>((eval.x[j].array().abs() >= 1e-8).count());
    }
  }
  return ranks;
}

bool meets(const ResidualReport& r, double tol_primal, double tol_dual) {
  return r.eta_p <= tol_primal && r.eta_d <= tol_dual;
}

namespace {

BlockVec random_point(const ConeSpec& cone, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  BlockVec z(cone);
  for (std::size_t j = 0; j < cone.size(); ++j) {
    auto& b = z[j];
    for (Eigen::Index c = 0; c < b.cols(); ++c)
      for (Eigen::Index r = cone[j].is_matrix() ? c : 0; r < b.rows(); ++r) {
        b(r, c) = nd(rng);
        if (cone[j].is_matrix()) b(c, r) = b(r, c);
      }
  }
  return z;
}

// Badness of a report relative to the tolerances, used to keep the best iterate.
double badness(const ResidualReport& r, const FirstOrderParams& p) {
  return std::max(r.eta_p / std::max(p.tol_primal, 1e-300), r.eta_d / std::max(p.tol_dual, 1e-300));
}

}  // namespace

SolveResult run_first_order(const NormalizedProblem& problem, const FirstOrderParams& params,
                            const std::optional<BlockVec>& z0) {
  params.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  BlockVec init = z0 ? *z0 : (params.random_start ? random_point(problem.cone(), params.seed) : BlockVec(problem.cone()));
  check_shape(init, problem.cone());
  DrsState state = make_drs_state(init, std::clamp(params.t0, params.t_min, params.t_max));

  SolveResult out;
  double best = std::numeric_limits<double>::infinity();
  double pending_from = 0.0;  // previous penalty when a rescaled step is due
  for (int k = 0; k < params.max_iter; ++k) {
    if (pending_from > 0.0) {
      drs_iterate_rescaled(state, pending_from, state.t, problem);
      pending_from = 0.0;
    } else {
      drs_iterate(state, problem);
    }
    Iterates it = recover_iterates(state, problem);
    const ResidualReport rep = residuals(it.x, it.y, it.s, problem.original);
    const double norm_f = state.last->norm;

    if (params.record_trace) {
      TraceRow row;
      row.iter = state.iter;
      row.stage = "drs";
      row.eta_p = rep.eta_p;
      row.eta_d = rep.eta_d;
      row.eta_g = rep.eta_g;
      row.norm_f = norm_f;
      row.penalty = state.t_eval;
      row.wall_seconds = elapsed();
      row.ranks = block_ranks(*state.last, problem.cone());
      out.trace.push_back(std::move(row));
    }

    const bool done = meets(rep, params.tol_primal, params.tol_dual) &&
                      (params.tol_residual <= 0.0 || norm_f <= params.tol_residual);
    const double bad = badness(rep, params);
    if (done || bad <= best) {
      best = bad;
      out.iterates = std::move(it);
      out.report = rep;
      out.norm_f = norm_f;
      out.ranks = block_ranks(*state.last, problem.cone());
    }
    if (done) {
      out.converged = true;
      break;
    }

    if (params.adapt_penalty) {
      state.ratios.push_back(rep.eta_p / std::max(rep.eta_d, 1e-300));
      while (static_cast<int>(state.ratios.size()) > params.window) state.ratios.pop_front();
      if (static_cast<int>(state.ratios.size()) == params.window) {
        const double t_new = update_penalty(state.ratios, state.t, params);
        if (t_new != state.t) {
          pending_from = state.t;
          state.t = t_new;
          state.ratios.clear();
        }
      }
    }
  }
  out.iterations = state.iter;
  out.f_evals = state.f_evals;
  out.t = state.t;
  out.z = state.z;
  if (pending_from > 0.0) {
    // Hand back a point consistent with the new penalty.
    const BlockVec x = project_cone(state.z, problem.cone());
    out.z -= x;
    out.z *= state.t / pending_from;
    out.z += x;
  }
  out.wall_seconds = elapsed();
  return out;
}

}  // namespace rdmsdp
