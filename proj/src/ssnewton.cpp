#include "rdmsdp/ssnewton.hpp"

#include "rdmsdp/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace rdmsdp {

void NewtonParams::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw Error("tau must lie in (0,1)");
  if (!(nu > 0.0 && nu < 1.0)) throw Error("nu must lie in (0,1)");
  if (!(eta1 > 0.0 && eta1 <= eta2 && eta2 < 1.0)) throw Error("need 0 < eta1 <= eta2 < 1");
  if (!(gamma1 > 1.0 && gamma1 <= gamma2)) throw Error("need 1 < gamma1 <= gamma2");
  if (!(lambda_floor > 0.0) || !(lambda0 > 0.0)) throw Error("lambda_floor and lambda0 must be positive");
  if (warmup_iters < 0 || max_iter < 0 || cg_max < 0 || direct_max_rows < 0 || stall_limit < 0 || fallback_drs_iters < 0) throw Error("iteration counts must be nonnegative");
  first_order.validate();
}

NewtonParams NewtonParams::ssn_l() { return NewtonParams{}; }

NewtonParams NewtonParams::ssn_h() {
  NewtonParams p;
  p.eta_p_tol = 1e-4;
  p.eta_d_tol = 1e-9;
  p.first_order.t0 *= 10.0;
  p.first_order.t_min *= 10.0;
  p.first_order.t_max *= 10.0;
  return p;
}

// ---------------------------------------------------------------------------

JacobianInfo jacobian_info(const BlockVec& z, const std::vector<SpectralDecomp>& spectra,
                           const ConeSpec& cone, double mu) {
  check_shape(z, cone);
  JacobianInfo info;
  info.mu = mu;
  info.blocks.resize(cone.size());
  for (std::size_t j = 0; j < cone.size(); ++j) {
    auto& bj = info.blocks[j];
    bj.kind = cone[j].kind;
    switch (cone[j].kind) {
      case BlockKind::Box01:
        throw Error("Newton machinery requires box01 blocks in split form");
      case BlockKind::Psd: {
        if (j >= spectra.size() || spectra[j].dim() != cone[j].size)
          throw ShapeError("missing spectral decomposition for block " + std::to_string(j));
        bj.eig = spectra[j];
        const int n = bj.eig.dim();
        const int na = bj.eig.n_alpha;
        const auto& lam = bj.eig.lambda;
        bj.k.resize(na, n - na);
        for (int i = 0; i < na; ++i)
          for (int q = na; q < n; ++q) bj.k(i, q - na) = lam[i] / (lam[i] - lam[q]);
        bj.l = (mu * bj.k.array() / (mu + 1.0 - bj.k.array())).matrix();
        break;
      }
      case BlockKind::Nonneg:
        bj.mask = (z[j].col(0).array() >= 0.0).cast<double>();
        break;
      case BlockKind::Free:
        bj.mask = Eigen::VectorXd::Ones(cone[j].size);
        break;
    }
  }
  return info;
}

namespace {

// Q (W o (Q^T S Q)) Q^T for the table W = [1 w; w^T 0] over (alpha, alphabar).
Eigen::MatrixXd weighted_congruence(const SpectralDecomp& eig, const Eigen::MatrixXd& w, const Eigen::MatrixXd& s,
                                    TPath path) {
  const int n = eig.dim();
  const int na = eig.n_alpha;
  const int nb = n - na;
  if (na == 0) return Eigen::MatrixXd::Zero(n, n);
  if (nb == 0) return s;
  const auto qa = eig.q.leftCols(na);
  const auto qb = eig.q.rightCols(nb);
  if (path == TPath::Auto) path = 2 * na <= n ? TPath::SmallAlpha : TPath::LargeAlpha;
  if (path == TPath::SmallAlpha) {
    const Eigen::MatrixXd u = qa.transpose() * s;
    const Eigen::MatrixXd saa = u * qa;
    const Eigen::MatrixXd sab = u * qb;
    const Eigen::MatrixXd inner = 0.5 * saa * qa.transpose() + w.cwiseProduct(sab) * qb.transpose();
    const Eigen::MatrixXd g = qa * inner;
    return g + g.transpose();
  }
  const Eigen::MatrixXd v = qb.transpose() * s;
  const Eigen::MatrixXd sbb = v * qb;
  const Eigen::MatrixXd sba = v * qa;
  const Eigen::MatrixXd one_minus = (1.0 - w.array()).matrix().transpose();
  const Eigen::MatrixXd inner = 0.5 * sbb * qb.transpose() + one_minus.cwiseProduct(sba) * qa.transpose();
  const Eigen::MatrixXd g = qb * inner;
  return s - (g + g.transpose());
}

BlockVec apply_table(const JacobianInfo& info, const BlockVec& s, bool use_l, TPath path) {
  if (s.size() != info.blocks.size()) throw ShapeError("Jacobian block count mismatch");
  BlockVec out = s;
  for_each_block(s.size(), [&](std::size_t j) {
    const auto& bj = info.blocks[j];
    if (bj.kind == BlockKind::Psd)
      out[j] = weighted_congruence(bj.eig, use_l ? bj.l : bj.k, s[j], path);
    else
      out[j] = s[j].cwiseProduct(bj.mask);
  });
  return out;
}

}  // namespace

BlockVec apply_M(const JacobianInfo& info, const BlockVec& s) { return apply_table(info, s, false, TPath::Auto); }

BlockVec apply_T(const JacobianInfo& info, const BlockVec& s, TPath path) { return apply_table(info, s, true, path); }

BlockVec apply_J(const JacobianInfo& info, const BlockVec& s, const NormalizedProblem& problem) {
  BlockVec m = apply_M(info, s);
  BlockVec v = s;
  v.axpy(-2.0, m);
  BlockVec dv = v;
  dv -= problem.adjoint(problem.apply(v));
  m += dv;
  return m;
}

// ---------------------------------------------------------------------------

NewtonDirection newton_direction(const JacobianInfo& info, const BlockVec& f, double lambda, double norm_f,
                                 const NormalizedProblem& problem, const NewtonParams& params) {
  const double mu = info.mu;
  if (!(mu > 0.0)) throw Error("newton_direction: regularization must be positive");
  const double c = (2.0 * mu + 1.0) / (mu * (mu + 1.0));
  const double shift = mu * mu / (2.0 * mu + 1.0);
  const int m = problem.rows();
  const int cg_max = params.cg_max > 0 ? params.cg_max : std::min(m, 300);

  BlockVec rhs = apply_T(info, f);
  rhs *= -1.0;
  rhs.axpy(mu / (2.0 * mu + 1.0), f);
  const Eigen::VectorXd a = -problem.apply(rhs);

  auto reduced = [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
    return shift * d + problem.apply(apply_T(info, problem.adjoint(d)));
  };
  auto direction = [&](const Eigen::VectorXd& d) {
    BlockVec v = problem.adjoint(d);
    v -= f;
    BlockVec s = apply_T(info, v);
    s.axpy(mu, v);
    s *= 1.0 / (mu * (mu + 1.0));
    return s;
  };
  // Inexactness rule on the full residual, |r| = c |a - K d| because A^* is an isometry.
  const double scale = lambda * norm_f;
  auto accept = [&](const Eigen::VectorXd& d, double res) {
    const double rn = c * res;
    if (rn > params.tau) return false;
    return rn <= params.tau * std::min(1.0, scale * direction(d).norm());
  };

  NewtonDirection out;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd r = a;
  double rr = r.squaredNorm();
  out.satisfied = accept(d, std::sqrt(rr));
  Eigen::VectorXd p = r;
  while (!out.satisfied && out.cg_iters < cg_max && rr > 0.0) {
    const Eigen::VectorXd kp = reduced(p);
    const double pkp = p.dot(kp);
    if (!(pkp > 0.0)) throw NumericalFault("conjugate gradients met nonpositive curvature");
    const double alpha = rr / pkp;
    d += alpha * p;
    r -= alpha * kp;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
    ++out.cg_iters;
    out.satisfied = accept(d, std::sqrt(rr));
  }
  if (!out.satisfied && m <= params.direct_max_rows) {
    // CG stalls when mu is tiny; a dense factorization of the reduced matrix does not.
    Eigen::MatrixXd k(m, m);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    for (int col = 0; col < m; ++col) {
      e[col] = 1.0;
      k.col(col) = reduced(e);
      e[col] = 0.0;
    }
    k = 0.5 * (k + k.transpose()).eval();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(k);
    if (ldlt.info() == Eigen::Success) {
      Eigen::VectorXd dd = ldlt.solve(a);
      if ((a - reduced(dd)).norm() < std::sqrt(rr)) d = std::move(dd);
    }
    out.satisfied = accept(d, (a - reduced(d)).norm());
  }
  out.s = direction(d);
  BlockVec full = apply_J(info, out.s, problem);
  full.axpy(mu, out.s);
  full += f;
  out.r_norm = full.norm();
  return out;
}

BlockVec hyperplane_project(const BlockVec& z, const BlockVec& u, const BlockVec& fu) {
  const double nn = fu.dot(fu);
  if (!(nn > 0.0)) throw Error("hyperplane_project: F(U) is zero");
  const double step = fu.dot(z - u) / nn;
  BlockVec v = z;
  v.axpy(-step, fu);
  return v;
}

std::string to_string(StepKind kind) {
  switch (kind) {
    case StepKind::Newton: return "newton";
    case StepKind::Projection: return "projection";
    case StepKind::DrsFallback: return "drs-fallback";
    case StepKind::Unsuccessful: return "unsuccessful";
  }
  return "?";
}

AssnState make_assn_state(const BlockVec& z, double t, const NormalizedProblem& problem, const NewtonParams& params) {
  AssnState st;
  st.z = z;
  st.t = t;
  st.fz = fixed_point_residual(z, t, problem);
  st.f_evals = 1;
  st.xi = st.fz.norm;
  st.lambda = params.lambda0;
  return st;
}

void assn_iterate(AssnState& state, const NewtonParams& params, const NormalizedProblem& problem,
                  const DirectionOverride& force) {
  const double norm_f = state.fz.norm;
  const double mu = state.lambda * norm_f;
  ++state.iter;
  state.last_mu = mu;
  state.last_cg = 0;

  BlockVec s;
  if (force) {
    s = force(state);
  } else {
    const JacobianInfo info = jacobian_info(state.z, state.fz.spectra, problem.cone(), mu);
    NewtonDirection dir = newton_direction(info, state.fz.f, state.lambda, norm_f, problem, params);
    state.last_cg = dir.cg_iters;
    s = std::move(dir.s);
  }

  BlockVec u = state.z + s;
  FixedPointEval fu = fixed_point_residual(u, state.t, problem);
  ++state.f_evals;
  if (fu.norm <= params.nu * state.xi) {
    state.z = std::move(u);
    state.xi = fu.norm;
    state.fz = std::move(fu);
    state.last = StepKind::Newton;
    state.stalled = 0;
    return;
  }

  const double ss = s.dot(s);
  const double rho = ss > 0.0 ? -fu.f.dot(s) / ss : 0.0;
  if (rho >= params.eta1) {
    BlockVec v = hyperplane_project(state.z, u, fu.f);
    FixedPointEval fv = fixed_point_residual(v, state.t, problem);
    ++state.f_evals;
    if (fv.norm <= state.fz.norm) {
      state.z = std::move(v);
      state.fz = std::move(fv);
      state.last = StepKind::Projection;
    } else {
      BlockVec w = state.z - state.fz.f;
      state.fz = fixed_point_residual(w, state.t, problem);
      ++state.f_evals;
      state.z = std::move(w);
      state.last = StepKind::DrsFallback;
    }
  } else {
    state.last = StepKind::Unsuccessful;
  }

  if (rho >= params.eta2)
    state.lambda = std::max(params.lambda_floor, 0.5 * state.lambda);
  else if (rho >= params.eta1)
    state.lambda = params.gamma1 * state.lambda;
  else
    state.lambda = params.gamma2 * state.lambda;
  ++state.stalled;
}

SolveResult run_assn(const NormalizedProblem& problem, const NewtonParams& params, const std::optional<BlockVec>& z0) {
  params.validate();
  if (problem.cone().has(BlockKind::Box01)) throw Error("run_assn: split box01 blocks first");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  // The warmup always runs to its end; stopping is judged from the hand-off point on.
  FirstOrderParams warm = params.first_order;
  warm.max_iter = params.warmup_iters;
  warm.tol_primal = warm.tol_dual = warm.tol_residual = 0.0;
  SolveResult out = run_first_order(problem, warm, z0);
  for (auto& row : out.trace) row.stage = "warmup";
  out.converged = false;

  FirstOrderParams fo = params.first_order;
  fo.tol_primal = params.eta_p_tol;
  fo.tol_dual = params.eta_d_tol;
  fo.tol_residual = params.tol_residual;

  const FirstOrderParams& pp = params.first_order;
  AssnState st = make_assn_state(out.z, out.t, problem, params);
  int iters = out.iterations;
  long evals = out.f_evals + st.f_evals;
  double best = std::numeric_limits<double>::infinity();
  int unsuccessful_run = 0;
  std::deque<double> ratios;
  const ConeSpec& cone = problem.cone();

  auto consider = [&](Iterates&& it, const ResidualReport& rep, double norm_f, std::vector<int> ranks) {
    const bool done = meets(rep, params.eta_p_tol, params.eta_d_tol) &&
                      (params.tol_residual <= 0.0 || norm_f <= params.tol_residual);
    const double bad = std::max(rep.eta_p / params.eta_p_tol, rep.eta_d / params.eta_d_tol);
    if (done || bad <= best) {
      best = bad;
      out.iterates = std::move(it);
      out.report = rep;
      out.norm_f = norm_f;
      out.ranks = std::move(ranks);
    }
    return done;
  };

  {
    Iterates it = recover_at(st.fz, st.z, st.t, problem);
    const ResidualReport rep = residuals(it.x, it.y, it.s, problem.original);
    out.converged = consider(std::move(it), rep, st.fz.norm, block_ranks(st.fz, cone));
  }

  int budget = params.max_iter;
  while (!out.converged && budget > 0 && st.fz.norm > 0.0) {
    if (params.stall_limit > 0 && st.stalled >= params.stall_limit && params.fallback_drs_iters > 0) {
      // Newton keeps failing: hand over to DRS for a while, then retry from a fresh lambda.
      FirstOrderParams block = fo;
      block.t0 = st.t;
      block.max_iter = std::min(params.fallback_drs_iters, budget);
      SolveResult drs = run_first_order(problem, block, st.z);
      for (auto& row : drs.trace) {
        row.iter += iters;
        row.stage = "drs-fallback";
        row.wall_seconds = elapsed();
        out.trace.push_back(std::move(row));
      }
      iters += drs.iterations;
      evals += drs.f_evals;
      budget -= drs.iterations;
      const bool done = consider(std::move(drs.iterates), drs.report, drs.norm_f, drs.ranks);
      st = make_assn_state(drs.z, drs.t, problem, params);
      evals += st.f_evals;
      ratios.clear();
      if (done) {
        out.converged = true;
        break;
      }
      continue;
    }

    const long before = st.f_evals;
    assn_iterate(st, params, problem);
    evals += st.f_evals - before;
    ++iters;
    --budget;
    unsuccessful_run = st.last == StepKind::Unsuccessful ? unsuccessful_run + 1 : 0;
    out.max_unsuccessful_run = std::max(out.max_unsuccessful_run, unsuccessful_run);

    Iterates it = recover_at(st.fz, st.z, st.t, problem);
    const ResidualReport rep = residuals(it.x, it.y, it.s, problem.original);
    if (params.first_order.record_trace) {
      TraceRow row;
      row.iter = iters;
      row.stage = to_string(st.last);
      row.eta_p = rep.eta_p;
      row.eta_d = rep.eta_d;
      row.eta_g = rep.eta_g;
      row.norm_f = st.fz.norm;
      row.penalty = st.t;
      row.lambda = st.lambda;
      row.mu = st.last_mu;
      row.cg_iters = st.last_cg;
      row.wall_seconds = elapsed();
      row.ranks = block_ranks(st.fz, cone);
      out.trace.push_back(std::move(row));
    }
    if (consider(std::move(it), rep, st.fz.norm, block_ranks(st.fz, cone))) {
      out.converged = true;
      break;
    }

    if (params.adapt_penalty_newton) {
      ratios.push_back(rep.eta_p / std::max(rep.eta_d, 1e-300));
      while (static_cast<int>(ratios.size()) > pp.window) ratios.pop_front();
      if (static_cast<int>(ratios.size()) == pp.window) {
        const double t_new = update_penalty(ratios, st.t, pp);
        if (t_new != st.t) {
          // Z = X - tS is a fixed point for every t; rescale the polar part.
          BlockVec zr = st.z - st.fz.x;
          zr *= t_new / st.t;
          zr += st.fz.x;
          st.z = std::move(zr);
          st.t = t_new;
          st.fz = fixed_point_residual(st.z, st.t, problem);
          ++evals;
          st.xi = st.fz.norm;
          ratios.clear();
        }
      }
    }
  }
  out.iterations = iters;
  out.f_evals = evals;
  out.t = st.t;
  out.z = st.z;
  out.wall_seconds = elapsed();
  return out;
}

}  // namespace rdmsdp
