// Command-line front end: build, solve and fci subcommands.

#include "rdmsdp/error.hpp"
#include "rdmsdp/firstorder.hpp"
#include "rdmsdp/io.hpp"
#include "rdmsdp/rdm.hpp"
#include "rdmsdp/sdpmodel.hpp"
#include "rdmsdp/ssnewton.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

using namespace rdmsdp;

namespace {

struct SolveOptions {
  std::string input;
  std::string method = "ssn-l";
  std::string conditions = "pqg";
  std::optional<int> max_iter;
  std::optional<int> warmup;
  std::optional<double> tol_primal;
  std::optional<double> tol_dual;
  std::optional<std::uint64_t> seed;
  std::string trace;
  std::string out;
  bool fci_check = false;
};

SolveResult run_method(const NormalizedProblem& np, const SolveOptions& o) {
  if (o.method == "admm" || o.method == "drs") {
    FirstOrderParams fp;
    if (o.max_iter) fp.max_iter = *o.max_iter;
    if (o.tol_primal) fp.tol_primal = *o.tol_primal;
    if (o.tol_dual) fp.tol_dual = *o.tol_dual;
    if (o.seed) {
      fp.random_start = true;
      fp.seed = *o.seed;
    }
    fp.validate();
    if (o.method == "admm" && !o.seed) return run_first_order(np, fp, admm_start(np, fp.t0));
    return run_first_order(np, fp);
  }
  NewtonParams p = o.method == "ssn-h" ? NewtonParams::ssn_h() : NewtonParams::ssn_l();
  if (o.max_iter) p.max_iter = *o.max_iter;
  if (o.warmup) p.warmup_iters = *o.warmup;
  if (o.tol_primal) p.eta_p_tol = *o.tol_primal;
  if (o.tol_dual) p.eta_d_tol = *o.tol_dual;
  if (o.seed) {
    p.first_order.random_start = true;
    p.first_order.seed = *o.seed;
  }
  p.validate();
  return run_assn(np, p);
}

int solve_command(const SolveOptions& o) {
  const std::string text = io::read_file(o.input);
  SdpProblem problem;
  std::optional<rdm::IntegralData> integrals;
  if (io::looks_like_integrals(text)) {
    integrals = io::read_integrals(text);
    integrals->validate();
    problem = rdm::build_sdp(*integrals, rdm::ConditionSet::parse(o.conditions));
  } else {
    problem = io::read_sdpa(text);
  }
  const SdpProblem split = split_detected_blocks(split_box_blocks(problem));
  const NormalizedProblem np = normalize(split);
  const SolveResult r = run_method(np, o);

  io::SolveSummary s;
  s.method = o.method;
  s.input = o.input;
  if (integrals) s.conditions = o.conditions;
  s.converged = r.converged;
  s.exit_code = r.converged ? 0 : 2;
  s.report = r.report;
  s.iterations = r.iterations;
  s.f_evals = r.f_evals;
  s.wall_seconds = r.wall_seconds;
  s.norm_f = r.norm_f;
  s.penalty = r.t;
  s.block_labels = split.labels;
  for (std::size_t j = 0; j < split.cone.size(); ++j) s.block_sizes.push_back(split.cone[j].size);
  s.block_ranks = r.ranks;
  if (integrals && o.fci_check) s.fci_energy = rdm::fci_oracle(*integrals).energy;

  const std::string json = io::summary_json(s);
  if (o.out.empty())
    std::cout << json;
  else
    io::write_file_atomic(o.out, json);
  if (!o.trace.empty()) io::write_file_atomic(o.trace, io::trace_csv(r.trace));
  std::fprintf(stderr, "%s: objective %.10g  eta_p %.2e  eta_d %.2e  eta_g %.2e  it %d  %.2fs\n",
               r.converged ? "converged" : "budget exhausted", r.report.dual_obj, r.report.eta_p, r.report.eta_d,
               r.report.eta_g, r.iterations, r.wall_seconds);
  return s.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semidefinite relaxations of the two-electron reduced density matrix"};
  app.require_subcommand(1);

  std::string build_input, build_out, build_conditions = "pqg";
  auto* build = app.add_subcommand("build", "Write the 2-RDM SDP for an integral file in SDPA sparse format");
  build->add_option("integrals", build_input, "Integral file")->required()->check(CLI::ExistingFile);
  build->add_option("--conditions", build_conditions, "Positivity conditions")
      ->check(CLI::IsMember({"pqg", "pqgt1", "pqgt1t2"}));
  build->add_option("--out", build_out, "Output .dat-s path (default: stdout)");

  SolveOptions so;
  auto* solve = app.add_subcommand("solve", "Solve an SDPA file or the 2-RDM SDP of an integral file");
  solve->add_option("input", so.input, "SDPA or integral file")->required()->check(CLI::ExistingFile);
  solve->add_option("--method", so.method, "Solver")->check(CLI::IsMember({"admm", "drs", "ssn-l", "ssn-h"}));
  solve->add_option("--conditions", so.conditions, "Positivity conditions for integral input")
      ->check(CLI::IsMember({"pqg", "pqgt1", "pqgt1t2"}));
  solve->add_option("--max-iter", so.max_iter, "Iteration budget")->check(CLI::NonNegativeNumber);
  solve->add_option("--warmup", so.warmup, "DRS iterations before Newton steps")->check(CLI::NonNegativeNumber);
  solve->add_option("--tol-primal", so.tol_primal, "Primal infeasibility tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--tol-dual", so.tol_dual, "Dual infeasibility tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--seed", so.seed, "Random starting point seed");
  solve->add_option("--trace", so.trace, "Per-iteration CSV trace");
  solve->add_option("--out", so.out, "JSON summary path (default: stdout)");
  solve->add_flag("--fci-check", so.fci_check, "Report the error against exact diagonalization");

  std::string fci_input;
  auto* fci = app.add_subcommand("fci", "Print the exact ground-state energy of an integral file");
  fci->add_option("integrals", fci_input, "Integral file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*build) {
      const auto h = io::read_integrals(io::read_file(build_input));
      h.validate();
      const std::string text = io::write_sdpa(rdm::build_sdp(h, rdm::ConditionSet::parse(build_conditions)));
      if (build_out.empty())
        std::cout << text;
      else
        io::write_file_atomic(build_out, text);
      return 0;
    }
    if (*solve) return solve_command(so);
    if (*fci) {
      const auto h = io::read_integrals(io::read_file(fci_input));
      h.validate();
      std::printf("%s\n", io::format_double(rdm::fci_oracle(h).energy).c_str());
      return 0;
    }
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
