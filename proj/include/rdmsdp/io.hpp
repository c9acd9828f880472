#pragma once

// File formats: SDPA sparse problems, electron-integral files, JSON solution
// summaries and CSV traces.

#include "rdmsdp/firstorder.hpp"
#include "rdmsdp/rdm.hpp"
#include "rdmsdp/sdpmodel.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace rdmsdp::io {

/// SDPA sparse ("dat-s") text. SDPA's c, F_0, F_i map to b, C, A_i; negative
/// block sizes are nonnegative vector blocks. A free block of length q is
/// stored as a 2q vector block holding (x, -x) and marked by a "*free" comment;
/// box01 blocks are written in split form.
SdpProblem read_sdpa(std::istream& in);
SdpProblem read_sdpa(const std::string& text);
std::string write_sdpa(const SdpProblem& problem);

/// "RDM-INT v1 d=<d> N=<N>" followed by "T i j v" and "V i j k l v" lines,
/// 1-based. T_ji and V_kl,ij are filled in on read; a second value for the
/// same entry that differs raises ParseError.
rdm::IntegralData read_integrals(std::istream& in);
rdm::IntegralData read_integrals(const std::string& text);
std::string write_integrals(const rdm::IntegralData& integrals);

/// Round-trip safe decimal (17 significant digits).
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
/// Writes to a temporary file in the same directory, then renames it over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// True when the text starts with the integral-file header.
bool looks_like_integrals(const std::string& text);

struct SolveSummary {
  std::string method;
  std::string input;
  std::optional<std::string> conditions;
  bool converged = false;
  int exit_code = 0;
  ResidualReport report;
  int iterations = 0;
  long f_evals = 0;
  double wall_seconds = 0.0;
  double norm_f = 0.0;
  double penalty = 0.0;
  std::vector<std::string> block_labels;
  std::vector<int> block_sizes;
  std::vector<int> block_ranks;
  std::optional<double> fci_energy;
};

/// JSON object with a fixed key set; optional values are null.
std::string summary_json(const SolveSummary& summary);

/// Columns: iter, stage, eta_p, eta_d, eta_g, normF, penalty, lambda, cg_iters, wall_seconds.
std::string trace_csv(const std::vector<TraceRow>& trace);

}  // namespace rdmsdp::io
