#include "rdmsdp/io.hpp"

#include "rdmsdp/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

namespace rdmsdp::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::random_device rd;
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot create " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw Error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string summary_json(const SolveSummary& s) {
  using json = nlohmann::ordered_json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["method"] = s.method;
  j["input"] = s.input;
  j["conditions"] = s.conditions ? json(*s.conditions) : json(nullptr);
  j["status"] = s.converged ? "converged" : "max_iter";
  j["converged"] = s.converged;
  j["exit_code"] = s.exit_code;
  j["objective"] = num(s.report.dual_obj);
  j["primal_objective"] = num(s.report.primal_obj);
  j["dual_objective"] = num(s.report.dual_obj);
  j["eta_p"] = num(s.report.eta_p);
  j["eta_d"] = num(s.report.eta_d);
  j["eta_g"] = num(s.report.eta_g);
  j["iterations"] = s.iterations;
  j["f_evals"] = s.f_evals;
  j["wall_seconds"] = num(s.wall_seconds);
  j["norm_f"] = num(s.norm_f);
  j["penalty"] = num(s.penalty);
  json blocks = json::array();
  for (std::size_t b = 0; b < s.block_sizes.size(); ++b) {
    json e;
    e["label"] = b < s.block_labels.size() ? s.block_labels[b] : "block" + std::to_string(b);
    e["size"] = s.block_sizes[b];
    e["rank"] = b < s.block_ranks.size() ? json(s.block_ranks[b]) : json(nullptr);
    blocks.push_back(e);
  }
  j["blocks"] = blocks;
  j["fci_energy"] = s.fci_energy ? num(*s.fci_energy) : json(nullptr);
  j["err"] = s.fci_energy ? num(s.report.dual_obj - *s.fci_energy) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  os << "iter,stage,eta_p,eta_d,eta_g,normF,penalty,lambda,cg_iters,wall_seconds\n";
  auto field = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  for (const auto& r : trace)
    os << r.iter << ',' << r.stage << ',' << field(r.eta_p) << ',' << field(r.eta_d) << ',' << field(r.eta_g) << ','
       << field(r.norm_f) << ',' << field(r.penalty) << ',' << field(r.lambda) << ',' << r.cg_iters << ','
       << field(r.wall_seconds) << '\n';
  return os.str();
}

}  // namespace rdmsdp::io
