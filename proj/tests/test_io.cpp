#include "rdmsdp/error.hpp"
#include "rdmsdp/io.hpp"
#include "rdmsdp/rdm.hpp"
#include "support/fock.hpp"
#include "support/instances.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>

using namespace rdmsdp;

namespace {

void require_same(const SdpProblem& a, const SdpProblem& b) {
  REQUIRE(a.cone == b.cone);
  REQUIRE(a.rows() == b.rows());
  CHECK(a.b == b.b);
  for (std::size_t j = 0; j < a.cone.size(); ++j) CHECK(a.c[j] == b.c[j]);
  CHECK(a.op.entries() == b.op.entries());
  CHECK(a.labels == b.labels);
}

int parse_error_line(const std::string& text) {
  try {
    io::read_sdpa(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

const char* kMinimal =
    "\"a two-block example\n"
    "2 =mdim\n"
    "2 =nblocks\n"
    "{2, -2}\n"
    "1.0 2.0\n"
    "0 1 1 1 -1.0\n"
    "0 1 1 2 0.5\n"
    "0 2 2 2 3\n"
    "1 1 1 1 1.0\n"
    "1 2 1 1 1.0\n"
    "2 1 2 1 0.25\n"
    "2 2 2 2 1.0\n";

}  // namespace

TEST_CASE("minimal SDPA file") {
  const SdpProblem p = io::read_sdpa(std::string(kMinimal));
  REQUIRE(p.cone.size() == 2);
  CHECK(p.cone[0].kind == BlockKind::Psd);
  CHECK(p.cone[0].size == 2);
  CHECK(p.cone[1].kind == BlockKind::Nonneg);
  CHECK(p.cone[1].size == 2);
  CHECK(p.rows() == 2);
  CHECK(p.b[0] == 1.0);
  CHECK(p.b[1] == 2.0);
  CHECK(p.c[0](0, 0) == -1.0);
  CHECK(p.c[0](0, 1) == 0.5);
  CHECK(p.c[0](1, 0) == 0.5);
  CHECK(p.c[0](1, 1) == 0.0);
  CHECK(p.c[1](1, 0) == 3.0);
  const std::vector<MatrixEntry> expected{
      {0, 0, 0, 0, 1.0}, {0, 1, 0, 0, 1.0}, {1, 0, 0, 1, 0.25}, {1, 1, 1, 1, 1.0}};
  CHECK(p.op.entries() == expected);
  CHECK(p.labels.empty());

  // Writing is canonical, so a second round trip reproduces the text.
  const std::string once = io::write_sdpa(p);
  CHECK(io::write_sdpa(io::read_sdpa(once)) == once);
  require_same(io::read_sdpa(once), p);
}

TEST_CASE("SDPA header may span lines and use separators") {
  const std::string text =
      "* comment\n1\n\n3\n(1,\n-2,\n3)\n{5}\n1 1 1 1 1\n1 3 3 2 2\n";
  const SdpProblem p = io::read_sdpa(text);
  CHECK(p.cone[1].kind == BlockKind::Nonneg);
  CHECK(p.cone[2].size == 3);
  CHECK(p.b[0] == 5.0);
  const std::vector<MatrixEntry> expected{{0, 0, 0, 0, 1.0}, {0, 2, 1, 2, 2.0}};
  CHECK(p.op.entries() == expected);
}

TEST_CASE("free blocks and labels survive a round trip") {
  ConeSpec cone;
  cone.add(BlockKind::Psd, 2).add(BlockKind::Free, 3);
  std::vector<MatrixEntry> entries{{0, 0, 0, 0, 1.0}, {0, 1, 2, 2, -4.5}, {1, 1, 0, 0, 1.0}, {1, 0, 0, 1, 2.0}};
  SdpProblem p;
  p.cone = cone;
  p.op = ConstraintOperator(cone, 2, entries);
  p.b = Eigen::Vector2d(1.0, 0.1);
  p.c = BlockVec(cone);
  p.c[0](1, 1) = -1.0;
  p.c[1](1, 0) = 0.7;
  p.labels = {"x", "equalities"};

  const std::string text = io::write_sdpa(p);
  CHECK(text.find("*free 2") != std::string::npos);
  CHECK(text.find("\n2 -6\n") != std::string::npos);
  require_same(io::read_sdpa(text), p);

  // Without the marker the doubled block is an ordinary nonnegative block.
  std::string unmarked = text;
  unmarked.erase(0, unmarked.find('\n') + 1);
  const SdpProblem plain = io::read_sdpa(unmarked);
  CHECK(plain.cone[1].kind == BlockKind::Nonneg);
  CHECK(plain.cone[1].size == 6);
}

TEST_CASE("mismatched free halves are rejected") {
  const std::string text = "*free 1\n1\n1\n-2\n1\n1 1 1 1 1\n1 1 2 2 -0.5\n";
  CHECK(parse_error_line(text) == 6);
}

TEST_CASE("box blocks are written split") {
  ConeSpec cone;
  cone.add(BlockKind::Box01, 2);
  SdpProblem p;
  p.cone = cone;
  p.op = ConstraintOperator(cone, 1, {{0, 0, 0, 0, 1.0}, {0, 0, 1, 1, 1.0}});
  p.b = Eigen::VectorXd::Ones(1);
  p.c = BlockVec(cone);
  const SdpProblem back = io::read_sdpa(io::write_sdpa(p));
  const SdpProblem split = split_box_blocks(p);
  require_same(back, split);
}

TEST_CASE("SDPA parse errors carry line numbers") {
  CHECK(parse_error_line("1\n1\n2\n1\n1 1 3 1 1\n") == 5);
  CHECK(parse_error_line("1\n1\n2\n1\n1 2 1 1 1\n") == 5);
  CHECK(parse_error_line("1\n1\n2\n1\n2 1 1 1 1\n") == 5);
  CHECK(parse_error_line("1\n1\n2\n1\n1 1 1 1\n") == 5);
  CHECK(parse_error_line("1\n1\n2\n1\n1 1 1 1 x\n") == 5);
  CHECK(parse_error_line("1\n1\n-2\n1\n1 1 1 2 1\n") == 5);
  CHECK(parse_error_line("x\n") == 1);
  CHECK(parse_error_line("1\n1\n0\n") == 3);
  CHECK(parse_error_line("1\n1\n2\n") == 3);
}

TEST_CASE("random problems round trip exactly") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SdpProblem p = testsupport::random_problem(5, 7, seed);
    const std::string text = io::write_sdpa(p);
    const SdpProblem back = io::read_sdpa(text);
    require_same(back, p);
    CHECK(io::write_sdpa(back) == text);
  }
}

TEST_CASE("2-RDM problems round trip") {
  std::mt19937_64 rng(11);
  const auto h = testsupport::random_integrals(6, 3, true, rng);
  const SdpProblem p = rdm::build_sdp(h, rdm::ConditionSet::parse("pqgt1"));
  const std::string text = io::write_sdpa(p);
  const SdpProblem back = io::read_sdpa(text);
  require_same(back, p);
  CHECK(back.labels.back() == "equalities");
  CHECK(io::write_sdpa(back) == text);
}

TEST_CASE("integral files round trip bit exactly") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick_d(1, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 * pick_d(rng);
    const int n = std::uniform_int_distribution<int>(1, d)(rng);
    const auto h = testsupport::random_integrals(d, n, trial % 2 == 0, rng);
    const std::string text = io::write_integrals(h);
    REQUIRE(io::looks_like_integrals(text));
    const auto back = io::read_integrals(text);
    REQUIRE(back.d == d);
    REQUIRE(back.n == n);
    CHECK(back.t == h.t);
    CHECK(back.v.data() == h.v.data());
    CHECK(io::write_integrals(back) == text);
  }
}

TEST_CASE("integral reader completes symmetric entries") {
  const auto h = io::read_integrals(std::string("# test\nRDM-INT v1 d=2 N=1\nT 1 2 -0.5\nV 1 2 2 1 0.25\nT 2 1 -0.5\n"));
  CHECK(h.t(0, 1) == -0.5);
  CHECK(h.t(1, 0) == -0.5);
  CHECK(h.v(0, 1, 1, 0) == 0.25);
  CHECK(h.v(1, 0, 0, 1) == 0.25);
  CHECK(h.v(1, 0, 1, 0) == 0.0);
}

TEST_CASE("integral reader errors") {
  auto line_of = [](const std::string& text) {
    try {
      io::read_integrals(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("RDM-INT v1 d=2 N=1\nT 1 2 1\nT 2 1 2\n") == 3);
  CHECK(line_of("RDM-INT v1 d=2 N=1\nV 1 2 2 1 1\nV 2 1 1 2 1.5\n") == 3);
  CHECK(line_of("RDM-INT v1 d=2 N=1\nT 1 3 1\n") == 2);
  CHECK(line_of("RDM-INT v1 d=3 N=1\n") == 1);
  CHECK(line_of("RDM-INT v1 d=2 N=3\n") == 1);
  CHECK(line_of("RDM-INT v2 d=2 N=1\n") == 1);
  CHECK(line_of("\nRDM-INT v1 d=2 N=1\nX 1 1\n") == 3);
  CHECK(line_of("RDM-INT v1 d=2 N=1\nV 1 1 1\n") == 2);
  CHECK(line_of("") == 0);
  CHECK_FALSE(io::looks_like_integrals("1\n1\n2\n"));
}

TEST_CASE("summary JSON has a fixed key set") {
  io::SolveSummary s;
  s.method = "drs";
  s.input = "x.dat-s";
  s.converged = true;
  s.report.dual_obj = -1.25;
  s.report.primal_obj = -1.25;
  s.iterations = 12;
  s.block_labels = {"P"};
  s.block_sizes = {4};
  s.block_ranks = {2};
  const auto a = nlohmann::json::parse(io::summary_json(s));
  s.conditions = "pqg";
  s.fci_energy = -1.5;
  const auto b = nlohmann::json::parse(io::summary_json(s));
  std::vector<std::string> ka, kb;
  for (const auto& [k, v] : a.items()) ka.push_back(k);
  for (const auto& [k, v] : b.items()) kb.push_back(k);
  CHECK(ka == kb);
  CHECK(a["fci_energy"].is_null());
  CHECK(a["conditions"].is_null());
  CHECK(a["status"] == "converged");
  CHECK(b["objective"].get<double>() == -1.25);
  CHECK(b["err"].get<double>() == doctest::Approx(0.25));
  CHECK(b["blocks"][0]["label"] == "P");
  CHECK(b["blocks"][0]["rank"] == 2);
}

TEST_CASE("trace CSV") {
  TraceRow r;
  r.iter = 3;
  r.stage = "drs";
  r.eta_p = 0.5;
  const std::string csv = io::trace_csv({r});
  CHECK(csv.rfind("iter,stage,eta_p,eta_d,eta_g,normF,penalty,lambda,cg_iters,wall_seconds\n", 0) == 0);
  CHECK(csv.find("\n3,drs,0.5,0,0,0,0,,0,0\n") != std::string::npos);
}

TEST_CASE("atomic file write") {
  const auto dir = std::filesystem::temp_directory_path() / "rdmsdp_io_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "out.txt";
  io::write_file_atomic(path, "first\n");
  io::write_file_atomic(path, "second\n");
  CHECK(io::read_file(path) == "second\n");
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(io::read_file(path), Error);
  CHECK_THROWS_AS(io::write_file_atomic(dir / "missing" / "x", "y"), Error);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::numeric_limits<double>::denorm_min()}) {
    const std::string s = io::format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("trace-constraint file parses to the trivial instance") {
  const SdpProblem p = io::read_sdpa(std::string("1\n1\n2\n1\n0 1 1 1 -1\n0 1 2 2 -1\n1 1 1 1 1\n1 1 2 2 1\n"));
  ConeSpec cone;
  cone.add(BlockKind::Psd, 2);
  SdpProblem expected;
  expected.cone = cone;
  expected.op = ConstraintOperator(cone, 1, {{0, 0, 0, 0, 1.0}, {0, 0, 1, 1, 1.0}});
  expected.b = Eigen::VectorXd::Ones(1);
  expected.c = BlockVec(cone);
  expected.c[0] = -Eigen::MatrixXd::Identity(2, 2);
  require_same(p, expected);
}

TEST_CASE("zero matrices emit no records") {
  ConeSpec cone;
  cone.add(BlockKind::Psd, 3);
  SdpProblem p;
  p.cone = cone;
  p.op = ConstraintOperator(cone, 2, {{1, 0, 0, 2, 1.5}});
  p.b = Eigen::Vector2d(0.0, 1.0);
  p.c = BlockVec(cone);
  CHECK(io::write_sdpa(p) == "2\n1\n3\n0 1\n2 1 1 3 1.5\n");
}
